import numpy as np
import pytest

from resilience_smc.rng import CHUNK, RandomStream


def test_same_address_same_draws():
    a = RandomStream(42, ("init", 3))
    b = RandomStream(42, ("init", 3))
    assert np.array_equal(a.normals(2000), b.normals(2000))
    assert [a.uniform() for _ in range(10)] == [b.uniform() for _ in range(10)]


def test_scalar_and_block_draws_agree():
    a = RandomStream(1, (0,))
    b = RandomStream(1, (0,))
    xs = [a.normal() for _ in range(CHUNK + 7)]
    ys = list(b.normals(3)) + list(b.normals(CHUNK + 4))
    assert xs == ys


def test_peek_then_consume_is_sequential():
    a = RandomStream(5, (1, 2))
    view = a.peek_normals(10)
    first = view[:4].copy()
    a.consume_normals(4)
    assert np.array_equal(RandomStream(5, (1, 2)).normals(4), first)
    assert a.normal() == RandomStream(5, (1, 2)).normals(5)[4]


def test_consume_more_than_peeked():
    a = RandomStream(5)
    with pytest.raises(ValueError):
        a.consume_normals(1)


def test_clone_replays_from_cursor():
    a = RandomStream(9, (4,))
    a.normals(17)
    b = a.clone()
    assert np.array_equal(a.normals(50), b.normals(50))


def test_child_extends_path():
    s = RandomStream(3, ("x",)).child(1, 2)
    assert s.path == ("x", 1, 2)
    assert s == RandomStream(3, ("x", 1, 2))


def test_sibling_streams_uncorrelated():
    x = RandomStream(2024, (0,)).normals(10_000)
    y = RandomStream(2024, (1,)).normals(10_000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.05


def test_seed_reduced_mod_2_64():
    assert RandomStream(2**64 + 5).master_seed == 5


def test_normals_are_standard():
    x = RandomStream(11).normals(50_000)
    assert abs(x.mean()) < 0.02
    assert abs(x.std() - 1.0) < 0.02


def test_integers_in_range():
    idx = RandomStream(1).integers(7, 1000)
    assert idx.min() >= 0 and idx.max() < 7


def test_bad_label():
    with pytest.raises(TypeError):
        RandomStream(1, (1.5,))
