"""Counter-based random streams.

Every stochastic call site owns a :class:`RandomStream` addressed by
``(master_seed, path)``. The pair is hashed into a 128-bit Philox key, so a
stream is a pure value: no generator state is shared between streams and two
streams with the same address always produce the same draws.

Draws are produced in fixed-size chunks. Chunk ``c`` of the normal sequence is
generated from counter ``[0, c, 0, 0]``; uniforms and integers use their own
counter words, so chunk boundaries never overlap.
"""
from __future__ import annotations

import hashlib
import threading
from typing import Iterable

import numpy as np

CHUNK = 1024
UNIFORM_CHUNK = 64

_NORMAL, _UNIFORM, _INTEGER = 0, 1, 2
_MASK64 = (1 << 64) - 1

_local = threading.local()


def _scratch() -> tuple[np.random.Philox, np.random.Generator]:
    gen = getattr(_local, "gen", None)
    if gen is None:
        bitgen = np.random.Philox(key=0)
        gen = np.random.Generator(bitgen)
        _local.bitgen = bitgen
        _local.gen = gen
    return _local.bitgen, gen


def _normalize_label(label) -> int | str:
    if isinstance(label, str):
        return label
    if isinstance(label, (bool, np.bool_)):
        return int(label)
    if isinstance(label, (int, np.integer)):
        return int(label)
    raise TypeError(f"stream labels must be int or str, got {type(label).__name__}")


def derive_key(master_seed: int, path: tuple) -> np.ndarray:
    digest = hashlib.blake2b(repr((master_seed, path)).encode(), digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64).copy()


class RandomStream:
    """Deterministic random stream addressed by ``(master_seed, path)``.

    Parameters
    ----------
    master_seed : int
        64-bit master seed (reduced modulo 2**64).
    path : iterable of int or str
        Structured labels, e.g. ``(level, attempt)``.
    """

    __slots__ = ("master_seed", "path", "_key", "_buf", "_pos", "_chunk",
                 "_ubuf", "_upos", "_uchunk", "_ichunk")

    def __init__(self, master_seed: int, path: Iterable = ()):
        self.master_seed = int(master_seed) & _MASK64
        self.path = tuple(_normalize_label(p) for p in path)
        self._key = None
        self._buf = np.empty(0)
        self._pos = 0
        self._chunk = 0
        self._ubuf = np.empty(0)
        self._upos = 0
        self._uchunk = 0
        self._ichunk = 0

    def __repr__(self) -> str:
        return f"RandomStream({self.master_seed}, {self.path!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, RandomStream):
            return NotImplemented
        return (self.master_seed, self.path) == (other.master_seed, other.path)

    def __hash__(self) -> int:
        return hash((self.master_seed, self.path))

    def child(self, *labels) -> "RandomStream":
        """Return the fresh stream at ``path + labels``."""
        return RandomStream(self.master_seed, self.path + labels)

    def clone(self) -> "RandomStream":
        """Copy including the consumption cursor."""
        other = RandomStream.__new__(RandomStream)
        other.master_seed = self.master_seed
        other.path = self.path
        other._key = self._key
        other._buf = self._buf
        other._pos = self._pos
        other._chunk = self._chunk
        other._ubuf = self._ubuf
        other._upos = self._upos
        other._uchunk = self._uchunk
        other._ichunk = self._ichunk
        return other

    def _generator(self, domain: int, chunk: int) -> np.random.Generator:
        if self._key is None:
            self._key = derive_key(self.master_seed, self.path)
        bitgen, gen = _scratch()
        bitgen.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array([0, chunk, domain, 0], dtype=np.uint64),
                "key": self._key,
            },
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return gen

    # normals -----------------------------------------------------------

    def peek_normals(self, n: int) -> np.ndarray:
        """Return (without consuming) a view of at least the next ``n`` normals.

        The view may be longer than ``n``; pair with :meth:`consume_normals`.
        """
        avail = len(self._buf) - self._pos
        if avail < n:
            parts = [self._buf[self._pos:]]
            while avail < n:
                parts.append(self._generator(_NORMAL, self._chunk).standard_normal(CHUNK))
                self._chunk += 1
                avail += CHUNK
            self._buf = np.concatenate(parts)
            self._pos = 0
        return self._buf[self._pos:]

    def consume_normals(self, n: int) -> None:
        if n > len(self._buf) - self._pos:
            raise ValueError("consuming more normals than were peeked")
        self._pos += n

    def normals(self, n: int) -> np.ndarray:
        out = self.peek_normals(n)[:n].copy()
        self._pos += n
        return out

    def normal(self) -> float:
        x = float(self.peek_normals(1)[0])
        self._pos += 1
        return x

    # uniforms ----------------------------------------------------------

    def uniform(self) -> float:
        if self._upos == len(self._ubuf):
            self._ubuf = self._generator(_UNIFORM, self._uchunk).random(UNIFORM_CHUNK)
            self._uchunk += 1
            self._upos = 0
        u = float(self._ubuf[self._upos])
        self._upos += 1
        return u

    def integers(self, high: int, size: int) -> np.ndarray:
        """Uniform integers in ``[0, high)``; each call uses a fresh counter block."""
        gen = self._generator(_INTEGER, self._ichunk)
        self._ichunk += 1
        return gen.integers(0, high, size=size)
