"""Pure-Python queue propagation kernel.

Arithmetic is written in the same order as the compiled kernel so both
backends agree bit-for-bit on IEEE-754 doubles.
"""
import math

HIT, HORIZON, NEED_DRAWS = 0, 1, 2

# exp(-eta) is clamped so capacity never underflows to exactly zero.
EXP_CLAMP = 700.0


def queue_reaction(B, eta, r, delta_crit, H):
    x = -eta
    if x > EXP_CLAMP:
        x = EXP_CLAMP
    C = 1.0 / (1.0 + math.exp(x))
    d = (B / C) / delta_crit
    if d > 1.0:
        d = 1.0
    return d + r / H


def propagate_queue(B, eta, F, r, j, J, normals, n,
                    lam, nu, phi, rho, mu_f, sigma_f, dt, delta_crit, H,
                    threshold):
    """Advance one trajectory until reaction >= threshold, j == J, or draws run out.

    Returns ``(status, B, eta, F, r, j, used, prev_g)``; ``prev_g`` is NaN when
    no step was taken.
    """
    exp = math.exp
    if hasattr(normals, "tolist"):
        normals = normals[:n].tolist()
    drift = (1.0 - rho) * mu_f
    used = 0
    prev_g = math.nan
    while True:
        x = -eta
        if x > EXP_CLAMP:
            x = EXP_CLAMP
        C = 1.0 / (1.0 + exp(x))
        D = B / C
        d = D / delta_crit
        if d > 1.0:
            d = 1.0
        g = d + r / H
        if g >= threshold:
            return HIT, B, eta, F, r, j, used, prev_g
        if j >= J:
            return HORIZON, B, eta, F, r, j, used, prev_g
        if used >= n:
            return NEED_DRAWS, B, eta, F, r, j, used, prev_g
        prev_g = g
        if D >= delta_crit:
            r = r + 1 if r < H else H
        else:
            r = 0
        B = B + (lam - C) * dt
        if B < 0.0:
            B = 0.0
        slack = 1.0 - C
        if phi == 2.0:
            eta = eta + nu * (slack * slack) - exp(F)
        else:
            eta = eta + nu * slack ** phi - exp(F)
        F = rho * F + drift + normals[used] * sigma_f
        used += 1
        j += 1
