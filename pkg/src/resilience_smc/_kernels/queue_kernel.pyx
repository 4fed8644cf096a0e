# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled queue propagation kernel; mirrors ``_pykernel`` operation for operation."""
from libc.math cimport exp, pow, NAN

DEF HIT = 0
DEF HORIZON = 1
DEF NEED_DRAWS = 2
DEF EXP_CLAMP = 700.0


def queue_reaction(double B, double eta, long r, double delta_crit, long H):
    cdef double x = -eta
    if x > EXP_CLAMP:
        x = EXP_CLAMP
    cdef double C = 1.0 / (1.0 + exp(x))
    cdef double d = (B / C) / delta_crit
    if d > 1.0:
        d = 1.0
    return d + <double>r / <double>H


def propagate_queue(double B, double eta, double F, long r, long j, long J,
                    const double[::1] normals, long n,
                    double lam, double nu, double phi, double rho, double mu_f,
                    double sigma_f, double dt, double delta_crit, long H,
                    double threshold):
    cdef double drift = (1.0 - rho) * mu_f
    cdef long used = 0
    cdef double prev_g = NAN
    cdef double x, C, D, d, g, slack
    cdef int status
    while True:
        x = -eta
        if x > EXP_CLAMP:
            x = EXP_CLAMP
        C = 1.0 / (1.0 + exp(x))
        D = B / C
        d = D / delta_crit
        if d > 1.0:
            d = 1.0
        g = d + <double>r / <double>H
        if g >= threshold:
            status = HIT
            break
        if j >= J:
            status = HORIZON
            break
        if used >= n:
            status = NEED_DRAWS
            break
        prev_g = g
        if D >= delta_crit:
            if r < H:
                r = r + 1
            else:
                r = H
        else:
            r = 0
        B = B + (lam - C) * dt
        if B < 0.0:
            B = 0.0
        slack = 1.0 - C
        if phi == 2.0:
            eta = eta + nu * (slack * slack) - exp(F)
        else:
            eta = eta + nu * pow(slack, phi) - exp(F)
        F = rho * F + drift + normals[used] * sigma_f
        used += 1
        j += 1
    return status, B, eta, F, r, j, used, prev_g
