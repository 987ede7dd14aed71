"""Test systems and numeric probes shared across the suite."""
from fractions import Fraction as F

import numpy as np

from ocurvelab.algebra import CartesianPolynomial, complex_to_cartesian


def variables(n):
    return [CartesianPolynomial.variable(n, i) for i in range(2 * n)]


def actions(n):
    x = variables(n)
    return [F(1, 2) * (x[i] * x[i] + x[i + n] * x[i + n]) for i in range(n)]


def quadratic(omega):
    n = len(omega)
    I = actions(n)
    return sum((F(w) * I[i] for i, w in enumerate(omega)), CartesianPolynomial.zero(n))


def random_polynomial(n, degrees, rng, nterms=4, denom=4):
    P = CartesianPolynomial.zero(n)
    for d in degrees:
        for _ in range(nterms):
            e = [0] * (2 * n)
            for _ in range(d):
                e[rng.integers(2 * n)] += 1
            P = P + CartesianPolynomial(n, {tuple(e): F(int(rng.integers(-4, 5)), denom)})
    return P


def normal_two_mode(k, rng, degree):
    """Two-mode Hamiltonian that is already in resonant normal form for ``omega = (k2, -k1)``.

    The quartic integrable part vanishes on the channel so the N = 5 case
    satisfies the channel condition as well.
    """
    n = 2
    omega = (k[1], -k[0])
    I = actions(n)
    H = quadratic(omega)
    a, b = F(int(rng.integers(1, 5)), 3), F(int(rng.integers(-4, 5)), 5)
    g = -(a * k[0] ** 2 + b * k[0] * k[1]) / k[1] ** 2
    H = H + a * I[0] * I[0] + b * I[0] * I[1] + g * I[1] * I[1]
    H = H + F(int(rng.integers(-3, 4)), 7) * I[0] * I[0] * I[1] + F(1, 9) * I[1] ** 3
    H = H + F(2, 11) * I[0] ** 4 - F(1, 13) * I[1] ** 4
    mono = tuple(k) + (0, 0)
    conj = (0, 0) + tuple(k)
    R = complex_to_cartesian({mono: (F(1), F(1, 3)), conj: (F(1), F(-1, 3))}, n)
    H = H + R + R * I[0] * F(int(rng.integers(-3, 4)), 2) + R * I[1] * F(1, 4)
    return omega, H.truncate(degree)


def nlt_ratios(system, steps=(1e-2, 1e-3, 1e-4, 1e-5), seed=0, draws=20):
    """``max |nonlinear(h v)| / h`` over random unit directions with ``z > 0``."""
    rng = np.random.default_rng(seed)
    out = []
    for h in steps:
        worst = 0.0
        for _ in range(draws):
            v = rng.normal(size=system.dim)
            v[0] = abs(v[0]) + 0.1
            v /= np.linalg.norm(v)
            worst = max(worst, float(np.max(np.abs(system.nonlinear(h * v)))) / h)
        out.append(worst)
    return out


def _rem(system, w):
    U, V = system.remainders(w)
    return np.r_[U, V]


def remainder_jacobian(system, h=1e-6, z_base=1e-8):
    """Finite-difference ``D(U, V)`` at the origin.

    The z column is a forward difference (z cannot go negative).  The other
    columns are central differences taken just off ``z = 0``, where the field
    falls back to its linear part.
    """
    d = system.dim
    hz = np.zeros(d)
    hz[0] = h
    cols = [_rem(system, hz) / h]
    base = np.zeros(d)
    base[0] = z_base
    for j in range(1, d):
        up, down = base.copy(), base.copy()
        up[j], down[j] = h, -h
        cols.append((_rem(system, up) - _rem(system, down)) / (2 * h))
    return np.array(cols).T
