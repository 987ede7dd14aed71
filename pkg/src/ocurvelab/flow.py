"""Hamiltonian vector field of a Cartesian polynomial.

The orientation matches ``dtheta/dt = +dH/dI`` under
``x_i = sqrt(2 I_i) cos theta_i``, ``x_{i+n} = sqrt(2 I_i) sin theta_i``, so

    dx_i/dt = -dH/dx_{i+n},   dx_{i+n}/dt = +dH/dx_i.
"""
from __future__ import annotations

import numpy as np

from .algebra import CartesianPolynomial


class HamiltonianFlow:
    def __init__(self, H: CartesianPolynomial, sign: int = 1):
        self.H = H
        self.n = H.n
        self.sign = sign
        n = H.n
        grads = [H.derivative(i) for i in range(2 * n)]
        # rhs component j is sign * s_j * dH/dx_{src[j]}
        self._parts = [(-1.0, grads[i + n]) for i in range(n)] + [(1.0, grads[i]) for i in range(n)]
        self._arrays = [(s, *g.to_arrays()) for s, g in self._parts]

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for j, (s, coeffs, exps) in enumerate(self._arrays):
            if coeffs.size == 0:
                out[..., j] = 0.0
                continue
            mon = np.prod(x[..., None, :] ** exps, axis=-1)
            out[..., j] = self.sign * s * (mon @ coeffs)
        return out

    def energy(self, x):
        return self.H(np.asarray(x, dtype=float))
