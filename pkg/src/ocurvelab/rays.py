"""Hypotheses H3/H4: the channel of instability and the rays of the model system."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple

import numpy as np

from .algebra import COS, PoissonSeries
from .normal_form import NormalFormResult
from .resonance import ResonanceStructure

SIMPLICITY_TOL = 1e-8
ROOT_TOL = 1e-14


class RayError(ValueError):
    pass


class ConstantPsi(RayError):
    """The first-harmonic resonant part vanishes on I = k, so Psi is constant."""


class NoSimpleZero(RayError):
    pass


@dataclass(frozen=True)
class H3Report:
    passed: bool
    values: Dict[int, object]


@dataclass(frozen=True)
class PsiForm:
    """``Psi(sigma) = A cos(k1^2 (sigma + sigma0)) + B`` with ``A > 0``."""

    A: float
    sigma0: float
    B: float
    k1: int

    @property
    def period(self) -> float:
        return 2 * math.pi / self.k1 ** 2

    def _arg(self, sigma):
        return self.k1 ** 2 * (np.asarray(sigma, dtype=float) + self.sigma0)

    def __call__(self, sigma):
        return self.A * np.cos(self._arg(sigma)) + self.B

    def derivative(self, sigma, order: int = 1):
        w = self.k1 ** 2
        u = self._arg(sigma)
        # d^j/du^j cos u = cos(u + j pi/2)
        return self.A * w ** order * np.cos(u + order * math.pi / 2)


@dataclass(frozen=True)
class Ray:
    c: float
    sign: int
    psi_prime: float


def _value_at_k(series: PoissonSeries, k) -> Tuple[float, float]:
    """Sums (P, Q) of the cos and sin coefficients evaluated at I = k."""
    P = Q = 0.0
    for (e, m, h), c in series.items():
        mon = math.prod(float(kv) ** (ev / 2) for kv, ev in zip(k, e))
        if h == COS:
            P += float(c) * mon
        else:
            Q += float(c) * mon
    return P, Q


def check_h3(nf: NormalFormResult, res: ResonanceStructure) -> H3Report:
    """H^B_[j](k) = 0 for every integer ``j <= (N-1)/2`` (exact)."""
    values = {}
    for j in range(1, (res.N - 1) // 2 + 1):
        part = nf.integrable_parts.get(j, PoissonSeries.zero(res.n))
        v = Fraction(0)
        for (e, _, _), c in part.items():
            mon = 1
            for kv, ev in zip(res.k, e):
                mon *= Fraction(kv) ** (ev // 2)
            v += c * mon
        values[j] = v
    return H3Report(passed=all(v == 0 for v in values.values()), values=values)


def build_psi(nf: NormalFormResult, res: ResonanceStructure) -> PsiForm:
    H0 = nf.resonant_parts.get(0, PoissonSeries.zero(res.n))
    for (e, m, h) in H0.terms:
        if tuple(m) != tuple(res.k):
            raise RayError(f"unexpected angle {m} in the order-N resonant part")
    P, Q = _value_at_k(H0, res.k)
    A = math.hypot(P, Q)
    if A == 0.0:
        raise ConstantPsi("resonant part vanishes at I = k; H4 cannot hold")
    B = 0.0
    if res.N % 2 == 0:
        half = nf.integrable_parts.get(res.N // 2)
        if half is not None:
            B = float(sum(
                c * math.prod(Fraction(kv) ** (ev // 2) for kv, ev in zip(res.k, e))
                for (e, _, _), c in half.items()
            ))
    k1 = res.k1
    phi0 = math.atan2(Q, P)
    period = 2 * math.pi / k1 ** 2
    sigma0 = (-phi0 / k1 ** 2) % period
    if math.isclose(sigma0, period):
        sigma0 = 0.0
    return PsiForm(A=A, sigma0=sigma0, B=B, k1=k1)


def _polish(psi: PsiForm, c: float) -> float:
    for _ in range(8):
        f = float(psi(c))
        d = float(psi.derivative(c))
        step = f / d
        c -= step
        if abs(step) < ROOT_TOL:
            break
    return c % psi.period


def find_rays(psi: PsiForm) -> Tuple[Ray, Ray]:
    """The two simple zeros of Psi in one period, as (r_plus, r_minus)."""
    if abs(psi.A) <= abs(psi.B) * (1 + SIMPLICITY_TOL) + SIMPLICITY_TOL * abs(psi.A):
        raise NoSimpleZero(f"|A|={abs(psi.A)} does not exceed |B|={abs(psi.B)}: no simple zero")
    w = psi.k1 ** 2
    u = math.acos(-psi.B / psi.A)
    # u in (0, pi): Psi' = -A w sin(u) < 0 there, so +u gives c_minus
    c_minus = _polish(psi, (u / w - psi.sigma0) % psi.period)
    c_plus = _polish(psi, (-u / w - psi.sigma0) % psi.period)
    out = []
    for c in (c_plus, c_minus):
        d = float(psi.derivative(c))
        if abs(d) < SIMPLICITY_TOL * (abs(psi.A) + abs(psi.B)):
            raise NoSimpleZero(f"Psi'({c}) = {d} below simplicity tolerance")
        out.append(Ray(c=c, sign=1 if d > 0 else -1, psi_prime=d))
    plus, minus = out
    if plus.sign != 1 or minus.sign != -1:
        raise RayError("root classification inconsistent")
    return plus, minus
