"""Resonant Birkhoff normalization by order-by-order Lie transforms.

At each degree ``s = 3..D`` a generator ``chi_s`` is obtained from the
homological equation in the complex coordinates ``z = x + i y``, where
``{z^a zb^b, H2} = -i <omega, a-b> z^a zb^b``, and applied as the Lie series
``exp(L_chi) f = f + {f, chi} + {{f, chi}, chi}/2 + ...`` truncated at ``D``.
Monomials whose angle index ``a - b`` is a multiple of ``k`` are kept.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .algebra import (
    CartesianPolynomial,
    PoissonSeries,
    cartesian_to_complex,
    complex_to_cartesian,
    poisson_bracket,
    to_action_angle,
)
from .resonance import ResonanceStructure

log = logging.getLogger(__name__)


class NormalFormError(ValueError):
    pass


class QuadraticPartError(NormalFormError):
    """The quadratic part is not ``sum c_i (x_i^2 + x_{i+n}^2)`` with ``2 c_i = omega_i``."""


class ZeroDivisor(NormalFormError):
    """A non-resonant monomial has a vanishing small divisor."""


class PatternError(NormalFormError):
    """A normal-form term does not fit the resonant monomial pattern."""


@dataclass(frozen=True)
class NormalFormResult:
    normal_form: PoissonSeries
    normal_form_cartesian: CartesianPolynomial
    integrable_parts: Dict[int, PoissonSeries]
    resonant_parts: Dict[Fraction, PoissonSeries]
    forward_map: Tuple[CartesianPolynomial, ...]
    inverse_map: Tuple[CartesianPolynomial, ...]
    truncation_degree: int
    generators: Tuple[CartesianPolynomial, ...] = field(default=())

    def negated(self) -> "NormalFormResult":
        """Normal form of ``-H``: same transformation, negated series."""
        return NormalFormResult(
            normal_form=-self.normal_form,
            normal_form_cartesian=-self.normal_form_cartesian,
            integrable_parts={j: -s for j, s in self.integrable_parts.items()},
            resonant_parts={r: -s for r, s in self.resonant_parts.items()},
            forward_map=self.forward_map,
            inverse_map=self.inverse_map,
            truncation_degree=self.truncation_degree,
            generators=tuple(-g for g in self.generators),
        )


def permute_variables(H: CartesianPolynomial, perm: Sequence[int]) -> CartesianPolynomial:
    """Reorder oscillators: working oscillator ``i`` is original oscillator ``perm[i]``."""
    n = H.n
    out = {}
    for e, c in H.items():
        q = tuple(e[perm[i]] for i in range(n))
        p = tuple(e[perm[i] + n] for i in range(n))
        out[q + p] = c
    return CartesianPolynomial(n, out)


def quadratic_frequencies(H: CartesianPolynomial) -> Tuple[Fraction, ...]:
    """Read ``omega_i = 2 c_i`` off a diagonal elliptic quadratic part."""
    n = H.n
    if H.min_degree() in (0, 1):
        raise QuadraticPartError("the origin is not a critical point (terms of degree < 2)")
    H2 = H.homogeneous_part(2)
    omega = []
    for i in range(n):
        ei = [0] * (2 * n)
        ei[i] = 2
        ep = [0] * (2 * n)
        ep[i + n] = 2
        cq, cp = H2.coefficient(ei), H2.coefficient(ep)
        if cq != cp:
            raise QuadraticPartError(f"unequal pair coefficients for oscillator {i + 1}: {cq} vs {cp}")
        if cq == 0:
            raise QuadraticPartError(f"oscillator {i + 1} has zero frequency")
        omega.append(2 * cq)
    if len(H2) != 2 * n:
        raise QuadraticPartError("quadratic part has cross terms")
    return tuple(omega)


def lie_exp(f: CartesianPolynomial, chi: CartesianPolynomial, max_degree: int,
            sign: int = 1) -> CartesianPolynomial:
    """``exp(sign * L_chi) f`` truncated at ``max_degree`` (``chi`` homogeneous, degree >= 3)."""
    s = chi.degree()
    if s < 0:
        return f.truncate(max_degree)
    if sign < 0:
        chi = -chi
    result = f.truncate(max_degree)
    term = result
    k = 1
    while True:
        term = term.truncate(max_degree - s + 2)
        if not term:
            break
        term = poisson_bracket(term, chi, max_degree).scale(Fraction(1, k))
        if not term:
            break
        result = result + term
        k += 1
    return result


def solve_homological(Hs: CartesianPolynomial, res: ResonanceStructure) -> CartesianPolynomial:
    """Generator removing every non-resonant monomial of the homogeneous part ``Hs``."""
    n = Hs.n
    cp = cartesian_to_complex(Hs)
    chi = {}
    for key, (re, im) in cp.items():
        m = tuple(a - b for a, b in zip(key[:n], key[n:]))
        if res.is_resonant_angle(m):
            continue
        div = sum(w * mi for w, mi in zip(res.omega, m))
        if div == 0:
            raise ZeroDivisor(f"vanishing divisor for angle index {m} (not a multiple of k={res.k})")
        # chi_ab = i h_ab / <omega, a-b>
        chi[key] = (-im / div, re / div)
    return complex_to_cartesian(chi, n)


def birkhoff_normalize(H: CartesianPolynomial, res: ResonanceStructure,
                       truncation_degree: int | None = None) -> NormalFormResult:
    """Normalize ``H`` (already in working coordinates) up to ``truncation_degree``."""
    if H.n != res.n:
        raise NormalFormError("Hamiltonian and resonance structure dimensions differ")
    D = 3 * res.N if truncation_degree is None else int(truncation_degree)
    if D > 3 * res.N:
        raise NormalFormError(f"truncation degree {D} exceeds 3N = {3 * res.N}")
    omega = quadratic_frequencies(H)
    if tuple(omega) != tuple(res.omega):
        raise QuadraticPartError(f"quadratic part gives omega={omega}, expected {res.omega}")

    n = H.n
    current = H.truncate(D)
    coords = [CartesianPolynomial.variable(n, i) for i in range(2 * n)]
    forward = list(coords)
    gens: List[CartesianPolynomial] = []
    for s in range(3, D + 1):
        chi = solve_homological(current.homogeneous_part(s), res)
        if not chi:
            continue
        log.debug("degree %d: generator with %d terms", s, len(chi))
        current = lie_exp(current, chi, D)
        forward = [lie_exp(f, chi, D) for f in forward]
        gens.append(chi)
    inverse = list(coords)
    for chi in reversed(gens):
        inverse = [lie_exp(f, chi, D, sign=-1) for f in inverse]

    series = to_action_angle(current)
    integrable, resonant = extract_components(series, res)
    return NormalFormResult(
        normal_form=series,
        normal_form_cartesian=current,
        integrable_parts=integrable,
        resonant_parts=resonant,
        forward_map=tuple(forward),
        inverse_map=tuple(inverse),
        truncation_degree=D,
        generators=tuple(gens),
    )


def extract_components(series: PoissonSeries, res: ResonanceStructure):
    """Split a resonant normal form into integrable parts and resonant parts.

    Angle-free terms of total action degree ``j`` go to ``integrable[j]``.  A term
    with angle ``s k`` (``s >= 1``) and half-exponents ``e`` goes to
    ``resonant[r]`` with ``r = (|e| - N) / 2``; this is the usual ``k/2 + j``
    indexing, and it is a half-integer only for double harmonics when N is odd.
    """
    n = series.n
    integrable: Dict[int, Dict] = {}
    resonant: Dict[Fraction, Dict] = {}
    for (e, m, h), c in series.items():
        if not res.is_resonant_angle(m):
            raise PatternError(f"term with angle {m} is not resonant")
        s = res.angle_multiple(m)
        if s == 0:
            if sum(e) % 2:
                raise PatternError(f"angle-free term with half-integer degree {e}")
            integrable.setdefault(sum(e) // 2, {})[(e, m, h)] = c
        else:
            if any(ev < abs(mv) or (ev - mv) % 2 for ev, mv in zip(e, m)):
                raise PatternError(f"exponents {e} incompatible with angle {m}")
            r = Fraction(sum(e) - res.N, 2)
            if r < 0:
                raise PatternError(f"resonant term below order N: {e}")
            resonant.setdefault(r, {})[(e, m, h)] = c
    return (
        {j: PoissonSeries._raw(n, t) for j, t in sorted(integrable.items())},
        {r: PoissonSeries._raw(n, t) for r, t in sorted(resonant.items())},
    )


def symplecticity_defect(mapping: Sequence[CartesianPolynomial], degree: int) -> float:
    """Largest coefficient of ``{X_i, X_j} - J_ij`` among terms of degree ``< degree``.

    For a map whose components are exact up to ``degree`` the brackets are
    exact up to ``degree - 1``, so a symplectic truncated map gives 0.
    """
    n = mapping[0].n
    worst = Fraction(0)
    for i in range(2 * n):
        for j in range(i + 1, 2 * n):
            b = poisson_bracket(mapping[i].truncate(degree), mapping[j].truncate(degree), degree - 1)
            if j == i + n:
                b = b - 1
            for e, c in b.items():
                if sum(e) < degree:
                    worst = max(worst, abs(c))
    return float(worst)
