"""Exact detection of the resonance lattice and checks of H1/H2."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence, Tuple

DEFAULT_SCAN_ORDER = 20


class ResonanceError(ValueError):
    """Base class for hypothesis H1/H2 failures."""


class NoResonance(ResonanceError):
    pass


class OrderTooLow(ResonanceError):
    pass


class MultipleDirections(ResonanceError):
    pass


def _as_fractions(omega) -> Tuple[Fraction, ...]:
    out = []
    for w in omega:
        if isinstance(w, float):
            raise TypeError("frequencies must be exact rationals, got a float")
        out.append(Fraction(w))
    return tuple(out)


def _shell(n: int, order: int):
    """All h in Z_+^n with |h| = order, lexicographic."""
    if n == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in _shell(n - 1, order - first):
            yield (first,) + rest


def find_resonances(omega: Sequence, max_order: int) -> List[Tuple[int, ...]]:
    """Every nonzero ``h >= 0`` with ``|h| <= max_order`` and ``<omega, h> = 0``."""
    omega = _as_fractions(omega)
    if not any(omega):
        raise ValueError("omega must be nonzero")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    found = []
    for order in range(1, max_order + 1):
        for h in _shell(len(omega), order):
            if sum(w * hi for w, hi in zip(omega, h)) == 0:
                found.append(h)
    return sorted(found)


def _is_multiple(h, k) -> bool:
    ratio = None
    for hi, ki in zip(h, k):
        if ki == 0:
            if hi:
                return False
            continue
        r = Fraction(hi, ki)
        if ratio is None:
            ratio = r
        elif r != ratio:
            return False
    return ratio is not None and ratio.denominator == 1 and ratio > 0


@dataclass(frozen=True)
class ResonanceStructure:
    """Resonance data in the (possibly permuted) working coordinates.

    ``permutation[i]`` is the original index of working coordinate ``i``;
    it is the identity unless ``k_1 = 0`` in the input ordering.
    """

    omega: Tuple[Fraction, ...]
    k: Tuple[int, ...]
    permutation: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.permutation:
            object.__setattr__(self, "permutation", tuple(range(len(self.k))))
        if sum(w * ki for w, ki in zip(self.omega, self.k)) != 0:
            raise ValueError("k is not resonant for omega")
        if self.k[0] <= 0:
            raise ValueError("k_1 must be positive in working coordinates")

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def N(self) -> int:
        return sum(self.k)

    @property
    def M(self) -> int:
        return 3 * self.N - 1

    @property
    def delta(self) -> Fraction:
        return Fraction(1, 2) if self.N % 2 else Fraction(1)

    @property
    def e(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(ki, self.N) for ki in self.k)

    @property
    def k1(self) -> int:
        return self.k[0]

    def is_resonant_angle(self, m: Sequence[int]) -> bool:
        """True iff ``m`` is an integer multiple of ``k`` (zero included)."""
        if not any(m):
            return True
        s = None
        for mi, ki in zip(m, self.k):
            if ki == 0:
                if mi:
                    return False
                continue
            if mi % ki:
                return False
            q = mi // ki
            if s is None:
                s = q
            elif q != s:
                return False
        return True

    def angle_multiple(self, m: Sequence[int]) -> int:
        """The integer ``s`` with ``m = s k``; raises if ``m`` is not resonant."""
        if not self.is_resonant_angle(m):
            raise ValueError(f"angle index {tuple(m)} is not a multiple of k={self.k}")
        return m[0] // self.k[0]


def check_h1_h2(omega: Sequence, scan_order: int = DEFAULT_SCAN_ORDER) -> ResonanceStructure:
    """Find the resonance vector and verify H1 and (the direction reading of) H2.

    Raises :class:`NoResonance`, :class:`OrderTooLow` (checked first) or
    :class:`MultipleDirections`.
    """
    omega = _as_fractions(omega)
    n = len(omega)
    minimal = None
    for order in range(1, scan_order + 1):
        shell = [h for h in _shell(n, order) if sum(w * hi for w, hi in zip(omega, h)) == 0]
        if shell:
            minimal = (order, sorted(shell))
            break
    if minimal is None:
        raise NoResonance(f"no resonance with |h| <= {scan_order} for omega={omega}")
    N, shell = minimal
    if N < 3:
        raise OrderTooLow(f"minimal resonance {shell[0]} has order {N} < 3")
    if len(shell) > 1:
        raise MultipleDirections(f"several resonance vectors of order {N}: {shell}")
    k = shell[0]
    M = 3 * N - 1
    for h in find_resonances(omega, M):
        if not _is_multiple(h, k):
            raise MultipleDirections(
                f"resonance {h} (order {sum(h)} <= M={M}) is not a multiple of k={k}"
            )
    perm = list(range(n))
    if k[0] == 0:
        first = next(i for i, v in enumerate(k) if v > 0)
        perm = [first] + [i for i in range(n) if i != first]
    return ResonanceStructure(
        omega=tuple(omega[i] for i in perm),
        k=tuple(k[i] for i in perm),
        permutation=tuple(perm),
    )
