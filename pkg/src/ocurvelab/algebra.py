"""Exact polynomial and Poisson-series arithmetic.

Two containers live here:

* :class:`CartesianPolynomial` -- polynomials with rational coefficients in the
  phase-space variables ``x_1..x_2n`` (pairs ``(x_i, x_{i+n})``).
* :class:`PoissonSeries` -- finite sums ``c * prod I_a^(e_a/2) * cos|sin <m, theta>``
  where the action exponents are stored as integer counts of one half.

Coefficients of Poisson series live in Q(sqrt 2) (see :class:`QSqrt2`), because
``x = sqrt(2 I) cos(theta)`` introduces a factor ``2^(d/2)`` for a monomial of
degree ``d``.  Floats are accepted too, but every symbolic stage stays exact.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

Exponents = Tuple[int, ...]


class DimensionError(ValueError):
    """Operands live in phase spaces of different dimension."""


# ---------------------------------------------------------------------------
# Q(sqrt 2)
# ---------------------------------------------------------------------------

class QSqrt2:
    """Exact number ``a + b*sqrt(2)`` with rational ``a``, ``b``."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    @classmethod
    def coerce(cls, value) -> "QSqrt2":
        if isinstance(value, QSqrt2):
            return value
        if isinstance(value, (int, Rational)):
            return cls(value, 0)
        raise TypeError(f"cannot coerce {value!r} to QSqrt2")

    @classmethod
    def sqrt2_power(cls, d: int) -> "QSqrt2":
        """Exact ``2^(d/2)`` for integer ``d >= 0``."""
        if d < 0:
            raise ValueError("negative power")
        if d % 2 == 0:
            return cls(2 ** (d // 2), 0)
        return cls(0, 2 ** ((d - 1) // 2))

    def is_rational(self) -> bool:
        return self.b == 0

    def __add__(self, other):
        if isinstance(other, float):
            return float(self) + other
        try:
            o = QSqrt2.coerce(other)
        except TypeError:
            return NotImplemented
        return QSqrt2(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QSqrt2(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        try:
            o = QSqrt2.coerce(other)
        except TypeError:
            return NotImplemented
        return QSqrt2(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def inverse(self) -> "QSqrt2":
        norm = self.a * self.a - 2 * self.b * self.b
        if norm == 0:
            raise ZeroDivisionError("QSqrt2 division by zero")
        return QSqrt2(self.a / norm, -self.b / norm)

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        return self * QSqrt2.coerce(other).inverse()

    def __rtruediv__(self, other):
        if isinstance(other, float):
            return other / float(self)
        return QSqrt2.coerce(other) * self.inverse()

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(2.0)

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __eq__(self, other):
        if isinstance(other, float):
            return float(self) == other
        try:
            o = QSqrt2.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def __abs__(self):
        return self if float(self) >= 0 else -self

    def __repr__(self):
        return f"QSqrt2({self.a}, {self.b})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        rad = "sqrt(2)" if self.b == 1 else f"{self.b}*sqrt(2)"
        if self.a == 0:
            return rad
        return f"({self.a} + {rad})"


def _exact(c):
    """Normalize a scalar: ints become Fractions, rational QSqrt2 collapse."""
    if isinstance(c, QSqrt2):
        return c.a if c.b == 0 else c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    return c


# ---------------------------------------------------------------------------
# Cartesian polynomials
# ---------------------------------------------------------------------------

class CartesianPolynomial:
    """Polynomial in ``x_1..x_2n`` with exact rational coefficients.

    Terms are stored as ``{exponent 2n-tuple: Fraction}``; zero coefficients
    are never stored.  Instances are treated as immutable.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[Exponents, object] | None = None):
        if n < 1:
            raise ValueError("dimension n must be positive")
        self.n = n
        clean: Dict[Exponents, Fraction] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != 2 * n or min(exps, default=0) < 0:
                raise ValueError(f"bad exponent tuple {exps} for n={n}")
            c = Fraction(c)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self._terms = clean

    @classmethod
    def _raw(cls, n: int, terms: Dict[Exponents, Fraction]) -> "CartesianPolynomial":
        p = cls.__new__(cls)
        p.n = n
        p._terms = terms
        return p

    @classmethod
    def zero(cls, n: int) -> "CartesianPolynomial":
        return cls._raw(n, {})

    @classmethod
    def constant(cls, n: int, c) -> "CartesianPolynomial":
        return cls(n, {(0,) * (2 * n): c})

    @classmethod
    def variable(cls, n: int, i: int) -> "CartesianPolynomial":
        """The coordinate function ``x_{i+1}`` (0-based index ``i``)."""
        e = [0] * (2 * n)
        e[i] = 1
        return cls._raw(n, {tuple(e): Fraction(1)})

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> Dict[Exponents, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def min_degree(self) -> int:
        return min((sum(e) for e in self._terms), default=-1)

    def homogeneous_part(self, d: int) -> "CartesianPolynomial":
        return self._raw(self.n, {e: c for e, c in self._terms.items() if sum(e) == d})

    def truncate(self, d: int) -> "CartesianPolynomial":
        """Drop every term of total degree above ``d``."""
        return self._raw(self.n, {e: c for e, c in self._terms.items() if sum(e) <= d})

    def __eq__(self, other):
        if not isinstance(other, CartesianPolynomial):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: "CartesianPolynomial"):
        if self.n != other.n:
            raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, CartesianPolynomial):
            other = CartesianPolynomial.constant(self.n, other)
        self._check(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return self._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return self._raw(self.n, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "CartesianPolynomial":
        c = Fraction(c)
        if not c:
            return self.zero(self.n)
        return self._raw(self.n, {e: v * c for e, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, CartesianPolynomial):
            return self.scale(other)
        return self.multiply(other)

    __rmul__ = __mul__

    def multiply(self, other: "CartesianPolynomial", max_degree: int | None = None):
        self._check(other)
        out: Dict[Exponents, Fraction] = {}
        for e1, c1 in self._terms.items():
            d1 = sum(e1)
            for e2, c2 in other._terms.items():
                if max_degree is not None and d1 + sum(e2) > max_degree:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return self._raw(self.n, {e: c for e, c in out.items() if c})

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = CartesianPolynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derivative(self, i: int) -> "CartesianPolynomial":
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = c * e[i]
        return self._raw(self.n, out)

    def compose(self, subs: Sequence["CartesianPolynomial"], max_degree: int | None = None):
        """Substitute ``x_i -> subs[i]``; optionally truncate at ``max_degree``."""
        if len(subs) != 2 * self.n:
            raise DimensionError("need one substitution per variable")
        m = subs[0].n
        powers = [[CartesianPolynomial.constant(m, 1)] for _ in subs]

        def power(i, k):
            while len(powers[i]) <= k:
                powers[i].append(powers[i][-1].multiply(subs[i], max_degree))
            return powers[i][k]

        out = CartesianPolynomial.zero(m)
        for e, c in self._terms.items():
            term = CartesianPolynomial.constant(m, c)
            for i, k in enumerate(e):
                if k:
                    term = term.multiply(power(i, k), max_degree)
            out = out + term
        return out

    # -- evaluation -------------------------------------------------------
    def to_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """(coefficients, exponents) as float / int arrays for fast evaluation."""
        if not self._terms:
            return np.zeros(0), np.zeros((0, 2 * self.n), dtype=int)
        exps = np.array(list(self._terms.keys()), dtype=int)
        coeffs = np.array([float(c) for c in self._terms.values()])
        return coeffs, exps

    def __call__(self, x) -> float | np.ndarray:
        x = np.asarray(x, dtype=float)
        coeffs, exps = self.to_arrays()
        if coeffs.size == 0:
            return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
        mon = np.prod(x[..., None, :] ** exps, axis=-1)
        return mon @ coeffs

    def __repr__(self):
        return f"CartesianPolynomial(n={self.n}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e in sorted(self._terms, key=lambda e: (sum(e), tuple(-v for v in e))):
            c = self._terms[e]
            mon = "*".join(
                f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k
            )
            parts.append(f"{c}" + (f"*{mon}" if mon else ""))
        return " + ".join(parts)


def poisson_bracket(f: CartesianPolynomial, g: CartesianPolynomial,
                    max_degree: int | None = None) -> CartesianPolynomial:
    """Canonical bracket ``sum_i df/dx_i dg/dx_{i+n} - df/dx_{i+n} dg/dx_i``."""
    if f.n != g.n:
        raise DimensionError(f"dimension mismatch: {f.n} vs {g.n}")
    n = f.n
    out = CartesianPolynomial.zero(n)
    for i in range(n):
        fq, fp = f.derivative(i), f.derivative(i + n)
        gq, gp = g.derivative(i), g.derivative(i + n)
        out = out + fq.multiply(gp, max_degree) - fp.multiply(gq, max_degree)
    return out


# ---------------------------------------------------------------------------
# complexified coordinates z_j = x_j + i x_{j+n}
# ---------------------------------------------------------------------------
# A complex polynomial is a dict {(a_1..a_n, b_1..b_n): (re, im)} standing for
# sum (re + i im) * prod z^a zbar^b, with Fraction parts.

Gauss = Tuple[Fraction, Fraction]


def _gmul(u: Gauss, v: Gauss) -> Gauss:
    return (u[0] * v[0] - u[1] * v[1], u[0] * v[1] + u[1] * v[0])


def _gadd_into(out: dict, key, v: Gauss):
    cur = out.get(key)
    if cur is None:
        out[key] = v
    else:
        out[key] = (cur[0] + v[0], cur[1] + v[1])


@lru_cache(maxsize=None)
def _xy_power_in_z(p: int, q: int) -> Tuple[Tuple[int, int, Fraction, Fraction], ...]:
    """x^p y^q with x = (z + zb)/2, y = (z - zb)/(2i), as ((a, b, re, im), ...)."""
    acc: Dict[Tuple[int, int], Gauss] = {}
    scale = Fraction(1, 2 ** (p + q))
    # (1/i)^q = (-i)^q
    unit = [(1, 0), (0, -1), (-1, 0), (0, 1)][q % 4]
    for r in range(p + 1):
        for s in range(q + 1):
            c = math.comb(p, r) * math.comb(q, s) * (-1) ** (q - s)
            key = (r + s, (p - r) + (q - s))
            _gadd_into(acc, key, (Fraction(c * unit[0]) * scale, Fraction(c * unit[1]) * scale))
    return tuple((a, b, re, im) for (a, b), (re, im) in acc.items() if re or im)


@lru_cache(maxsize=None)
def _z_power_in_xy(a: int, b: int) -> Tuple[Tuple[int, int, Fraction, Fraction], ...]:
    """z^a zb^b with z = x + i y as ((p, q, re, im), ...)."""
    acc: Dict[Tuple[int, int], Gauss] = {}
    ipow = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    for r in range(a + 1):
        for s in range(b + 1):
            # z^a: C(a,r) x^(a-r) (iy)^r ; zb^b: C(b,s) x^(b-s) (-iy)^s
            c = math.comb(a, r) * math.comb(b, s) * (-1) ** s
            u = ipow[(r + s) % 4]
            _gadd_into(acc, (a - r + b - s, r + s), (Fraction(c * u[0]), Fraction(c * u[1])))
    return tuple((p, q, re, im) for (p, q), (re, im) in acc.items() if re or im)


def cartesian_to_complex(p: CartesianPolynomial) -> Dict[Exponents, Gauss]:
    n = p.n
    out: Dict[Exponents, Gauss] = {}
    for e, c in p.items():
        factors = [_xy_power_in_z(e[j], e[j + n]) for j in range(n)]
        for combo in itertools.product(*factors):
            coeff: Gauss = (c, Fraction(0))
            for (_, _, re, im) in combo:
                coeff = _gmul(coeff, (re, im))
            key = tuple(t[0] for t in combo) + tuple(t[1] for t in combo)
            _gadd_into(out, key, coeff)
    return {k: v for k, v in out.items() if v[0] or v[1]}


def complex_to_cartesian(cp: Mapping[Exponents, Gauss], n: int) -> CartesianPolynomial:
    """Convert back to real Cartesian form; the input must represent a real polynomial."""
    out: Dict[Exponents, Gauss] = {}
    for key, g in cp.items():
        factors = [_z_power_in_xy(key[j], key[j + n]) for j in range(n)]
        for combo in itertools.product(*factors):
            coeff = g
            for (_, _, re, im) in combo:
                coeff = _gmul(coeff, (re, im))
            e = tuple(t[0] for t in combo) + tuple(t[1] for t in combo)
            _gadd_into(out, e, coeff)
    real = {}
    for e, (re, im) in out.items():
        if im:
            raise ValueError("complex polynomial is not real")
        if re:
            real[e] = re
    return CartesianPolynomial._raw(n, real)


# ---------------------------------------------------------------------------
# Poisson series
# ---------------------------------------------------------------------------

COS, SIN = "cos", "sin"
TermKey = Tuple[Exponents, Exponents, str]


def normalize_angle(m: Sequence[int]) -> Tuple[Exponents, int]:
    """Return (m', sign) with the first nonzero entry of m' positive and m = sign*m'."""
    m = tuple(int(v) for v in m)
    for v in m:
        if v:
            return (m, 1) if v > 0 else (tuple(-w for w in m), -1)
    return m, 1


class PoissonSeries:
    """Finite sum of ``coeff * prod I_a^(e_a/2) * {cos,sin}<theta, m>``.

    ``e`` (``half_exponents``) counts halves: ``e = (1, 2)`` means
    ``I_1^(1/2) I_2``.  Keys are canonical: the first nonzero entry of ``m``
    is positive and ``sin`` with ``m = 0`` never appears.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Iterable[Tuple[object, Sequence[int], Sequence[int], str]] = ()):
        self.n = n
        acc: Dict[TermKey, object] = {}
        for coeff, e, m, harm in terms:
            self._accumulate(acc, coeff, e, m, harm)
        self._terms = {k: v for k, v in acc.items() if v}

    def _accumulate(self, acc, coeff, e, m, harm):
        e = tuple(int(v) for v in e)
        if len(e) != self.n or len(m) != self.n or min(e) < 0:
            raise DimensionError("term shape does not match series dimension")
        if harm not in (COS, SIN):
            raise ValueError(f"unknown harmonic {harm!r}")
        m, sign = normalize_angle(m)
        if harm == SIN:
            if not any(m):
                return
            coeff = coeff * sign
        key = (e, m, harm)
        coeff = _exact(coeff)
        acc[key] = _exact(acc[key] + coeff) if key in acc else coeff

    @classmethod
    def _raw(cls, n, terms):
        s = cls.__new__(cls)
        s.n = n
        s._terms = {k: v for k, v in terms.items() if v}
        return s

    @classmethod
    def zero(cls, n: int) -> "PoissonSeries":
        return cls._raw(n, {})

    def canonical(self) -> "PoissonSeries":
        """Re-run canonicalization (idempotent)."""
        return PoissonSeries(self.n, ((c, e, m, h) for (e, m, h), c in self._terms.items()))

    # -- inspection -------------------------------------------------------
    def items(self):
        return self._terms.items()

    @property
    def terms(self) -> Dict[TermKey, object]:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, PoissonSeries):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    def filter(self, pred) -> "PoissonSeries":
        return self._raw(self.n, {k: c for k, c in self._terms.items() if pred(*k)})

    # -- arithmetic -------------------------------------------------------
    def _check(self, other):
        if self.n != other.n:
            raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other: "PoissonSeries") -> "PoissonSeries":
        self._check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = _exact(out[k] + c) if k in out else c
        return self._raw(self.n, out)

    def __neg__(self):
        return self._raw(self.n, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "PoissonSeries":
        return self._raw(self.n, {k: _exact(v * c) for k, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, PoissonSeries):
            return self.scale(other)
        self._check(other)
        acc: Dict[TermKey, object] = {}
        half = Fraction(1, 2)
        for (e1, m1, h1), c1 in self._terms.items():
            for (e2, m2, h2), c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                mm = tuple(a - b for a, b in zip(m1, m2))
                mp = tuple(a + b for a, b in zip(m1, m2))
                c = c1 * c2 * half
                if h1 == COS and h2 == COS:
                    parts = ((c, mm, COS), (c, mp, COS))
                elif h1 == SIN and h2 == SIN:
                    parts = ((c, mm, COS), (-c, mp, COS))
                elif h1 == SIN:  # sin a cos b
                    parts = ((c, mp, SIN), (c, mm, SIN))
                else:  # cos a sin b
                    parts = ((c, mp, SIN), (-c, mm, SIN))
                for cc, m, h in parts:
                    self._accumulate(acc, cc, e, m, h)
        return self._raw(self.n, acc)

    __rmul__ = __mul__

    def derivative_angle(self, a: int) -> "PoissonSeries":
        """Partial derivative with respect to ``theta_a``."""
        acc = {}
        for (e, m, h), c in self._terms.items():
            if m[a]:
                if h == COS:
                    self._accumulate(acc, -c * m[a], e, m, SIN)
                else:
                    self._accumulate(acc, c * m[a], e, m, COS)
        return self._raw(self.n, acc)

    def action_degree(self) -> Fraction:
        """Largest total power of the actions (may be a half-integer)."""
        return max((Fraction(sum(e), 2) for (e, _, _) in self._terms), default=Fraction(-1))

    # -- evaluation -------------------------------------------------------
    def evaluate(self, I, theta):
        """Numeric value at actions ``I >= 0`` and angles ``theta``."""
        I = np.asarray(I, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if np.any(I < 0):
            raise ValueError("negative action")
        total = np.zeros(np.broadcast_shapes(I.shape[:-1], theta.shape[:-1]))
        sq = np.sqrt(I)
        for (e, m, h), c in self._terms.items():
            mon = np.prod(sq ** np.asarray(e), axis=-1)
            phase = theta @ np.asarray(m, dtype=float)
            trig = np.cos(phase) if h == COS else np.sin(phase)
            total = total + float(c) * mon * trig
        return float(total) if total.ndim == 0 else total

    __call__ = evaluate

    def __repr__(self):
        return f"PoissonSeries(n={self.n}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (e, m, h) in sorted(self._terms, key=lambda k: (sum(k[0]), k[1], k[2], k[0])):
            c = self._terms[(e, m, h)]
            acts = "*".join(
                f"I{i + 1}" + ("" if v == 2 else f"^({v}/2)" if v % 2 else f"^{v // 2}")
                for i, v in enumerate(e) if v
            )
            trig = "" if not any(m) else f"*{h}<{','.join(map(str, m))}>"
            parts.append(f"{c}" + (f"*{acts}" if acts else "") + trig)
        return " + ".join(parts)


def complex_to_poisson(cp: Mapping[Exponents, Gauss], n: int) -> PoissonSeries:
    """Rewrite ``sum g z^a zb^b`` (a real polynomial) in action-angle form.

    ``z^a zb^b = 2^(|a+b|/2) I^((a+b)/2) exp(i<a-b, theta>)``.
    """
    terms = []
    for key, (re, im) in cp.items():
        a, b = key[:n], key[n:]
        m = tuple(x - y for x, y in zip(a, b))
        e = tuple(x + y for x, y in zip(a, b))
        m_norm, sign = normalize_angle(m)
        if sign < 0:
            continue  # the conjugate key carries this contribution
        factor = QSqrt2.sqrt2_power(sum(e))
        if not any(m):
            if im:
                raise ValueError("complex polynomial is not real")
            terms.append((factor * re, e, m, COS))
        else:
            # g e^{i phi} + conj(g) e^{-i phi} = 2 re cos(phi) - 2 im sin(phi)
            terms.append((factor * (2 * re), e, m, COS))
            terms.append((factor * (-2 * im), e, m, SIN))
    return PoissonSeries(n, terms)


def to_action_angle(p: CartesianPolynomial) -> PoissonSeries:
    """Exact rewrite under ``x_i = sqrt(2 I_i) cos theta_i``, ``x_{i+n} = sqrt(2 I_i) sin theta_i``."""
    return complex_to_poisson(cartesian_to_complex(p), p.n)


def from_action_angle(s: PoissonSeries) -> CartesianPolynomial:
    """Inverse of :func:`to_action_angle` for series that come from polynomials."""
    n = s.n
    cp: Dict[Exponents, Gauss] = {}
    for (e, m, h), c in s.items():
        c = QSqrt2.coerce(c) if not isinstance(c, float) else None
        if c is None:
            raise TypeError("float coefficients cannot be converted exactly")
        a = []
        b = []
        for ev, mv in zip(e, m):
            if (ev - mv) % 2 or ev < abs(mv):
                raise ValueError("series term is not a polynomial in x")
            a.append((ev + mv) // 2)
            b.append((ev - mv) // 2)
        coeff = c / QSqrt2.sqrt2_power(sum(e))
        if not coeff.is_rational():
            raise ValueError("series term is not a rational polynomial in x")
        g = coeff.a
        key_p = tuple(a) + tuple(b)
        key_m = tuple(b) + tuple(a)
        if not any(m):
            _gadd_into(cp, key_p, (g, Fraction(0)))
        elif h == COS:
            _gadd_into(cp, key_p, (g / 2, Fraction(0)))
            _gadd_into(cp, key_m, (g / 2, Fraction(0)))
        else:  # sin phi = (e^{i phi} - e^{-i phi}) / (2i)
            _gadd_into(cp, key_p, (Fraction(0), -g / 2))
            _gadd_into(cp, key_m, (Fraction(0), g / 2))
    return complex_to_cartesian({k: v for k, v in cp.items() if v[0] or v[1]}, n)
