"""Reduction near a ray: the (J, psi) coordinates and the hyperbolic system in (z, xi, eta).

Along the ray the unknowns are scaled as

    J1 = z (Gamma + xi1),  Jhat = z^((N+2)/2) xihat,
    psi1 = c + z^delta (c1 + c2 z^delta + eta1),  psihat = z^(-(N-2)/2) (Omega_hat0 + etahat),

with ``dz/dtau = -z`` and ``dt/dtau = z^(1 - N/2)``.  The full field is obtained
from Hamilton's equations for the truncated normal form; the nonlinear
remainders U, V are the full field minus the linear part.

State vectors are laid out as ``(z, xi1, xihat..., eta1, etahat...)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .algebra import COS, SIN, PoissonSeries
from .normal_form import NormalFormResult
from .rays import Ray
from .resonance import ResonanceStructure

Z_GUARD = 1e-300


class ReductionError(ValueError):
    pass


class DomainError(ReductionError):
    """State outside the right neighbourhood N+ (z < 0, or beyond epsilon)."""


# ---------------------------------------------------------------------------
# linear symplectic change
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearChange:
    """``J = A1 I``, ``psi = A2 theta`` with ``A2 = A1^{-T}``."""

    A1: Tuple[Tuple[Fraction, ...], ...]
    A1_inv: Tuple[Tuple[Fraction, ...], ...]
    A2: Tuple[Tuple[Fraction, ...], ...]

    @property
    def n(self) -> int:
        return len(self.A1)

    def as_arrays(self):
        f = lambda A: np.array([[float(v) for v in row] for row in A])  # noqa: E731
        return f(self.A1), f(self.A1_inv), f(self.A2)


def _matmul(A, B):
    return tuple(
        tuple(sum(A[i][t] * B[t][j] for t in range(len(B))) for j in range(len(B[0])))
        for i in range(len(A))
    )


def _transpose(A):
    return tuple(zip(*A))


def build_linear_change(res: ResonanceStructure) -> LinearChange:
    n, k = res.n, res.k
    if n < 2:
        raise ReductionError("the reduction needs n >= 2")
    k1 = Fraction(k[0])
    if k1 <= 0:
        raise ReductionError("k_1 must be positive")
    zero = Fraction(0)
    A1 = [[zero] * n for _ in range(n)]
    Ainv = [[zero] * n for _ in range(n)]
    A1[0][0] = k1
    Ainv[0][0] = 1 / k1
    for a in range(1, n):
        A1[a][0] = Fraction(-k[a])
        A1[a][a] = k1
        Ainv[a][0] = Fraction(k[a]) / k1 ** 2
        Ainv[a][a] = 1 / k1
    A1 = tuple(map(tuple, A1))
    Ainv = tuple(map(tuple, Ainv))
    A2 = _transpose(Ainv)
    ident = tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))
    if _matmul(A1, Ainv) != ident or _matmul(A2, _transpose(A1)) != ident:
        raise ReductionError("linear change is not symplectic")
    return LinearChange(A1=A1, A1_inv=Ainv, A2=A2)


# ---------------------------------------------------------------------------
# series in (J, psi1)
# ---------------------------------------------------------------------------

class KSeries:
    """A normal-form piece rewritten in ``(J, psi1)``.

    Terms are ``c * prod L_a(J)^(e_a/2) * cos|sin(q psi1)`` with
    ``L = A1^{-1} J`` (the actions) and ``q = s k1^2`` for angle ``s k``.
    The composition with ``A1^{-1}`` is kept exact, so derivatives of the
    linear part cancel exactly.
    """

    def __init__(self, n: int, Ainv, terms: Dict[Tuple[Tuple[int, ...], int, str], object]):
        self.n = n
        self.Ainv = Ainv
        self.terms = {k: v for k, v in terms.items() if v}
        self._arrays = None

    @classmethod
    def from_series(cls, series: PoissonSeries, res: ResonanceStructure, lc: LinearChange):
        terms: Dict = {}
        for (e, m, h), c in series.items():
            q = res.angle_multiple(m) * res.k1 ** 2
            key = (e, q, h if q else COS)
            terms[key] = terms.get(key, 0) + c
        return cls(series.n, lc.A1_inv, terms)

    def __add__(self, other: "KSeries") -> "KSeries":
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return KSeries(self.n, self.Ainv, terms)

    def __bool__(self):
        return bool(self.terms)

    def degree_slice(self, d: Fraction) -> "KSeries":
        """Terms homogeneous of degree ``d`` in J."""
        d = Fraction(d)
        return KSeries(self.n, self.Ainv,
                       {k: v for k, v in self.terms.items() if Fraction(sum(k[0]), 2) == d})

    def dJ(self, b: int) -> "KSeries":
        out: Dict = {}
        for (e, q, h), c in self.terms.items():
            for a, ea in enumerate(e):
                w = self.Ainv[a][b]
                if ea and w:
                    f = list(e)
                    f[a] -= 2
                    key = (tuple(f), q, h)
                    out[key] = out.get(key, 0) + c * Fraction(ea, 2) * w
        return KSeries(self.n, self.Ainv, out)

    def dpsi(self) -> "KSeries":
        out: Dict = {}
        for (e, q, h), c in self.terms.items():
            if not q:
                continue
            key, v = ((e, q, SIN), -c * q) if h == COS else ((e, q, COS), c * q)
            out[key] = out.get(key, 0) + v
        return KSeries(self.n, self.Ainv, out)

    def _prepared(self):
        if self._arrays is None:
            keys = list(self.terms)
            self._arrays = (
                np.array([float(self.terms[k]) for k in keys]),
                np.array([k[0] for k in keys], dtype=float).reshape(len(keys), self.n) / 2.0,
                np.array([k[1] for k in keys], dtype=float),
                np.array([k[2] == COS for k in keys], dtype=bool),
                np.array([[float(v) for v in row] for row in self.Ainv]),
            )
        return self._arrays

    def __call__(self, J, psi1, base: float | None = None):
        """Evaluate at ``J`` (shape (..., n)) and ``psi1`` (shape (...)).

        With ``base`` given, ``psi1`` is the offset from ``base``; the phases
        are then expanded by the addition formulas so that tiny offsets are not
        lost to rounding of ``base + offset``.
        """
        J = np.asarray(J, dtype=float)
        psi1 = np.asarray(psi1, dtype=float)
        if not self.terms:
            return np.zeros(np.broadcast_shapes(J.shape[:-1], psi1.shape)) if J.ndim > 1 else 0.0
        coeffs, powers, q, is_cos, Ainv = self._prepared()
        L = J @ Ainv.T
        with np.errstate(divide="ignore", invalid="ignore"):
            mon = np.prod(np.power(L[..., None, :], powers), axis=-1)
        phase = psi1[..., None] * q
        if base is None:
            trig = np.where(is_cos, np.cos(phase), np.sin(phase))
        else:
            cb, sb = np.cos(q * base), np.sin(q * base)
            cd, sd = np.cos(phase), np.sin(phase)
            trig = np.where(is_cos, cb * cd - sb * sd, sb * cd + cb * sd)
        out = (mon * trig) @ coeffs
        return float(out) if out.ndim == 0 else out


@dataclass
class KBundle:
    K: KSeries
    integrable: Dict[int, KSeries]
    resonant: Dict[Fraction, KSeries]

    def slice(self, d) -> KSeries:
        return self.K.degree_slice(d)

    def K_int(self, j) -> KSeries:
        return self.integrable.get(j, KSeries(self.K.n, self.K.Ainv, {}))

    def K_res(self, r) -> KSeries:
        return self.resonant.get(Fraction(r), KSeries(self.K.n, self.K.Ainv, {}))


def transform_hamiltonian(nf: NormalFormResult, res: ResonanceStructure, lc: LinearChange) -> KBundle:
    K = KSeries.from_series(nf.normal_form, res, lc)
    return KBundle(
        K=K,
        integrable={j: KSeries.from_series(s, res, lc) for j, s in nf.integrable_parts.items()},
        resonant={Fraction(r): KSeries.from_series(s, res, lc) for r, s in nf.resonant_parts.items()},
    )


def _at(series: KSeries, c: float, dJ: Sequence[int] = (), dpsi: int = 0) -> float:
    s = series
    for b in dJ:
        s = s.dJ(b)
    for _ in range(dpsi):
        s = s.dpsi()
    n = series.n
    J = np.zeros(n)
    J[0] = 1.0
    return float(s(J, c))


def compute_gamma(K0: KSeries, c: float, tol: float = 1e-12) -> float:
    """``gamma = dK0/dpsi1 (1, 0, c)``."""
    gamma = _at(K0, c, dpsi=1)
    if abs(gamma) < tol:
        raise ReductionError(f"|gamma| = {abs(gamma)} below tolerance")
    return gamma


# ---------------------------------------------------------------------------
# reduced system
# ---------------------------------------------------------------------------

@dataclass
class ReducedSystem:
    N: int
    n: int
    k1: int
    omega: Tuple[Fraction, ...]
    gamma: float
    Gamma: float
    c: float
    c1: float
    c2: float
    d0: float
    d1: float
    d2: float
    dhat: np.ndarray
    Omega_hat0: np.ndarray
    bundle: KBundle
    orientation: int = 1
    epsilon: float = 0.05
    _grad: List[KSeries] = field(default_factory=list, repr=False)
    _dpsi: KSeries | None = field(default=None, repr=False)

    def __post_init__(self):
        K = self.bundle.K
        self._grad = [K.dJ(b) for b in range(self.n)]
        self._dpsi = K.dpsi()

    # -- layout ------------------------------------------------------------
    @property
    def delta(self) -> float:
        return 0.5 if self.N % 2 else 1.0

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    @property
    def idx_xihat(self) -> List[int]:
        return list(range(2, self.n + 1))

    @property
    def idx_eta1(self) -> int:
        return self.n + 1

    @property
    def idx_etahat(self) -> List[int]:
        return list(range(self.n + 2, 2 * self.n + 1))

    @property
    def stable_indices(self) -> List[int]:
        return [0, 1] + self.idx_etahat

    @property
    def unstable_indices(self) -> List[int]:
        return self.idx_xihat + [self.idx_eta1]

    # -- coordinate maps ---------------------------------------------------
    def time_of(self, z):
        """``t = (2/(N-2)) z^(-(N-2)/2)``."""
        z = np.asarray(z, dtype=float)
        return 2.0 / (self.N - 2) * z ** (-(self.N - 2) / 2.0)

    def z_of(self, t):
        t = np.asarray(t, dtype=float)
        return (2.0 / ((self.N - 2) * t)) ** (2.0 / (self.N - 2))

    def to_J_psi(self, w):
        """Map reduced states to ``(J, psi)`` (psi1 and psihat)."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        N, n = self.N, self.n
        z = w[:, 0]
        if np.any(z <= 0):
            raise DomainError("z must be positive to map back to (J, psi)")
        zd = z ** self.delta
        J = np.empty((len(w), n))
        psi = np.empty((len(w), n))
        J[:, 0] = z * (self.Gamma + w[:, 1])
        J[:, 1:] = (z ** ((N + 2) / 2.0))[:, None] * w[:, self.idx_xihat]
        psi[:, 0] = self.c + zd * (self.c1 + self.c2 * zd + w[:, self.idx_eta1])
        psi[:, 1:] = (z ** (-(N - 2) / 2.0))[:, None] * (self.Omega_hat0 + w[:, self.idx_etahat])
        return J, psi

    def hamilton_rates(self, J, psi1, base: float | None = None):
        """(dJ/dt, dpsi/dt) of the truncated normal form in (J, psi) coordinates.

        ``psi1`` is an offset from ``base`` when ``base`` is given.
        """
        J = np.atleast_2d(J)
        psi1 = np.asarray(psi1, dtype=float)
        Jdot = np.zeros_like(J)
        Jdot[:, 0] = -self._dpsi(J, psi1, base)
        psidot = np.stack([g(J, psi1, base) for g in self._grad], axis=-1)
        return Jdot, psidot

    # -- linearization -----------------------------------------------------
    def linear_matrix(self) -> np.ndarray:
        N, d = self.N, self.dim
        L = np.zeros((d, d))
        L[0, 0] = -1.0
        L[1, 1] = -(N - 2) / 2.0
        L[1, 0] = -self.d0
        for i in self.idx_xihat:
            L[i, i] = (N + 2) / 2.0
        e = self.idx_eta1
        L[e, e] = (N + 2 * self.delta) / 2.0
        L[e, 0] = -self.d1
        L[e, 1] = -self.d2
        for j, i in enumerate(self.idx_etahat):
            L[i, i] = -(N - 2) / 2.0
            L[i, 0] = -self.dhat[j]
        return L

    # -- field -------------------------------------------------------------
    def field(self, w, check_domain: bool = False) -> np.ndarray:
        """Right-hand side ``dw/dtau`` of the autonomous reduced system."""
        w = np.asarray(w, dtype=float)
        single = w.ndim == 1
        W = np.atleast_2d(w)
        z = W[:, 0]
        if np.any(z < 0):
            raise DomainError("z < 0 is outside the right neighbourhood")
        if check_domain:
            self.check_domain(W)
        out = W @ self.linear_matrix().T
        live = z >= Z_GUARD
        if np.any(live):
            out[live] = self._full_field(W[live])
        return out[0] if single else out

    def _full_field(self, W):
        N, delta = self.N, self.delta
        z = W[:, 0]
        J, psi = self.to_J_psi(W)
        zd = z ** delta
        offset = zd * (self.c1 + self.c2 * zd + W[:, self.idx_eta1])
        Jdot, psidot = self.hamilton_rates(J, offset, base=self.c)
        out = np.empty_like(W)
        out[:, 0] = -z
        out[:, 1] = z ** (-N / 2.0) * Jdot[:, 0] + self.Gamma + W[:, 1]
        for j, i in enumerate(self.idx_xihat):
            out[:, i] = z ** (-float(N)) * Jdot[:, j + 1] + (N + 2) / 2.0 * W[:, i]
        e = self.idx_eta1
        out[:, e] = (z ** (1 - delta - N / 2.0) * psidot[:, 0] + delta * self.c1
                     + 2 * delta * self.c2 * zd + delta * W[:, e])
        for j, i in enumerate(self.idx_etahat):
            out[:, i] = psidot[:, j + 1] - (N - 2) / 2.0 * (self.Omega_hat0[j] + W[:, i])
        return out

    def nonlinear(self, w) -> np.ndarray:
        """``field - linear part``; its components are ``-U`` / ``-V`` (and 0 for z)."""
        w = np.asarray(w, dtype=float)
        return self.field(w) - w @ self.linear_matrix().T

    def remainders(self, w):
        """``(U, V)`` with ``U = (U1, Uhat)``, ``V = (V1, Vhat)`` as in the reduced system."""
        F = -np.atleast_2d(self.nonlinear(w))
        U = F[:, [1] + self.idx_xihat]
        V = F[:, [self.idx_eta1] + self.idx_etahat]
        if np.asarray(w).ndim == 1:
            return U[0], V[0]
        return U, V

    def check_domain(self, W, epsilon: float | None = None):
        eps = self.epsilon if epsilon is None else epsilon
        W = np.atleast_2d(W)
        if np.any(W[:, 0] < 0) or np.any(W[:, 0] >= eps):
            raise DomainError(f"z outside [0, {eps})")
        if np.any(scaled_norm(self, W[:, 1:]) >= eps):
            raise DomainError(f"(xi, eta) outside the {eps}-ball")

    def eigenvalues(self) -> np.ndarray:
        return np.diag(self.linear_matrix()).copy()


def scaled_norm(sys: ReducedSystem, v) -> np.ndarray:
    """Max-norm of (xi, eta) with xi measured in units of Gamma."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n = sys.n
    scale = np.ones(2 * n)
    scale[:n] = sys.Gamma
    return np.max(np.abs(v) / scale, axis=-1)


def compute_coefficients(bundle: KBundle, res: ResonanceStructure, gamma: float, c: float,
                         orientation: int = 1, epsilon: float = 0.05) -> ReducedSystem:
    """All constants of the reduced system for a ray with ``gamma > 0``.

    Writing ``S_d`` for the part of K homogeneous of degree d in J (angle-free
    and resonant terms together), and evaluating at ``(J, psi1) = (1, 0, c)``:

    N odd:  c1 = -2 G^((N-1)/2) d1 S_(N+1)/2 / (N+1),  c2 = -2 G^(N/2) d1 S_(N/2+1) / (N+2),
            d0 = G^((N+2)/2) dpsi S_(N/2+1) - G k1^4 c1^2 / 2,
            d1 = -G^((N+1)/2) d1 S_(N+3)/2 - c1 G^(N/2) d1 dpsi S_(N/2+1) + N k1^4 c1^3 / 12,
            d2 = -(N-1)/2 G^((N-3)/2) d1 S_(N+1)/2 - c1 N (N-2) / (4 G).
    N even: c1 = -2 G^(N/2) d1 S_(N/2+1) / (N+2),  c2 = 0,
            d0 = G^((N+2)/2) dpsi S_(N/2+1) + G^(N/2) c1 dpsi^2 K0,
            d1 = -G^(N/2+1) d1 S_(N/2+2) - c1 G^(N/2) d1 dpsi S_(N/2+1)
                 + k1^4 c1^2 G^((N-2)/2) d1 K0 / 2,
            d2 = -(N/2) G^(N/2-1) d1 S_(N/2+1) - c1 N (N-2) / (4 G).
    Both:   dhat = -G dhat S_2 - [N = 3] G^(1/2) c1 dhat dpsi S_(3/2).

    Here ``d1`` is the partial in J1, ``dhat`` the gradient in Jhat and G = Gamma.
    """
    if gamma <= 0:
        raise ReductionError("gamma must be positive; negate the Hamiltonian for the other ray")
    N, n, k1 = res.N, res.n, res.k1
    G = gamma ** (-2.0 / (N - 2))
    S = bundle.slice
    h = Fraction(1, 2)
    K0 = bundle.K_res(0)
    hat = range(1, n)

    if N % 2:
        a_lo = _at(S(Fraction(N + 1, 2)), c, dJ=(0,))
        S_up = S(Fraction(N, 2) + 1)
        c1 = -2 * G ** ((N - 1) / 2) / (N + 1) * a_lo
        c2 = -2 * G ** (N / 2) / (N + 2) * _at(S_up, c, dJ=(0,))
        d0 = G ** ((N + 2) / 2) * _at(S_up, c, dpsi=1) - G * k1 ** 4 * c1 ** 2 / 2
        d1 = (-G ** ((N + 1) / 2) * _at(S(Fraction(N + 3, 2)), c, dJ=(0,))
              - c1 * G ** (N / 2) * _at(S_up, c, dJ=(0,), dpsi=1)
              + N * k1 ** 4 * c1 ** 3 / 12)
        d2 = -(N - 1) / 2 * G ** ((N - 3) / 2) * a_lo - c1 * N * (N - 2) / (4 * G)
    else:
        S_up = S(Fraction(N, 2) + 1)
        a_up = _at(S_up, c, dJ=(0,))
        c1 = -2 * G ** (N / 2) / (N + 2) * a_up
        c2 = 0.0
        d0 = G ** ((N + 2) / 2) * _at(S_up, c, dpsi=1) + G ** (N / 2) * c1 * _at(K0, c, dpsi=2)
        d1 = (-G ** (N / 2 + 1) * _at(S(Fraction(N, 2) + 2), c, dJ=(0,))
              - c1 * G ** (N / 2) * _at(S_up, c, dJ=(0,), dpsi=1)
              + k1 ** 4 * c1 ** 2 * G ** ((N - 2) / 2) * _at(K0, c, dJ=(0,)) / 2)
        d2 = -(N / 2) * G ** (N / 2 - 1) * a_up - c1 * N * (N - 2) / (4 * G)

    dhat = np.array([-G * _at(S(2), c, dJ=(b,)) for b in hat])
    if N == 3:
        dhat = dhat - np.array([G ** h * c1 * _at(S(Fraction(3, 2)), c, dJ=(b,), dpsi=1) for b in hat])
    omega_hat0 = np.array([2.0 / (k1 * (N - 2)) * float(w) for w in res.omega[1:]])
    return ReducedSystem(
        N=N, n=n, k1=k1, omega=res.omega, gamma=gamma, Gamma=G, c=c,
        c1=c1, c2=c2, d0=d0, d1=d1, d2=d2, dhat=dhat, Omega_hat0=omega_hat0,
        bundle=bundle, orientation=orientation, epsilon=epsilon,
    )


def naive_coefficients(bundle: KBundle, res: ResonanceStructure, gamma: float, c: float) -> Dict[str, object]:
    """Constants assembled from the angle-free parts and single harmonics only.

    They drop the cross terms that :func:`compute_coefficients` keeps, so the
    linear part they produce does not match the true field. Used as a contrast.
    """
    N, n, k1 = res.N, res.n, res.k1
    G = gamma ** (-2.0 / (N - 2))
    Kj, Kr = bundle.K_int, bundle.K_res
    if N % 2:
        c1 = -2 * G ** ((N - 1) / 2) / (N + 1) * _at(Kj((N + 1) // 2), c, dJ=(0,))
        c2 = -2 * G ** (N / 2) / (N + 2) * _at(Kr(1), c, dJ=(0,))
        d0 = G ** ((N + 2) / 2) * _at(Kr(1), c, dpsi=1) - G * k1 ** 4 / 2 * c1 ** 2
        d1 = (-G ** ((N + 1) / 2) * _at(Kj((N + 3) // 2), c, dJ=(0,))
              - c1 * G ** (N / 2) * _at(Kr(1), c, dJ=(0,), dpsi=1))
        d2 = (-(N - 1) / 2 * G ** ((N - 3) / 2) * _at(Kj((N + 1) // 2), c, dJ=(0,))
              - c1 / G * N * (N - 2) / 4)
    else:
        c1 = -2 * G ** (N / 2) / (N + 2) * (_at(Kj(N // 2 + 1), c, dJ=(0,)) + _at(Kr(1), c, dJ=(0,)))
        c2 = 0.0
        d0 = G ** ((N + 2) / 2) * _at(Kr(1), c, dpsi=1) + c1 * _at(Kr(0), c, dpsi=2)
        d1 = (-G ** (N / 2 + 1) * (_at(Kj(N // 2 + 2), c, dJ=(0,)) + _at(Kr(2), c, dJ=(0,)))
              - c1 * G ** (N / 2) * _at(Kr(1), c, dJ=(0,), dpsi=1)
              + k1 ** 4 * c1 ** 2 * G ** ((N - 2) / 2) * _at(Kr(0), c, dJ=(0,)))
        d2 = -N / 2 * G ** (N / 2 - 1) * _at(Kj(N // 2 + 1), c, dJ=(0,)) - c1 / G * N * (N - 2) / 4
    dhat = np.array([
        G ** 2 * (_at(Kj(2), c, dJ=(b,)) + (N == 4) * _at(Kr(0), c, dJ=(b,)))
        for b in range(1, n)
    ])
    return dict(c1=c1, c2=c2, d0=d0, d1=d1, d2=d2, dhat=dhat)


def build_reduced_system(nf: NormalFormResult, res: ResonanceStructure, ray: Ray,
                         epsilon: float = 0.05, orientation: int = 1) -> ReducedSystem:
    lc = build_linear_change(res)
    bundle = transform_hamiltonian(nf, res, lc)
    gamma = compute_gamma(bundle.K_res(0), ray.c)
    return compute_coefficients(bundle, res, gamma, ray.c, orientation=orientation, epsilon=epsilon)
