"""Local stable manifold of the reduced system and the O-curves it carries.

The stable manifold is computed as the fixed point of the Lyapunov-Perron
operator on a uniform tau-grid.  Writing ``s = (z, xi1, etahat)`` and
``u = (xihat, eta1)``, the linear coupling ``u' = A_u u + C s`` is removed with
``u = X s + v`` where ``A_u X - X A_s = -C``; then

    s(tau) = e^{A_s tau} s0 + int_0^tau e^{A_s (tau - sigma)} F_s dsigma
    v(tau) = -int_tau^inf e^{A_u (tau - sigma)} (F_u - X F_s) dsigma.

Shooting on the full field is kept as an independent check.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import expm, solve_sylvester

from .flow import HamiltonianFlow
from .normal_form import NormalFormResult
from .reduced import DomainError, LinearChange, ReducedSystem
from .resonance import ResonanceStructure

log = logging.getLogger(__name__)

_GAUSS_U = np.array([0.5 - math.sqrt(0.15), 0.5, 0.5 + math.sqrt(0.15)])
_GAUSS_W = np.array([5.0, 8.0, 5.0]) / 18.0
_STENCILS = {"first": (0, 1, 2, 3), "inner": (-1, 0, 1, 2), "last": (-2, -1, 0, 1)}


class ManifoldError(RuntimeError):
    pass


class NoContraction(ManifoldError):
    pass


class HorizonTooShort(ManifoldError):
    pass


class ActionNegative(ManifoldError):
    """A mapped sample has a negative action; the chart is no longer valid there."""


@dataclass(frozen=True)
class ManifoldConfig:
    horizon: Optional[float] = None
    nodes: int = 2000
    tol: float = 1e-14
    max_iter: int = 200
    horizon_decay: float = 1e-6
    shoot: bool = True
    shoot_rtol: float = 1e-12
    shoot_atol: float = 1e-15


@dataclass(frozen=True)
class ConvergenceReport:
    iterations: int
    contraction_ratio: float
    residual: float
    ratios: tuple = ()


@dataclass
class ManifoldChart:
    stable_params: tuple
    graph_value: np.ndarray
    report: ConvergenceReport
    tau: np.ndarray
    states: np.ndarray
    shooting_value: Optional[np.ndarray] = None

    @property
    def shooting_gap(self) -> float:
        if self.shooting_value is None:
            return float("nan")
        return float(np.max(np.abs(self.shooting_value - self.graph_value)))

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[0].copy()


@dataclass
class OCurve:
    sign: int
    eta_hat0: np.ndarray
    ray_c: float
    t: np.ndarray
    x: np.ndarray
    J: np.ndarray
    psi: np.ndarray
    reduced: np.ndarray
    chart: ManifoldChart = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# linear splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Splitting:
    S: List[int]
    U: List[int]
    A_s: np.ndarray
    A_u: np.ndarray
    X: np.ndarray


def splitting(sys: ReducedSystem) -> Splitting:
    L = sys.linear_matrix()
    S, U = sys.stable_indices, sys.unstable_indices
    if np.any(L[np.ix_(S, U)]):
        raise ManifoldError("stable block depends on unstable coordinates")
    A_s, A_u, C = L[np.ix_(S, S)], L[np.ix_(U, U)], L[np.ix_(U, S)]
    X = solve_sylvester(A_u, -A_s, -C)
    return Splitting(S=S, U=U, A_s=A_s, A_u=A_u, X=X)


def _lagrange(offsets, u):
    w = np.ones(len(offsets))
    for l, pl in enumerate(offsets):
        for m, pm in enumerate(offsets):
            if m != l:
                w[l] *= (u - pm) / (pl - pm)
    return w


def _interval_weights(A: np.ndarray, h: float, forward: bool):
    """Matrices ``B[kind][l]`` with ``int_interval e^{A(.)} f ~ sum_l B[l] f_{j+p_l}``."""
    exps = [expm(A * h * ((1 - u) if forward else -u)) for u in _GAUSS_U]
    out = {}
    for kind, offs in _STENCILS.items():
        B = np.zeros((4,) + A.shape)
        for q, u in enumerate(_GAUSS_U):
            lw = _lagrange(offs, u)
            for l in range(4):
                B[l] += h * _GAUSS_W[q] * lw[l] * exps[q]
        out[kind] = B
    return out


def _increments(B, F, M):
    """Per-interval quadrature for all ``M`` intervals from node values ``F`` (M+1, d)."""
    d = B["inner"].shape[1]
    inc = np.zeros((M, d))
    inc[0] = sum(B["first"][l] @ F[l] for l in range(4))
    inc[M - 1] = sum(B["last"][l] @ F[M - 3 + l] for l in range(4))
    if M > 2:
        for l in range(4):
            inc[1:M - 1] += F[l:l + M - 2] @ B["inner"][l].T
    return inc


# ---------------------------------------------------------------------------
# Lyapunov-Perron
# ---------------------------------------------------------------------------

def stable_manifold_point(sys: ReducedSystem, z0: float, xi10: float = 0.0,
                          eta_hat0: Sequence[float] | float = 0.0,
                          config: ManifoldConfig = ManifoldConfig(),
                          initial: Optional[np.ndarray] = None) -> ManifoldChart:
    """Graph value ``(xihat0, eta10)`` over the stable parameters ``(z0, xi10, etahat0)``."""
    n = sys.n
    eta_hat0 = np.broadcast_to(np.asarray(eta_hat0, dtype=float), (n - 1,)).copy()
    if z0 <= 0:
        raise DomainError("z0 must be positive")
    s0 = np.concatenate([[z0, xi10], eta_hat0])
    probe = np.zeros(sys.dim)
    probe[sys.stable_indices] = s0
    sys.check_domain(probe)

    sp = splitting(sys)
    T = config.horizon if config.horizon is not None else 40.0 / (sys.N - 2)
    M = int(config.nodes)
    if M < 4:
        raise ValueError("need at least 4 intervals")
    h = T / M
    tau = np.linspace(0.0, T, M + 1)
    Es = expm(sp.A_s * h)
    Eu_back = expm(-sp.A_u * h)
    Bs = _interval_weights(sp.A_s, h, forward=True)
    Bu = _interval_weights(sp.A_u, h, forward=False)
    du = len(sp.U)

    def assemble(s, v):
        W = np.empty((M + 1, sys.dim))
        W[:, sp.S] = s
        W[:, sp.U] = s @ sp.X.T + v
        return W

    if initial is None:
        s = np.empty((M + 1, len(sp.S)))
        s[0] = s0
        for j in range(M):
            s[j + 1] = Es @ s[j]
        W = assemble(s, np.zeros((M + 1, du)))
    else:
        W = np.array(initial, dtype=float)
        W[0, sp.S] = s0

    ratios: List[float] = []
    prev = None
    diff = float("inf")
    it = 0
    for it in range(1, config.max_iter + 1):
        sys.check_domain(W)
        F = sys.nonlinear(W)
        Fs = F[:, sp.S]
        G = F[:, sp.U] - Fs @ sp.X.T

        inc_s = _increments(Bs, Fs, M)
        s = np.empty((M + 1, len(sp.S)))
        s[0] = s0
        for j in range(M):
            s[j + 1] = Es @ s[j] + inc_s[j]

        gM, gM1 = np.max(np.abs(G[M])), np.max(np.abs(G[M - 1]))
        mu = 0.0
        if gM > 0 and gM1 > 0:
            mu = min(max(math.log(gM1 / gM) / h, 0.0), 50.0)
        inc_u = _increments(Bu, G, M)
        v = np.empty((M + 1, du))
        v[M] = -np.linalg.solve(sp.A_u + mu * np.eye(du), G[M])
        for j in range(M - 1, -1, -1):
            v[j] = Eu_back @ v[j + 1] - inc_u[j]

        W_new = assemble(s, v)
        diff = float(np.max(np.abs(W_new - W)))
        scale = max(float(np.max(np.abs(W_new))), 1e-300)
        if prev is not None and prev > 1e3 * np.finfo(float).eps * scale:
            ratios.append(diff / prev)
            if ratios[-1] >= 1.0 and diff > 1e3 * np.finfo(float).eps * scale:
                raise NoContraction(f"contraction ratio {ratios[-1]:.3g} >= 1 at iteration {it}")
        W, prev = W_new, diff
        log.debug("LP iteration %d: change %.3e", it, diff)
        if diff <= config.tol * max(1.0, scale):
            break
    else:
        raise NoContraction(f"no convergence in {config.max_iter} iterations (last change {diff:.3e})")

    sys.check_domain(W)
    # judged on the stable coordinates: eta1 may grow like z^(-delta) from rounding
    # of the ray constants, which is invisible in psi1 = c + z^delta (...)
    start, end = float(np.max(np.abs(W[0, sp.S]))), float(np.max(np.abs(W[-1, sp.S])))
    if end > config.horizon_decay * start:
        raise HorizonTooShort(f"state at T={T} still {end / start:.2e} of its initial size")

    report = ConvergenceReport(
        iterations=it,
        contraction_ratio=max(ratios) if ratios else 0.0,
        residual=diff,
        ratios=tuple(ratios),
    )
    chart = ManifoldChart(
        stable_params=(z0, xi10, tuple(eta_hat0)),
        graph_value=W[0, sp.U].copy(),
        report=report,
        tau=tau,
        states=W,
    )
    if config.shoot:
        chart.shooting_value = shooting_graph_value(sys, s0, chart.graph_value, config)
    return chart


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------

def shooting_graph_value(sys: ReducedSystem, s0: np.ndarray, guess: Optional[np.ndarray] = None,
                         config: ManifoldConfig = ManifoldConfig(), max_iter: int = 30) -> np.ndarray:
    """Damped Newton on ``u(T) - X s(T) = 0`` with ``T = ln(1e6) / min Re(lambda_u)``."""
    sp = splitting(sys)
    lam = float(np.min(np.real(np.linalg.eigvals(sp.A_u))))
    T = math.log(1e6) / lam

    def residual(u0):
        w0 = np.empty(sys.dim)
        w0[sp.S] = s0
        w0[sp.U] = u0
        sol = solve_ivp(lambda _t, w: sys.field(w), (0.0, T), w0, method="DOP853",
                        rtol=config.shoot_rtol, atol=config.shoot_atol)
        if not sol.success:
            raise ManifoldError(f"shooting integration failed: {sol.message}")
        wT = sol.y[:, -1]
        return wT[sp.U] - sp.X @ wT[sp.S]

    u = np.array(sp.X @ s0 if guess is None else guess, dtype=float)
    r = residual(u)
    for _ in range(max_iter):
        step_fd = 1e-7 * max(1e-3, float(np.max(np.abs(u))))
        Jac = np.empty((len(u), len(u)))
        for i in range(len(u)):
            du = np.zeros_like(u)
            du[i] = step_fd
            Jac[:, i] = (residual(u + du) - r) / step_fd
        step = np.linalg.solve(Jac, -r)
        lam_d = 1.0
        while True:
            trial = u + lam_d * step
            rt = residual(trial)
            if np.linalg.norm(rt) < np.linalg.norm(r) or lam_d < 1e-4:
                break
            lam_d /= 2
        u, r = trial, rt
        if np.max(np.abs(lam_d * step)) < 1e-14 * max(1.0, float(np.max(np.abs(u)))):
            break
    return u


# ---------------------------------------------------------------------------
# back to the original coordinates
# ---------------------------------------------------------------------------

def reduced_to_cartesian(sys: ReducedSystem, nf: NormalFormResult, res: ResonanceStructure,
                         lc: LinearChange, W: np.ndarray):
    """Map reduced states to ``(x, J, psi)`` in the original Cartesian coordinates."""
    W = np.atleast_2d(W)
    J, psi = sys.to_J_psi(W)
    _, A1_inv, _ = lc.as_arrays()
    A1 = np.array([[float(v) for v in row] for row in lc.A1])
    I = J @ A1_inv.T
    if np.any(I < 0):
        raise ActionNegative(f"negative action {I.min():.3e}")
    theta = psi @ A1
    r = np.sqrt(2 * I)
    n = sys.n
    y = np.concatenate([r * np.cos(theta), r * np.sin(theta)], axis=1)
    xw = np.stack([f(y) for f in nf.forward_map], axis=-1)
    x = np.empty_like(xw)
    for i, p in enumerate(res.permutation):
        x[:, p] = xw[:, i]
        x[:, p + n] = xw[:, i + n]
    return x, J, psi


def build_ocurve(sys: ReducedSystem, nf: NormalFormResult, res: ResonanceStructure,
                 lc: LinearChange, chart: ManifoldChart, t: Sequence[float], sign: int = 1) -> OCurve:
    """Sample the O-curve of ``chart`` at (positive) times ``t``; O- curves are returned at ``-t``."""
    t = np.asarray(t, dtype=float)
    z0 = chart.stable_params[0]
    z = sys.z_of(t)
    if np.any(z >= sys.epsilon):
        raise DomainError("requested times reach z >= epsilon")
    tau = np.log(z0 / z)
    if np.any(tau < -1e-12) or np.any(tau > chart.tau[-1]):
        raise DomainError("requested times fall outside the chart's tau-range")
    spline = CubicSpline(chart.tau, chart.states, axis=0)
    W = spline(np.clip(tau, 0.0, chart.tau[-1]))
    W[:, 0] = z
    x, J, psi = reduced_to_cartesian(sys, nf, res, lc, W)
    eta_hat0 = np.array(chart.stable_params[2], dtype=float)
    return OCurve(sign=sign, eta_hat0=eta_hat0, ray_c=sys.c, t=sign * t, x=x, J=J, psi=psi,
                  reduced=W, chart=chart)


def t_for_z(sys: ReducedSystem, z) -> float:
    return float(sys.time_of(z))


def ocurve_family(sys: ReducedSystem, nf: NormalFormResult, res: ResonanceStructure, lc: LinearChange,
                  eta_hats: Sequence, t: Sequence[float], xi10: float = 0.0, sign: int = 1,
                  config: ManifoldConfig = ManifoldConfig()) -> List[OCurve]:
    """One O-curve per ``etahat0``; the chart starts at ``z0 = z(min t)``."""
    t = np.asarray(t, dtype=float)
    z0 = float(sys.z_of(t.min()))
    curves = []
    for eh in eta_hats:
        chart = stable_manifold_point(sys, z0, xi10, eh, config)
        curves.append(build_ocurve(sys, nf, res, lc, chart, t, sign=sign))
    return curves


def chain_rule_audit(sys: ReducedSystem, nf: NormalFormResult, res: ResonanceStructure,
                     lc: LinearChange, H, W: np.ndarray, h: float = 1e-5) -> float:
    """Relative mismatch between ``d/dtau`` of the mapped state and the original field.

    Moves each reduced sample along the reduced field by a central difference,
    maps both ends to Cartesian coordinates, and compares with the original
    Hamiltonian field scaled by ``dt/dtau``.
    """
    flow = HamiltonianFlow(H, sign=sys.orientation)
    W = np.atleast_2d(W)
    F = sys.field(W)
    # psihat turns at rate ~ z^(-(N-2)/2) in tau, so the step shrinks with z
    step = (h * W[:, 0] ** ((sys.N - 2) / 2))[:, None]
    xp, _, _ = reduced_to_cartesian(sys, nf, res, lc, W + step * F)
    xm, _, _ = reduced_to_cartesian(sys, nf, res, lc, W - step * F)
    x0, _, _ = reduced_to_cartesian(sys, nf, res, lc, W)
    lhs = (xp - xm) / (2 * step)
    dt_dtau = W[:, 0] ** (1 - sys.N / 2)
    rhs = flow(0.0, x0) * dt_dtau[:, None]
    return float(np.max(np.abs(lhs - rhs) / (np.abs(rhs).max(axis=1, keepdims=True) + 1e-300)))
