"""End-to-end driver: resonance, normal form, rays, reduction, curves, verification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .algebra import CartesianPolynomial
from .harness import ChannelCoordinates, IntegratorConfig, VerificationReport, verify_ocurve
from .manifold import ManifoldConfig, OCurve, build_ocurve, stable_manifold_point
from .normal_form import (
    NormalFormResult,
    birkhoff_normalize,
    permute_variables,
    quadratic_frequencies,
)
from .rays import H3Report, PsiForm, Ray, build_psi, check_h3, find_rays
from .reduced import LinearChange, ReducedSystem, build_linear_change, build_reduced_system
from .resonance import ResonanceStructure, check_h1_h2

DEFAULT_EPSILON = 0.05


@dataclass
class Branch:
    """Everything attached to one ray; the minus branch works with ``-H``."""

    sign: int
    ray: Ray
    nf: NormalFormResult
    res: ResonanceStructure
    lc: LinearChange
    system: ReducedSystem


@dataclass
class Pipeline:
    H: CartesianPolynomial
    res: ResonanceStructure
    nf: NormalFormResult
    h3: H3Report
    psi: Optional[PsiForm] = None
    plus: Optional[Ray] = None
    minus: Optional[Ray] = None
    epsilon: float = DEFAULT_EPSILON
    _branches: Dict[int, Branch] = field(default_factory=dict, repr=False)

    @classmethod
    def from_hamiltonian(cls, H: CartesianPolynomial, order: int | None = None,
                         epsilon: float = DEFAULT_EPSILON, with_rays: bool = True) -> "Pipeline":
        omega = quadratic_frequencies(H)
        res = check_h1_h2(omega)
        nf = birkhoff_normalize(permute_variables(H, res.permutation), res, order)
        p = cls(H=H, res=res, nf=nf, h3=check_h3(nf, res), epsilon=epsilon)
        if with_rays:
            p.find_rays()
        return p

    def find_rays(self):
        if self.plus is None:
            self.psi = build_psi(self.nf, self.res)
            self.plus, self.minus = find_rays(self.psi)
        return self.plus, self.minus

    def branch(self, sign: int = 1) -> Branch:
        if sign not in self._branches:
            self.find_rays()
            if sign > 0:
                nf, res, ray = self.nf, self.res, self.plus
            else:
                nf = self.nf.negated()
                res = ResonanceStructure(tuple(-w for w in self.res.omega), self.res.k, self.res.permutation)
                ray = Ray(c=self.minus.c, sign=1, psi_prime=-self.minus.psi_prime)
            system = build_reduced_system(nf, res, ray, epsilon=self.epsilon, orientation=sign)
            self._branches[sign] = Branch(sign=sign, ray=ray, nf=nf, res=res,
                                          lc=build_linear_change(res), system=system)
        return self._branches[sign]

    def default_t0(self, sign: int = 1) -> float:
        """``t0`` with ``z(t0) = epsilon / 4``."""
        return float(self.branch(sign).system.time_of(self.epsilon / 4))

    def curve(self, eta_hat0, sign: int = 1, t: Sequence[float] | None = None, xi10: float = 0.0,
              samples: int = 200, config: ManifoldConfig = ManifoldConfig()) -> OCurve:
        b = self.branch(sign)
        if t is None:
            t0 = self.default_t0(sign)
            t = np.geomspace(t0, 100 * t0, samples)
        t = np.asarray(t, dtype=float)
        z0 = float(b.system.z_of(t.min()))
        chart = stable_manifold_point(b.system, z0, xi10, eta_hat0, config)
        return build_ocurve(b.system, b.nf, b.res, b.lc, chart, t, sign=sign)

    def channel(self, sign: int = 1) -> ChannelCoordinates:
        b = self.branch(sign)
        return ChannelCoordinates(self.nf, self.res, b.lc, b.ray.c)

    def verify(self, curve: OCurve, config: IntegratorConfig = IntegratorConfig(), x0=None) -> VerificationReport:
        b = self.branch(curve.sign)
        return verify_ocurve(self.H, b.system, curve, self.channel(curve.sign), config, x0=x0)

    def family(self, eta_hats: Sequence, sign: int = 1, **kw) -> List[OCurve]:
        order = sorted(eta_hats, key=lambda v: tuple(np.atleast_1d(v)))
        return [self.curve(v, sign=sign, **kw) for v in order]
