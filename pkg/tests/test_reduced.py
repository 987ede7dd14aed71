import dataclasses
import math
from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from ocurvelab.reduced import (
    DomainError,
    ReductionError,
    build_linear_change,
    compute_gamma,
    naive_coefficients,
)
from ocurvelab.resonance import ResonanceStructure

from .helpers import nlt_ratios, remainder_jacobian
from .oracles.symbolic import e2_expr, reduced_constants

SQ2 = math.sqrt(2)
NAMES = ("gamma", "Gamma", "c1", "c2", "d0", "d1", "d2")


@pytest.fixture(scope="module")
def oracle():
    c = 3 * sp.pi / 2
    return {b: reduced_constants(e2_expr(1, b), (2, -1), (1, 2), c) for b in (0, 1)}


def at(series, J, psi):
    return float(series(np.asarray(J, dtype=float), psi))


# -- linear change -------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=3), st.integers(1, 4))
def test_linear_change_invariants(tail, k1):
    k = (k1, *tail)
    n = len(k)
    omega = (F(sum(tail), k1),) + tuple(F(-1) for _ in tail)
    res = ResonanceStructure(omega, k)
    A1, A1i, A2 = build_linear_change(res).as_arrays()
    assert np.allclose(A1 @ A1i, np.eye(n), atol=1e-14)
    assert np.allclose(A2 @ A1.T, np.eye(n), atol=1e-14)
    assert A1[0, 0] == k1 and not A1[0, 1:].any()
    # psi1 is the resonant angle <k, theta> / k1^2
    theta = np.linspace(0.3, 1.1, n)
    assert A2[0] @ theta == pytest.approx(np.dot(k, theta) / k1 ** 2)


def test_linear_change_with_k1_two():
    res = ResonanceStructure((F(1), F(-2)), (2, 1))
    _, _, A2 = build_linear_change(res).as_arrays()
    theta = np.array([0.7, -0.4])
    psi = A2 @ theta
    assert psi[0] == pytest.approx((2 * theta[0] + theta[1]) / 4)
    assert psi[1] == pytest.approx(theta[1] / 2)


def test_e1_linear_change(e1_pipe):
    lc = e1_pipe.branch(1).lc
    assert lc.A1 == ((1, 0), (-2, 1))
    assert lc.A2 == ((1, 2), (0, 1))


def test_e1_resonant_part(e1_pipe):
    K0 = e1_pipe.branch(1).system.bundle.K_res(0)
    for J1, J2, psi in ((1.0, 0.0, 0.3), (0.4, 0.2, 2.0), (2.0, -1.0, -1.0)):
        want = 2 * SQ2 * math.sqrt(J1) * (J2 + 2 * J1) * math.cos(psi)
        assert at(K0, [J1, J2], psi) == pytest.approx(want, rel=1e-13)


# -- coefficients ----------------------------------------------------------------

def test_e1_coefficients(e1_pipe):
    s = e1_pipe.branch(1).system
    assert s.gamma == pytest.approx(4 * SQ2, abs=1e-10)
    assert s.Gamma == pytest.approx(1 / 32, abs=1e-12)
    for v in (s.c1, s.c2, s.d0, s.d1, s.d2, *s.dhat):
        assert abs(v) <= 1e-10
    assert np.allclose(s.Omega_hat0, [-2.0])


def test_e2_coefficients(e2_pipe):
    s = e2_pipe.branch(1).system
    assert s.c1 == pytest.approx(-1 / 8, abs=1e-10)
    assert s.d2 == pytest.approx(-5, abs=1e-10)
    assert s.d0 == pytest.approx(-8 * s.Gamma ** 3, abs=1e-10)


@pytest.mark.parametrize("b", [0, 1])
def test_against_symbolic_oracle(b, oracle, e1_pipe, e2_pipe):
    s = (e1_pipe, e2_pipe)[b].branch(1).system
    want = oracle[b]
    for name in NAMES:
        assert getattr(s, name) == pytest.approx(float(want[name]), abs=1e-10), name
    assert s.dhat[0] == pytest.approx(float(want["dhat"]), abs=1e-10)


def test_oracle_values(oracle):
    assert oracle[1]["c1"] == sp.Rational(-1, 8)
    assert oracle[1]["d0"] == sp.Rational(-1, 4096)
    assert oracle[1]["dhat"] == sp.Rational(1, 16)


def test_gamma_must_be_positive(e1_pipe):
    b = e1_pipe.branch(1)
    with pytest.raises(ReductionError):
        compute_gamma(b.system.bundle.K_res(0), 0.0)


# -- nonlinear terms ---------------------------------------------------------------

@pytest.mark.parametrize("name", ["e1_pipe", "e2_pipe", "n4_pipe", "n5_pipe"])
@pytest.mark.parametrize("sign", [1, -1])
def test_remainders_are_superlinear(name, sign, request):
    s = request.getfixturevalue(name).branch(sign).system
    r = nlt_ratios(s)
    assert all(b < a for a, b in zip(r, r[1:])), r
    assert r[-1] < r[0] / 20


@pytest.mark.parametrize("name", ["e1_pipe", "e2_pipe"])
def test_remainder_jacobian_at_origin(name, request):
    s = request.getfixturevalue(name).branch(1).system
    U, V = s.remainders(np.zeros(s.dim))
    assert np.abs(U).max() <= 1e-10 and np.abs(V).max() <= 1e-10
    assert np.abs(remainder_jacobian(s)).max() <= 1e-6


def test_dropping_the_cross_term_breaks_the_linear_part(e2_pipe):
    s = e2_pipe.branch(1).system
    broken = dataclasses.replace(s, dhat=np.zeros_like(s.dhat))
    r = nlt_ratios(broken, steps=(1e-4, 1e-6))
    assert r[-1] > 0.5 * r[0]


@pytest.mark.parametrize("name", ["n4_pipe", "n5_pipe"])
def test_naive_constants_break_the_linear_part(name, request):
    b = request.getfixturevalue(name).branch(1)
    s = b.system
    naive = naive_coefficients(s.bundle, b.res, s.gamma, s.c)
    broken = dataclasses.replace(s, **naive)
    r = nlt_ratios(broken, steps=(1e-4, 1e-6))
    assert r[-1] > 0.5 * r[0]


# -- structure ------------------------------------------------------------------------

def test_e1_eigenvalues(e1_pipe):
    s = e1_pipe.branch(1).system
    ev = np.sort(np.linalg.eigvals(s.linear_matrix()).real)
    assert np.allclose(ev, sorted([-1, -0.5, 2.5, 2, -0.5]), atol=1e-10)
    assert np.allclose(s.eigenvalues(), [-1, -0.5, 2.5, 2, -0.5], atol=1e-10)


@pytest.mark.parametrize("name", ["e1_pipe", "e2_pipe", "n4_pipe", "n5_pipe"])
def test_resonant_part_identities(name, request):
    p = request.getfixturevalue(name)
    s = p.branch(1).system
    K0 = s.bundle.K_res(0)
    J = np.eye(s.n)[0]
    mixed = at(K0.dJ(0).dpsi(), J, s.c)
    assert mixed == pytest.approx(s.N / 2 * s.gamma, abs=1e-10)
    third = at(K0.dJ(0).dpsi().dpsi(), J, s.c)
    assert third == pytest.approx(-s.k1 ** 4 * at(K0.dJ(0), J, s.c), abs=1e-10)


def test_minus_branch_uses_negated_form(e1_pipe):
    b = e1_pipe.branch(-1)
    assert b.system.c == pytest.approx(math.pi / 2)
    assert b.system.gamma == pytest.approx(4 * SQ2)
    assert b.nf.negated().normal_form == e1_pipe.nf.normal_form


def test_time_scaling(e2_pipe):
    s = e2_pipe.branch(1).system
    z = np.array([1e-4, 1e-2, 0.04])
    assert np.allclose(s.z_of(s.time_of(z)), z, rtol=1e-13)
    # dt/dtau = z^(1 - N/2) with dz/dtau = -z
    h = 1e-7
    dt = (s.time_of(z * math.exp(-h)) - s.time_of(z)) / h
    assert np.allclose(dt, z ** (1 - s.N / 2), rtol=1e-5)


def test_ansatz_offsets(e2_pipe):
    s = e2_pipe.branch(1).system
    w = np.zeros(s.dim)
    w[0] = 0.01
    J, psi = s.to_J_psi(w)
    assert J[0, 0] == pytest.approx(0.01 * s.Gamma)
    assert psi[0, 0] - s.c == pytest.approx(0.01 ** 0.5 * s.c1)
    with pytest.raises(DomainError):
        s.to_J_psi(np.zeros(s.dim))


def test_negative_z_rejected(e1_pipe):
    s = e1_pipe.branch(1).system
    w = np.zeros(s.dim)
    w[0] = -1e-3
    with pytest.raises(DomainError):
        s.field(w)
    w[0] = 0.5
    with pytest.raises(DomainError):
        s.check_domain(w)
