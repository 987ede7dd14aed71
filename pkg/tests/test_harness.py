import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocurvelab.algebra import CartesianPolynomial
from ocurvelab.examples import e2
from ocurvelab.flow import HamiltonianFlow
from ocurvelab.harness import (
    DRIFT_TOL,
    FitError,
    HarnessError,
    IntegratorConfig,
    Trajectory,
    fit_power_law,
    integrate_hamiltonian,
    predicted_laws,
    quadratic_scale,
)

from .helpers import quadratic

HARMONIC = quadratic((1,))


def test_harmonic_radius_is_conserved():
    t = np.linspace(0, 2 * math.pi * 1000, 4001)
    traj = integrate_hamiltonian(HARMONIC, [1.0, 0.0], t, IntegratorConfig(rtol=1e-12, atol=1e-14))
    r = np.hypot(traj.states[:, 0], traj.states[:, 1])
    assert np.abs(r - 1).max() <= 1e-10
    assert traj.energy_drift() <= 1e-10


def test_reversibility():
    x0 = np.array([0.3, -0.2, 0.1, 0.25])
    fwd = integrate_hamiltonian(e2(), x0, [0.0, 5.0])
    back = integrate_hamiltonian(e2(), fwd.states[-1], [5.0, 0.0])
    assert np.abs(back.states[-1] - x0).max() <= 1e-8


def test_orientation_turns_angles_forward():
    # H = 2 I1: theta1 advances at rate +2
    H = quadratic((2,))
    traj = integrate_hamiltonian(H, [1.0, 0.0], [0.0, 0.1])
    x, y = traj.states[-1]
    assert math.atan2(y, x) == pytest.approx(0.2, abs=1e-10)
    flow = HamiltonianFlow(H, sign=-1)
    assert np.allclose(flow(0.0, np.array([1.0, 0.0])), [0.0, -2.0])


def test_error_shrinks_with_tolerance():
    t = [0.0, 50.0]
    errs = []
    for tol in (1e-5, 1e-8, 1e-11):
        traj = integrate_hamiltonian(HARMONIC, [1.0, 0.0], t, IntegratorConfig(rtol=tol, atol=tol * 1e-2))
        errs.append(abs(traj.states[-1, 0] - math.cos(50.0)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3), st.booleans(), st.floats(0.01, 100))
def test_fit_recovers_power_law(p, negative, a):
    p = -p if negative else p
    t = np.geomspace(1, 1e3, 50)
    f = fit_power_law(t, a * t ** p)
    assert f.exponent == pytest.approx(p, abs=1e-9)
    assert f.amplitude == pytest.approx(a, rel=1e-9)
    assert f.r_squared == pytest.approx(1.0, abs=1e-9)


def test_fit_uses_absolute_time_and_window():
    t = -np.geomspace(1, 100, 40)
    f = fit_power_law(t, 2 * np.abs(t) ** -1.0, window=(2, 50))
    assert f.exponent == pytest.approx(-1.0)
    assert f.window[0] >= 2 and f.window[1] <= 50


@pytest.mark.parametrize("y", [[1.0, 2.0], [1.0, 0.0, 2.0], [1.0, np.nan, 1.0]])
def test_fit_errors(y):
    with pytest.raises(FitError):
        fit_power_law(np.arange(1, len(y) + 1), y)


def test_csv_layout(tmp_path):
    traj = integrate_hamiltonian(quadratic((2, -1)), [0.1, 0.2, 0.0, 0.0], [0.0, 0.5, 1.0])
    traj.J1 = np.array([1 / 3, 0.25, 0.125])
    text = traj.csv_text()
    lines = text.splitlines()
    assert lines[0] == "t,x1,x2,x3,x4,H,J1,psi1"
    assert len(lines) == 4
    assert lines[1].split(",")[6] == "0.33333333333333331"
    assert lines[1].split(",")[7] == "nan"
    traj.write_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text() == text
    # 17 significant digits round-trip the doubles
    back = np.array([[float(v) for v in row.split(",")] for row in lines[1:]])
    assert np.array_equal(back[:, :5], np.c_[traj.t, traj.states])


def test_trajectory_validation():
    with pytest.raises(HarnessError):
        Trajectory("cartesian", np.array([0.0, 1.0, 0.5]), np.zeros((3, 2)), np.zeros(3))
    with pytest.raises(HarnessError):
        Trajectory("cartesian", np.array([0.0, 1.0]), np.array([[0.0, np.inf], [0, 0]]), np.zeros(2))


def test_quadratic_scale():
    assert quadratic_scale(quadratic((2, -1)), [1.0, 1.0, 0.0, 0.0]) == pytest.approx(1.5)
    assert quadratic_scale(CartesianPolynomial(1, {(1, 1): 1}), [1.0, 1.0]) == 0.0


def test_predicted_laws(e1_pipe, n4_pipe):
    s = e1_pipe.branch(1).system
    (pJ, aJ), (pP, aP) = predicted_laws(s)
    assert (pJ, pP) == (-2.0, -1.0)
    assert aJ == pytest.approx(4 * s.Gamma)
    (pJ, _), (pP, _) = predicted_laws(n4_pipe.branch(1).system)
    assert (pJ, pP) == (-1.0, -1.0)


def test_e2_curve_verifies(e2_pipe):
    curve = e2_pipe.curve(0.02, samples=60)
    rep = e2_pipe.verify(curve)
    assert rep.passed, rep.lines()
    assert rep.check("energy_drift").value <= DRIFT_TOL
    assert rep.check("psi1_exponent").value == pytest.approx(-1.0, abs=0.05)
