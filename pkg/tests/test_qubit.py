import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import frozen
from qbattery.errors import TruncationWarning
from qbattery.model import ModelParams, build_effective_unitary, cavity_energies, qubit_energies
from qbattery.qubit import (
    a_tau,
    charging_rate,
    eta_thermal_limits,
    fixed_point,
    passive_qubit,
    qubit_ergotropy,
    qubit_ergotropy_of,
    qubit_figures_of_merit,
    qubit_step,
    resolve_initial,
    run_qubit_charging,
    subdominant_eigenvalue,
    transition_matrix,
    work_thermal_initial,
)
from qbattery.thermo import DiagonalState, collision_step


def params(**kw):
    base = dict(omega_e=1.0, Omega_L=1.0, g=1.0, delta=8.0, N0=6.0, beta=1.0, omega=1.0, tau=1.0)
    base.update(kw)
    return ModelParams(**base)


def test_a_tau_matches_series_oracle():
    c = dict(frozen.ATAU_CASE)
    bw = c.pop("beta_omega")
    p = params(beta=bw, **c)
    assert a_tau(p) == pytest.approx(frozen.ATAU_SERIES, rel=1e-11)


def test_a_tau_equals_dense_reduced_dynamics():
    p = params(N0=2.5, Omega_L=1.4, g=1.2, beta=0.6)
    n_max = 30
    with pytest.warns(TruncationWarning):
        A = a_tau(p, n_max)
    u = build_effective_unitary(p, n_max)
    for start in ([1.0, 0.0], [0.0, 1.0]):
        s, _ = collision_step(DiagonalState(np.array(start), qubit_energies(p)), u,
                              cavity_energies(p, n_max), p.beta, entropy_production=False)
        ref = transition_matrix(A, p.beta * p.omega) @ np.array(start)
        assert np.allclose(s.probs, ref, atol=1e-14)


def test_fixed_point_and_contraction():
    bw = 0.9
    pg, pe = fixed_point(bw)
    assert pe == pytest.approx(1 / (1 + math.exp(-bw)))
    T = transition_matrix(0.2, bw)
    assert T.sum(axis=0) == pytest.approx([1.0, 1.0])
    assert T @ np.array([pg, pe]) == pytest.approx([pg, pe], abs=1e-16)
    lam = np.sort(np.linalg.eigvals(T).real)
    assert lam[0] == pytest.approx(subdominant_eigenvalue(0.2, bw), abs=1e-15)
    assert charging_rate(0.2, bw) == pytest.approx(-math.log(1 - 0.2 * (1 + math.exp(-bw))))


def test_closed_form_trajectory():
    p = params()
    rep = run_qubit_charging(p, "thermal", 50)
    A = rep.A_tau[0]
    lam = subdominant_eigenvalue(A, 1.0)
    pe0 = p.qubit_thermal()[1]
    k = np.arange(51)
    expected = rep.fixed_point[1] + (pe0 - rep.fixed_point[1]) * lam**k
    assert np.allclose(rep.trajectory[:, 1], expected, atol=1e-14)


def test_step_rejects_invalid_probability():
    with pytest.raises(ValueError):
        qubit_step((0.5, 0.5), 1.5, 1.0)


def test_resolve_initial_forms():
    p = params()
    assert resolve_initial(p, "thermal") == pytest.approx(p.qubit_thermal())
    assert resolve_initial(p, "passive") == pytest.approx(passive_qubit(p))
    assert resolve_initial(p, np.diag([0.3, 0.7])) == pytest.approx((0.3, 0.7))
    with pytest.raises(ValueError):
        resolve_initial(p, np.array([[0.5, 0.1], [0.1, 0.5]]))
    with pytest.raises(ValueError):
        resolve_initial(p, (0.3, 0.3))
    with pytest.raises(ValueError):
        resolve_initial(p, "hot")


def test_ledger_and_fast_trajectories_agree():
    p = params(N0=2.5, Omega_L=1.4, g=1.2)
    fast = run_qubit_charging(p, "passive", 20, n_max=64)
    slow = run_qubit_charging(p, "passive", 20, n_max=64, ledger=True, entropy_production=False)
    assert np.allclose(fast.trajectory, slow.trajectory, atol=1e-13)
    assert len(slow.ledger) == 20


def test_variable_collision_times():
    p = params(N0=2.5)
    times = [0.5, 1.0, 0.5, 2.0]
    rep = run_qubit_charging(p, "thermal", collision_times=times)
    assert rep.A_tau[0] == rep.A_tau[2]
    assert rep.A_tau[1] == pytest.approx(a_tau(p, tau=1.0))
    with pytest.raises(ValueError):
        run_qubit_charging(p, "thermal", collision_times=[-1.0])


def test_figures_of_merit_and_limits():
    p = params(omega_e=1.0, omega=0.4, beta=2.0)
    f = qubit_figures_of_merit(p)
    assert f.ergotropy == pytest.approx(qubit_ergotropy(p))
    assert f.W_tot_passive == pytest.approx(p.omega_L * math.tanh(0.4))
    assert f.eta_passive == pytest.approx(1.0 / 1.4)
    assert f.ergotropy < f.W_tot_passive
    lo, hi = eta_thermal_limits(p)
    cold = qubit_figures_of_merit(p.replace(beta=200.0), n_max=64)
    with pytest.warns(TruncationWarning):
        hot = qubit_figures_of_merit(p.replace(beta=1e-4), n_max=64)
    assert cold.eta_thermal == pytest.approx(lo, rel=1e-6)
    assert hot.eta_thermal == pytest.approx(hi, rel=1e-3)


def test_work_thermal_initial_against_trace_formula():
    p = params(omega_e=1.3, omega_g=0.2, omega=0.7, beta=1.5)
    e = np.array([p.omega_g, p.omega_e])
    e_star = np.array([p.omega, 0.0])
    star = np.exp(-p.beta * e_star)
    star /= star.sum()
    th = np.exp(-p.beta * e)
    th /= th.sum()
    assert work_thermal_initial(p) == pytest.approx(float((e - e_star) @ (star - th)), rel=1e-13)


def test_running_ergotropy():
    p = params()
    rep = run_qubit_charging(p, "thermal", 200)
    erg = rep.ergotropy_running(p.omega_eg)
    assert erg[0] == 0.0
    assert erg[-1] == pytest.approx(qubit_ergotropy_of(*rep.final, p))


@given(st.floats(0.0, 1.0), st.floats(0.01, 6.0), st.floats(0.0, 1.0))
def test_property_map_is_stochastic_and_contracts(A, bw, pe):
    pg2, pe2 = qubit_step((1 - pe, pe), A, bw)
    assert pg2 + pe2 == pytest.approx(1.0, abs=1e-15)
    assert 0 <= pe2 <= 1
    _, fe = fixed_point(bw)
    assert abs(pe2 - fe) <= abs(pe - fe) + 1e-15
