import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab import flows
from frontlab import hj_solver as hj
from frontlab.errors import ArgumentError, UnsupportedOperation
from frontlab.grid import GridField


def test_params_validation():
    for bad in (dict(n=100), dict(n=32), dict(cfl=1.0), dict(cfl=0), dict(t_final=-1),
                dict(scheme="eno"), dict(record_every=0)):
        with pytest.raises(ArgumentError):
            hj.SolverParams(**bad)


def test_cfl_dt_examples(zero, shear):
    assert hj.cfl_dt(zero, 5.0, 1.0, 1 / 256, 0.4) == pytest.approx(3.90625e-4, rel=1e-15)
    assert hj.cfl_dt(shear, 10.0, 1.0, 1 / 128, 0.4) == pytest.approx(0.4 / 128 / 44, rel=1e-14)
    assert hj.cfl_dt(shear, 0.0, 1.0, 1 / 128, 0.4) == hj.cfl_dt(zero, 0.0, 1.0, 1 / 128, 0.4)


def test_hamiltonian_consistency(cellular, rng):
    x = rng.random((200, 2))
    q = rng.normal(size=(200, 2))
    p = (0.6, 0.8)
    Hn = hj.numerical_hamiltonian(x, 0.0, q, q, cellular, 7.0, 1.3, p)
    V = flows.velocity(cellular, x)
    g = np.array(p) + q
    exact = 1.3 * np.linalg.norm(g, axis=1) + 7.0 * np.sum(V * g, axis=1)
    np.testing.assert_allclose(Hn, exact, rtol=1e-14, atol=1e-12)


def test_hamiltonian_zero_flow(zero):
    assert hj.numerical_hamiltonian([0.3, 0.3], 0.0, [0, 0], [0, 0], zero, 3.0, 1.0, (1, 0)) == 1.0


@pytest.mark.parametrize("name", ["cellular", "cats_eye", "shear"])
def test_hamiltonian_monotone(name):
    assert hj.monotonicity_audit(flows.make_flow(name), n_samples=300) == 0


def test_flat_state_exact(zero):
    st0 = hj.initial_state(64, (1.0, 0.0), 2.0, 1.0)
    dt = 1e-3
    s1 = hj.step(st0, zero, hj.SolverParams(n=64), dt)
    assert np.all(s1.u.values == -dt)
    assert s1.t == dt and st0.t == 0.0


def test_zero_hamiltonian_leaves_u(cellular, rng):
    st0 = hj.initial_state(64, (0.0, 1.0), 0.0, 0.0)
    st0.u = GridField(rng.normal(size=(64, 64)), 1 / 64)
    s1 = hj.step(st0, cellular, hj.SolverParams(n=64), 1e-3)
    np.testing.assert_array_equal(s1.u.values, st0.u.values)


def test_translation_equivariance(shear, rng):
    # shear is invariant along x1 (array axis 0): stepping commutes with rolls
    st0 = hj.initial_state(64, (0.6, 0.8), 3.0, 1.0)
    st0.u = GridField(rng.normal(scale=0.1, size=(64, 64)), 1 / 64)
    prm = hj.SolverParams(n=64)
    dt = hj.cfl_dt(shear, 3.0, 1.0, 1 / 64, 0.4)
    a = hj.step(st0, shear, prm, dt).u.values
    rolled = st0.copy()
    rolled.u = GridField(np.roll(st0.u.values, 5, axis=0), 1 / 64)
    b = hj.step(rolled, shear, prm, dt).u.values
    np.testing.assert_allclose(np.roll(a, 5, axis=0), b, atol=1e-14)


def test_zero_flow_slope(zero):
    s = hj.evolve(zero, (0.0, 1.0), 10.0, 1.0, hj.SolverParams(n=64, t_final=2.0))
    t, m = s.history()
    np.testing.assert_allclose(m, -t, atol=1e-12)
    assert s.t == pytest.approx(2.0)


def test_cellular_A0_equals_zero_flow(zero, cellular):
    prm = hj.SolverParams(n=64, t_final=0.5)
    a = hj.evolve(zero, (1.0, 0.0), 0.0, 1.0, prm)
    b = hj.evolve(cellular, (1.0, 0.0), 0.0, 1.0, prm)
    np.testing.assert_array_equal(a.u.values, b.u.values)


def test_evolve_continuation_matches_single_run(cellular):
    prm = hj.SolverParams(n=64)
    dt = hj.cfl_dt(cellular, 4.0, 1.0, 1 / 64, 0.4)
    full = hj.evolve(cellular, (1.0, 0.0), 4.0, 1.0, prm, t_end=200 * dt, dt=dt)
    half = hj.evolve(cellular, (1.0, 0.0), 4.0, 1.0, prm, t_end=100 * dt, dt=dt)
    rest = hj.evolve(cellular, (1.0, 0.0), 4.0, 1.0, prm, state=half, t_end=200 * dt, dt=dt)
    np.testing.assert_allclose(rest.u.values, full.u.values, atol=1e-12)


def test_stability_audits(cellular):
    s = hj.evolve(cellular, (1.0, 0.0), 8.0, 1.0, hj.SolverParams(n=64, t_final=0.3))
    d = s.diagnostics
    assert d["growth_ok"] and d["mean_nonincreasing"]
    assert d["oscillation"] < 10 * (1 + 8 * cellular.K0) * math.sqrt(2)


def test_unsteady_runs():
    f = flows.make_flow("unsteady_cellular")
    s = hj.evolve(f, (1.0, 0.0), 8.0, 1.0, hj.SolverParams(n=64, t_final=0.25))
    assert np.all(np.isfinite(s.u.values))
    assert s.diagnostics["mean_nonincreasing"]


def test_weno3_zero_flow(zero):
    s = hj.evolve(zero, (1.0, 0.0), 1.0, 1.0, hj.SolverParams(n=64, t_final=0.5, scheme="weno3"))
    t, m = s.history()
    np.testing.assert_allclose(m, -t, atol=1e-12)


def test_non_unit_p_rejected(zero):
    with pytest.raises(ArgumentError):
        hj.evolve(zero, (1.0, 1.0), 1.0, 1.0, hj.SolverParams(n=64, t_final=0.1))


def test_cell_residual(zero, shear):
    h = 1 / 64
    s = hj.evolve(zero, (1.0, 0.0), 0.0, 1.0, hj.SolverParams(n=64, t_final=0.1))
    assert hj.cell_residual(s, zero, 1.0) <= 2 * h
    s0 = hj.initial_state(64, (0.0, 1.0), 5.0, 1.0)
    assert hj.cell_residual(s0, shear, 1.0) <= 5 * h
    with pytest.raises(UnsupportedOperation):
        hj.cell_residual(s0, flows.make_flow("unsteady_cellular"), 1.0)


def test_front_arrival_zero_flow(zero):
    assert hj.front_arrival_time(zero, 3.0, 64) == pytest.approx(1.0, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1), st.floats(0, 1))
def test_monotone_property(A, q1, q2, x1, x2):
    f = flows.make_flow("cellular")
    qm = np.array([q1, q2])
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1e-3
        base = hj.numerical_hamiltonian([x1, x2], 0.0, qm, qm + 0.5, f, A, 1.0, (1.0, 0.0))
        up = hj.numerical_hamiltonian([x1, x2], 0.0, qm, qm + 0.5 + e, f, A, 1.0, (1.0, 0.0))
        dn = hj.numerical_hamiltonian([x1, x2], 0.0, qm + e, qm + 0.5, f, A, 1.0, (1.0, 0.0))
        assert up <= base + 1e-12 * (1 + abs(base))
        assert dn >= base - 1e-12 * (1 + abs(base))
