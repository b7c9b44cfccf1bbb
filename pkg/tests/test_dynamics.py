import json
import math

import numpy as np
import pytest

from bobbm.dynamics import (
    FlowParams,
    Trajectory,
    dump_trajectory,
    flow,
    flow_trajectory,
    linear_propagator,
    vector_field,
)
from bobbm.spectral import FourierField, energy, l2_norm

from conftest import random_field

PARAMS = FlowParams(dt=1e-3)


def test_vector_field_hand_values():
    # u = 2cos x: u + u^2 = 2cos x + 2 + 2cos 2x, the constant is killed by d/dx
    u = FourierField.from_modes({1: 1.0})
    F = vector_field(u, 2)
    np.testing.assert_allclose(F.coeffs, [-0.5j, -2j / 3], atol=1e-15)
    lin = vector_field(u, 2, nonlinear=False)
    np.testing.assert_allclose(lin.coeffs, [-0.5j, 0], atol=1e-15)


def test_zero_time_is_projection(rng):
    u = random_field(rng, 12)
    assert flow(u, 0.0, 8) == FourierField(u.coeffs[:8])
    assert flow(u, 0.0, 16) == FourierField(np.pad(u.coeffs, (0, 4)))


def test_short_time_taylor(rng):
    u = random_field(rng, 8, decay=2.0)
    h = 1e-4
    expected = u.coeffs + h * vector_field(u, 8).coeffs
    got = flow(u, h, 8, FlowParams(dt=h)).coeffs
    assert np.max(np.abs(got - expected)) < 10 * h**2 * np.max(np.abs(u.coeffs))


def test_group_property(rng):
    u = random_field(rng, 10, decay=1.5)
    direct = flow(u, 0.6, 10, PARAMS)
    composed = flow(flow(u, 0.35, 10, PARAMS), 0.25, 10, PARAMS)
    assert np.max(np.abs(direct.coeffs - composed.coeffs)) < 1e-10


def test_time_reversal(rng):
    u = random_field(rng, 10, decay=1.5)
    back = flow(flow(u, 0.7, 10, PARAMS), -0.7, 10, PARAMS)
    assert np.max(np.abs(back.coeffs - u.coeffs)) < 1e-10


def test_reflection_symmetry(rng):
    # x -> -x conjugates coefficients and reverses time
    u = random_field(rng, 8, decay=1.5)
    reflect = lambda v: FourierField(np.conj(v.coeffs))
    lhs = flow(reflect(u), -0.5, 8, PARAMS)
    rhs = reflect(flow(u, 0.5, 8, PARAMS))
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-12


def test_fourth_order_convergence(rng):
    u = random_field(rng, 8, decay=1.5)
    ref = flow(u, 1.0, 8, FlowParams(dt=1e-3)).coeffs
    errs = [np.max(np.abs(flow(u, 1.0, 8, FlowParams(dt=dt)).coeffs - ref)) for dt in (0.1, 0.05, 0.025)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(3.6 < q < 4.4 for q in orders), orders


@pytest.mark.parametrize("N", [4, 16, 64])
def test_energy_conserved(rng, N):
    u = random_field(rng, N, decay=1.5)
    E0 = energy(u)
    _, traj = flow_trajectory(u, 1.0, N, FlowParams(dt=1e-2))
    drift = max(abs(energy(FourierField(c)) - E0) for c in traj.values)
    assert drift <= 1e-8 * E0


def test_energy_ball_invariant(rng):
    u = random_field(rng, 16, decay=1.5)
    R = energy(u) * (1 + 1e-9)
    v = flow(u, 2.0, 16, FlowParams(dt=1e-2))
    assert energy(v) <= R


def test_linear_flow_matches_propagator(rng):
    u = random_field(rng, 10)
    t = 1.3
    v = flow(u, t, 10, FlowParams(dt=1e-3, nonlinear=False))
    # the linear part of the flow is the propagator run backwards
    expected = linear_propagator(u, -t)
    assert np.max(np.abs(v.coeffs - expected.coeffs)) < 1e-12


def test_linear_propagator_examples(rng):
    u = FourierField.from_modes({1: 1.0})
    assert linear_propagator(u, math.pi).coeffs[0] == pytest.approx(1j, abs=1e-15)
    w = random_field(rng, 20)
    for t in (-3.0, 0.4, 17.0):
        assert l2_norm(linear_propagator(w, t)) == pytest.approx(l2_norm(w), rel=1e-14)
    assert linear_propagator(w, 0.0) == w


def test_non_finite_state_aborts():
    big = FourierField.from_modes({1: 1e200, 2: 1e200})
    with pytest.raises(FloatingPointError, match="non-finite"):
        flow(big, 1.0, 2, FlowParams(dt=0.5))


def test_params_validation():
    with pytest.raises(ValueError):
        FlowParams(dt=0)
    with pytest.raises(ValueError):
        FlowParams(method="euler")
    with pytest.raises(ValueError):
        flow(FourierField.zeros(2), 5.0, 2, FlowParams(max_t=1.0))


def test_trajectory_dump(tmp_path, rng):
    u = random_field(rng, 4)
    _, traj = flow_trajectory(u, 0.05, 4, FlowParams(dt=0.01))
    assert isinstance(traj, Trajectory) and len(traj.times) == 6
    path = tmp_path / "traj.jsonl"
    dump_trajectory(path, traj)
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == 6 and lines[0]["t"] == 0
    assert FourierField.from_dict(lines[-1]["field"]) == FourierField(traj.values[-1])
    assert lines[3]["energy"] == pytest.approx(energy(u), rel=1e-10)
