"""Quick invariant suite behind the ``validate`` subcommand.

Each check is small enough to run in seconds; the full-size versions live
in the acceptance tests.
"""
from __future__ import annotations

import math

import numpy as np

from ..dynamics import FlowParams, _flow, _vector_field
from ..gaussian import GaussianSpec, sample_batch
from ..qi import ExponentSchedule, QiKernel, exponent_recursion, exponent_schedule, qi_second_moment_exact
from ..rng import Stream
from ..spectral import FourierField, _energy_sq
from ..trilinear import q_full, q_split


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_energy(seed: int) -> tuple[bool, float]:
    c = sample_batch(GaussianSpec(0.75, 16), Stream(seed, 10), 0, 8)
    e0 = np.sqrt(_energy_sq(c))
    _, traj = _flow(c, 0.5, FlowParams(dt=1e-3), observe=lambda x: np.sqrt(_energy_sq(x)))
    drift = float(np.max(np.abs(traj.values - e0) / e0))
    return drift <= 1e-8, drift


def liouville_divergence(c: np.ndarray, h: float = 1e-5) -> float:
    """Centred finite-difference trace of the Jacobian in (Re u_n, Im u_n) coordinates."""
    N = c.shape[0]
    trace = 0.0
    for k in range(N):
        for unit in (1.0, 1j):
            e = np.zeros(N, dtype=complex)
            e[k] = unit * h
            dF = (_vector_field(c + e) - _vector_field(c - e))[k] / (2 * h)
            trace += dF.real if unit == 1.0 else dF.imag
    return trace


def check_liouville(seed: int) -> tuple[bool, float]:
    c = sample_batch(GaussianSpec(0.75, 16), Stream(seed, 11), 0, 4)
    worst = max(abs(liouville_divergence(x)) for x in c)
    return worst <= 1e-6, worst


def check_q_identities(seed: int) -> tuple[bool, float]:
    c = sample_batch(GaussianSpec(0.75, 32), Stream(seed, 12), 0, 4)
    worst = 0.0
    for x in c:
        u = FourierField(x)
        q = q_full(u, 0.75, 32)
        q1, q2 = q_split(u, 0.75, 32)
        worst = max(worst, _rel(q1 + q2, q), _rel(q_full(u, 0.75, 32, backend="direct"), q))
    return worst <= 1e-10, worst


def check_hand_value(seed: int) -> tuple[bool, float]:
    u = FourierField.from_modes({1: 1.0, 2: -1j})
    q1, q2 = q_split(u, 0.5, 2)
    err = max(abs(q_full(u, 0.5, 2) + 10 / 3), abs(q1 + 4), abs(q2 - 2 / 3))
    return err <= 1e-12, err


def check_wick_closed_form(seed: int) -> tuple[bool, float]:
    k = QiKernel("Q1_SYM", 0.5, 2)
    err = max(_rel(qi_second_moment_exact(k, t), 72 * (1 - math.cos(t / 3))) for t in (0.1, 0.5, 1.0))
    return err <= 1e-12, err


def check_exponents(seed: int) -> tuple[bool, float]:
    err = 0.0
    for p, r1 in ((2.0, 1.25), (3.0, 1.5)):
        sched = ExponentSchedule(p, r1)
        err = max(err, max(_rel(exponent_schedule(sched, j), exponent_recursion(sched, j)) for j in range(1, 65)))
    return err <= 1e-12, err


CHECKS = {
    "energy_conservation": check_energy,
    "liouville": check_liouville,
    "q_identities": check_q_identities,
    "hand_value": check_hand_value,
    "wick_closed_form": check_wick_closed_form,
    "exponent_schedule": check_exponents,
}


def run_checks(seed: int = 0) -> dict[str, dict]:
    out = {}
    for name, fn in CHECKS.items():
        ok, err = fn(seed)
        out[name] = {"passed": bool(ok), "error": float(err)}
    return out
