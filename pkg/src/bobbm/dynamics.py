"""Galerkin-truncated BO-BBM flow.

    d/dt u = -(1 + |D|)^{-1} d/dx P_{<=N}(u + u^2),   u(0) = P_{<=N} u0

integrated with classical RK4 at a fixed step.  The linear symbol
i n / (1 + |n|) is bounded by 1, so the system is not stiff and the step
does not have to shrink with N.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import FourierField, _energy_sq, _pad, _square_fft, frequencies

METHODS = ("rk4",)


@dataclass(frozen=True)
class FlowParams:
    dt: float = 1e-3
    method: str = "rk4"
    max_t: float = 100.0
    nonlinear: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.max_t >= self.dt:
            raise ValueError("max_t must be at least dt")
        if self.method not in METHODS:
            raise ValueError(f"unknown integrator {self.method!r}; expected one of {METHODS}")


def dispersion_symbol(N: int) -> np.ndarray:
    """n / (1 + n) for n = 1..N; the multiplier of (1+|D|)^{-1} d/dx is i times this."""
    n = frequencies(N)
    return n / (1.0 + n)


def _vector_field(c: np.ndarray, nonlinear: bool = True) -> np.ndarray:
    omega = dispersion_symbol(c.shape[-1])
    rhs = c + _square_fft(c, c.shape[-1]) if nonlinear else c
    return -1j * omega * rhs


def vector_field(u: FourierField, N: int, nonlinear: bool = True) -> FourierField:
    c = _pad(u.coeffs, N)
    return FourierField(_vector_field(c, nonlinear))


def _rk4_step(c: np.ndarray, h: float, sign: float, nonlinear: bool) -> np.ndarray:
    f = lambda x: sign * _vector_field(x, nonlinear)
    k1 = f(c)
    k2 = f(c + 0.5 * h * k1)
    k3 = f(c + 0.5 * h * k2)
    k4 = f(c + h * k3)
    return c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_count(t: float, dt: float) -> int:
    return max(1, math.ceil(abs(t) / dt - 1e-9))


@dataclass
class Trajectory:
    """Times and per-step observations (or states) of a flow run."""

    times: np.ndarray
    values: np.ndarray


def _flow(
    c: np.ndarray,
    t: float,
    params: FlowParams,
    observe: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, Trajectory | None]:
    """Batched flow of coefficient arrays (..., N) to time t.

    ``observe`` is evaluated at every step node (including t=0 and the end)
    and its outputs are stacked along a new leading axis.
    """
    if abs(t) > params.max_t:
        raise ValueError(f"|t| = {abs(t)} exceeds max_t = {params.max_t}")
    c = np.array(c, dtype=np.complex128)
    if t == 0:
        traj = None
        if observe is not None:
            traj = Trajectory(np.zeros(1), np.asarray(observe(c))[None])
        return c, traj

    steps = step_count(t, params.dt)
    h = abs(t) / steps
    sign = 1.0 if t > 0 else -1.0
    obs = [observe(c)] if observe is not None else None
    for k in range(steps):
        # blow-up is reported below, not through numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            c = _rk4_step(c, h, sign, params.nonlinear)
        if not np.all(np.isfinite(c)):
            raise FloatingPointError(
                f"non-finite state after step {k + 1} at t = {sign * (k + 1) * h:.6g}; "
                f"dt = {params.dt} is too large for this initial datum"
            )
        if obs is not None:
            obs.append(observe(c))
    traj = None
    if obs is not None:
        traj = Trajectory(sign * h * np.arange(steps + 1), np.stack([np.asarray(o) for o in obs]))
    return c, traj


def flow(u: FourierField, t: float, N: int, params: FlowParams | None = None) -> FourierField:
    """Numerical Phi_t^N(P_{<=N} u)."""
    params = params or FlowParams()
    c, _ = _flow(_pad(u.coeffs, N), t, params)
    return FourierField(c)


def flow_trajectory(
    u: FourierField, t: float, N: int, params: FlowParams | None = None
) -> tuple[FourierField, Trajectory]:
    """Flow and record the state at every step."""
    params = params or FlowParams()
    c, traj = _flow(_pad(u.coeffs, N), t, params, observe=lambda x: x.copy())
    return FourierField(c), traj


def linear_propagator(u: FourierField, t: float) -> FourierField:
    """S(t) = exp(t (1+|D|)^{-1} d/dx): coefficient at n gains exp(i t n/(1+|n|))."""
    return FourierField(u.coeffs * np.exp(1j * t * dispersion_symbol(u.max_freq)))


def _linear_propagator(c: np.ndarray, t: float) -> np.ndarray:
    return c * np.exp(1j * t * dispersion_symbol(c.shape[-1]))


def dump_trajectory(path, traj: Trajectory) -> None:
    """JSON-lines, one record per saved step: {"t", "field", "energy"}."""
    with open(path, "w") as fh:
        for t, c in zip(traj.times, traj.values):
            field = FourierField(c)
            rec = {"t": float(t), "field": field.to_dict(), "energy": math.sqrt(float(_energy_sq(c)))}
            fh.write(json.dumps(rec) + "\n")
