"""Second moments QI_{s,N}(t) and the exponent schedule of the long-time bound.

QI_{s,N}(t) = E |int_0^t T(S(-t') u0) dt'|^2 for u0 ~ mu_{s,N} and T one
of the trilinear forms Q1, Q2 or Q.  Along the linear flow the triple
product picks up exp(-i t' Phi(n)), and since no pairing inside a single
triple can close on this lattice, Isserlis' theorem leaves

    QI = 6 sum_{n1+n2+n3=0} |K(n)|^2 prod_j |n_j|^{-(2s+1)} (2 - 2cos(t Phi)) / Phi^2

for the permutation-symmetric kernel K.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .dynamics import _linear_propagator
from .estimates import Estimate, fit_line, fit_loglog, mean_estimate
from .gaussian import GaussianSpec, map_batches
from .rng import Stream
from .spectral import frequencies
from .trilinear import _imag_pairing, _signed_power, lattice_rows, phase_values

VARIANTS = ("Q1_SYM", "Q2_SYM", "FULL")


@dataclass(frozen=True)
class QiKernel:
    variant: str
    s: float
    N: int

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown kernel variant {self.variant!r}; expected one of {VARIANTS}")
        if self.N < 1:
            raise ValueError("N must be positive")

    def _single(self, n) -> np.ndarray:
        """f with K(n1,n2,n3) = (-i/3) (f(n1) + f(n2) + f(n3))."""
        s = self.s
        n = np.asarray(n, dtype=float)
        if self.variant == "Q1_SYM":
            return _signed_power(n, 2 * s + 1)
        if self.variant == "Q2_SYM":
            return -_signed_power(n, 2 * s + 1) / (1.0 + np.abs(n))
        return _signed_power(n, 2 * s + 2) / (1.0 + np.abs(n))

    def values(self, n1, n2, n3) -> np.ndarray:
        """Symmetric kernel K(n1, n2, n3), complex."""
        return (-1j / 3.0) * (self._single(n1) + self._single(n2) + self._single(n3))

    def abs_sq(self, n1, n2, n3) -> np.ndarray:
        total = self._single(n1) + self._single(n2) + self._single(n3)
        return total * total / 9.0

    def pairing_weights(self) -> np.ndarray:
        """w(n), n = 1..N, such that the form equals -2 sum_n w(n) Im(u_n conj((u^2)(n)))."""
        return -self._single(frequencies(self.N))

    def form(self, c: np.ndarray) -> np.ndarray:
        """The trilinear form sum K u1 u2 u3 on a batch of coefficient arrays."""
        return -2.0 * np.sum(self.pairing_weights() * _imag_pairing(c), axis=-1)


def oscillation_factor(t: float, ph: np.ndarray) -> np.ndarray:
    """|(exp(i t Phi) - 1) / Phi|^2 = (2 - 2 cos(t Phi)) / Phi^2, with limit t^2."""
    ph = np.asarray(ph, dtype=float)
    out = np.empty_like(ph)
    small = np.abs(ph) < 1e-9
    big = ~small
    # 2 - 2cos(x) = 4 sin^2(x/2) avoids cancellation at small t Phi
    out[big] = 4.0 * np.sin(0.5 * t * ph[big]) ** 2 / ph[big] ** 2
    out[small] = t * t
    return out


def _gaussian_weight(s: float, n1, n2, n3) -> np.ndarray:
    p = -(2 * s + 1)
    return (np.abs(n1) * np.abs(n2) * np.abs(n3)).astype(float) ** p


def qi_second_moment_exact(kernel: QiKernel, t: float, mask=None) -> float:
    """Exact QI via the collapsed Wick sum.

    ``mask(n1, n2, n3) -> bool array`` optionally restricts the lattice (used
    for sub-region sums); the default is the full lattice.
    """
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0:
        return 0.0
    rows = []
    for n1, n2, n3 in lattice_rows(kernel.N):
        if mask is not None:
            keep = mask(n1, n2, n3)
            n1, n2, n3 = n1[keep], n2[keep], n3[keep]
            if n1.size == 0:
                continue
        terms = (
            kernel.abs_sq(n1, n2, n3)
            * _gaussian_weight(kernel.s, n1, n2, n3)
            * oscillation_factor(t, phase_values(n1, n2, n3))
        )
        rows.append(float(np.sum(terms)))
    return 6.0 * math.fsum(rows)


def qi_second_moment_mc(
    kernel: QiKernel,
    t: float,
    samples: int,
    quad_nodes: int,
    stream: Stream,
    threads: int = 1,
) -> Estimate:
    """Monte Carlo QI: Simpson in t' of the form along S(-t') u0, squared and averaged."""
    if quad_nodes < 8:
        raise ValueError("quad_nodes must be at least 8")
    if samples < 1:
        raise ValueError("samples must be positive")
    spec = GaussianSpec(kernel.s, kernel.N, stream.seed)
    if t == 0:
        return Estimate(0.0, 0.0, samples)
    nodes = np.linspace(0.0, t, quad_nodes)

    def squared_integral(c):
        vals = np.stack([kernel.form(_linear_propagator(c, -tp)) for tp in nodes], axis=0)
        return simpson(vals, x=nodes, axis=0) ** 2

    return mean_estimate(map_batches(spec, stream, samples, squared_integral, threads))


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    N_list: tuple[int, ...]
    values: tuple[float, ...]


def qi_scaling_fit(s: float, t: float, N_list, variant: str = "FULL") -> ScalingFit:
    """Fit log(QI/t^2) against log N; the expected slope for 0 < s < 1/2 is 1 - 2s."""
    N_list = tuple(int(N) for N in N_list)
    if len(N_list) < 2:
        raise ValueError("need at least two cutoffs for a fit")
    if t == 0:
        raise ValueError("t must be nonzero")
    vals = tuple(qi_second_moment_exact(QiKernel(variant, s, N), t) for N in N_list)
    slope, intercept, resid = fit_loglog(N_list, np.asarray(vals) / t**2)
    return ScalingFit(slope, intercept, resid, N_list, vals)


@dataclass(frozen=True)
class HalfCase:
    N_list: tuple[int, ...]
    values: tuple[float, ...]
    ratios: tuple[float, ...]
    log_slope: float = field(default=math.nan)


def qi_halfcase_ratio(t: float, N_list, variant: str = "FULL") -> HalfCase:
    """QI_{1/2,N}(t) / (t^2 (log N)^2) for each N.

    ``log_slope`` is the least-squares slope of QI/t^2 against log N, which
    separates a (log N) law from a (log N)^2 law.
    """
    N_list = tuple(int(N) for N in N_list)
    if len(N_list) < 2:
        raise ValueError("need at least two cutoffs")
    vals = tuple(qi_second_moment_exact(QiKernel(variant, 0.5, N), t) for N in N_list)
    ratios = tuple(v / (t**2 * math.log(N) ** 2) for v, N in zip(vals, N_list))
    slope, _, _ = fit_line(np.log(N_list), np.asarray(vals) / t**2)
    return HalfCase(N_list, vals, ratios, slope)


def gamma_mask(separation: float = 4.0):
    """High-high-low region n2, n3 < 0 < n1 with |n2| >= separation |n3|."""
    def mask(n1, n2, n3):
        return (n1 > 0) & (n2 < 0) & (n3 < 0) & (np.abs(n2) >= separation * np.abs(n3))
    return mask


def qi_gamma_restricted(t: float, N: int, separation: float = 4.0, variant: str = "Q1_SYM") -> float:
    """QI at s = 1/2 summed over the high-high-low set only."""
    return qi_second_moment_exact(QiKernel(variant, 0.5, N), t, mask=gamma_mask(separation))


# --- exponent schedule -------------------------------------------------------

@dataclass(frozen=True)
class ExponentSchedule:
    p: float
    r1: float
    tau_R: float = 1.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not self.r1 > 1:
            raise ValueError("r1 must exceed 1")
        if not self.r1 < self.p:
            raise ValueError("r1 must be smaller than p")
        if not self.p**2 / (2 * self.p - 1) > self.r1:
            raise ValueError("p must satisfy p^2/(2p-1) > r1")
        if not self.tau_R > 0:
            raise ValueError("tau_R must be positive")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1)

    @property
    def r1_conj(self) -> float:
        return self.r1 / (self.r1 - 1)


def exponent_schedule(sched: ExponentSchedule, j: int) -> float:
    """Closed form r_j = [1 - (p'/r1') exp(-j log p')]^{-1}."""
    if j < 1:
        raise ValueError("j must be at least 1")
    pc = sched.p_conj
    return 1.0 / (1.0 - (pc / sched.r1_conj) * math.exp(-j * math.log(pc)))


def exponent_recursion(sched: ExponentSchedule, j: int) -> float:
    """r_{j+1} = r_j p / (p + r_j - 1) iterated from r_1."""
    if j < 1:
        raise ValueError("j must be at least 1")
    r = sched.r1
    for _ in range(j - 1):
        r = r * sched.p / (sched.p + r - 1)
    return r


def integrability_exponent(sched: ExponentSchedule, t: float) -> float:
    """q(t) = [1 - (p'/r1') exp(-(2t/tau_R) log p')]^{-1}."""
    if t < 0:
        raise ValueError("t must be non-negative")
    pc = sched.p_conj
    return 1.0 / (1.0 - (pc / sched.r1_conj) * math.exp(-(2.0 * t / sched.tau_R) * math.log(pc)))


def admissible_params(r1: float, c0: float, R: float, p: float | None = None) -> tuple[float, float | None]:
    """Smallest p with p^2/(2p-1) = r1, and tau_R for a chosen p > p_min.

    tau_R solves r1 (p-1)/(p-r1) tau_R = c0 / R.  Without ``p`` the second
    entry is None.
    """
    if r1 < 1:
        raise ValueError("r1 must be at least 1")
    if c0 <= 0 or R <= 0:
        raise ValueError("c0 and R must be positive")
    p_min = r1 + math.sqrt(r1 * r1 - r1)  # larger root of p^2 - 2 r1 p + r1 = 0
    if p is None:
        return p_min, None
    if not p > p_min:
        raise ValueError(f"p = {p} is not admissible (p_min = {p_min})")
    q0 = r1 * (p - 1) / (p - r1)
    return p_min, (c0 / R) / q0
