"""Gaussian measures mu_{s,N}, energy balls, and tail masses."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .rng import Stream
from .spectral import FourierField, _energy_sq, energy, frequencies

CHUNK = 4096


@dataclass(frozen=True)
class GaussianSpec:
    """Law of sum_n g_n |n|^{-s-1/2} e^{inx} truncated to 0 < |n| <= N."""

    s: float
    N: int
    seed: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")

    def amplitudes(self) -> np.ndarray:
        return frequencies(self.N) ** (-(self.s + 0.5))


def sample_batch(spec: GaussianSpec, stream: Stream, start: int, count: int) -> np.ndarray:
    """Coefficient arrays (count, N) for samples start..start+count-1."""
    return stream.complex_normals(start, count, spec.N) * spec.amplitudes()


def sample(spec: GaussianSpec, stream: Stream, index: int = 0) -> FourierField:
    return FourierField(sample_batch(spec, stream, index, 1)[0])


def iter_batches(spec: GaussianSpec, stream: Stream, samples: int, chunk: int = CHUNK):
    for start in range(0, samples, chunk):
        count = min(chunk, samples - start)
        yield start, sample_batch(spec, stream, start, count)


def map_batches(spec: GaussianSpec, stream: Stream, samples: int, fn, threads: int = 1, chunk: int = CHUNK):
    """Apply ``fn`` to fixed-size sample chunks and concatenate in sample order.

    Chunk boundaries do not depend on ``threads``, so the output is
    bit-identical for any worker count.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    starts = range(0, samples, chunk)
    work = lambda start: fn(sample_batch(spec, stream, start, min(chunk, samples - start)))
    if threads <= 1:
        parts = [work(st) for st in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    return np.concatenate(parts, axis=0)


def in_ball(u: FourierField, R: float) -> bool:
    return energy(u) <= R


def _in_ball(c: np.ndarray, R: float) -> np.ndarray:
    return _energy_sq(c) <= R * R


def expected_sobolev_sq(spec: GaussianSpec, sigma: float) -> float:
    """E ||u||_{H^sigma}^2 = 2 sum_{n<=N} n^{2 sigma - 2 s - 1}."""
    n = frequencies(spec.N)
    return float(2.0 * np.sum(n ** (2 * sigma - 2 * spec.s - 1)))


@dataclass(frozen=True)
class TailEstimate:
    value: float
    stderr: float
    log_value: float
    log_stderr: float
    samples: int
    hits: int
    neglected_mean: float
    method: str


def _tail_weights(s: float, Ncut: int, Ntail: int) -> np.ndarray:
    # ||u_perp||_{H^1/2}^2 = sum_{Ncut<n<=Ntail} 2 n^{-2s} |g_n|^2
    n = np.arange(Ncut + 1, Ntail + 1, dtype=float)
    return 2.0 * n ** (-2.0 * s)


def _tilt_parameter(w: np.ndarray, M: float) -> float:
    """Solve sum w/(1 - theta w) = M so the tilted mean of X sits at M."""
    if np.sum(w) >= M:
        return 0.0
    upper = 1.0 / np.max(w)
    f = lambda th: float(np.sum(w / (1.0 - th * w)) - M)
    return brentq(f, 0.0, upper * (1.0 - 1e-15), xtol=1e-14 * upper, maxiter=500)


def tail_mass_estimate(
    s: float,
    Ncut: int,
    M: float,
    samples: int,
    stream: Stream,
    Ntail: int | None = None,
    method: str = "plain",
) -> TailEstimate:
    """Probability that the tail field (Ncut < |n| <= Ntail) has ||.||_{H^1/2}^2 > M.

    ``method="plain"`` counts hits (binomial standard error).  ``"tilted"``
    samples each |g_n|^2 from the exponentially tilted law that centres the
    tail norm at M and reweights by the exact likelihood ratio; it resolves
    probabilities far below 1/samples and works in log space throughout.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    if s <= 0.5:
        raise ValueError("tail mass requires s > 1/2")
    Ntail = 8 * Ncut if Ntail is None else Ntail
    if Ntail <= Ncut:
        raise ValueError("Ntail must exceed Ncut")
    w = _tail_weights(s, Ncut, Ntail)
    # E of the dropped part sum_{n>Ntail} 2 n^{-2s} <= 2 Ntail^{1-2s} / (2s - 1)
    neglected = 2.0 * Ntail ** (1.0 - 2.0 * s) / (2.0 * s - 1.0)

    if method == "plain":
        theta = 0.0
    elif method == "tilted":
        theta = _tilt_parameter(w, M)
    else:
        raise ValueError(f"unknown method {method!r}")
    rescale = 1.0 / np.sqrt(1.0 - theta * w)
    log_norm = -float(np.sum(np.log1p(-theta * w)))  # cumulant generating function

    log_weights = []
    for start in range(0, samples, CHUNK):
        count = min(CHUNK, samples - start)
        g = stream.complex_normals(start, count, Ntail)[:, Ncut:] * rescale
        x = np.sum(w * np.abs(g) ** 2, axis=1)
        lw = np.where(x > M, -theta * (x - M), -np.inf)
        log_weights.append(lw)
    lw = np.concatenate(log_weights)
    hits = int(np.sum(np.isfinite(lw)))
    shift = log_norm - theta * M
    if hits == 0:
        return TailEstimate(0.0, 0.0, -math.inf, math.inf, samples, 0, neglected, method)

    log_mean = float(logsumexp(lw) - math.log(samples))
    # relative standard error of the mean of exp(lw)
    ratio = np.exp(lw - log_mean)
    rel = float(np.std(ratio, ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    log_value = log_mean + shift
    value = math.exp(log_value) if log_value > -745 else 0.0
    return TailEstimate(value, value * rel, log_value, rel, samples, hits, neglected, method)
