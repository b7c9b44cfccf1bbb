"""The energy-derivative form Q_{s,N} and its lattice symbols.

Q_{s,N}(u) = -d/dt (1/2 ||Phi_t^N u||^2_{H^{s+1/2}}) at t = 0.  Writing
S(n) for the coefficients of u^2, every form below reduces to a sum over
n = 1..N of a real weight times Im(u_n conj(S(n))):

    Q    = -i sum_{n1+n2+n3=0} sgn(n1)|n1|^{2s+2}/(1+|n1|) u1 u2 u3
    Q1   = -(i/3) sum Psi_s(n1,n2,n3) u1 u2 u3
    Q2   =  i sum sgn(n1)|n1|^{2s+1}/(1+|n1|) u1 u2 u3

with Q = Q1 + Q2 exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import dispersion_symbol
from .spectral import FourierField, _full_spectrum, _pad, _square_fft, frequencies


@dataclass(frozen=True)
class FrequencyTriple:
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        if 0 in (self.n1, self.n2, self.n3):
            raise ValueError("frequencies must be nonzero")
        if self.n1 + self.n2 + self.n3 != 0:
            raise ValueError("frequencies must sum to zero")

    def __neg__(self) -> "FrequencyTriple":
        return FrequencyTriple(-self.n1, -self.n2, -self.n3)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    def ordered(self) -> tuple[int, int, int]:
        """(n_(1), n_(2), n_(3)) by decreasing magnitude, ties in index order."""
        return tuple(sorted(self.as_tuple(), key=abs, reverse=True))


def _signed_power(n, p):
    n = np.asarray(n, dtype=float)
    return np.sign(n) * np.abs(n) ** p


def psi_values(s: float, n1, n2, n3) -> np.ndarray:
    p = 2 * s + 1
    return _signed_power(n1, p) + _signed_power(n2, p) + _signed_power(n3, p)


def phase_values(n1, n2, n3) -> np.ndarray:
    f = lambda n: np.asarray(n, dtype=float) / (1.0 + np.abs(n))
    return f(n1) + f(n2) + f(n3)


def psi(s: float, triple: FrequencyTriple) -> float:
    """Psi_s = sum_j |n_j|^{2s+1} sgn(n_j)."""
    return float(psi_values(s, *triple.as_tuple()))


def phase(triple: FrequencyTriple) -> float:
    """Resonance function sum_j n_j / (1 + |n_j|)."""
    return float(phase_values(*triple.as_tuple()))


# --- per-frequency weights -------------------------------------------------

def _weights(s: float, N: int) -> dict[str, np.ndarray]:
    n = frequencies(N)
    a = n ** (2 * s + 1)
    return {"q1": a, "q2": a / (1.0 + n), "full": a * dispersion_symbol(N)}


def _imag_pairing(c: np.ndarray) -> np.ndarray:
    """Im(u_n conj(S(n))) for n = 1..N with S the coefficients of u^2."""
    sq = _square_fft(c, c.shape[-1])
    return np.imag(c * np.conj(sq))


def _q_forms(c: np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(q_full, q1, q2) for a batch of coefficient arrays."""
    w = _weights(s, c.shape[-1])
    im = _imag_pairing(c)
    full = 2.0 * np.sum(w["full"] * im, axis=-1)
    q1 = 2.0 * np.sum(w["q1"] * im, axis=-1)
    q2 = -2.0 * np.sum(w["q2"] * im, axis=-1)
    return full, q1, q2


def _q_full(c: np.ndarray, s: float) -> np.ndarray:
    """Q_{s,N} of a batch via the spectral form sum |n|^{2s+1} (in/(1+|n|)) (u^2)(n) u(-n)."""
    w = _weights(s, c.shape[-1])["full"]
    return 2.0 * np.sum(w * _imag_pairing(c), axis=-1)


def _truncate(u: FourierField, N: int) -> np.ndarray:
    return _pad(u.coeffs, N)


def _active_modes(c: np.ndarray) -> int:
    return int(np.count_nonzero(c))


def _direct_sum(c: np.ndarray, kernel) -> complex:
    """sum over n1 + n2 + n3 = 0, 0 < |n_j| <= N of kernel(n1,n2,n3) u1 u2 u3.

    Rows of fixed n1 are summed in ascending order and combined with fsum so
    the result does not depend on chunking.
    """
    N = c.shape[-1]
    full = _full_spectrum(c)
    idx = np.arange(-N, N + 1)
    re_parts, im_parts = [], []
    for n1 in idx:
        if n1 == 0:
            continue
        n2 = idx
        n3 = -n1 - n2
        ok = (n2 != 0) & (n3 != 0) & (np.abs(n3) <= N)
        n2, n3 = n2[ok], n3[ok]
        terms = kernel(np.full(n2.shape, n1), n2, n3) * full[n1 + N] * full[n2 + N] * full[n3 + N]
        row = np.sum(terms)
        re_parts.append(row.real)
        im_parts.append(row.imag)
    return complex(math.fsum(re_parts), math.fsum(im_parts))


def _real_part(z: complex, what: str) -> float:
    if abs(z.imag) > 1e-9 * max(1.0, abs(z.real)):
        raise ArithmeticError(f"{what}: imaginary residue {z.imag:.3e} is not round-off")
    return z.real


def full_kernel(s: float):
    return lambda n1, n2, n3: -1j * _signed_power(n1, 2 * s + 2) / (1.0 + np.abs(n1))


def q1_kernel(s: float):
    return lambda n1, n2, n3: (-1j / 3.0) * psi_values(s, n1, n2, n3)


def q2_kernel(s: float):
    return lambda n1, n2, n3: 1j * _signed_power(n1, 2 * s + 1) / (1.0 + np.abs(n1))


def q_full(u: FourierField, s: float, N: int, backend: str = "fft") -> float:
    """Q_{s,N}(u); ``backend`` is "fft" (O(N log N)) or "direct" (O(N^2) triple sum)."""
    c = _truncate(u, N)
    if _active_modes(c) < 2:
        return 0.0
    if backend == "fft":
        return float(_q_full(c, s))
    if backend == "direct":
        return _real_part(_direct_sum(c, full_kernel(s)), "q_full")
    raise ValueError(f"unknown backend {backend!r}")


def q_split(u: FourierField, s: float, N: int, backend: str = "fft") -> tuple[float, float]:
    """(Q1, Q2) with Q1 + Q2 = Q_{s,N}."""
    c = _truncate(u, N)
    if _active_modes(c) < 2:
        return 0.0, 0.0
    if backend == "fft":
        _, q1, q2 = _q_forms(c, s)
        return float(q1), float(q2)
    if backend == "direct":
        q1 = _real_part(_direct_sum(c, q1_kernel(s)), "q1")
        q2 = _real_part(_direct_sum(c, q2_kernel(s)), "q2")
        return q1, q2
    raise ValueError(f"unknown backend {backend!r}")


def linear_part(u: FourierField, s: float) -> float:
    """sum_{0<|n|<=N} |n|^{2s+1} (in/(1+|n|)) |u_n|^2, which cancels between n and -n."""
    full = u.full_spectrum()
    N = u.max_freq
    n = np.arange(-N, N + 1, dtype=float)
    terms = np.abs(n) ** (2 * s + 1) * (1j * n / (1.0 + np.abs(n))) * np.abs(full) ** 2
    return float(abs(np.sum(terms)))


# --- lattice enumeration ----------------------------------------------------

def lattice_rows(N: int):
    """Yield (n1, n2, n3) arrays for n1 ascending, n2 ascending, n3 = -n1-n2.

    Only admissible triples (0 < |n_j| <= N) are produced.
    """
    idx = np.arange(-N, N + 1)
    for n1 in range(-N, N + 1):
        if n1 == 0:
            continue
        n3 = -n1 - idx
        ok = (idx != 0) & (n3 != 0) & (np.abs(n3) <= N)
        n2 = idx[ok]
        yield np.full(n2.shape, n1), n2, n3[ok]


def min_abs_phase(N: int) -> tuple[float, list[tuple[int, int, int]]]:
    """Smallest |Phi| over admissible triples and the triples attaining it."""
    best = math.inf
    where: list[tuple[int, int, int]] = []
    for n1, n2, n3 in lattice_rows(N):
        ph = np.abs(phase_values(n1, n2, n3))
        m = float(ph.min())
        hit = np.isclose(ph, m, rtol=1e-12, atol=0.0)
        if m < best * (1 - 1e-12):
            best = m
            where = []
        if math.isclose(m, best, rel_tol=1e-12):
            where.extend(zip(n1[hit].tolist(), n2[hit].tolist(), n3[hit].tolist()))
    return best, where


def psi_bound_constant(s: float, N: int, gap: float) -> float:
    """max |Psi_s| / (|n_(1)|^{2s} |n_(3)|) over triples with |n_(2)| >= gap |n_(3)|."""
    if s <= 0.5:
        raise ValueError("requires s > 1/2")
    if gap <= 1:
        raise ValueError("gap must exceed 1")
    best = 0.0
    for n1, n2, n3 in lattice_rows(N):
        mags = np.sort(np.abs(np.stack([n1, n2, n3])).astype(float), axis=0)
        small, mid, big = mags
        sel = mid >= gap * small
        if not np.any(sel):
            continue
        ratio = np.abs(psi_values(s, n1[sel], n2[sel], n3[sel])) / (big[sel] ** (2 * s) * small[sel])
        best = max(best, float(ratio.max()))
    return best
