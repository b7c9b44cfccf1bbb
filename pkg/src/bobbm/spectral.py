"""Mean-zero real trigonometric polynomials on the torus.

A field is stored by its Fourier coefficients at n = 1..N only; the
coefficient at -n is the complex conjugate and the mean is always zero.
Sums over 0 < |n| <= N are therefore written as twice the positive half.

Array-level helpers (leading underscore) take coefficient arrays of shape
``(..., N)`` so that whole ensembles can be pushed through at once.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class FourierField:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 1:
            raise ValueError("coeffs must be one-dimensional (n = 1..N)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def max_freq(self) -> int:
        return self.coeffs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FourierField):
            return NotImplemented
        return self.max_freq == other.max_freq and np.array_equal(self.coeffs, other.coeffs)

    def __add__(self, other: "FourierField") -> "FourierField":
        n = max(self.max_freq, other.max_freq)
        return FourierField(_pad(self.coeffs, n) + _pad(other.coeffs, n))

    def __sub__(self, other: "FourierField") -> "FourierField":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "FourierField":
        if isinstance(scalar, complex) or np.iscomplexobj(scalar):
            raise TypeError("only real scalars preserve reality")
        return FourierField(self.coeffs * float(scalar))

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, N: int) -> "FourierField":
        return cls(np.zeros(N, dtype=np.complex128))

    @classmethod
    def from_modes(cls, modes: dict[int, complex], N: int | None = None) -> "FourierField":
        """Build from ``{n: coefficient}`` for positive n."""
        if any(n <= 0 for n in modes):
            raise ValueError("only positive frequencies are stored; use conjugates for n < 0")
        N = N if N is not None else max(modes, default=0)
        c = np.zeros(N, dtype=np.complex128)
        for n, v in modes.items():
            c[n - 1] = v
        return cls(c)

    @classmethod
    def from_full_spectrum(cls, spectrum: np.ndarray, atol: float = 1e-12) -> "FourierField":
        """Build from coefficients indexed -N..N (length 2N+1).

        Rejects a nonzero mean and spectra that are not conjugate-symmetric.
        """
        spectrum = np.asarray(spectrum, dtype=np.complex128)
        if spectrum.ndim != 1 or spectrum.shape[0] % 2 != 1:
            raise ValueError("full spectrum must have odd length 2N+1")
        N = spectrum.shape[0] // 2
        scale = max(1.0, float(np.max(np.abs(spectrum), initial=0.0)))
        if abs(spectrum[N]) > atol * scale:
            raise ValueError("field has a nonzero mean; only mean-zero fields are supported")
        pos, neg = spectrum[N + 1:], spectrum[:N][::-1]
        if np.max(np.abs(pos - np.conj(neg)), initial=0.0) > atol * scale:
            raise ValueError("spectrum is not conjugate-symmetric (field is not real)")
        return cls(pos)

    def full_spectrum(self) -> np.ndarray:
        return _full_spectrum(self.coeffs)

    def to_dict(self) -> dict:
        return {"N": self.max_freq, "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FourierField":
        re, im = data["re"], data["im"]
        if len(re) != data["N"] or len(im) != data["N"]:
            raise ValueError("coefficient lists must have length N")
        return cls(np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FourierField":
        return cls.from_dict(json.loads(text))


def _pad(c: np.ndarray, N: int) -> np.ndarray:
    """Zero-extend or truncate the last axis to N frequencies."""
    M = c.shape[-1]
    if M == N:
        return c
    if M > N:
        return c[..., :N]
    out = np.zeros(c.shape[:-1] + (N,), dtype=np.complex128)
    out[..., :M] = c
    return out


def _full_spectrum(c: np.ndarray) -> np.ndarray:
    zero = np.zeros(c.shape[:-1] + (1,), dtype=np.complex128)
    return np.concatenate([np.conj(c[..., ::-1]), zero, c], axis=-1)


def frequencies(N: int) -> np.ndarray:
    return np.arange(1, N + 1, dtype=float)


# --- norms -----------------------------------------------------------------

def _sobolev_sq(c: np.ndarray, sigma: float) -> np.ndarray:
    n = frequencies(c.shape[-1])
    return 2.0 * np.sum(n ** (2 * sigma) * np.abs(c) ** 2, axis=-1)


def _energy_sq(c: np.ndarray) -> np.ndarray:
    # ||u||_L2^2 + 2 pi ||u||_{H^1/2}^2 = 4 pi sum_{n>=1} (1 + n) |c_n|^2
    n = frequencies(c.shape[-1])
    return 4.0 * math.pi * np.sum((1.0 + n) * np.abs(c) ** 2, axis=-1)


def sobolev_norm(u: FourierField, sigma: float) -> float:
    """H^sigma norm without the 2 pi factor: (sum |n|^{2 sigma} |u_n|^2)^{1/2}."""
    return math.sqrt(float(_sobolev_sq(u.coeffs, sigma)))


def l2_norm(u: FourierField) -> float:
    return math.sqrt(2.0 * math.pi * float(_sobolev_sq(u.coeffs, 0.0)))


def energy(u: FourierField) -> float:
    """Conserved energy E(u) = (||u||_L2^2 + 2 pi ||u||_{H^1/2}^2)^{1/2}."""
    return math.sqrt(float(_energy_sq(u.coeffs)))


# --- projectors ------------------------------------------------------------

def project_leq(u: FourierField, M: int) -> FourierField:
    """Sharp Fourier cutoff 1_{|n| <= M}."""
    if M < 1:
        raise ValueError("cutoff must be a positive integer")
    return FourierField(u.coeffs[: min(M, u.max_freq)])


def _psi(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def eta(xi) -> np.ndarray:
    """Smooth step: 1 on |xi| <= 1, 0 on |xi| >= 2, C^infinity in between."""
    a = np.abs(np.asarray(xi, dtype=float))
    up, down = _psi(2.0 - a), _psi(a - 1.0)
    return up / (up + down)


def littlewood_paley_symbol(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return eta(xi) - eta(2.0 * xi)


def dyadic_project(u: FourierField, Ndyadic: float) -> FourierField:
    """Littlewood-Paley piece P_N u, supported on N/2 < |n| < 2N."""
    k = math.log2(Ndyadic)
    if Ndyadic <= 0 or k != round(k):
        raise ValueError(f"dyadic scale must be a power of two, got {Ndyadic}")
    n = frequencies(u.max_freq)
    return FourierField(u.coeffs * littlewood_paley_symbol(n / Ndyadic))


# --- products and multipliers ---------------------------------------------

def _transform_length(degree: int, out_max: int) -> int:
    # product of degree D needs L > D + out_max to keep aliases off 1..out_max
    return max(2 * degree + 1, degree + out_max + 1)


def _to_grid(c: np.ndarray, L: int) -> np.ndarray:
    half = np.zeros(c.shape[:-1] + (L // 2 + 1,), dtype=np.complex128)
    half[..., 1 : c.shape[-1] + 1] = c
    return np.fft.irfft(half, n=L, axis=-1) * L


def _from_grid(values: np.ndarray, out_max: int) -> np.ndarray:
    L = values.shape[-1]
    return np.fft.rfft(values, axis=-1)[..., 1 : out_max + 1] / L


def _product_fft(a: np.ndarray, b: np.ndarray, out_max: int) -> np.ndarray:
    degree = a.shape[-1] + b.shape[-1]
    L = _transform_length(degree, out_max)
    ga = _to_grid(a, L)
    gb = ga if b is a else _to_grid(b, L)
    return _pad(_from_grid(ga * gb, min(out_max, degree)), out_max)


def _square_fft(c: np.ndarray, out_max: int) -> np.ndarray:
    return _product_fft(c, c, out_max)


def _product_direct(a: np.ndarray, b: np.ndarray, out_max: int) -> np.ndarray:
    fa, fb = _full_spectrum(a), _full_spectrum(b)
    conv = np.convolve(fa, fb)
    centre = a.shape[-1] + b.shape[-1]
    return _pad(conv[centre + 1 :], out_max)


def multiply(u: FourierField, v: FourierField, backend: str = "fft") -> FourierField:
    """Exact mean-zero part of the pointwise product u*v (degree up to N_u + N_v)."""
    degree = u.max_freq + v.max_freq
    if backend == "fft":
        return FourierField(_product_fft(u.coeffs, v.coeffs, degree))
    if backend == "direct":
        return FourierField(_product_direct(u.coeffs, v.coeffs, degree))
    raise ValueError(f"unknown backend {backend!r}")


def apply_symbol(u: FourierField, m: Callable[[np.ndarray], np.ndarray], rtol: float = 1e-12) -> FourierField:
    """Fourier multiplier: coefficient at n is multiplied by m(n).

    ``m`` is evaluated on integer arrays and must satisfy m(-n) = conj(m(n)).
    """
    n = np.arange(1, u.max_freq + 1)
    mp = np.asarray(m(n), dtype=np.complex128) * np.ones(u.max_freq)
    mn = np.asarray(m(-n), dtype=np.complex128) * np.ones(u.max_freq)
    scale = max(1.0, float(np.max(np.abs(mp), initial=0.0)))
    if np.max(np.abs(mn - np.conj(mp)), initial=0.0) > rtol * scale:
        raise ValueError("multiplier violates m(-n) = conj(m(n)); result would not be real")
    return FourierField(u.coeffs * mp)


def grid_values(u: FourierField, points: int) -> np.ndarray:
    """Complex samples u(2 pi j / points); the imaginary part is round-off."""
    full = np.zeros(points, dtype=np.complex128)
    n = np.arange(1, u.max_freq + 1)
    if points <= 2 * u.max_freq:
        raise ValueError("need more than 2N grid points")
    full[n] = u.coeffs
    full[-n] = np.conj(u.coeffs)
    return np.fft.ifft(full) * points
