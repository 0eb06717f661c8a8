"""Littlewood-Paley analysis of sampled 1-periodic functions.

Functions on the circle are stored as samples on a uniform dyadic grid
``x_j = j / N``.  Frequencies are integers ``k`` for the exponentials
``e_k(x) = exp(2 pi i k x)``; the dyadic filters act on ``|k|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

STANDARD = "standard"
WIDE = "wide"


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridFunction:
    """Complex samples of a 1-periodic function at ``x_j = j/N``."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex).ravel()
        n = samples.size
        if not _is_power_of_two(n) or n < 8:
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")
        object.__setattr__(self, "samples", samples)

    @property
    def N(self) -> int:
        return self.samples.size

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.N) / self.N

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], N: int) -> "GridFunction":
        return cls(func(np.arange(N) / N))

    @classmethod
    def exponential(cls, k: int, N: int) -> "GridFunction":
        return cls(np.exp(2j * np.pi * k * np.arange(N) / N))

    @classmethod
    def from_coefficients(cls, coeffs: np.ndarray) -> "GridFunction":
        """Inverse of :meth:`coefficients` (numpy FFT ordering)."""
        coeffs = np.asarray(coeffs, dtype=complex)
        return cls(np.fft.ifft(coeffs) * coeffs.size)

    def coefficients(self) -> np.ndarray:
        """Fourier coefficients in numpy FFT order, normalised so that
        ``e_k`` has coefficient 1 at index ``k mod N``."""
        return np.fft.fft(self.samples) / self.N

    def frequencies(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.N) * self.N).astype(int)

    def __add__(self, other):
        return GridFunction(self.samples + _samples_of(other, self.N))

    def __sub__(self, other):
        return GridFunction(self.samples - _samples_of(other, self.N))

    def __mul__(self, scalar):
        return GridFunction(self.samples * scalar)

    __rmul__ = __mul__


def _samples_of(other, N):
    if isinstance(other, GridFunction):
        if other.N != N:
            raise ValueError(f"grid-size mismatch: {N} vs {other.N}")
        return other.samples
    return other


def _h(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def rho(t):
    """Smooth cut-off equal to 1 on ``t <= 1`` and 0 on ``t >= 2``.

    Uses the mollified step ``h(2-t) / (h(2-t) + h(t-1))`` with
    ``h(x) = exp(-1/x)`` for ``x > 0``.
    """
    t = np.asarray(t, dtype=float)
    a = _h(2.0 - t)
    b = _h(t - 1.0)
    out = a / np.where(a + b > 0, a + b, 1.0)
    out = np.where(t <= 1.0, 1.0, out)
    out = np.where(t >= 2.0, 0.0, out)
    return out if out.ndim else float(out)


def psi(n: int, xi, kind: str = STANDARD):
    """Radial dyadic multiplier ``psi_n`` (or the wide ``psi~_n``) at ``|xi|``."""
    if n < 0:
        raise ValueError(f"block index must be >= 0, got {n}")
    a = np.abs(np.asarray(xi, dtype=float))
    if kind == STANDARD:
        if n == 0:
            return rho(a)
        return rho(a * 2.0 ** (-n)) - rho(a * 2.0 ** (-n + 1))
    if kind == WIDE:
        if n == 0:
            return rho(a / 2.0)
        return rho(a * 2.0 ** (-n - 1)) - rho(a * 2.0 ** (-n + 2))
    raise ValueError(f"unknown filter kind {kind!r}")


@dataclass(frozen=True)
class DyadicFilter:
    """Values of ``psi_n(|k|)`` for ``|k| = 0, ..., max_freq``."""

    n: int
    kind: str
    values: np.ndarray
    truncated: bool = False

    @property
    def max_freq(self) -> int:
        return self.values.size - 1

    def support(self) -> tuple[float, float]:
        """Open interval of ``|k|`` outside which the filter vanishes."""
        if self.kind == STANDARD:
            return (-1.0, 2.0) if self.n == 0 else (2.0 ** (self.n - 1), 2.0 ** (self.n + 1))
        return (-1.0, 4.0) if self.n == 0 else (2.0 ** (self.n - 2), 2.0 ** (self.n + 2))

    def on_grid(self, N: int) -> np.ndarray:
        """Multiplier in numpy FFT order for a grid of size ``N``."""
        k = np.abs(np.rint(np.fft.fftfreq(N) * N).astype(int))
        if self.max_freq >= N // 2:
            return self.values[k]
        if self.truncated:
            raise ValueError(
                f"filter resolved up to |k|={self.max_freq}, grid needs {N // 2}"
            )
        # the table already covers the whole support; beyond it the filter is zero
        out = np.zeros(N)
        inside = k <= self.max_freq
        out[inside] = self.values[k[inside]]
        return out


def build_filter(n: int, kind: str = STANDARD, max_freq: Optional[int] = None) -> DyadicFilter:
    """Tabulate the block-``n`` multiplier on integer frequencies.

    ``truncated`` is set when ``max_freq`` is below the top of the
    filter's support, i.e. part of the block is cut off.
    """
    if n < 0:
        raise ValueError(f"block index must be >= 0, got {n}")
    if max_freq is None:
        max_freq = 2 ** (n + 3)
    top = 2 ** (n + 1) if kind == STANDARD else 2 ** (n + 2)
    values = psi(n, np.arange(max_freq + 1), kind)
    return DyadicFilter(n=n, kind=kind, values=np.asarray(values, dtype=float),
                        truncated=max_freq < top)


def n_blocks(N: int) -> int:
    """Number of dyadic blocks ``0..log2(N/2)`` carried by a grid of size ``N``."""
    return int(round(math.log2(N // 2))) + 1


def lp_block(u: GridFunction, filt: DyadicFilter) -> GridFunction:
    """Apply the frequency multiplier ``Delta_n``."""
    mult = filt.on_grid(u.N)
    return GridFunction(np.fft.ifft(mult * np.fft.fft(u.samples)))


def lp_blocks(u: GridFunction, kind: str = STANDARD) -> np.ndarray:
    """All blocks of ``u`` stacked into an array of shape ``(n_blocks, N)``."""
    N = u.N
    uhat = np.fft.fft(u.samples)
    k = np.abs(np.rint(np.fft.fftfreq(N) * N))
    mults = np.stack([psi(n, k, kind) for n in range(n_blocks(N))])
    return np.fft.ifft(mults * uhat[None, :], axis=1)


def lp_norm(u, p: float) -> float:
    """Normalised discrete L^p norm (the circle has unit length)."""
    samples = u.samples if isinstance(u, GridFunction) else np.asarray(u)
    return _lp(samples, p)


def _lp(samples: np.ndarray, p: float, axis=-1):
    a = np.abs(samples)
    if np.isinf(p):
        return a.max(axis=axis)
    if p < 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    return np.mean(a ** p, axis=axis) ** (1.0 / p)


def combine_lq(weighted: np.ndarray, q: float) -> float:
    """``l^q`` norm of a nonnegative sequence (sup when ``q`` is infinite)."""
    weighted = np.asarray(weighted, dtype=float)
    if weighted.size == 0:
        return 0.0
    if np.isinf(q):
        return float(weighted.max())
    return float(np.sum(weighted ** q) ** (1.0 / q))


@dataclass(frozen=True)
class BesovParams:
    """Exponents of ``B^s_{pq}`` plus the weak exponent ``sigma``.

    ``regularity`` is the Hoelder regularity of the transfer weight; it
    constrains ``s`` and fixes the admissible range of ``sigma``.
    """

    s: float
    p: float = math.inf
    q: float = math.inf
    sigma: Optional[float] = None
    regularity: float = math.inf
    delta: Optional[float] = field(default=None)

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"s must be positive, got {self.s}")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")
        r = self.regularity
        if self.s > r:
            raise ValueError(f"s={self.s} exceeds weight regularity {r}")
        if self.s == r and not np.isinf(self.q):
            raise ValueError("s must be strictly below the weight regularity when q < inf")
        sigma, delta = self.sigma, self.delta
        if sigma is None:
            sigma, delta = default_sigma(self.s, r)
        elif delta is None and r > 1 and not np.isinf(r):
            delta = (r - 1) / 2
        if not 0 < sigma < self.s:
            raise ValueError(f"sigma must lie in (0, s), got {sigma}")
        if r > 1 and not np.isinf(r):
            if not 0 < delta < r - 1:
                raise ValueError(f"delta must lie in (0, {r - 1}), got {delta}")
            if not sigma > self.s - r + 1 + delta:
                raise ValueError(
                    f"sigma={sigma} violates sigma > s - r + 1 + delta = {self.s - r + 1 + delta}"
                )
        object.__setattr__(self, "sigma", float(sigma))
        object.__setattr__(self, "delta", None if delta is None else float(delta))

    def weak(self) -> "BesovParams":
        """Parameters of the weak space ``B^sigma_{pq}``."""
        return BesovParams(s=self.sigma, p=self.p, q=self.q, sigma=self.sigma / 2)


def default_sigma(s: float, regularity: float) -> tuple[float, Optional[float]]:
    """Pick ``(sigma, delta)`` for the weak norm.

    ``s/2`` whenever it is admissible; otherwise a point just above the
    lower bound ``s - r + 1 + delta`` with ``delta = (r - 1)/2``.
    """
    r = regularity
    if r <= 1:
        return s / 2, None
    if np.isinf(r):
        return s / 2, None
    if r >= s + 1:
        return s / 2, min((r - 1) / 2, (r - 1 - s / 2) / 2)
    delta = (r - 1) / 2
    lower = max(s - r + 1 + delta, 0.0)
    return lower + 0.01 * (s - lower), delta


def block_norms(u: GridFunction, p: float) -> np.ndarray:
    """``||Delta_n u||_{L^p}`` for every block carried by the grid."""
    return _lp(lp_blocks(u), p, axis=1)


def besov_norm(u: GridFunction, params: BesovParams) -> float:
    norms = block_norms(u, params.p)
    weights = 2.0 ** (params.s * np.arange(norms.size))
    return combine_lq(weights * norms, params.q)


def embedding_constant(s: float, q: float) -> float:
    """``(1 - 2^{-s q'})^{-1/q'}``, the constant of ``B^s_{pq} -> L^p``."""
    if q == 1:
        return 1.0
    qp = 1.0 if np.isinf(q) else q / (q - 1)
    return (1.0 - 2.0 ** (-s * qp)) ** (-1.0 / qp)


# --------------------------------------------------------------------------
# Two-chart norm on the circle


@dataclass(frozen=True)
class CircleAtlas:
    """Two interval charts of the circle and a smooth partition of unity.

    Chart 0 covers ``(gap, 1 - gap)`` with ``kappa_0(x) = x``; chart 1
    covers the circle minus ``[1/2 - gap, 1/2 + gap]`` with
    ``kappa_1(x) = x`` wrapped into ``(-1/2, 1/2)``.  The weight of chart 1
    is ``rho(d / width)`` in the distance ``d`` to 0.
    """

    width: float = 0.2

    def weights(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.mod(x, 1.0)
        d = np.minimum(x, 1.0 - x)
        phi1 = rho(d / self.width)
        return 1.0 - phi1, phi1


def _real_line_besov(samples: np.ndarray, h: float, params: BesovParams, pad: int) -> float:
    """Besov norm on R of a compactly supported function sampled with step h.

    Frequencies are in cycles per unit length, matching the circle norm.
    """
    M = samples.size * pad
    buf = np.zeros(M, dtype=complex)
    buf[: samples.size] = samples
    nu = np.abs(np.fft.fftfreq(M, d=h))
    uhat = np.fft.fft(buf)
    top = max(int(math.ceil(math.log2(max(nu.max(), 1.0)))), 0) + 1
    total = []
    for n in range(top + 1):
        block = np.fft.ifft(psi(n, nu) * uhat)
        a = np.abs(block)
        if np.isinf(params.p):
            norm = a.max()
        else:
            norm = (np.sum(a ** params.p) * h) ** (1.0 / params.p)
        total.append(2.0 ** (params.s * n) * norm)
    return combine_lq(np.array(total), params.q)


def besov_norm_charted(u: GridFunction, params: BesovParams,
                       atlas: CircleAtlas = CircleAtlas(), pad: int = 8) -> float:
    """Sum over the two charts of the R^1 Besov norms of ``phi_i * u o kappa_i^{-1}``.

    ``u`` is evaluated on each chart's grid through its samples (the
    chart maps are translations by grid multiples, so no interpolation).
    """
    N = u.N
    x = np.arange(N) / N
    phi0, phi1 = atlas.weights(x)
    h = 1.0 / N
    piece0 = phi0 * u.samples
    # chart 1: recentre so that x = 0 sits in the middle of the window
    shift = N // 2
    piece1 = np.roll(phi1 * u.samples, shift)
    return (_real_line_besov(piece0, h, params, pad)
            + _real_line_besov(piece1, h, params, pad))


def random_band_limited(rng: np.random.Generator, N: int, top: Optional[int] = None,
                        decay: float = 1.0, real: bool = False) -> GridFunction:
    """Random trigonometric polynomial with ``|k| <= top`` and coefficients
    damped by ``(1 + |k|)^{-decay}``."""
    if top is None:
        top = N // 4
    k = np.rint(np.fft.fftfreq(N) * N)
    mask = np.abs(k) <= top
    coeffs = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) * mask
    coeffs = coeffs / (1.0 + np.abs(k)) ** decay
    u = GridFunction.from_coefficients(coeffs)
    if real:
        u = GridFunction(u.samples.real)
    return u


def partition_residual(n_max: int, kind: str = STANDARD) -> float:
    """``max_{|k| <= 2^n_max} |sum_{n <= n_max} psi_n(|k|) - 1|``."""
    k = np.arange(2 ** n_max + 1)
    total = sum(psi(n, k, kind) for n in range(n_max + 1))
    return float(np.max(np.abs(total - 1.0)))


def block_index_range(freqs: Sequence[int]) -> list[int]:
    """Blocks whose standard filter is nonzero at any of ``freqs``."""
    out = set()
    for f in freqs:
        f = abs(f)
        for n in range(0, max(f, 1).bit_length() + 2):
            if psi(n, f) != 0:
                out.add(n)
    return sorted(out)
