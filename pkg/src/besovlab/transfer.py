"""The weighted transfer operator ``(L u)(x) = sum_{f(y)=x} g(y) u(y)``,
its Fourier-Galerkin matrices and truncation-stable eigenvalues."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .dyadic import GridFunction
from .output import csv_text, write_text
from .dynamics import CircleMap, Weight, inverse_branches


class ResolutionWarning(UserWarning):
    """Input or output carries energy too close to the grid Nyquist frequency."""


class AliasingWarning(UserWarning):
    """Assembly grid too coarse for the requested truncation."""


@dataclass(frozen=True)
class TransferOp:
    map: CircleMap
    weight: Weight
    power: int = 1

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("power must be >= 1")

    def branches(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Preimages under ``f^power`` and the matching cocycle weights."""
        ys = np.asarray(x, dtype=float)[None, ...]
        ws = np.ones_like(ys, dtype=complex)
        for _ in range(self.power):
            pre = inverse_branches(self.map, ys)  # (k, m, ...)
            ws = self.weight(pre) * ws[None, ...]
            ys = pre
            ys = ys.reshape((-1,) + ys.shape[2:])
            ws = ws.reshape((-1,) + ws.shape[2:])
        if np.all(ws.imag == 0):
            ws = ws.real
        return ys, ws

    def derivative(self, x):
        return self.map.iterate(x, self.power)[1]

    def forward(self, x):
        return self.map.iterate(x, self.power)[0]

    def cocycle(self, x):
        from .dynamics import cocycle
        return cocycle(self.weight, self.map, self.power, x)


def trig_interpolate(coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant with FFT-ordered coefficients
    ``coeffs`` at arbitrary points ``y``; the Nyquist term is split evenly
    between ``+-N/2`` so that real data give a real interpolant."""
    N = coeffs.size
    k = np.rint(np.fft.fftfreq(N) * N).astype(int)
    c = coeffs.copy()
    nyq = N // 2
    flat = np.asarray(y, dtype=float).ravel()
    out = np.zeros(flat.size, dtype=complex)
    chunk = max(1, 2 ** 22 // N)
    for start in range(0, flat.size, chunk):
        yy = flat[start:start + chunk]
        E = np.exp(2j * np.pi * np.outer(yy, k))
        vals = E @ c
        # replace the one-sided Nyquist term by its cosine form
        vals += c[nyq] * (np.cos(2 * np.pi * nyq * yy) - np.exp(-2j * np.pi * nyq * yy))
        out[start:start + chunk] = vals
    return out.reshape(np.shape(y))


def top_energy_fraction(u: GridFunction) -> float:
    """Fraction of spectral energy in the top octave ``|k| > N/4``."""
    c = u.coefficients()
    k = np.abs(u.frequencies())
    total = np.sum(np.abs(c) ** 2)
    if total == 0:
        return 0.0
    return float(np.sum(np.abs(c[k > u.N // 4]) ** 2) / total)


def apply(L: TransferOp, u: GridFunction, tol: float = 1e-8) -> GridFunction:
    """Sample ``L u`` on ``u``'s grid, evaluating ``u`` at the preimages by
    trigonometric interpolation."""
    if top_energy_fraction(u) > tol:
        warnings.warn("input has energy near the Nyquist frequency; "
                      "interpolation at preimages may be inaccurate", ResolutionWarning)
    ys, ws = L.branches(u.grid)
    vals = trig_interpolate(u.coefficients(), ys)
    return GridFunction(np.sum(ws * vals, axis=0))


def grid_matrix(L: TransferOp, N: int) -> np.ndarray:
    """Dense ``N x N`` matrix sending grid samples of a band-limited ``u`` to
    the grid samples of ``L u`` (same interpolation as :func:`apply`)."""
    x = np.arange(N) / N
    ys, ws = L.branches(x)
    k = np.rint(np.fft.fftfreq(N) * N).astype(int)
    nyq = N // 2
    A = np.zeros((N, N), dtype=complex)
    for yb, wb in zip(ys, ws):
        E = np.exp(2j * np.pi * np.outer(yb, k))
        E[:, nyq] = np.cos(2 * np.pi * nyq * yb)
        A += wb[:, None] * E
    dft = np.fft.fft(np.eye(N), axis=0) / N  # samples -> coefficients
    return A @ dft


def apply_dual(L: TransferOp, phi: GridFunction) -> GridFunction:
    """``phi o f * g * |f'|`` on ``phi``'s grid (the dual side of the
    change-of-variables identity)."""
    x = phi.grid
    fx = L.forward(x)
    vals = trig_interpolate(phi.coefficients(), fx)
    return GridFunction(vals * L.cocycle(x) * np.abs(L.derivative(x)))


def duality_residual(L: TransferOp, u: GridFunction, phi: GridFunction) -> float:
    """``|int (L u) phi - int u (phi o f) g |f'||`` by grid quadrature."""
    lhs = np.mean(apply(L, u).samples * phi.samples)
    rhs = np.mean(u.samples * apply_dual(L, phi).samples)
    return float(abs(lhs - rhs))


@dataclass
class FourierMatrix:
    """Galerkin matrix ``M[m, j] = (L e_j)^(m)`` for ``|m|, |j| <= K``."""

    K: int
    matrix: np.ndarray
    assembly_grid: int

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def entry(self, m: int, j: int) -> complex:
        return self.matrix[m + self.K, j + self.K]

    def restrict(self, K: int) -> "FourierMatrix":
        if K > self.K:
            raise ValueError("cannot restrict to a larger truncation")
        sl = slice(self.K - K, self.K + K + 1)
        return FourierMatrix(K, self.matrix[sl, sl].copy(), self.assembly_grid)

    def csv_text(self) -> str:
        """Row-major CSV with each complex entry written as a ``re,im`` pair."""
        header = ["m"]
        for j in self.modes:
            header += [f"re_{j}", f"im_{j}"]
        rows = []
        for m, row in zip(self.modes, self.matrix):
            cells = [int(m)]
            for z in row:
                cells += [float(z.real), float(z.imag)]
            rows.append(cells)
        return csv_text(header, rows)

    def to_csv(self, path) -> None:
        write_text(str(path), self.csv_text())

    @classmethod
    def from_csv(cls, path, assembly_grid: int = 0) -> "FourierMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        data = np.array([[float(v) for v in r[1:]] for r in rows])
        mat = data[:, 0::2] + 1j * data[:, 1::2]
        return cls((mat.shape[0] - 1) // 2, mat, assembly_grid)


def _next_pow2(n: int) -> int:
    return 1 << (max(int(n), 1) - 1).bit_length()


def assemble_matrix(L: TransferOp, K: int, N: int | None = None) -> FourierMatrix:
    """Column ``j`` is the FFT of ``L e_j`` sampled on ``N`` points, truncated
    to ``|m| <= K``.  ``e_j`` is evaluated exactly at the preimages."""
    if N is None:
        N = _next_pow2(8 * K)
    if N < 8 * K:
        warnings.warn(f"assembly grid N={N} < 8K={8 * K}; entries may alias", AliasingWarning)
    x = np.arange(N) / N
    ys, ws = L.branches(x)  # (B, N)
    modes = np.arange(-K, K + 1)
    cols = np.empty((2 * K + 1, N), dtype=complex)
    for idx, j in enumerate(modes):
        cols[idx] = np.sum(ws * np.exp(2j * np.pi * j * ys), axis=0)
    coeffs = np.fft.fft(cols, axis=1) / N  # (j, m in fft order)
    mat = coeffs[:, np.mod(modes, N)].T
    return FourierMatrix(K, mat, N)


def eigenvalues(m) -> np.ndarray:
    """Full spectrum of the truncation, sorted by modulus (descending)."""
    a = m.matrix if isinstance(m, FourierMatrix) else np.asarray(m)
    ev = scipy.linalg.eigvals(a)
    order = np.lexsort((-ev.real, -np.abs(ev)))
    return ev[order]


@dataclass
class StableEigenvalue:
    value: complex
    track: np.ndarray  # matched value at each truncation level
    drift: np.ndarray  # |change| between consecutive levels

    @property
    def max_drift(self) -> float:
        return float(self.drift.max()) if self.drift.size else 0.0


@dataclass
class SpectrumProbe:
    truncations: list
    spectra: list
    stable: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.stable])


def match_stable(spectra: Sequence[np.ndarray], match_tol: float = 1e-6,
                 floor: float = 1e-8, noise: float = 1e-12) -> list[StableEigenvalue]:
    """Greedy matching of eigenvalues across truncation levels.

    Candidates are taken from the coarsest level in order of decreasing
    modulus (those below ``floor`` are ignored); each is paired with the
    nearest unused eigenvalue at the next level.  A track is kept only if
    every step moves by at most ``match_tol * |z|`` and the drift does not
    grow (drifts below ``noise`` count as converged).  The relative test
    rejects the rounding cloud of defective zero eigenvalues, whose
    members all sit close to each other in absolute terms.
    """
    if len(spectra) < 3:
        raise ValueError("need at least three truncation levels")
    used = [np.zeros(s.size, dtype=bool) for s in spectra]
    out = []
    for z0 in spectra[0]:
        if abs(z0) < floor:
            continue
        track = [z0]
        picks = []
        ok = True
        for lvl in range(1, len(spectra)):
            cand = spectra[lvl]
            dist = np.abs(cand - track[-1])
            dist[used[lvl]] = np.inf
            i = int(np.argmin(dist))
            if dist[i] > match_tol * abs(track[-1]):
                ok = False
                break
            picks.append((lvl, i))
            track.append(cand[i])
        if not ok:
            continue
        drift = np.abs(np.diff(np.array(track)))
        d = np.maximum(drift, noise)
        if np.any(np.diff(d) > 0):
            continue
        for lvl, i in picks:
            used[lvl][i] = True
        out.append(StableEigenvalue(complex(track[-1]), np.array(track), drift))
    return out


def stable_eigenvalues(L: TransferOp, truncations: Sequence[int], match_tol: float = 1e-6,
                       N: int | None = None, floor: float = 1e-8) -> SpectrumProbe:
    """Eigenvalues present at every truncation level with non-increasing drift."""
    truncations = sorted(int(K) for K in truncations)
    if len(truncations) < 3:
        raise ValueError("need at least three truncation levels")
    if N is None:
        N = _next_pow2(8 * truncations[-1])
    big = assemble_matrix(L, truncations[-1], N)
    spectra = [eigenvalues(big.restrict(K)) for K in truncations]
    stable = match_stable(spectra, match_tol=match_tol, floor=floor)
    return SpectrumProbe(truncations, spectra, stable)


def power_iteration_leading(L: TransferOp, N: int = 256, n_iter: int = 200,
                            tol: float = 1e-13) -> float:
    """Leading eigenvalue modulus by iterating ``apply`` on the constant
    function (an independent route to the dominant eigenvalue)."""
    u = GridFunction(np.ones(N))
    prev = 0.0
    lam = 0.0
    for _ in range(n_iter):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            v = apply(L, u)
        lam = float(np.linalg.norm(v.samples) / np.linalg.norm(u.samples))
        u = GridFunction(v.samples / np.linalg.norm(v.samples) * np.sqrt(N))
        if abs(lam - prev) < tol:
            break
        prev = lam
    return lam
