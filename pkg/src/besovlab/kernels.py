"""One-dimensional oscillatory kernels of the off-diagonal block operators.

For a local branch ``T``, a compactly supported weight ``G`` and block
indices with ``2^n > Lambda 2^(l+4)`` the kernel

    V_n^l(x, y) = (2 pi)^2 int k_n(x - w) G(w) k~_l(T(w) - T(y)) dw

is the frequency integral over ``psi_n(xi) psi~_l(eta)`` with both
frequency integrals done in closed form.  Here ``k_n`` is the inverse
Fourier transform of ``psi_n`` in angular frequency,
``k_n(u) = (1/2 pi) int psi_n(xi) e^{i u xi} d xi``.
"""
from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import integrate

from .dyadic import STANDARD, WIDE, psi


class QuadratureError(RuntimeError):
    """Step refinement did not reach the requested tolerance."""


def support_top(n: int, kind: str) -> float:
    """Largest ``|xi|`` where the (standard or wide) multiplier is nonzero."""
    if kind == STANDARD:
        return 2.0 ** (n + 1) if n else 2.0
    return 2.0 ** (n + 2) if n else 4.0


@dataclass
class FilterKernel:
    """Samples of ``k_n`` on a uniform grid centred at 0."""

    n: int
    kind: str
    u: np.ndarray
    values: np.ndarray
    resolved: bool

    @property
    def step(self) -> float:
        return float(self.u[1] - self.u[0])

    @property
    def integral(self) -> float:
        return float(np.sum(self.values) * self.step)


def inv_filter_kernel(n: int, kind: str = STANDARD, du: Optional[float] = None,
                      half_width: float = 64.0) -> FilterKernel:
    """Real-space kernel of the block multiplier, by FFT of ``psi_n``.

    The frequency step is ``2 pi / (2 * half_width)`` so the periodic
    image is a faithful sample of ``k_n`` on ``[-half_width, half_width)``
    once ``k_n`` has decayed there.  ``resolved`` is false when
    ``pi / du`` (the grid Nyquist) lies below the multiplier's support.
    """
    if n < 0:
        raise ValueError("block index must be >= 0")
    top = support_top(n, kind)
    if du is None:
        du = math.pi / (4 * top)
    M = int(2 ** math.ceil(math.log2(2 * half_width / du)))
    du = 2 * half_width / M
    dxi = 2 * math.pi / (M * du)
    xi = np.fft.fftfreq(M, d=1.0 / M) * dxi
    vals = np.fft.ifft(psi(n, np.abs(xi), kind)).real * M * dxi / (2 * math.pi)
    u = (np.arange(M) - M // 2) * du
    return FilterKernel(n, kind, u, np.fft.fftshift(vals), resolved=math.pi / du >= top)


class _UniformTable:
    """Local Lagrange interpolation of order ``2 * half`` on a uniform table.

    The tables hold band-limited kernels sampled far above their top
    frequency, so the interpolation error decays like ``(xi_max du)^(2 half)``.
    """

    def __init__(self, center: int, step: float, values: np.ndarray, half: int = 4):
        self.center = center  # index of u = 0, kept separate to preserve digits of t
        self.step = step
        self.half = half
        self.values = np.concatenate([np.zeros(half), values, np.zeros(half + 1)])
        self.offsets = np.arange(-half + 1, half + 1)
        # barycentric denominators prod_{m != j} (j - m)
        self.denom = np.array([np.prod([j - m for m in self.offsets if m != j])
                               for j in self.offsets], dtype=float)

    def __call__(self, u) -> np.ndarray:
        t = np.asarray(u, dtype=float) / self.step
        i = np.floor(t)
        f = t - i
        i = np.clip(i.astype(np.int64) + self.center, 0,
                    self.values.size - 2 * self.half - 2) + self.half
        diffs = [f - m for m in self.offsets]
        out = np.zeros_like(f)
        for idx, j in enumerate(self.offsets):
            w = np.ones_like(f)
            for m_idx, d in enumerate(diffs):
                if m_idx != idx:
                    w *= d
            out += w / self.denom[idx] * self.values[i + j]
        return out


@functools.lru_cache(maxsize=None)
def _base_table(n: int, kind: str) -> _UniformTable:
    fk = inv_filter_kernel(n, kind, du=1.0 / 512, half_width=2048.0)
    return _UniformTable(fk.u.size // 2, fk.step, fk.values)


def kernel_function(n: int, kind: str = STANDARD) -> Callable[[np.ndarray], np.ndarray]:
    """Callable ``k_n``; blocks ``n >= 1`` use ``k_n(u) = 2^(n-1) k_1(2^(n-1) u)``."""
    base = 0 if n == 0 else 1
    table = _base_table(base, kind)
    scale = 1.0 if n == 0 else 2.0 ** (n - 1)
    reach = 2040.0 / scale

    def k(u):
        u = np.asarray(u, dtype=float)
        out = scale * table(scale * u)
        return np.where(np.abs(u) < reach, out, 0.0)

    return k


@dataclass(frozen=True)
class LocalBranch:
    """Real branch ``T``: ``a w + b`` (affine) or ``a w + beta sin w`` (nonlinear)."""

    family: str
    a: float
    b: float = 0.0
    domain: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if self.family not in ("affine", "nonlinear"):
            raise ValueError(f"unknown branch family {self.family!r}")
        if self.family == "affine" and abs(self.a) <= 1:
            raise ValueError("affine branch needs |a| > 1")
        if self.family == "nonlinear" and self.a - abs(self.b) <= 1:
            raise ValueError("nonlinear branch needs a - |beta| > 1")
        if self.domain[0] >= self.domain[1]:
            raise ValueError("empty branch domain")
        lo, hi = self.domain
        w = np.linspace(lo, hi, 257)
        if np.any(self.deriv(w) <= 0):
            raise ValueError("branch must be increasing on its domain")

    @classmethod
    def affine(cls, a: float, b: float = 0.0, domain=(-1.0, 1.0)) -> "LocalBranch":
        return cls("affine", float(a), float(b), tuple(domain))

    @classmethod
    def nonlinear(cls, a: float, beta: float, domain=(-1.0, 1.0)) -> "LocalBranch":
        return cls("nonlinear", float(a), float(beta), tuple(domain))

    @property
    def expansion_floor(self) -> float:
        """``c~`` with ``|T(x) - T(y)| >= c~ |x - y|`` on the whole line."""
        return abs(self.a) if self.family == "affine" else self.a - abs(self.b)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        if self.family == "affine":
            return self.a * w + self.b
        return self.a * w + self.b * np.sin(w)

    def deriv(self, w):
        w = np.asarray(w, dtype=float)
        if self.family == "affine":
            return np.full(w.shape, self.a)
        return self.a + self.b * np.cos(w)


@dataclass(frozen=True)
class LocalWeight:
    """Bump ``exp(-1/(1-t^2))``, ``t = (w-c)/r``, optionally times ``|w-c|^gamma``.

    The plain bump is C-infinity; ``regularity`` is the declared tag used to
    pick prefactors.  With ``gamma > 0`` the tag must not exceed ``gamma``.
    """

    center: float = 0.0
    radius: float = 0.5
    regularity: float = 2.0
    gamma: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.regularity < 1:
            raise ValueError("weight regularity must be >= 1")
        if self.gamma and self.regularity > self.gamma:
            raise ValueError("regularity tag exceeds the cusp exponent")

    @property
    def support(self) -> tuple:
        return (self.center - self.radius, self.center + self.radius)

    def __call__(self, w):
        t = (np.asarray(w, dtype=float) - self.center) / self.radius
        inside = np.abs(t) < 1
        out = np.zeros(t.shape)
        out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2) + 1.0)
        if self.gamma:
            out *= np.abs(t * self.radius) ** self.gamma
        return self.scale * out

    def check_inside(self, branch: LocalBranch, step: float) -> None:
        lo, hi = self.support
        margin = 4 * step
        if lo - margin < branch.domain[0] or hi + margin > branch.domain[1]:
            raise ValueError("weight support must sit strictly inside the branch domain")


def big_lambda(branch: LocalBranch, weight: LocalWeight, grid_n: int = 4097) -> float:
    """``max |T'|`` over the support of the weight."""
    w = np.linspace(*weight.support, grid_n)
    return float(np.max(np.abs(branch.deriv(w))))


def far_pair(n: int, l: int, big_lam: float) -> bool:
    """``2^n > Lambda 2^(l+4)``: block ``l`` is not hooked to block ``n``."""
    return 2.0 ** n > big_lam * 2.0 ** (l + 4)


@dataclass
class KernelGrid:
    n: int
    l: int
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # (len(x), len(y))
    big_lambda: float
    far: bool
    w_step: float = 0.0
    refinement: float = 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "re", "im"])
        vals = np.asarray(self.values, dtype=complex)
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                z = vals[i, j]
                w.writerow([f"{xv:.16e}", f"{yv:.16e}", f"{z.real:.16e}", f"{z.imag:.16e}"])
        return buf.getvalue()

    def to_gnuplot(self) -> str:
        """``x y |V|`` triples with blank lines between scans (``splot ... with pm3d``)."""
        lines = [f"# |V_n^l| for n={self.n} l={self.l}"]
        mag = np.abs(self.values)
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                lines.append(f"{xv:.16e} {yv:.16e} {mag[i, j]:.16e}")
            lines.append("")
        return "\n".join(lines) + "\n"


def default_grids(branch: LocalBranch, weight: LocalWeight, n: int, l: int,
                  max_points: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Sampling grids around the support resolving both kernel scales.

    The ``x`` grid lies on the initial ``w`` quadrature lattice, which lets
    :func:`kernel_eval` do the ``x`` sum as a convolution.
    """
    lo, hi = weight.support
    big_lam = big_lambda(branch, weight)
    h = _initial_step(n, l, big_lam, lo, hi)
    pad = int(math.ceil(min(0.25, 32 * 2.0 ** (-n)) / h))
    stride = max(1, int(math.ceil((hi - lo + 0.5) / h / max_points)))
    x = lo + h * np.arange(-pad, int(round((hi - lo) / h)) + pad + 1, stride)
    reach = 4 * 2.0 ** (-l) / branch.expansion_floor
    hy = max(2.0 ** (-l - 3) / big_lam, (hi - lo + 2 * reach) / max_points)
    ylo = max(lo - reach, branch.domain[0])
    yhi = min(hi + reach, branch.domain[1])
    y = np.arange(ylo, yhi + hy / 2, hy)
    return x, y


def _initial_step(n: int, l: int, big_lam: float, lo: float, hi: float) -> float:
    # half the Nyquist step of the integrand's top frequency
    h = math.pi / (2.0 ** (n + 1) + big_lam * 2.0 ** (l + 2)) / 2
    return (hi - lo) / max(8, int(math.ceil((hi - lo) / h)))


def _w_sum(kx, ky, x, Ty, nodes, h, Tnodes, gw):
    """``sum_j kx(x - w_j) gw_j ky(T(w_j) - T(y))`` for nodes ``w_j = w_0 + j h``."""
    F = np.empty((nodes.size, Ty.size))
    step = max(1, 2 ** 20 // Ty.size)
    for s in range(0, nodes.size, step):
        F[s:s + step] = gw[s:s + step, None] * ky(Tnodes[s:s + step, None] - Ty[None, :])
    pos = (x - nodes[0]) / h
    p = np.rint(pos).astype(int)
    chunk = max(1, 2 ** 22 // nodes.size)
    out = np.empty((x.size, Ty.size))
    if np.allclose(pos, p, rtol=0, atol=1e-9):
        # Toeplitz in (x, w): one 1-D kernel evaluation, then gathered rows.
        # Direct sums keep the rounding relative to sum |terms|, which an FFT
        # convolution would not; the kernel is a heavily cancelling integral.
        dmin = p.min() - (nodes.size - 1)
        kv = kx(h * np.arange(dmin, p.max() + 1))
        cols = np.arange(nodes.size)
        for s in range(0, x.size, chunk):
            out[s:s + chunk] = kv[p[s:s + chunk, None] - cols[None, :] - dmin] @ F
        return out
    for s in range(0, x.size, chunk):
        out[s:s + chunk] = kx(x[s:s + chunk, None] - nodes[None, :]) @ F
    return out


def kernel_eval(branch: LocalBranch, weight: LocalWeight, n: int, l: int,
                x: Optional[np.ndarray] = None, y: Optional[np.ndarray] = None,
                rtol: float = 1e-6, max_refine: int = 8) -> KernelGrid:
    """Evaluate ``V_n^l`` on the product grid ``x * y``.

    The ``w`` integral uses the trapezoid rule over the support of the
    weight (exponentially accurate for smooth integrands), starting below
    the Nyquist step of the integrand and halving until the sup-relative
    change is below ``rtol``.
    """
    big_lam = big_lambda(branch, weight)
    if not far_pair(n, l, big_lam):
        raise ValueError(f"pair (n={n}, l={l}) is hooked for Lambda={big_lam:.6g}")
    if x is None or y is None:
        gx, gy = default_grids(branch, weight, n, l)
        x = gx if x is None else x
        y = gy if y is None else y
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    kn = kernel_function(n, STANDARD)
    kl = kernel_function(l, WIDE)
    Ty = branch(y)
    lo, hi = weight.support
    h = _initial_step(n, l, big_lam, lo, hi)
    weight.check_inside(branch, h)

    def level(step):
        nodes = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
        return _w_sum(kn, kl, x, Ty, nodes, step, branch(nodes), weight(nodes) * step)

    total = level(h)
    change = math.inf
    for _ in range(max_refine):
        h /= 2
        new = level(h)
        scale = np.max(np.abs(new))
        change = 0.0 if scale == 0 else float(np.max(np.abs(new - total)) / scale)
        total = new
        if change < rtol:
            break
    else:
        raise QuadratureError(f"w-quadrature for (n={n}, l={l}) stalled at change {change:.3g}")
    return KernelGrid(n, l, x, y, (2 * math.pi) ** 2 * total, big_lam, True, h, change)


def b_m_eval(m: int, x):
    """``2^m b(2^m x)`` with ``b = 1`` on ``[-1, 1]`` and ``|x|^-2`` outside."""
    if m < 0:
        raise ValueError("scale index must be >= 0")
    t = np.abs(np.asarray(x, dtype=float)) * 2.0 ** m
    out = np.where(t <= 1, 1.0, 1.0 / np.maximum(t, 1.0) ** 2)
    return 2.0 ** m * out if np.ndim(out) else float(2.0 ** m * out)


def b_m_l1(m: int) -> float:
    """``||b_m||_1`` by adaptive quadrature (exactly 4 for every ``m``)."""
    edge = 2.0 ** (-m)
    inner, _ = integrate.quad(lambda t: b_m_eval(m, t), 0.0, edge, epsabs=0, epsrel=1e-13)
    outer, _ = integrate.quad(lambda t: b_m_eval(m, t), edge, np.inf, epsabs=0, epsrel=1e-13)
    return 2 * (inner + outer)


PLAIN = "plain"      # prefactor 2^(-r max(n, l)), for r~ <= r - 1
SHIFTED = "shifted"  # prefactor 2^(min(n, l) - r max(n, l)), for r~ >= 1


def prefactor(n: int, l: int, r: float, regime: str) -> float:
    top = max(n, l)
    if regime == PLAIN:
        return 2.0 ** (-r * top)
    if regime == SHIFTED:
        return 2.0 ** (min(n, l) - r * top)
    raise ValueError(f"unknown regime {regime!r}")


def regimes_for(weight_reg: float, branch_reg: float = math.inf) -> list:
    """Regimes whose hypotheses hold; both when they overlap."""
    out = []
    if weight_reg <= branch_reg - 1:
        out.append(PLAIN)
    if weight_reg >= 1:
        out.append(SHIFTED)
    return out


@dataclass
class DecayRow:
    n: int
    l: int
    max_abs: float
    prefactor: float
    constant: float


@dataclass
class DecayReport:
    regime: str
    regularity: float
    rows: list = field(default_factory=list)

    @property
    def constants(self) -> np.ndarray:
        return np.array([r.constant for r in self.rows])

    @property
    def sup_constant(self) -> float:
        return float(self.constants.max()) if self.rows else 0.0

    @property
    def log_slope(self) -> float:
        """Least-squares slope of ``ln C`` against ``max(n, l)``; 0 if undefined."""
        c = self.constants
        tops = np.array([max(r.n, r.l) for r in self.rows], dtype=float)
        ok = c > 0
        if ok.sum() < 2 or np.ptp(tops[ok]) == 0:
            return 0.0
        return float(np.polyfit(tops[ok], np.log(c[ok]), 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["regime", "n", "l", "max_abs", "prefactor", "constant"])
        for r in self.rows:
            w.writerow([self.regime, r.n, r.l, f"{r.max_abs:.16e}", f"{r.prefactor:.16e}",
                        f"{r.constant:.16e}"])
        return buf.getvalue()


def decay_constant(grid: KernelGrid, r: float, regime: str) -> DecayRow:
    pre = prefactor(grid.n, grid.l, r, regime)
    env = b_m_eval(min(grid.n, grid.l), grid.x[:, None] - grid.y[None, :])
    ratio = np.abs(grid.values) / (pre * env)
    return DecayRow(grid.n, grid.l, float(np.abs(grid.values).max()), pre, float(ratio.max()))


def far_pairs(big_lam: float, top: int = 10) -> list:
    """All ``(n, l)`` with ``max(n, l) <= top`` and ``l`` not hooked to ``n``."""
    return [(n, l) for n in range(top + 1) for l in range(n + 1) if far_pair(n, l, big_lam)]


def decay_check(branch: LocalBranch, weight: LocalWeight, pairs: Optional[Iterable] = None,
                regime: Optional[str] = None, grids: Optional[dict] = None) -> DecayReport:
    """Fit ``C(n, l) = max |V| / (prefactor * b_min(x - y))`` for each pair.

    ``grids`` may carry precomputed :class:`KernelGrid` objects keyed by
    ``(n, l)`` so that several regimes share one set of kernel evaluations.
    """
    r = weight.regularity
    if regime is None:
        regime = regimes_for(r)[-1]
    if pairs is None:
        pairs = far_pairs(big_lambda(branch, weight))
    grids = {} if grids is None else grids
    report = DecayReport(regime, r)
    for n, l in pairs:
        if (n, l) not in grids:
            grids[(n, l)] = kernel_eval(branch, weight, n, l)
        report.rows.append(decay_constant(grids[(n, l)], r, regime))
    return report


@dataclass
class YoungCheck:
    measured: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.measured <= self.bound


def _norm(vals: np.ndarray, step: float, p: float) -> float:
    a = np.abs(vals)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a ** p) * step) ** (1.0 / p))


def young_chain_check(grid: KernelGrid, phi: np.ndarray, p: float, constant: float,
                      r: float, regime: str) -> YoungCheck:
    """Compare ``||H phi||_p`` with ``C ||b||_1 prefactor ||phi||_p``.

    ``H phi(x) = int V(x, y) phi(y) dy`` by the rectangle rule on the grid;
    ``phi`` holds samples on ``grid.y``.
    """
    phi = np.asarray(phi)
    if phi.shape != grid.y.shape:
        raise ValueError("phi must be sampled on the kernel's y grid")
    hy = float(grid.y[1] - grid.y[0])
    hx = float(grid.x[1] - grid.x[0])
    h_phi = grid.values @ phi * hy
    measured = _norm(h_phi, hx, p)
    bound = constant * 4.0 * prefactor(grid.n, grid.l, r, regime) * _norm(phi, hy, p)
    return YoungCheck(measured, bound)


def oracle_kernel(branch: LocalBranch, weight: LocalWeight, n: int, l: int, x: float,
                  y: float, period_xi: float = 0.0, period_eta: float = 0.0,
                  w_points: int = 0) -> float:
    """Direct triple quadrature of the frequency-space definition at one point.

    The trapezoid rule in ``xi`` and ``eta`` with steps ``2 pi / period``
    is exact up to the kernel mass beyond ``period``; ``w`` uses its own
    uniform rule.  Kept independent of the FFT tables above.  Default
    periods put 600 units of the unscaled kernel inside one period.
    """
    period_xi = period_xi or 600.0 / 2.0 ** max(n - 1, 0)
    period_eta = period_eta or 600.0 / 2.0 ** max(l - 1, 0)
    hxi = 2 * math.pi / period_xi
    heta = 2 * math.pi / period_eta
    xi = np.arange(-support_top(n, STANDARD), support_top(n, STANDARD) + hxi, hxi)
    eta = np.arange(-support_top(l, WIDE), support_top(l, WIDE) + heta, heta)
    lo, hi = weight.support
    if w_points == 0:
        top = 2.0 ** (n + 1) + big_lambda(branch, weight) * 2.0 ** (l + 2)
        w_points = int(3 * (hi - lo) * top / math.pi) + 1
    w = np.linspace(lo, hi, w_points)
    hw = w[1] - w[0]
    gw = weight(w) * hw
    a = (psi(n, xi, STANDARD) * hxi)[:, None] * np.exp(1j * np.outer(xi, x - w))
    b = (psi(l, eta, WIDE) * heta)[:, None] * np.exp(1j * np.outer(eta, branch(w) - branch(y)))
    return float(np.real(np.sum(gw * a.sum(axis=0) * b.sum(axis=0))))
