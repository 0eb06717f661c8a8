"""Block decomposition of the transfer operator and the Lasota-Yorke check.

The output block ``Delta_n L u`` is split according to which input blocks
``Delta_l u`` feed it: ``l`` is *hooked* to ``n`` when
``2^n <= 2^(l+4) / lambda``.  Hooked inputs form the low part, whose
weighted norm is bounded by ``gamma_s * alpha * lambda^-s * ||u||_{B^s}``;
the rest form the high part, controlled by a weaker Besov norm.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dyadic import (BesovParams, GridFunction, besov_norm, combine_lq, lp_blocks, n_blocks,
                     psi, random_band_limited, _lp)
from .output import csv_text, fmt, json_text
from .dynamics import (CircleMap, Weight, _refined_extremum, chi_min, r_limit)
from .transfer import (ResolutionWarning, TransferOp, grid_matrix, stable_eigenvalues)


def hook(n: int, l: int, lam: float) -> bool:
    """``2^n <= lambda^{-1} 2^{l+4}``."""
    if n < 0 or l < 0:
        raise ValueError("block indices must be nonnegative")
    return 2.0 ** n * lam <= 2.0 ** (l + 4)


def gamma_tilde(c1: float, s: float) -> float:
    return c1 * 2.0 ** (5 * s) / (1.0 - 2.0 ** (-s))


@dataclass
class LYConstants:
    lam: float
    alpha: float
    c1: float
    gamma_tilde: float
    gamma: float
    sigma: float
    p: float
    q: float
    s: float
    multiplier_norm: float = 1.0
    c1_measured: Optional[float] = None
    power: int = 1

    FIELDS = ("power", "s", "p", "q", "sigma", "lam", "alpha", "c1", "c1_measured",
              "multiplier_norm", "gamma_tilde", "gamma", "low_factor")

    @property
    def low_factor(self) -> float:
        """``gamma~_s * alpha * lambda^{-s}``, the low-part contraction constant."""
        return self.gamma_tilde * self.alpha * self.lam ** (-self.s)

    def table(self) -> str:
        """Fixed-order two-column table for regression diffs."""
        lines = []
        for name in self.FIELDS:
            v = getattr(self, name)
            lines.append(f"{name:16s} {_fmt(v)}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return "nan" if v is None else fmt(v)


def filter_kernel_l1(n: int, N: int = 0) -> float:
    """``||K_n||_{L^1}`` of the periodic convolution kernel of ``Delta_n``.

    On an ``N``-point grid this is the exact ``L^1 -> L^1`` and
    ``L^inf -> L^inf`` norm of the block projector, hence an upper bound on
    its ``L^p`` norm for every p (Riesz-Thorin).
    """
    if N == 0:
        N = max(2 ** (n + 7), 256)
    k = np.abs(np.rint(np.fft.fftfreq(N) * N))
    kernel = np.fft.ifft(psi(n, k)) * N
    return float(np.mean(np.abs(kernel)))


def measure_c1(p: float, n_max: int, N: int, rng: np.random.Generator, size: int = 32) -> float:
    """Largest observed ``||Delta_n u||_p / ||u||_p`` over a random corpus."""
    best = 0.0
    for _ in range(size):
        u = random_band_limited(rng, N, top=N // 4, decay=0.0)
        blocks = lp_blocks(u)[: n_max + 1]
        ratio = _lp(blocks, p, axis=1) / _lp(u.samples, p)
        best = max(best, float(ratio.max()))
    return best


def compute_constants(L: TransferOp, params: BesovParams, N: int = 1024,
                      rng: Optional[np.random.Generator] = None,
                      grid_n: int = 2 ** 14) -> LYConstants:
    """Constants of the Lasota-Yorke inequality for ``L`` (with its power).

    ``lambda`` is the minimal expansion of ``f^power``; ``alpha`` is the
    ``L^p`` operator-norm bound built from ``sup sum 1/|(f^n)'(y)|`` and
    ``||g^(n) (f^n)'||_inf``; ``c1`` is the largest filter-kernel ``L^1``
    norm over the blocks of the ``N``-point grid the check runs on.
    """
    fmap, g, n = L.map, L.weight, L.power
    lam = _refined_extremum(lambda x: np.abs(fmap.iterate(x, n)[1]), grid_n, maximize=False)
    sup_gf = _refined_extremum(lambda x: np.abs(L.cocycle(x) * fmap.iterate(x, n)[1]),
                               grid_n, maximize=True)
    if params.p == 1:
        alpha = sup_gf
    else:
        jac = TransferOp(fmap, Weight.inverse_jacobian(fmap), n)
        inv_sum = _refined_extremum(lambda x: np.sum(jac.branches(x)[1], axis=0).real,
                                    grid_n // 4, maximize=True)
        pprime_inv = 1.0 if np.isinf(params.p) else 1.0 - 1.0 / params.p
        alpha = inv_sum ** pprime_inv * sup_gf
    J = n_blocks(N) - 1
    c1 = max(filter_kernel_l1(m, N) for m in range(J + 1))
    measured = None
    if rng is not None:
        measured = measure_c1(params.p, J, N, rng)
    gt = gamma_tilde(c1, params.s)
    return LYConstants(lam=lam, alpha=alpha, c1=c1, gamma_tilde=gt, gamma=gt,
                       sigma=params.sigma, p=params.p, q=params.q, s=params.s,
                       c1_measured=measured, power=n)


@dataclass
class BlockNorms:
    low: np.ndarray
    high: np.ndarray
    consistency: float  # max l2 error of low + high vs Delta_n L u, relative to ||L u||
    resolved: bool


class _GridOperator:
    """``L`` realised as a dense matrix on a fixed grid, shared by a corpus."""

    def __init__(self, L: TransferOp, N: int):
        self.L = L
        self.N = N
        self.A = grid_matrix(L, N)

    def __call__(self, samples: np.ndarray) -> np.ndarray:
        return samples @ self.A.T


def _block_split(op: _GridOperator, u: GridFunction, lam: float, p: float) -> BlockNorms:
    N = u.N
    J = n_blocks(N) - 1
    in_blocks = lp_blocks(u)  # (J+1, N)
    images = op(in_blocks)  # L Delta_l u
    Lu = images.sum(axis=0)
    spec = np.fft.fft(Lu) / N
    k = np.abs(np.rint(np.fft.fftfreq(N) * N))
    energy = np.sum(np.abs(spec) ** 2)
    resolved = energy == 0 or np.sum(np.abs(spec[k > N // 4]) ** 2) <= 1e-8 * energy
    low = np.empty(J + 1)
    high = np.empty(J + 1)
    worst = 0.0
    ref = max(np.linalg.norm(Lu), 1e-300)
    for n in range(J + 1):
        hooked = np.array([hook(n, l, lam) for l in range(J + 1)])
        mult = psi(n, k)
        lo = np.fft.ifft(mult * np.fft.fft(images[hooked].sum(axis=0)))
        hi = np.fft.ifft(mult * np.fft.fft(images[~hooked].sum(axis=0)))
        full = np.fft.ifft(mult * np.fft.fft(Lu))
        # relative to the whole image so that empty blocks do not amplify rounding
        worst = max(worst, np.linalg.norm(lo + hi - full) / ref)
        low[n] = _lp(lo, p)
        high[n] = _lp(hi, p)
    return BlockNorms(low, high, worst, bool(resolved))


def block_operator_norms(L: TransferOp, u: GridFunction, constants: LYConstants,
                         n_max: Optional[int] = None) -> BlockNorms:
    """``||L_{0,n} u||_p`` and ``||L_{1,n} u||_p`` for ``n = 0..n_max``."""
    out = _block_split(_GridOperator(L, u.N), u, constants.lam, constants.p)
    if not out.resolved:
        warnings.warn("L u has energy near the grid Nyquist frequency", ResolutionWarning)
    if n_max is not None:
        out.low, out.high = out.low[: n_max + 1], out.high[: n_max + 1]
    return out


@dataclass
class LYRecord:
    label: str
    besov_s: float
    besov_sigma: float
    low: float
    high: float
    low_bound: float
    consistency: float

    @property
    def passed(self) -> bool:
        return self.low <= self.low_bound * (1 + 1e-6)

    @property
    def high_ratio(self) -> float:
        return self.high / self.besov_sigma if self.besov_sigma > 0 else 0.0


@dataclass
class LYReport:
    constants: LYConstants
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def violations(self) -> list:
        return [r for r in self.records if not r.passed]

    @property
    def high_constant(self) -> float:
        """Smallest ``C`` with ``high <= C ||u||_{B^sigma}`` over the corpus."""
        return max((r.high_ratio for r in self.records), default=0.0)

    @property
    def max_consistency(self) -> float:
        return max((r.consistency for r in self.records), default=0.0)

    def to_dict(self) -> dict:
        cols = ("label", "besov_s", "besov_sigma", "low", "low_bound", "high", "consistency")
        recs = []
        for r in self.records:
            d = {c: getattr(r, c) for c in cols}
            d["high_ratio"] = r.high_ratio
            d["passed"] = r.passed
            recs.append(d)
        return {
            "constants": {name: getattr(self.constants, name) for name in LYConstants.FIELDS},
            "n_records": len(self.records),
            "high_constant": self.high_constant,
            "max_consistency": self.max_consistency,
            "pass": self.passed,
            "records": recs,
        }

    def to_json(self) -> str:
        return json_text(self.to_dict())

    def to_csv(self) -> str:
        cols = ["label", "besov_s", "besov_sigma", "low", "low_bound", "high", "high_ratio",
                "consistency", "passed"]
        return csv_text(cols, ([getattr(r, c) for c in cols[:-1]] + [r.passed]
                               for r in self.records))


def verify_ly(L: TransferOp, params: BesovParams, corpus: Sequence,
              constants: Optional[LYConstants] = None) -> LYReport:
    """Measure both sides of the low-part and high-part inequalities.

    ``corpus`` holds :class:`GridFunction` objects (optionally as
    ``(label, u)`` pairs) on a common grid.
    """
    items = [c if isinstance(c, tuple) else (f"u{i}", c) for i, c in enumerate(corpus)]
    if not items:
        raise ValueError("empty corpus")
    N = items[0][1].N
    if constants is None:
        constants = compute_constants(L, params, N)
    op = _GridOperator(L, N)
    weak = BesovParams(s=params.sigma, p=params.p, q=params.q, sigma=params.sigma / 2)
    weights = 2.0 ** (params.s * np.arange(n_blocks(N)))
    report = LYReport(constants)
    for label, u in items:
        if u.N != N:
            raise ValueError("corpus functions must share one grid")
        split = _block_split(op, u, constants.lam, params.p)
        bs = besov_norm(u, params)
        report.records.append(LYRecord(
            label=label,
            besov_s=bs,
            besov_sigma=besov_norm(u, weak),
            low=combine_lq(weights * split.low, params.q),
            high=combine_lq(weights * split.high, params.q),
            low_bound=constants.low_factor * bs,
            consistency=split.consistency,
        ))
    return report


def standard_corpus(N: int, n_random: int, rng: np.random.Generator,
                    modes: Iterable[int] = (), top: Optional[int] = None) -> list:
    """Random band-limited functions followed by exponentials ``e_k``."""
    out = [(f"random{i}", random_band_limited(rng, N, top=top)) for i in range(n_random)]
    out += [(f"e{k}", GridFunction.exponential(k, N)) for k in modes]
    return out


def thm_bound(fmap: CircleMap, g: Weight, s: float, n_max: int = 12) -> float:
    """``exp(-s chi_min) R(g)`` with both limits read at ``n_max``."""
    chi = chi_min(fmap, n_max).value
    return math.exp(-s * chi) * r_limit(g, fmap, n_max).value


@dataclass
class RadiusProbe:
    bound: float
    margin: float
    outside: list  # stable eigenvalues with |z| > bound + margin
    inside: list
    counts: list  # per truncation: eigenvalues above bound + margin
    violations: list

    @property
    def consistent(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "bound": float(self.bound), "margin": float(self.margin),
            "outside": [[float(z.real), float(z.imag)] for z in self.outside],
            "inside": [[float(z.real), float(z.imag)] for z in self.inside],
            "counts": self.counts, "violations": self.violations,
            "consistent": self.consistent,
        }


def essential_radius_probe(L: TransferOp, s: float, truncations: Sequence[int],
                           n_max: int = 10, margin: float = 1e-3,
                           match_tol: float = 1e-6) -> RadiusProbe:
    """Compare truncation-stable eigenvalues with the essential-radius bound.

    Eigenvalues above ``bound + margin`` must be stable across every
    truncation and equal in number at each level; anything else is listed
    as a violation.  The output describes numerical eigenvalues of the
    truncations, not certified spectrum.
    """
    bound = thm_bound(L.map, L.weight, s, n_max)
    probe = stable_eigenvalues(L, truncations, match_tol=match_tol)
    cut = bound + margin
    outside = [z for z in probe.values if abs(z) > cut]
    inside = [z for z in probe.values if abs(z) <= cut]
    counts = [int(np.sum(np.abs(sp) > cut)) for sp in probe.spectra]
    violations = []
    if len(set(counts)) > 1:
        violations.append(f"eigenvalue count above the bound varies with truncation: {counts}")
    if counts and counts[-1] != len(outside):
        violations.append(
            f"{counts[-1] - len(outside)} eigenvalue(s) above the bound are not truncation-stable")
    return RadiusProbe(bound, margin, outside, inside, counts, violations)


def remark_sum(n: int, r: float, sigma: float, lam: float, s: Optional[float] = None) -> float:
    """``sum_{l not hooked to n} 2^{s n - sigma l - r max(n, l)}`` (``s`` defaults to ``r``)."""
    s = r if s is None else s
    total = 0.0
    l = 0
    while not hook(n, l, lam):
        total += 2.0 ** (s * n - sigma * l - r * max(n, l))
        l += 1
    return total


def endpoint_divergence(r: float, sigma: float, lam: float, q: float, n_max: int = 20,
                        s: Optional[float] = None) -> dict:
    """Partial ``l^q`` norms over ``n <= N`` of the high-part weight sums.

    At ``s = r`` and finite ``q`` the sums stay of order one for large ``n``
    so the partial norms grow without bound; for ``s < r`` they converge.
    """
    terms = np.array([remark_sum(n, r, sigma, lam, s) for n in range(n_max + 1)])
    partial = np.cumsum(terms ** q) ** (1.0 / q)
    return {"terms": terms, "partial_norms": partial}
