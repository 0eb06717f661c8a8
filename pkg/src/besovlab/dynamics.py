"""Expanding circle maps, weights and thermodynamic estimators.

Maps are given through a lift ``F`` with ``F(x + 1) = F(x) + k``; the
two closed families are ``F(x) = k x`` and
``F(x) = k x + eps sin(2 pi x) / (2 pi)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

_CHECK_GRID = 4096


class ConvergenceError(RuntimeError):
    """A root finder or contraction failed to converge."""


class DomainError(ValueError):
    """A logarithm of a weight with zeros was requested."""


@dataclass(frozen=True)
class CircleMap:
    degree: int
    family: str = "linear"
    epsilon: float = 0.0

    def __post_init__(self):
        if self.degree < 2:
            raise ValueError(f"degree must be >= 2, got {self.degree}")
        if self.family not in ("linear", "perturbed"):
            raise ValueError(f"unknown map family {self.family!r}")
        if self.family == "linear" and self.epsilon != 0.0:
            raise ValueError("linear family takes no epsilon")
        x = np.arange(_CHECK_GRID) / _CHECK_GRID
        if np.min(np.abs(self.deriv(x))) <= 1.0:
            raise ValueError("map is not expanding: inf |f'| <= 1")
        if not np.allclose(self.lift(x + 1.0), self.lift(x) + self.degree, atol=1e-12):
            raise ValueError("lift does not satisfy F(x+1) = F(x) + k")

    @classmethod
    def linear(cls, k: int) -> "CircleMap":
        return cls(degree=k)

    @classmethod
    def perturbed(cls, k: int, epsilon: float) -> "CircleMap":
        return cls(degree=k, family="perturbed", epsilon=float(epsilon))

    @property
    def params(self) -> dict:
        return {"family": self.family, "degree": self.degree, "epsilon": self.epsilon}

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        out = self.degree * x
        if self.epsilon:
            out = out + self.epsilon * np.sin(2 * np.pi * x) / (2 * np.pi)
        return out

    def __call__(self, x):
        return np.mod(self.lift(x), 1.0)

    eval = __call__

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return self.degree + self.epsilon * np.cos(2 * np.pi * x)

    @property
    def min_expansion(self) -> float:
        return self.degree - abs(self.epsilon)

    @property
    def max_expansion(self) -> float:
        return self.degree + abs(self.epsilon)

    def iterate(self, x, n: int):
        """``f^n(x)`` and ``(f^n)'(x)``."""
        x = np.asarray(x, dtype=float)
        d = np.ones_like(x)
        for _ in range(n):
            d = d * self.deriv(x)
            x = self(x)
        return x, d


def doubling() -> CircleMap:
    return CircleMap.linear(2)


@dataclass(frozen=True)
class Weight:
    """Weight ``g`` of the transfer operator.

    Families: ``constant`` (g = c), ``inverse_jacobian`` (g = 1/|f'|,
    needs ``map``), ``trigonometric`` (g = exp(a cos 2 pi x)) and ``cusp``
    (g = 1 + a |sin pi x|^beta, of finite regularity ``beta``).
    """

    family: str
    value: complex = 1.0
    map: Optional[CircleMap] = None
    regularity: float = math.inf
    exponent: float = 0.0

    def __post_init__(self):
        if self.family not in ("constant", "inverse_jacobian", "trigonometric", "cusp"):
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.family == "inverse_jacobian" and self.map is None:
            raise ValueError("inverse_jacobian weight needs its map")
        if self.regularity < 1:
            # only the r~ >= 1 branch of the regularity condition is supported
            raise ValueError("weights must have regularity >= 1")
        if self.family == "cusp":
            if not np.isreal(self.value) or abs(self.value) >= 1:
                raise ValueError("cusp weight needs real |a| < 1 to stay positive")
            if self.regularity != self.exponent:
                raise ValueError("cusp weight regularity must equal its exponent")

    @classmethod
    def constant(cls, c) -> "Weight":
        return cls("constant", value=c)

    @classmethod
    def inverse_jacobian(cls, fmap: CircleMap) -> "Weight":
        return cls("inverse_jacobian", map=fmap)

    @classmethod
    def trigonometric(cls, a: float) -> "Weight":
        return cls("trigonometric", value=float(a))

    @classmethod
    def cusp(cls, a: float, beta: float) -> "Weight":
        """``1 + a |sin(pi x)|^beta``; C^beta at the integers, smooth elsewhere."""
        return cls("cusp", value=float(a), regularity=float(beta), exponent=float(beta))

    @property
    def is_real_positive(self) -> bool:
        if self.family == "constant":
            return np.isreal(self.value) and np.real(self.value) > 0
        return True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "constant":
            return np.full(x.shape, self.value, dtype=complex if np.iscomplex(self.value) else float)
        if self.family == "inverse_jacobian":
            return 1.0 / np.abs(self.map.deriv(x))
        if self.family == "cusp":
            return 1.0 + self.value * np.abs(np.sin(np.pi * x)) ** self.exponent
        return np.exp(self.value * np.cos(2 * np.pi * x))

    eval = __call__

    def log_abs(self, x):
        vals = np.abs(self(x))
        if np.any(vals <= 1e-300):
            raise DomainError("weight vanishes; log|g| undefined")
        return np.log(vals)


def inverse_branches(fmap: CircleMap, x, tol: float = 1e-14, max_iter: int = 100) -> np.ndarray:
    """All ``k`` preimages of ``x``, shape ``(k,) + x.shape``, increasing in the
    branch index.

    Branch ``i`` solves ``F(y) = x + i`` on ``[0, 1]`` by Newton's method kept
    inside the monotonicity bracket.
    """
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    k = fmap.degree
    target = x[None, ...] + np.arange(k).reshape((k,) + (1,) * x.ndim)
    return lift_inverse(fmap, target, tol, max_iter)


def lift_inverse(fmap: CircleMap, target, tol: float = 1e-14, max_iter: int = 100) -> np.ndarray:
    """Solve ``F(y) = target`` for ``target`` in ``[0, k]``; no reduction mod 1."""
    target = np.asarray(target, dtype=float)
    k = fmap.degree
    if fmap.epsilon == 0.0:
        return target / k
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    y = target / k
    for _ in range(max_iter):
        r = fmap.lift(y) - target
        lo = np.where(r < 0, y, lo)
        hi = np.where(r > 0, y, hi)
        y_new = y - r / fmap.deriv(y)
        outside = (y_new < lo) | (y_new > hi)
        y_new = np.where(outside, 0.5 * (lo + hi), y_new)
        if np.all(np.abs(y_new - y) <= tol):
            return y_new
        y = y_new
    raise ConvergenceError("inverse branch root finder did not converge")


def cocycle(g: Weight, fmap: CircleMap, n: int, x):
    """``g^{(n)}(x) = prod_{j<n} g(f^j x)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape, dtype=complex)
    for _ in range(n):
        out = out * g(x)
        x = fmap(x)
    if np.all(out.imag == 0):
        out = out.real
    return out if out.ndim else out.item()


def _refined_extremum(func: Callable, grid_n: int, maximize: bool) -> float:
    """Grid extremum of a 1-periodic scalar function, polished by a bounded
    scalar search around the best grid cell."""
    x = np.arange(grid_n) / grid_n
    vals = func(x)
    j = int(np.argmax(vals) if maximize else np.argmin(vals))
    best = vals[j]
    sign = -1.0 if maximize else 1.0
    h = 1.0 / grid_n
    res = minimize_scalar(lambda t: sign * float(func(np.array([t]))[0]),
                          bounds=(x[j] - h, x[j] + h), method="bounded",
                          options={"xatol": 1e-13})
    cand = sign * res.fun
    return max(best, cand) if maximize else min(best, cand)


@dataclass
class SequenceResult:
    """A limit estimate with the sequence it was read from."""

    value: float
    sequence: np.ndarray
    refinement_delta: float = 0.0

    def __float__(self):
        return float(self.value)


def r_n(g: Weight, fmap: CircleMap, n: int, grid_n: int = 2 ** 14) -> float:
    """``||g^{(n)} (f^n)'||_inf`` by grid sup with local refinement."""
    def integrand(x):
        return np.abs(cocycle(g, fmap, n, x) * fmap.iterate(x, n)[1])
    return _refined_extremum(integrand, grid_n, maximize=True)


def r_limit(g: Weight, fmap: CircleMap, n_max: int, grid_n: int = 2 ** 14) -> SequenceResult:
    seq = np.array([r_n(g, fmap, n, grid_n) ** (1.0 / n) for n in range(1, n_max + 1)])
    fine = r_n(g, fmap, n_max, 2 * grid_n) ** (1.0 / n_max)
    return SequenceResult(float(seq[-1]), seq, abs(fine - seq[-1]))


def chi_min(fmap: CircleMap, n_max: int, grid_n: int = 2 ** 14) -> SequenceResult:
    """``(1/n) log min |(f^n)'|`` for ``n = 1..n_max``; the last entry is the estimate."""
    seq = np.empty(n_max)
    for n in range(1, n_max + 1):
        m = _refined_extremum(lambda x: np.abs(fmap.iterate(x, n)[1]), grid_n, maximize=False)
        seq[n - 1] = math.log(m) / n
    fine = math.log(_refined_extremum(lambda x: np.abs(fmap.iterate(x, n_max)[1]),
                                      2 * grid_n, maximize=False)) / n_max
    return SequenceResult(float(seq[-1]), seq, abs(fine - seq[-1]))


@dataclass
class OrbitSet:
    """Fixed points of ``f^n`` with their orbits and multipliers."""

    period: int
    points: np.ndarray
    orbits: np.ndarray  # (period, count): row j holds f^j of each point
    multipliers: np.ndarray
    words: list = field(default_factory=list)

    def __len__(self):
        return self.points.size

    def birkhoff(self, phi: Callable) -> np.ndarray:
        return np.sum(phi(self.orbits), axis=0)


def periodic_points(fmap: CircleMap, n: int, budget: int = 2 ** 20,
                    tol: float = 1e-13, max_iter: int = 200) -> OrbitSet:
    """All fixed points of ``f^n`` by contracting composed inverse branches.

    One point per symbolic word; the all-0 and all-(k-1) words give the same
    point 0 on the circle, leaving ``k^n - 1`` points.
    """
    k = fmap.degree
    count = k ** n
    if count > budget:
        raise ValueError(f"k^n = {count} exceeds the orbit budget {budget}")
    words = np.array(list(itertools.product(range(k), repeat=n)), dtype=int)  # (count, n)
    x = np.full(count, 0.5)
    z = np.empty((n + 1, count))
    for _ in range(max_iter):
        z[n] = x
        for j in range(n - 1, -1, -1):
            z[j] = _branch(fmap, z[j + 1], words[:, j])
        delta = np.abs(z[0] - x)
        x = z[0].copy()
        if np.all(delta <= tol):
            break
    else:
        raise ConvergenceError("periodic orbit contraction did not converge")
    orbits = np.mod(z[:n], 1.0)
    orbits = np.where(orbits > 1.0 - 1e-12, 0.0, orbits)
    pts = orbits[0]
    order = np.argsort(pts, kind="stable")
    keep = [order[0]]
    for idx in order[1:]:
        if abs(pts[idx] - pts[keep[-1]]) > 1e-9:
            keep.append(idx)
    keep = np.array(keep)
    orbits = orbits[:, keep]
    mult = np.prod(fmap.deriv(orbits), axis=0)
    if keep.size != count - 1:
        raise ConvergenceError(f"found {keep.size} fixed points of f^{n}, expected {count - 1}")
    return OrbitSet(period=n, points=orbits[0], orbits=orbits, multipliers=mult,
                    words=[tuple(w) for w in words[keep]])


def _branch(fmap: CircleMap, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Inverse branch ``idx[m]`` at ``x[m]`` for ``x`` in ``[0, 1]`` (the lift
    keeps ``x = 1`` on the branch it came from)."""
    return lift_inverse(fmap, x + idx)


def _orbit_log_terms(fmap, phi, m, trace, orbit_cache):
    orb = orbit_cache.get(m) or periodic_points(fmap, m)
    orbit_cache[m] = orb
    terms = orb.birkhoff(phi)
    if trace:
        terms = terms - np.log(np.abs(1.0 - 1.0 / orb.multipliers))
    return terms


def pressure(fmap: CircleMap, phi: Callable, n: int, trace: bool = False,
             orbits: Optional[dict] = None) -> SequenceResult:
    """Periodic-orbit estimate ``(1/m) log sum_{Fix f^m} exp(S_m phi)`` for m = 1..n.

    With ``trace=True`` each orbit is weighted by ``|1 - 1/(f^m)'|^{-1}``,
    which turns the sum into the flat trace of the transfer operator and
    removes the ``O(lambda^{-m})`` bias of the plain sum.
    """
    cache = {} if orbits is None else orbits
    seq = np.empty(n)
    for m in range(1, n + 1):
        seq[m - 1] = logsumexp(_orbit_log_terms(fmap, phi, m, trace, cache)) / m
    delta = abs(seq[-1] - seq[-2]) if n > 1 else math.inf
    return SequenceResult(float(seq[-1]), seq, delta)


def gl_bound(fmap: CircleMap, g: Weight, s: float, n: int, trace: bool = True) -> float:
    """``exp P_top(log|g| - s log|f'|)``, the one-dimensional form of the
    thermodynamic essential-radius formula."""
    def phi(x):
        return g.log_abs(x) - s * np.log(np.abs(fmap.deriv(x)))
    return math.exp(pressure(fmap, phi, n, trace=trace).value)


def count_fixed_points_bruteforce(fmap: CircleMap, n: int, grid_n: int = 2 ** 18) -> int:
    """Count solutions of ``f^n(x) = x`` on ``[0, 1)`` by scanning the lifted
    displacement ``F^n(x) - x`` cell by cell for integer crossings.

    Independent of the symbolic contraction in :func:`periodic_points`.
    """
    x = np.arange(grid_n + 1) / grid_n
    y = x.copy()
    for _ in range(n):
        y = fmap.lift(y)
    disp = y - x
    lo, hi = disp[:-1], disp[1:]
    # integers m with lo <= m < hi, per cell (left-closed so x = 0 counts once)
    per_cell = np.ceil(hi) - np.ceil(lo)
    per_cell = np.where(lo > hi, np.ceil(lo) - np.ceil(hi), per_cell)
    return int(np.sum(per_cell))
