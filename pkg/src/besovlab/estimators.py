"""scikit-learn style wrappers.

Rows of ``X`` are grid samples ``u(j/N)`` of periodic functions, one
function per row.  The wrappers only validate input and delegate to the
functional API, so they can sit inside a ``Pipeline`` or be cloned and
grid-searched like any other transformer.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .dyadic import STANDARD, WIDE, _lp, combine_lq, lp_blocks, GridFunction, n_blocks
from .dynamics import CircleMap, Weight, doubling
from .transfer import TransferOp, grid_matrix, stable_eigenvalues


def _check_samples(X) -> np.ndarray:
    """Validate a 2-D array of real or complex samples with a power-of-two width."""
    X = np.asarray(X)
    if np.iscomplexobj(X):
        re = check_array(X.real, dtype=np.float64)
        im = check_array(X.imag, dtype=np.float64)
        X = re + 1j * im
    else:
        X = check_array(X, dtype=np.float64)
    N = X.shape[1]
    if N < 8 or N & (N - 1):
        raise ValueError(f"number of samples per row must be a power of two >= 8, got {N}")
    return X


class _SampleTransformer(BaseEstimator, TransformerMixin):

    def _validate(self, X, reset: bool) -> np.ndarray:
        X = _check_samples(X)
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} samples per row, "
                             f"expected {self.n_features_in_}")
        return X


class LittlewoodPaleyTransformer(_SampleTransformer):
    """Map each row to its weighted block norms ``2^{sn} ||Delta_n u||_p``.

    Parameters
    ----------
    s : float
        Smoothness weight applied to block ``n``.
    p : float
        Lebesgue exponent of the block norms, ``inf`` allowed.
    q : float
        Exponent used by :meth:`besov_norm` to combine the blocks.
    kind : {"standard", "wide"}
        Which filter family to use.
    """

    def __init__(self, s: float = 0.0, p: float = 2.0, q: float = np.inf, kind: str = STANDARD):
        self.s = s
        self.p = p
        self.q = q
        self.kind = kind

    def fit(self, X, y=None):
        if self.kind not in (STANDARD, WIDE):
            raise ValueError(f"kind must be {STANDARD!r} or {WIDE!r}")
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError("p and q must lie in [1, inf]")
        X = self._validate(X, reset=True)
        self.n_blocks_ = n_blocks(X.shape[1])
        self.weights_ = 2.0 ** (self.s * np.arange(self.n_blocks_))
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = self._validate(X, reset=False)
        out = np.empty((X.shape[0], self.n_blocks_))
        for i, row in enumerate(X):
            out[i] = self.weights_ * _lp(lp_blocks(GridFunction(row), self.kind), self.p, axis=1)
        return out

    def besov_norm(self, X) -> np.ndarray:
        """``l^q`` combination of :meth:`transform`, one value per row."""
        return np.array([combine_lq(r, self.q) for r in self.transform(X)])


class TransferOperatorTransformer(_SampleTransformer):
    """Apply the weighted transfer operator ``L^power`` to each row.

    ``fit`` assembles the dense grid matrix for the row width; ``transform``
    is then a single matrix product.  Output is complex.
    """

    def __init__(self, fmap: Optional[CircleMap] = None, weight: Optional[Weight] = None,
                 power: int = 1):
        self.fmap = fmap
        self.weight = weight
        self.power = power

    def _operator(self) -> TransferOp:
        fmap = doubling() if self.fmap is None else self.fmap
        weight = Weight.inverse_jacobian(fmap) if self.weight is None else self.weight
        return TransferOp(fmap, weight, self.power)

    def fit(self, X, y=None):
        X = self._validate(X, reset=True)
        self.operator_ = self._operator()
        self.matrix_ = grid_matrix(self.operator_, X.shape[1])
        return self

    def transform(self, X):
        check_is_fitted(self, "matrix_")
        X = self._validate(X, reset=False)
        return X @ self.matrix_.T


class SpectralProbe(BaseEstimator):
    """Eigenvalues of the Fourier truncations that persist across levels.

    ``fit`` ignores ``X``; the operator is fully described by the
    parameters.  After fitting, ``eigenvalues_`` holds the stable values
    sorted by decreasing modulus and ``drift_`` their largest step between
    consecutive truncations.
    """

    def __init__(self, fmap: Optional[CircleMap] = None, weight: Optional[Weight] = None,
                 power: int = 1, truncations: Sequence[int] = (8, 16, 32),
                 match_tol: float = 1e-6):
        self.fmap = fmap
        self.weight = weight
        self.power = power
        self.truncations = truncations
        self.match_tol = match_tol

    def fit(self, X=None, y=None):
        ks = sorted(int(k) for k in self.truncations)
        if len(set(ks)) < 3 or ks[0] < 1:
            raise ValueError("need at least three distinct positive truncations")
        fmap = doubling() if self.fmap is None else self.fmap
        weight = Weight.inverse_jacobian(fmap) if self.weight is None else self.weight
        self.probe_ = stable_eigenvalues(TransferOp(fmap, weight, self.power), ks,
                                         match_tol=self.match_tol)
        self.eigenvalues_ = self.probe_.values
        self.drift_ = np.array([e.max_drift for e in self.probe_.stable])
        return self

    def leading(self) -> complex:
        check_is_fitted(self, "eigenvalues_")
        if self.eigenvalues_.size == 0:
            raise ValueError("no stable eigenvalue found")
        return complex(self.eigenvalues_[0])
