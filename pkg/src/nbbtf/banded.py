"""Symmetric banded precision matrices and joint Gaussian state draws.

Stores only the main diagonal and the sub-diagonals in LAPACK lower-banded
layout (``bands[d, j] = Q[j + d, j]``) and factorizes with the banded
Cholesky routines, so sampling an entire state vector from
N(Q^-1 l, Q^-1) costs O(T) for fixed bandwidth -- the joint one-shot
update used by both the trend block and the log-volatility block.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack
from scipy.special import comb

from .rng import RngStream


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a banded Cholesky factorization hits a non-positive pivot."""

    def __init__(self, index: int):
        self.index = int(index)
        super().__init__(
            f"matrix is not positive definite: factorization failed at index {self.index}"
        )


@dataclass
class SymBandedMatrix:
    """Symmetric banded matrix stored as main + lower bands.

    ``bands`` has shape (bandwidth + 1, dim); row d holds the d-th
    sub-diagonal left-aligned (entries past column dim - d are ignored).
    Symmetry is implicit; only a successfully factorized instance is
    known to be positive definite.
    """

    bands: np.ndarray

    def __post_init__(self):
        self.bands = np.ascontiguousarray(self.bands, dtype=np.float64)
        if self.bands.ndim != 2 or self.bands.shape[1] < 1:
            raise ValueError("bands must be a (bandwidth + 1, dim) array")
        if self.bands.shape[0] > self.bands.shape[1]:
            raise ValueError("bandwidth must be < dim")

    @property
    def dim(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    @classmethod
    def from_dense(cls, a: np.ndarray, bandwidth: int) -> "SymBandedMatrix":
        a = np.asarray(a, dtype=np.float64)
        n = a.shape[0]
        bands = np.zeros((bandwidth + 1, n))
        for d in range(bandwidth + 1):
            bands[d, : n - d] = np.diagonal(a, -d)
        return cls(bands)

    def to_dense(self) -> np.ndarray:
        n, p = self.dim, self.bandwidth
        out = np.zeros((n, n))
        for d in range(p + 1):
            idx = np.arange(n - d)
            out[idx + d, idx] = self.bands[d, : n - d]
            out[idx, idx + d] = self.bands[d, : n - d]
        return out


@dataclass(frozen=True)
class DifferenceOperator:
    """Lower-banded D-th order differencing map on length-T vectors.

    Applying it yields (theta_1, ..., theta_D, w_1, ..., w_{T-D}) where w
    are the D-th order differences; the operator has unit diagonal and is
    invertible, and its weighted Gram form is banded with bandwidth D.
    """

    T: int
    D: int
    coeffs: np.ndarray = field(repr=False)

    def apply(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.T,):
            raise ValueError(f"expected a length-{self.T} vector")
        return np.concatenate([theta[: self.D], np.diff(theta, n=self.D)])

    def weighted_gram_bands(self, w: np.ndarray) -> np.ndarray:
        """Bands of D' diag(w) D, the transpose-weighted Gram form."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.T,):
            raise ValueError(f"expected {self.T} weights")
        T, D, c = self.T, self.D, self.coeffs
        g = np.zeros((D + 1, T))
        for d in range(D + 1):
            for k in range(D - d + 1):
                # difference rows t = j + d + k exist only for t >= D
                j0 = max(0, D - d - k)
                j1 = T - 1 - d - k
                if j1 >= j0:
                    g[d, j0 : j1 + 1] += c[k] * c[k + d] * w[j0 + d + k : j1 + d + k + 1]
        g[0, : D] += w[: D]  # identity rows for the first D states
        return g

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.T, self.T))
        for t in range(self.D):
            out[t, t] = 1.0
        for t in range(self.D, self.T):
            out[t, t - self.D : t + 1] = self.coeffs[::-1]
        return out


def build_difference_operator(T: int, D: int) -> DifferenceOperator:
    """Construct the D-th order differencing operator for length-T series."""
    T, D = int(T), int(D)
    if D not in (1, 2, 3):
        raise ValueError("differencing degree D must be 1, 2 or 3")
    if T <= D:
        raise ValueError(f"series length T={T} must exceed degree D={D}")
    k = np.arange(D + 1)
    # row pattern of the D-th difference: theta_t gets (-1)^k C(D, k) at lag k
    coeffs = ((-1.0) ** k) * comb(D, k)
    return DifferenceOperator(T=T, D=D, coeffs=coeffs)


def cholesky_banded(q: SymBandedMatrix) -> np.ndarray:
    """Banded lower Cholesky factor L with L L' = Q (same band layout).

    Raises NotPositiveDefiniteError identifying the failing index when Q is
    not positive definite; no jitter is applied here, callers decide.
    """
    if not np.all(np.isfinite(q.bands)):
        raise ValueError("banded matrix has non-finite entries")
    c, info = lapack.dpbtrf(q.bands, lower=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:  # pragma: no cover - defensive
        raise ValueError(f"illegal argument {-info} to banded Cholesky")
    return c


def _solve_posdef(factor: np.ndarray, b: np.ndarray) -> np.ndarray:
    x, info = lapack.dpbtrs(factor, b, lower=1)
    if info != 0:  # pragma: no cover - defensive
        raise ValueError(f"banded solve failed with info={info}")
    return x


def _solve_lt(factor: np.ndarray, b: np.ndarray) -> np.ndarray:
    # solves L' x = b with the lower-banded factor
    x, info = lapack.dtbtrs(factor, b, uplo=b"L", trans=b"T", diag=b"N")
    if info != 0:  # pragma: no cover - defensive
        raise ValueError(f"banded triangular solve failed with info={info}")
    return x


def sample_mvn_canonical(
    q: SymBandedMatrix,
    ell: np.ndarray,
    rng: RngStream,
    size: int | None = None,
) -> np.ndarray:
    """Draw from N(Q^-1 l, Q^-1) given banded precision Q and linear term l.

    One banded Cholesky plus forward/back substitutions; ``size=None``
    returns a single length-T vector, otherwise a (size, T) matrix of
    independent draws sharing the factorization.
    """
    ell = np.asarray(ell, dtype=np.float64)
    if ell.shape != (q.dim,):
        raise ValueError(f"linear term must have length {q.dim}")
    factor = cholesky_banded(q)
    mean = _solve_posdef(factor, ell[:, None])[:, 0]
    m = 1 if size is None else int(size)
    z = rng.gen.standard_normal((q.dim, m))
    noise = _solve_lt(factor, z)
    draws = mean[:, None] + noise
    return draws[:, 0] if size is None else draws.T
