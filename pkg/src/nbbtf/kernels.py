"""Random-variate kernels shared by every Gibbs step.

The Polya-Gamma sampler is the exact alternating-series accept/reject method
for PG(1, c) (truncation point 0.64), extended to integer shape b by b-fold
convolution.  No normal or saddlepoint approximation is used anywhere, so
runtime is linear in b.  The hot loops are JIT-compiled and consume variates
from the caller's counter-based stream, which keeps every draw reproducible.
"""
from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from numba import njit

from .rng import RngStream

_TRUNC = 0.64  # series truncation point splitting the proposal pieces
_PG_SHAPE_WARN = 10_000


# ---------------------------------------------------------------------------
# Polya-Gamma PG(b, c), exact sampler
# ---------------------------------------------------------------------------

@njit(cache=True)
def _log_ndtr_neg(x):
    # log Phi(-x) for x >= 0, stable far into the tail
    if x < 10.0:
        return math.log(0.5 * math.erfc(x / math.sqrt(2.0)))
    xsq = x * x
    return (-0.5 * xsq - math.log(x) - 0.5 * math.log(2.0 * math.pi)
            + math.log1p(-1.0 / xsq + 3.0 / (xsq * xsq)))


@njit(cache=True)
def _log_ndtr(x):
    # log Phi(x), any sign
    if x >= 0.0:
        return math.log1p(-0.5 * math.erfc(x / math.sqrt(2.0)))
    return _log_ndtr_neg(-x)


@njit(cache=True)
def _right_piece_ratio(z, K):
    # Probability of proposing from the truncated-exponential (x > t) piece.
    t = _TRUNC
    logp = math.log(0.5 * math.pi) - math.log(K) - K * t
    # q = 2 exp(-z) P(InvGauss(1/z, 1) <= t); the CDF is evaluated in log
    # space because exp(2z) overflows long before the product does.
    rt = math.sqrt(t)
    la = _log_ndtr((t * z - 1.0) / rt)
    lb = 2.0 * z + _log_ndtr_neg((t * z + 1.0) / rt)
    m = la if la > lb else lb
    logq = math.log(2.0) - z + m + math.log(math.exp(la - m) + math.exp(lb - m))
    return 1.0 / (1.0 + math.exp(logq - logp))


@njit(cache=True)
def _series_coef(n, x):
    k = (n + 0.5) * math.pi
    if x > _TRUNC:
        return k * math.exp(-0.5 * k * k * x)
    return k * (2.0 / (math.pi * x)) ** 1.5 * math.exp(-2.0 * (n + 0.5) * (n + 0.5) / x)


@njit(cache=True)
def _rtigauss(gen, z):
    # InvGauss(mu=1/z, lambda=1) truncated to (0, t]; z == 0 is the
    # one-sided stable limit and always takes the first branch.
    t = _TRUNC
    if z * t < 1.0:
        while True:
            while True:
                e1 = gen.standard_exponential()
                e2 = gen.standard_exponential()
                if e1 * e1 <= 2.0 * e2 / t:
                    break
            x = t / ((1.0 + t * e1) * (1.0 + t * e1))
            if gen.random() <= math.exp(-0.5 * z * z * x):
                return x
    else:
        mu = 1.0 / z
        while True:
            y = gen.standard_normal()
            y = y * y
            muy = mu * y
            x = mu + 0.5 * mu * muy - 0.5 * mu * math.sqrt(4.0 * muy + muy * muy)
            if gen.random() > mu / (mu + x):
                x = mu * mu / x
            if x <= t:
                return x


@njit(cache=True)
def _jacobi_draw(gen, z, K, ratio):
    # One draw of the tilted Jacobi variable via the alternating series.
    while True:
        if gen.random() < ratio:
            x = _TRUNC + gen.standard_exponential() / K
        else:
            x = _rtigauss(gen, z)
        s = _series_coef(0, x)
        y = gen.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _series_coef(n, x)
                if y <= s:
                    return x
            else:
                s += _series_coef(n, x)
                if y > s:
                    break


@njit(cache=True)
def _pg_scalar(gen, b, c):
    # PG(b, c) = sum of b draws of PG(1, c); PG(1, c) = Jacobi(|c|/2) / 4.
    z = 0.5 * abs(c)
    K = 0.125 * math.pi * math.pi + 0.5 * z * z
    ratio = _right_piece_ratio(z, K)
    total = 0.0
    for _ in range(b):
        total += _jacobi_draw(gen, z, K, ratio)
    return 0.25 * total


@njit(cache=True)
def _pg_vector(gen, b, c, out):
    for i in range(b.shape[0]):
        out[i] = _pg_scalar(gen, b[i], c[i])


def _check_pg_shape(b) -> np.ndarray:
    b = np.asarray(b)
    if b.size == 0:
        return b.astype(np.int64)
    if not np.all(np.isfinite(b)) or np.any(b != np.floor(b)):
        raise ValueError("PG shape b must be a positive integer")
    bi = b.astype(np.int64)
    if np.any(bi < 1):
        raise ValueError("PG shape b must be >= 1")
    if int(bi.max()) > _PG_SHAPE_WARN:
        warnings.warn(
            f"PG draw with shape b={int(bi.max())} > {_PG_SHAPE_WARN}: "
            "runtime is linear in b",
            RuntimeWarning,
            stacklevel=3,
        )
    return bi


def pg_draw(b: int, c: float, rng: RngStream) -> float:
    """One exact draw from the Polya-Gamma distribution PG(b, c).

    b must be a positive integer; the draw is the b-fold convolution of
    exact PG(1, c) accept/reject draws.  PG(b, c) and PG(b, -c) coincide.
    """
    bi = _check_pg_shape(np.asarray([b]))
    c = float(c)
    if not math.isfinite(c):
        raise ValueError("PG tilt c must be finite")
    return float(_pg_scalar(rng.gen, int(bi[0]), c))


def pg_draw_many(b, c, rng: RngStream) -> np.ndarray:
    """Independent PG(b_i, c_i) draws for aligned shape/tilt vectors."""
    bi = _check_pg_shape(b)
    cv = np.ascontiguousarray(c, dtype=np.float64)
    if cv.shape != bi.shape:
        raise ValueError("shape/tilt vectors must have equal length")
    if cv.size and not np.all(np.isfinite(cv)):
        raise ValueError("PG tilt c must be finite")
    out = np.empty(bi.shape[0], dtype=np.float64)
    _pg_vector(rng.gen, np.ascontiguousarray(bi), cv, out)
    return out


def pg_mean(b, c):
    """Analytic mean of PG(b, c): (b / 2c) tanh(c / 2), b/4 at c = 0."""
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(c == 0.0, b / 4.0, b / (2.0 * c) * np.tanh(c / 2.0))
    return m if m.ndim else float(m)


# ---------------------------------------------------------------------------
# Slice sampling (stepping-out + shrinkage)
# ---------------------------------------------------------------------------

def slice_sample(
    log_density: Callable[[float], float],
    x0: float,
    rng: RngStream,
    *,
    lower: float = -np.inf,
    upper: float = np.inf,
    width: float = 1.0,
) -> float:
    """One slice-sampling update of a scalar target on (lower, upper).

    Vertical slice, stepping-out with the given initial width clipped to the
    bounds, then unlimited shrinkage.  The stationary distribution is the
    normalized density; x0 must lie strictly inside the bounds.
    """
    x0 = float(x0)
    if not lower < upper:
        raise ValueError("degenerate interval: lower must be < upper")
    if not (lower < x0 < upper):
        raise ValueError("x0 must lie strictly inside the bounds")
    f0 = float(log_density(x0))
    if not math.isfinite(f0):
        raise ValueError("log_density must be finite at x0")

    gen = rng.gen
    log_y = f0 - gen.standard_exponential()

    u = gen.random()
    left = x0 - width * u
    right = left + width
    while left > lower and log_density(left) > log_y:
        left -= width
    while right < upper and log_density(right) > log_y:
        right += width
    left = max(left, lower)
    right = min(right, upper)

    while True:
        x1 = gen.uniform(left, right)
        if log_density(x1) >= log_y:
            return float(x1)
        if x1 < x0:
            left = x1
        else:
            right = x1


# ---------------------------------------------------------------------------
# Discrete draws
# ---------------------------------------------------------------------------

def discrete_uniform_draw(lo: int, hi: int, rng: RngStream) -> int:
    """Uniform draw on the integer grid {lo, ..., hi} (inclusive)."""
    lo = int(lo)
    hi = int(hi)
    if lo > hi:
        raise ValueError(f"empty support: lo={lo} > hi={hi}")
    return int(rng.gen.integers(lo, hi + 1))


def categorical_draw(weights, rng: RngStream) -> int:
    """Draw a 1-based index j with probability weights_j / sum(weights)."""
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise ValueError("weights must be finite and nonnegative")
    cum = np.cumsum(w)
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("at least one weight must be positive")
    u = rng.gen.random() * total
    return int(np.searchsorted(cum, u, side="right")) + 1
