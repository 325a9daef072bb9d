"""Comparator trend filters: exponential smoothing and Gaussian-observation
dynamic shrinkage fits (raw scale and log scale with bias-corrected
back-transform)."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dhs
from .banded import SymBandedMatrix, build_difference_operator, sample_mvn_canonical
from .dhs import OMORI10
from .rng import RngStream

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
ALPHA_BOUNDS = (0.01, 0.999)


# ---------------------------------------------------------------------------
# Simple exponential smoothing
# ---------------------------------------------------------------------------

def _ses_levels(y: np.ndarray, alpha: float) -> np.ndarray:
    levels = np.empty_like(y)
    levels[0] = y[0]
    for t in range(1, y.shape[0]):
        levels[t] = alpha * y[t] + (1.0 - alpha) * levels[t - 1]
    return levels


def _ses_sse(y: np.ndarray, alpha: float) -> float:
    # one-step-ahead errors: the forecast of y_t is the level at t-1
    levels = _ses_levels(y, alpha)
    resid = y[1:] - levels[:-1]
    return float(resid @ resid)


def _golden_minimize(fun, lo: float, hi: float, tol: float = 1e-10) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def exp_smoothing(y, alpha: Optional[float] = None) -> np.ndarray:
    """Simple exponential smoothing with SSE-optimal smoothing weight.

    The weight is found by golden-section search on [0.01, 0.999] (seeded
    from a coarse grid so a shallow local dip cannot trap it); pass alpha
    to skip the optimization.  Returns the fitted level sequence.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] < 2:
        raise ValueError("need a 1-d series of length >= 2")
    if alpha is None:
        grid = np.linspace(ALPHA_BOUNDS[0], ALPHA_BOUNDS[1], 33)
        sses = np.array([_ses_sse(y, a) for a in grid])
        j = int(sses.argmin())
        lo = grid[max(j - 1, 0)]
        hi = grid[min(j + 1, grid.shape[0] - 1)]
        alpha = _golden_minimize(lambda a: _ses_sse(y, a), lo, hi)
    elif not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    return _ses_levels(y, float(alpha))


# ---------------------------------------------------------------------------
# Gaussian-observation dynamic shrinkage trend filter
# ---------------------------------------------------------------------------

@dataclass
class GaussianDhsConfig:
    """Settings for the Gaussian-likelihood comparator.

    The global shrinkage scale follows sigma_eps / sqrt(T), recomputed each
    iteration from the current observation error; the observation variance
    carries a conjugate inverse-gamma(0.01, 0.01) prior.
    """

    D: int = 2
    obs_var_shape: float = 0.01
    obs_var_rate: float = 0.01
    init_var: float = 100.0
    iterations: int = 25_000
    burnin: int = 20_000
    thin: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.D not in (1, 2, 3):
            raise ValueError("D must be 1, 2 or 3")
        if self.obs_var_shape <= 0.0 or self.obs_var_rate <= 0.0:
            raise ValueError("inverse-gamma prior parameters must be positive")
        if self.burnin < 0 or self.iterations <= self.burnin or self.thin < 1:
            raise ValueError("need iterations > burnin >= 0 and thin >= 1")
        if self.n_retained < 1:
            raise ValueError("configuration retains no draws")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burnin) // self.thin


@dataclass
class GaussianDhsDraws:
    """Retained draws of the Gaussian comparator: trend and observation variance."""

    beta: np.ndarray
    sigma_eps_sq: np.ndarray
    seconds: float


def gaussian_trend_system(
    y: np.ndarray,
    sigma_eps_sq: float,
    h: np.ndarray,
    op,
    init_var: float = 100.0,
):
    """Banded precision and linear term of the Gaussian trend conditional:
    Q = I / sigma^2 + D' Sigma_w^-1 D and l = y / sigma^2."""
    weights = np.empty(op.T)
    weights[: op.D] = 1.0 / init_var
    weights[op.D :] = np.exp(-np.asarray(h, dtype=np.float64))
    bands = op.weighted_gram_bands(weights)
    bands[0] += 1.0 / sigma_eps_sq
    ell = np.asarray(y, dtype=np.float64) / sigma_eps_sq
    return SymBandedMatrix(bands), ell


def draw_obs_var(
    rss: float,
    n: int,
    rng: RngStream,
    shape0: float = 0.01,
    rate0: float = 0.01,
) -> float:
    """Conjugate draw of the observation variance: IG(shape0 + n/2, rate0 + rss/2)."""
    shape = shape0 + 0.5 * n
    rate = rate0 + 0.5 * rss
    return float(rate / rng.gen.gamma(shape))


def _ma5(y: np.ndarray) -> np.ndarray:
    # centered 5-point window, shrunk at the edges
    n = y.shape[0]
    out = np.empty(n)
    for t in range(n):
        out[t] = y[max(0, t - 2) : min(n, t + 3)].mean()
    return out


def gaussian_dhs_fit(y, cfg: GaussianDhsConfig, rng: Optional[RngStream] = None) -> GaussianDhsDraws:
    """Gibbs sampler for y_t = beta_t + eps_t with the shrinkage prior on
    the D-th differences of beta.

    Reuses the same shrinkage block as the count model with w = diff(beta, D)
    and sigma_tau tied to the current observation error.
    """
    y = np.asarray(y, dtype=np.float64)
    T = y.shape[0]
    if T <= cfg.D + 1:
        raise ValueError(f"need more than D + 1 = {cfg.D + 1} observations")
    if rng is None:
        rng = RngStream(cfg.seed)
    op = build_difference_operator(T, cfg.D)
    mix = OMORI10

    beta = _ma5(y)
    sigma_eps_sq = float(np.var(y - beta) + 1e-6)
    state = dhs.init_dhs_state(np.diff(y, n=cfg.D), mix, rng.spawn(0))

    n_keep = cfg.n_retained
    beta_draws = np.empty((n_keep, T))
    var_draws = np.empty(n_keep)

    t_start = time.perf_counter()
    for it in range(1, cfg.iterations + 1):
        q, ell = gaussian_trend_system(y, sigma_eps_sq, state.h, op, cfg.init_var)
        beta = sample_mvn_canonical(q, ell, rng)
        resid = y - beta
        sigma_eps_sq = draw_obs_var(float(resid @ resid), T, rng, cfg.obs_var_shape, cfg.obs_var_rate)
        sigma_tau = np.sqrt(sigma_eps_sq / T)

        omega = np.diff(beta, n=cfg.D)
        y_tilde = np.log(omega * omega + state.c_offset)
        state.s = dhs.sample_mixture_indicators(y_tilde, state.h - state.mu, state.mu, mix, rng)
        state.h = dhs.sample_log_vols(omega, state, mix, rng)
        state.xi_eta = dhs.sample_xi_eta(state.h, state.mu, state.phi, rng)
        state.phi = dhs.sample_phi(state.h, state.mu, state.xi_eta, state.phi, rng)
        state.mu, state.xi_mu = dhs.sample_mu(state.h, state.phi, state.xi_eta, state.xi_mu, sigma_tau, rng)

        if it > cfg.burnin and (it - cfg.burnin) % cfg.thin == 0:
            k = (it - cfg.burnin) // cfg.thin - 1
            beta_draws[k] = beta
            var_draws[k] = sigma_eps_sq
    seconds = time.perf_counter() - t_start
    return GaussianDhsDraws(beta=beta_draws, sigma_eps_sq=var_draws, seconds=seconds)


def log_backmap(beta, sigma_eps_sq):
    """Back-transform a log(Y + 1)-scale trend draw to the count scale.

    Uses the lognormal mean identity E[Y] = exp(beta + sigma^2 / 2) - 1,
    applied per retained draw before summarization.
    """
    beta = np.asarray(beta, dtype=np.float64)
    sig = np.asarray(sigma_eps_sq, dtype=np.float64)
    if beta.ndim == 2 and sig.ndim == 1 and sig.shape[0] == beta.shape[0]:
        sig = sig[:, None]  # one observation variance per retained draw
    return np.exp(beta + 0.5 * sig) - 1.0
