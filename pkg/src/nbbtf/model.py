"""Negative binomial observation layer and the outer Gibbs sampler.

Counts are modeled as Y_t ~ NB(r, e^theta_t / (r + e^theta_t)) so that
E[Y_t] = e^theta_t and var = e^theta_t (1 + e^theta_t / r); r -> infinity
recovers the Poisson.  Polya-Gamma expansion of the logistic-form likelihood
makes the trend update a joint banded Gaussian draw, the integer r moves by
random-walk Metropolis-Hastings on a boundary-corrected integer grid, and
the increments of theta carry the dynamic horseshoe prior.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from . import dhs
from .banded import (
    DifferenceOperator,
    NotPositiveDefiniteError,
    SymBandedMatrix,
    build_difference_operator,
    sample_mvn_canonical,
)
from .dhs import OMORI10, DhsState, OmoriMixture, shrinkage_profile
from .kernels import discrete_uniform_draw, pg_draw_many, pg_mean
from .rng import RngStream

logger = logging.getLogger(__name__)

_RIDGE = 1e-8


class McmcStepError(RuntimeError):
    """A sampling step failed; carries the iteration index and step name."""

    def __init__(self, iteration: int, step: str, cause: Exception):
        self.iteration = iteration
        self.step = step
        super().__init__(f"MCMC aborted at iteration {iteration}, step '{step}': {cause}")


@dataclass
class CountSeries:
    """Observed nonnegative integer counts with an optional time index."""

    y: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        y = np.asarray(self.y)
        if y.ndim != 1:
            raise ValueError("counts must be a 1-d vector")
        if y.size and (not np.all(np.isfinite(np.asarray(y, dtype=np.float64)))
                       or np.any(np.asarray(y, dtype=np.float64) != np.floor(np.asarray(y, dtype=np.float64)))
                       or np.any(y < 0)):
            raise ValueError("counts must be finite nonnegative integers")
        self.y = y.astype(np.int64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != self.y.shape:
                raise ValueError("labels must align with counts")

    def __len__(self) -> int:
        return self.y.shape[0]


@dataclass
class ModelConfig:
    """Sampler configuration.

    r_fixed switches to the Poisson-approximation mode: the overdispersion
    stays at the given constant and its update is skipped entirely.  The
    first D trend states have fixed prior variance init_var and are never
    sampled.  Retained draws are the post-burnin iterations at multiples of
    thin; a trailing partial block is dropped.
    """

    D: int = 2
    sigma_tau: float = 1.0
    r_fixed: Optional[int] = None
    r_prior_mean: int = 10
    mh_step: int = 1
    init_var: float = 100.0
    iterations: int = 25_000
    burnin: int = 20_000
    thin: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.D not in (1, 2, 3):
            raise ValueError("D must be 1, 2 or 3")
        if not self.sigma_tau > 0.0:
            raise ValueError("sigma_tau must be positive")
        if self.r_fixed is not None:
            if int(self.r_fixed) != self.r_fixed or self.r_fixed < 1:
                raise ValueError("r_fixed must be a positive integer")
            self.r_fixed = int(self.r_fixed)
        if self.mh_step < 1:
            raise ValueError("mh_step must be >= 1")
        if not self.init_var > 0.0:
            raise ValueError("init_var must be positive")
        if self.burnin < 0 or self.iterations <= self.burnin:
            raise ValueError("need iterations > burnin >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.n_retained < 1:
            raise ValueError("configuration retains no draws")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burnin) // self.thin


@dataclass
class FitState:
    """One full MCMC configuration: trend, observation auxiliaries, r, DHS."""

    theta: np.ndarray
    xi_theta: np.ndarray
    r: int
    dhs: DhsState


@dataclass
class PosteriorDraws:
    """Retained post-burnin, thinned draws plus run bookkeeping.

    y_rep holds posterior-predictive counts drawn per retained iteration,
    so every generated quantity is a valid nonnegative integer.
    """

    theta: np.ndarray
    r: np.ndarray
    phi: np.ndarray
    mu: np.ndarray
    h: np.ndarray
    kappa: np.ndarray
    y_rep: np.ndarray
    seconds: float
    accept_rate: float

    def __post_init__(self):
        k = self.theta.shape[0]
        for name in ("r", "phi", "mu", "h", "kappa", "y_rep"):
            if getattr(self, name).shape[0] != k:
                raise ValueError(f"draw matrix '{name}' must have {k} rows")

    @property
    def n_draws(self) -> int:
        return self.theta.shape[0]


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------

def nb_loglik(y: np.ndarray, theta: np.ndarray, r: int) -> float:
    """Negative binomial log likelihood including normalizing constants.

    The Gamma-function terms are kept (they matter when r varies):
    sum_t [lgam(y+r) - lgam(r) - lgam(y+1) + y (theta - log r)
           - (y + r) log(1 + e^(theta - log r))].
    """
    if r < 1:
        raise ValueError("overdispersion r must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if y.shape != theta.shape:
        raise ValueError("y and theta must have equal length")
    if y.size == 0:
        return 0.0
    psi = theta - np.log(r)
    return float(np.sum(
        gammaln(y + r) - gammaln(r) - gammaln(y + 1.0)
        + y * psi - (y + r) * np.logaddexp(0.0, psi)
    ))


# ---------------------------------------------------------------------------
# Gibbs steps
# ---------------------------------------------------------------------------

def sample_xi_theta(y: np.ndarray, theta: np.ndarray, r: int, rng: RngStream) -> np.ndarray:
    """Observation auxiliaries xi_t ~ PG(y_t + r, theta_t - log r), independent per t."""
    y = np.asarray(y, dtype=np.int64)
    b = y + int(r)
    c = np.asarray(theta, dtype=np.float64) - np.log(r)
    return pg_draw_many(b, c, rng)


def theta_system(
    y: np.ndarray,
    r: int,
    xi_theta: np.ndarray,
    h: np.ndarray,
    op: DifferenceOperator,
    init_var: float = 100.0,
) -> tuple[SymBandedMatrix, np.ndarray]:
    """Banded precision and linear term of the joint trend conditional.

    Q = diag(xi) + D' Sigma_w^-1 D with Sigma_w = diag(init_var x D, e^h),
    and l_t = xi_t log r + (y_t - r) / 2.
    """
    y = np.asarray(y, dtype=np.float64)
    xi_theta = np.asarray(xi_theta, dtype=np.float64)
    weights = np.empty(op.T)
    weights[: op.D] = 1.0 / init_var
    weights[op.D :] = np.exp(-np.asarray(h, dtype=np.float64))
    bands = op.weighted_gram_bands(weights)
    bands[0] += xi_theta
    ell = xi_theta * np.log(r) + 0.5 * (y - r)
    return SymBandedMatrix(bands), ell


def sample_theta(
    y: np.ndarray,
    r: int,
    xi_theta: np.ndarray,
    dhs_state: DhsState,
    cfg: ModelConfig,
    rng: RngStream,
    op: Optional[DifferenceOperator] = None,
) -> np.ndarray:
    """Joint draw of the whole trend vector from N(Q^-1 l, Q^-1)."""
    if op is None:
        op = build_difference_operator(len(np.asarray(y)), cfg.D)
    q, ell = theta_system(y, r, xi_theta, dhs_state.h, op, cfg.init_var)
    try:
        return sample_mvn_canonical(q, ell, rng)
    except NotPositiveDefiniteError:
        # last-resort guard; a PD failure here means near-singular scales
        logger.warning("trend precision not positive definite; retrying with ridge %g", _RIDGE)
        q.bands[0] += _RIDGE
        return sample_mvn_canonical(q, ell, rng)


def _proposal_width(r: int, step: int) -> int:
    return r + step - max(r - step, 1) + 1


def _log_r_prior(r: int, prior_mean: int) -> float:
    # Poisson(prior_mean) pmf up to the truncation constant, which cancels
    return r * np.log(prior_mean) - gammaln(r + 1.0)


def sample_r(
    y: np.ndarray,
    theta: np.ndarray,
    r: int,
    step: int,
    rng: RngStream,
    prior_mean: int = 10,
) -> tuple[int, bool]:
    """Integer random-walk Metropolis-Hastings update of the overdispersion.

    Proposes r* ~ DUnif(max(r - step, 1), r + step).  The support width
    differs near the r = 1 boundary, so the Hastings ratio carries the
    correction q(r | r*) / q(r* | r) = width(r) / width(r*).
    """
    r = int(r)
    if r < 1:
        raise ValueError("overdispersion r must be >= 1")
    r_star = discrete_uniform_draw(max(r - step, 1), r + step, rng)
    log_accept = (
        nb_loglik(y, theta, r_star) - nb_loglik(y, theta, r)
        + _log_r_prior(r_star, prior_mean) - _log_r_prior(r, prior_mean)
        + np.log(_proposal_width(r, step)) - np.log(_proposal_width(r_star, step))
    )
    if np.log(rng.gen.random()) < log_accept:
        return r_star, True
    return r, False


# ---------------------------------------------------------------------------
# Initialization and the chain
# ---------------------------------------------------------------------------

def _moving_average(z: np.ndarray, half_width: int = 2) -> np.ndarray:
    # centered window, shrunk at the edges
    n = z.shape[0]
    out = np.empty(n)
    for t in range(n):
        out[t] = z[max(0, t - half_width) : min(n, t + half_width + 1)].mean()
    return out


def init_state(y, cfg: ModelConfig, rng: Optional[RngStream] = None) -> FitState:
    """Deterministic-ish starting point: smoothed log counts and prior means."""
    series = y if isinstance(y, CountSeries) else CountSeries(np.asarray(y))
    yv = series.y
    if len(series) < cfg.D + 2:
        raise ValueError(f"need at least D + 2 = {cfg.D + 2} observations, got {len(series)}")
    if rng is None:
        rng = RngStream(cfg.seed, stream_id=1)
    z = np.log(yv + 1.0)
    theta = _moving_average(z)
    r = cfg.r_fixed if cfg.r_fixed is not None else cfg.r_prior_mean
    xi_theta = pg_mean(yv + r, theta - np.log(r))
    # volatility scale keyed to the unsmoothed differenced log counts
    dhs_state = dhs.init_dhs_state(np.diff(z, n=cfg.D), OMORI10, rng)
    return FitState(theta=theta, xi_theta=np.atleast_1d(xi_theta), r=int(r), dhs=dhs_state)


def run_mcmc(y, cfg: ModelConfig, rng: Optional[RngStream] = None) -> PosteriorDraws:
    """Run the full Gibbs sampler and collect retained draws.

    Per-iteration order: overdispersion (unless fixed), trend, trend
    auxiliaries, then the shrinkage block (indicators, joint volatility,
    innovation auxiliaries, autocorrelation, average volatility).  The
    (seed, config, data) triple determines every retained draw bitwise.
    """
    series = y if isinstance(y, CountSeries) else CountSeries(np.asarray(y))
    yv = series.y
    if rng is None:
        rng = RngStream(cfg.seed)
    state = init_state(series, cfg, rng.spawn(0))
    op = build_difference_operator(len(series), cfg.D)
    mix = OMORI10

    n_keep = cfg.n_retained
    T, n = len(series), len(series) - cfg.D
    theta_draws = np.empty((n_keep, T))
    r_draws = np.empty(n_keep, dtype=np.int64)
    phi_draws = np.empty(n_keep)
    mu_draws = np.empty(n_keep)
    h_draws = np.empty((n_keep, n))
    kappa_draws = np.empty((n_keep, n))
    y_rep = np.empty((n_keep, T), dtype=np.int64)

    accepted = 0
    r_moves = 0
    gen = rng.gen
    t_start = time.perf_counter()
    for it in range(1, cfg.iterations + 1):
        step = "overdispersion"
        try:
            if cfg.r_fixed is None:
                state.r, acc = sample_r(yv, state.theta, state.r, cfg.mh_step, rng, cfg.r_prior_mean)
                accepted += acc
                r_moves += 1
            step = "trend"
            state.theta = sample_theta(yv, state.r, state.xi_theta, state.dhs, cfg, rng, op)
            step = "trend-auxiliaries"
            state.xi_theta = sample_xi_theta(yv, state.theta, state.r, rng)
            d = state.dhs
            omega = np.diff(state.theta, n=cfg.D)
            step = "volatility-indicators"
            y_tilde = np.log(omega * omega + d.c_offset)
            d.s = dhs.sample_mixture_indicators(y_tilde, d.h - d.mu, d.mu, mix, rng)
            step = "volatility"
            d.h = dhs.sample_log_vols(omega, d, mix, rng)
            step = "volatility-auxiliaries"
            d.xi_eta = dhs.sample_xi_eta(d.h, d.mu, d.phi, rng)
            step = "autocorrelation"
            d.phi = dhs.sample_phi(d.h, d.mu, d.xi_eta, d.phi, rng)
            step = "average-volatility"
            d.mu, d.xi_mu = dhs.sample_mu(d.h, d.phi, d.xi_eta, d.xi_mu, cfg.sigma_tau, rng)
        except Exception as exc:
            raise McmcStepError(it, step, exc) from exc

        if it > cfg.burnin and (it - cfg.burnin) % cfg.thin == 0:
            k = (it - cfg.burnin) // cfg.thin - 1
            theta_draws[k] = state.theta
            r_draws[k] = state.r
            phi_draws[k] = state.dhs.phi
            mu_draws[k] = state.dhs.mu
            h_draws[k] = state.dhs.h
            kappa_draws[k] = shrinkage_profile(state.dhs.h)
            lam = gen.gamma(state.r, np.exp(state.theta) / state.r)
            y_rep[k] = gen.poisson(lam)

    seconds = time.perf_counter() - t_start
    accept_rate = accepted / r_moves if r_moves else float("nan")
    return PosteriorDraws(
        theta=theta_draws, r=r_draws, phi=phi_draws, mu=mu_draws,
        h=h_draws, kappa=kappa_draws, y_rep=y_rep,
        seconds=seconds, accept_rate=accept_rate,
    )


# ---------------------------------------------------------------------------
# Posterior summaries
# ---------------------------------------------------------------------------

def sample_quantile(a: np.ndarray, p, axis: int = 0) -> np.ndarray:
    """Order-statistic (inverse empirical CDF) quantile; never interpolates."""
    return np.quantile(np.asarray(a), p, axis=axis, method="inverted_cdf")


def equal_tail_interval(a: np.ndarray, level: float, axis: int = 0):
    """Equal-tail interval endpoints at the given credibility level."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    half = (1.0 - level) / 2.0
    return sample_quantile(a, half, axis=axis), sample_quantile(a, 1.0 - half, axis=axis)


@dataclass
class PosteriorSummary:
    """Per-time-point posterior summaries on the count scale."""

    level: float
    trend_median: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    pred_lower: np.ndarray
    pred_upper: np.ndarray
    kappa_median: np.ndarray
    unshrunk_count: int
    unshrunk_fraction: float


def posterior_summary(draws: PosteriorDraws, level: float = 0.95) -> PosteriorSummary:
    """Summarize retained draws: median trend, equal-tail credible and
    predictive intervals, median shrinkage, and the unshrunk time count.

    A time point is unshrunk when its posterior median kappa falls below
    0.5; the fraction is taken over the T - D increments.
    """
    if draws.n_draws == 0:
        raise ValueError("no retained draws to summarize")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    trend = np.exp(draws.theta)
    ci_lo, ci_hi = equal_tail_interval(trend, level)
    pred_lo, pred_hi = equal_tail_interval(draws.y_rep, level)
    kappa_med = sample_quantile(draws.kappa, 0.5)
    unshrunk = int(np.sum(kappa_med < 0.5))
    return PosteriorSummary(
        level=level,
        trend_median=sample_quantile(trend, 0.5),
        ci_lower=ci_lo,
        ci_upper=ci_hi,
        pred_lower=pred_lo.astype(np.int64),
        pred_upper=pred_hi.astype(np.int64),
        kappa_median=kappa_med,
        unshrunk_count=unshrunk,
        unshrunk_fraction=unshrunk / kappa_med.shape[0],
    )
