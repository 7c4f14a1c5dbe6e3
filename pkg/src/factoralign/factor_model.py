"""Synthetic data generation and a conjugate Gibbs sampler for the Gaussian factor model.

The model is x_i = L eta_i + eps_i with eta_i ~ N(0, I_k), eps_i ~ N(0, Sigma)
and Sigma diagonal.  The sampler places independent N(0, c0) priors on the
loadings and inverse-gamma(shape, rate) priors on the residual variances, and
deliberately imposes no identifiability constraints, so the sampled loadings
drift freely across rotations, labels, and signs.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .core import Chain

__all__ = [
    "GeneratorConfig",
    "GibbsState",
    "NumericalError",
    "SamplerConfig",
    "Scenario",
    "SyntheticDataset",
    "center_columns",
    "generate_dataset",
    "generate_independent",
    "generate_sparse",
    "gibbs_sample",
    "validate_identifiability",
]

logger = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """A linear-algebra failure inside the sampler (ill-conditioned posterior)."""


class Scenario(enum.Enum):
    INDEPENDENT = "independent"
    SPARSE = "sparse"


def validate_identifiability(p: int, k: int) -> bool:
    """True iff k <= (p - 1) / 2, the condition for an identifiable residual."""
    if p < 1 or k < 1:
        raise ValueError(f"p and k must be >= 1, got p={p}, k={k}")
    return 2 * k <= p - 1


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    p: int
    k: int
    scenario: Scenario
    seed: int
    off_block_sd: float = 0.01

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.k < 1 or self.p < 1:
            raise ValueError(f"p and k must be >= 1, got p={self.p}, k={self.k}")
        if not validate_identifiability(self.p, self.k):
            raise ValueError(
                f"k={self.k} with p={self.p} violates the identifiability rule k <= (p-1)/2"
            )
        if not self.off_block_sd > 0:
            raise ValueError("off_block_sd must be > 0")


@dataclass(frozen=True)
class SyntheticDataset:
    """A generated data matrix together with the ground truth that produced it."""

    X: np.ndarray
    true_loadings: np.ndarray
    true_residual_variances: np.ndarray
    true_factors: np.ndarray


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 11000
    burn_in: int = 1000
    prior_loading_variance: float = 1.0
    prior_residual_shape: float = 0.5
    prior_residual_rate: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError(
                f"burn_in must satisfy 0 <= burn_in < iterations, got "
                f"burn_in={self.burn_in}, iterations={self.iterations}"
            )
        for name in ("prior_loading_variance", "prior_residual_shape", "prior_residual_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class GibbsState:
    """Current parameter values of the sampler."""

    loadings: np.ndarray
    factors: np.ndarray
    residual_variances: np.ndarray


def _draw_inverse_gamma(rng: np.random.Generator, shape: float, rate, size=None) -> np.ndarray:
    # InvGamma(a, b) with density prop. to x^(-a-1) exp(-b/x): 1/Gamma(a, rate=b).
    return np.asarray(rate) / rng.gamma(shape, 1.0, size=size)


def _finish_dataset(
    rng: np.random.Generator, cfg: GeneratorConfig, loadings: np.ndarray
) -> SyntheticDataset:
    # Draw order after the loadings is fixed: residual variances, factors, noise.
    variances = _draw_inverse_gamma(rng, 0.5, 0.5, size=cfg.p)
    factors = rng.standard_normal((cfg.n, cfg.k))
    noise = rng.standard_normal((cfg.n, cfg.p)) * np.sqrt(variances)
    data = factors @ loadings.T + noise
    return SyntheticDataset(
        X=data,
        true_loadings=loadings,
        true_residual_variances=variances,
        true_factors=factors,
    )


def generate_independent(cfg: GeneratorConfig) -> SyntheticDataset:
    """Every loading drawn iid standard normal."""
    if cfg.scenario is not Scenario.INDEPENDENT:
        raise ValueError("config scenario must be INDEPENDENT")
    rng = np.random.default_rng(cfg.seed)
    loadings = rng.standard_normal((cfg.p, cfg.k))
    return _finish_dataset(rng, cfg, loadings)


def block_sizes(p: int, k: int) -> list[int]:
    """Contiguous near-equal block sizes: ceil(p/k) for the first p mod k blocks."""
    base, remainder = divmod(p, k)
    return [base + 1 if b < remainder else base for b in range(k)]


def generate_sparse(cfg: GeneratorConfig) -> SyntheticDataset:
    """Variables split into k contiguous blocks, each loading mainly on one factor.

    Within-block loadings on the block's factor are standard normal; every
    other loading is N(0, off_block_sd^2).
    """
    if cfg.scenario is not Scenario.SPARSE:
        raise ValueError("config scenario must be SPARSE")
    rng = np.random.default_rng(cfg.seed)
    loadings = cfg.off_block_sd * rng.standard_normal((cfg.p, cfg.k))
    start = 0
    for factor, size in enumerate(block_sizes(cfg.p, cfg.k)):
        loadings[start : start + size, factor] = rng.standard_normal(size)
        start += size
    return _finish_dataset(rng, cfg, loadings)


def generate_dataset(cfg: GeneratorConfig) -> SyntheticDataset:
    if cfg.scenario is Scenario.SPARSE:
        return generate_sparse(cfg)
    return generate_independent(cfg)


def center_columns(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Subtract column means; returns the centered matrix and the means."""
    means = data.mean(axis=0)
    return data - means, means


def gibbs_sample(data, cfg: SamplerConfig, k: int) -> Chain:
    """Blocked conjugate Gibbs sampler returning the post-burn-in loadings chain.

    Per iteration: factors given loadings and variances, loadings row by row
    given factors and variances, then residual variances.  Columns of ``data``
    are centered internally.  The chain carries the residual-variance draws.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"data must be 2-dimensional, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite entries")
    n, p = data.shape
    if not validate_identifiability(p, k):
        raise ValueError(f"k={k} with p={p} violates the identifiability rule k <= (p-1)/2")

    centered, means = center_columns(data)
    logger.debug("centered %d columns; mean magnitudes up to %.3g", p, np.max(np.abs(means)))

    rng = np.random.default_rng(cfg.seed)
    state = GibbsState(
        loadings=rng.standard_normal((p, k)),
        factors=np.zeros((n, k)),
        residual_variances=np.ones(p),
    )
    eye_k = np.eye(k)
    prior_precision = eye_k / cfg.prior_loading_variance
    shape_post = cfg.prior_residual_shape + 0.5 * n

    kept = cfg.iterations - cfg.burn_in
    loadings_draws = np.empty((kept, p, k))
    variance_draws = np.empty((kept, p))

    for iteration in range(cfg.iterations):
        # (a) factors | loadings, variances
        weighted = state.loadings / state.residual_variances[:, None]
        precision = eye_k + state.loadings.T @ weighted
        try:
            chol = cholesky(precision, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"factor-update precision factorization failed at iteration {iteration}"
            ) from exc
        mean = cho_solve((chol, True), (centered @ weighted).T).T
        z = rng.standard_normal((n, k))
        state.factors = mean + solve_triangular(chol.T, z.T, lower=False).T

        # (b) loadings rows | factors, variances
        gram = state.factors.T @ state.factors
        projections = state.factors.T @ centered
        for j in range(p):
            row_precision = prior_precision + gram / state.residual_variances[j]
            try:
                row_chol = cholesky(row_precision, lower=True)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(
                    f"loading-row precision factorization failed at iteration {iteration}, row {j}"
                ) from exc
            row_mean = cho_solve((row_chol, True), projections[:, j] / state.residual_variances[j])
            state.loadings[j] = row_mean + solve_triangular(
                row_chol.T, rng.standard_normal(k), lower=False
            )

        # (c) residual variances | loadings, factors
        residuals = centered - state.factors @ state.loadings.T
        rates = cfg.prior_residual_rate + 0.5 * np.sum(residuals * residuals, axis=0)
        state.residual_variances = _draw_inverse_gamma(rng, shape_post, rates, size=p)

        if iteration >= cfg.burn_in:
            loadings_draws[iteration - cfg.burn_in] = state.loadings
            variance_draws[iteration - cfg.burn_in] = state.residual_variances

    return Chain(loadings_draws, variance_draws)
