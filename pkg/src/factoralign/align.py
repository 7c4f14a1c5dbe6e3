"""Signed-permutation matching of loadings columns against a pivot.

``greedy_match`` walks the sample's columns (largest norm first by default),
assigns each to its nearest remaining signed pivot column, and drops the
matched column and its negative from the candidate pool.  The two exact
matchers exist as quality baselines and test oracles: an assignment-solver
optimum and a small-k exhaustive search.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    Chain,
    SampleError,
    SignedPermutation,
    apply_signed_permutation,
    frobenius_norm,
    validate_loadings,
)
from .pivot import PivotSelection
from ._parallel import parallel_map

__all__ = [
    "AlignmentReport",
    "MatchConfig",
    "MatchOrder",
    "align_chain",
    "brute_force_match",
    "exact_match_assignment",
    "greedy_match",
    "match_loss",
]

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_K = 8

# A matched distance above this fraction of the largest pivot-column norm
# marks an unstable match (typically near-zero columns of an over-fitted model).
UNSTABLE_DISTANCE_FRACTION = 0.5


class MatchOrder(enum.Enum):
    BY_DESCENDING_NORM = "norm"
    NATURAL_COLUMN_ORDER = "natural"


@dataclass(frozen=True)
class MatchConfig:
    """Column processing order for the greedy matcher; the distance is always L2."""

    order: MatchOrder = MatchOrder.BY_DESCENDING_NORM


@dataclass(frozen=True)
class AlignmentReport:
    """Per-sample matching results for an aligned chain.

    ``comparisons_per_sample`` is the number of candidate distances the
    greedy matcher actually evaluated per sample (k(k+1) under the
    drop-after-match rule) plus the k ordering norms when sorting by norm.
    """

    permutations: list[SignedPermutation]
    losses: np.ndarray
    total_loss: float
    pivot: PivotSelection
    comparisons_per_sample: int


def _check_same_shape(a: np.ndarray, p: np.ndarray) -> None:
    if a.shape != p.shape:
        raise ValueError(f"shape mismatch: sample {a.shape} vs pivot {p.shape}")


def match_loss(a, sp: SignedPermutation, pivot) -> float:
    """Frobenius distance between the signed-permuted sample and the pivot."""
    a_arr = validate_loadings(a, "sample")
    p_arr = validate_loadings(pivot, "pivot")
    _check_same_shape(a_arr, p_arr)
    return frobenius_norm(apply_signed_permutation(a_arr, sp) - p_arr)


def _greedy_match_stats(
    a: np.ndarray, pivot: np.ndarray, cfg: MatchConfig
) -> tuple[SignedPermutation, int, int, int]:
    """Greedy matcher returning (match, distance evals, norm evals, unstable count).

    Inputs are assumed validated (chain samples already are); ordering uses
    squared norms, which sort identically to norms.
    """
    k = a.shape[1]
    if cfg.order is MatchOrder.BY_DESCENDING_NORM:
        sq_norms = np.einsum("ij,ij->j", a, a).tolist()
        # Descending norm, ties to the lower source index.
        source_order = sorted(range(k), key=lambda j: (-sq_norms[j], j))
        n_norm_evals = k
    else:
        source_order = range(k)
        n_norm_evals = 0

    sample_cols = np.ascontiguousarray(a.T)
    pivot_cols = np.ascontiguousarray(pivot.T)
    unstable_d2 = UNSTABLE_DISTANCE_FRACTION**2 * float(
        np.max(np.einsum("ij,ij->j", pivot, pivot))
    )

    available = list(range(k))
    perm = np.empty(k, dtype=np.intp)
    signs = np.empty(k, dtype=np.int64)
    n_distance_evals = 0
    n_unstable = 0
    for j in source_order:
        col = sample_cols[j]
        best_d2 = np.inf
        best_h = -1
        best_sign = 1
        # Candidates scanned in ascending pivot index, + before -, so ties
        # resolve to the lower index and the positive sign.
        for h in available:
            diff = col - pivot_cols[h]
            d2_plus = float(diff @ diff)
            summ = col + pivot_cols[h]
            d2_minus = float(summ @ summ)
            n_distance_evals += 2
            if d2_plus < best_d2:
                best_d2, best_h, best_sign = d2_plus, h, 1
            if d2_minus < best_d2:
                best_d2, best_h, best_sign = d2_minus, h, -1
        perm[best_h] = j
        signs[best_h] = best_sign
        available.remove(best_h)
        if best_d2 > unstable_d2:
            n_unstable += 1

    return SignedPermutation._trusted(perm, signs), n_distance_evals, n_norm_evals, n_unstable


def greedy_match(a, pivot, config: MatchConfig | None = None) -> SignedPermutation:
    """Match ``a``'s columns to the pivot's columns greedily, without duplication.

    Processing ``a``'s columns in the configured order, each column is
    assigned the L2-nearest of the not-yet-matched pivot columns and their
    negatives; the matched column and its negative are then dropped from the
    candidate pool.
    """
    a_arr = validate_loadings(a, "sample")
    p_arr = validate_loadings(pivot, "pivot")
    _check_same_shape(a_arr, p_arr)
    sp, _, _, n_unstable = _greedy_match_stats(a_arr, p_arr, config or MatchConfig())
    if n_unstable:
        logger.warning(
            "%d of %d columns matched at a distance above %.0f%% of the largest "
            "pivot column norm; those matches may be unstable",
            n_unstable,
            a_arr.shape[1],
            100 * UNSTABLE_DISTANCE_FRACTION,
        )
    return sp


def _signed_distance_matrices(a: np.ndarray, pivot: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diff = a[:, :, None] - pivot[:, None, :]
    summ = a[:, :, None] + pivot[:, None, :]
    return np.sum(diff * diff, axis=0), np.sum(summ * summ, axis=0)


def exact_match_assignment(a, pivot) -> SignedPermutation:
    """Globally optimal signed match via a linear assignment solve.

    The squared Frobenius loss decomposes over matched column pairs, so with
    per-pair cost min(||a_j - p_h||^2, ||a_j + p_h||^2) the optimum over all
    2^k * k! signed permutations reduces to a k x k assignment problem; the
    sign of each matched pair is the cheaper of the two.
    """
    a_arr = validate_loadings(a, "sample")
    p_arr = validate_loadings(pivot, "pivot")
    _check_same_shape(a_arr, p_arr)
    d2_plus, d2_minus = _signed_distance_matrices(a_arr, p_arr)
    cost = np.minimum(d2_plus, d2_minus)
    pair_sign = np.where(d2_plus <= d2_minus, 1, -1)
    rows, cols = linear_sum_assignment(cost)
    k = a_arr.shape[1]
    perm = np.empty(k, dtype=np.intp)
    signs = np.empty(k, dtype=np.int64)
    perm[cols] = rows
    signs[cols] = pair_sign[rows, cols]
    return SignedPermutation(perm, signs)


def brute_force_match(a, pivot) -> SignedPermutation:
    """Exhaustive minimizer over all k! * 2^k signed permutations (k <= 8).

    For each permutation the optimal sign decomposes per column, so the scan
    enumerates permutations lexicographically with the per-column sign chosen
    as + at exact ties; the first minimizer encountered wins, which realizes
    the lexicographic (perm, signs) tie-break with +1 ordered before -1.
    """
    a_arr = validate_loadings(a, "sample")
    p_arr = validate_loadings(pivot, "pivot")
    _check_same_shape(a_arr, p_arr)
    k = a_arr.shape[1]
    if k > BRUTE_FORCE_MAX_K:
        raise ValueError(f"brute-force matching is capped at k <= {BRUTE_FORCE_MAX_K}, got k={k}")

    d2_plus = np.empty((k, k))
    d2_minus = np.empty((k, k))
    for j in range(k):
        for h in range(k):
            diff = a_arr[:, j] - p_arr[:, h]
            d2_plus[j, h] = float(diff @ diff)
            summ = a_arr[:, j] + p_arr[:, h]
            d2_minus[j, h] = float(summ @ summ)

    best_total = np.inf
    best_perm: tuple[int, ...] | None = None
    best_signs: tuple[int, ...] | None = None
    for perm in itertools.permutations(range(k)):
        total = 0.0
        signs = []
        for h in range(k):
            dp = d2_plus[perm[h], h]
            dm = d2_minus[perm[h], h]
            if dp <= dm:
                total += dp
                signs.append(1)
            else:
                total += dm
                signs.append(-1)
        if total < best_total:
            best_total = total
            best_perm = perm
            best_signs = tuple(signs)
    assert best_perm is not None
    return SignedPermutation(np.array(best_perm, dtype=np.intp), np.array(best_signs, dtype=np.int64))


def align_chain(
    chain: Chain,
    pivot_selection: PivotSelection,
    config: MatchConfig | None = None,
    threads: int = 1,
) -> tuple[Chain, AlignmentReport]:
    """Greedily align every sample of an orthogonalized chain to the pivot.

    Returns the aligned chain (residual variances pass through unchanged;
    they are per-variable, not per-factor) and an :class:`AlignmentReport`
    with the applied transforms and per-sample Frobenius losses.
    """
    cfg = config or MatchConfig()
    pivot = validate_loadings(pivot_selection.pivot, "pivot")
    if pivot.shape != chain.samples.shape[1:]:
        raise ValueError(
            f"pivot shape {pivot.shape} does not match chain samples {chain.samples.shape[1:]}"
        )
    if not 0 <= pivot_selection.index < chain.n_samples or not np.array_equal(
        chain.samples[pivot_selection.index], pivot
    ):
        raise ValueError("pivot selection was not drawn from this chain")

    def match_one(indexed: tuple[int, np.ndarray]):
        t, sample = indexed
        try:
            sp, n_dist, n_norm, n_unstable = _greedy_match_stats(sample, pivot, cfg)
        except ValueError as exc:
            raise SampleError(t, str(exc)) from exc
        aligned = apply_signed_permutation(sample, sp)
        return sp, aligned, frobenius_norm(aligned - pivot), n_dist + n_norm, n_unstable

    results = parallel_map(match_one, list(enumerate(chain.samples)), threads)
    permutations = [r[0] for r in results]
    aligned_samples = np.stack([r[1] for r in results])
    losses = np.array([r[2] for r in results])
    total_unstable = sum(r[4] for r in results)
    if total_unstable:
        logger.warning(
            "%d column matches across %d samples exceeded the unstable-distance "
            "threshold; over-fitted near-zero columns are the usual cause",
            total_unstable,
            chain.n_samples,
        )
    report = AlignmentReport(
        permutations=permutations,
        losses=losses,
        total_loss=float(np.sum(losses)),
        pivot=pivot_selection,
        comparisons_per_sample=results[0][3],
    )
    return Chain(aligned_samples, chain.residual_variances), report
