"""Capacity and structural analysis of the memoryless reference channel.

Computes C(W) in nats with its capacity-achieving input/output distributions
via alternating maximization, certifies the result through the KKT divergence
conditions, decides the surjectivity property (|Y|-sized support with strict
complementary slackness and a full-rank column submatrix), and evaluates the
delta thresholds under which a nearby POST channel is guaranteed full-rank,
indecomposable, and connected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSpecError, MemorylessChannel, PostChannel, proximity

#: numerical-rank cutoff, relative to the largest singular value
RANK_RCOND = 1e-10


def _xlogx(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = v > 0
    out[mask] = v[mask] * np.log(v[mask])
    return out


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """D(p||q) in nats with the 0 log 0 = 0 convention; +inf if p puts mass where q has none."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return float("inf")
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def input_divergences(W: np.ndarray, p_y: np.ndarray) -> np.ndarray:
    """Per-input D(W(.|x) || p_y) in nats, vectorized over columns."""
    with np.errstate(divide="ignore", invalid="ignore"):
        logq = np.where(p_y > 0, np.log(np.maximum(p_y, 1e-300)), -np.inf)
    terms = _xlogx(W) - W * logq[:, None]
    terms[W == 0] = 0.0
    return terms.sum(axis=0)


@dataclass(frozen=True)
class CapacityProfile:
    """Capacity in nats plus the optimizing distributions and KKT divergences."""

    capacity_nats: float
    p_x: np.ndarray
    p_y: np.ndarray
    divergences: np.ndarray
    gap: float
    iterations: int
    converged: bool


def capacity_iteration(ref: MemorylessChannel, tol: float = 1e-10, max_iter: int = 100_000) -> CapacityProfile:
    """Alternating-maximization capacity computation with an a-posteriori certificate.

    Runs the standard multiplicative update on the input distribution and stops
    once max_x D(W(.|x)||P_Y) - sum_x P_X(x) D(W(.|x)||P_Y) <= tol, which bounds
    the distance to capacity from both sides.  On non-convergence the best
    iterate is returned with ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    W = ref.W
    p = np.full(ref.x_size, 1.0 / ref.x_size)
    gap = np.inf
    div = np.zeros(ref.x_size)
    it = 0
    for it in range(1, int(max_iter) + 1):
        q = W @ p
        div = input_divergences(W, q)
        inner = float(p @ div)
        gap = float(np.max(div) - inner)
        if gap <= tol:
            return CapacityProfile(inner, p, q, div, gap, it, True)
        p = p * np.exp(div - np.max(div))
        p = p / p.sum()
    q = W @ p
    div = input_divergences(W, q)
    inner = float(p @ div)
    gap = float(np.max(div) - inner)
    return CapacityProfile(inner, p, q, div, gap, it, False)


@dataclass(frozen=True)
class DeltaThresholds:
    """Perturbation radii guaranteeing the structural properties of nearby POST channels."""

    indec: float      # below this, the channel is indecomposable
    conn: float       # below this, the channel is connected
    fullrank: float   # below this, every state matrix stays full rank
    fullrank_S: float  # same guarantee for the S-column restriction


def delta_thresholds(ref: MemorylessChannel, S) -> DeltaThresholds:
    """The four delta bounds: min-max over columns/rows and scaled smallest singular values."""
    S = sorted(int(x) for x in S)
    if not S:
        raise ValueError("S must be non-empty")
    if any(x < 0 or x >= ref.x_size for x in S):
        raise ValueError(f"S={S} not a subset of the input alphabet")
    W = ref.W
    indec = float(np.min(W.max(axis=0)))
    conn = float(np.min(W.max(axis=1)))
    fullrank = float(np.linalg.svd(W, compute_uv=False)[-1] / ref.x_size)
    fullrank_S = float(np.linalg.svd(W[:, S], compute_uv=False)[-1] / len(S))
    return DeltaThresholds(indec, conn, fullrank, fullrank_S)


@dataclass(frozen=True)
class SurjectivityReport:
    verdict: str  # "surjective" | "not_surjective" | "indeterminate"
    reason: str
    support: tuple
    slack_margin: float
    sigma_min_S: float
    thresholds: DeltaThresholds

    @property
    def is_surjective(self) -> bool:
        return self.verdict == "surjective"


def surjectivity_check(ref: MemorylessChannel, profile: CapacityProfile, tol: float = 1e-8) -> SurjectivityReport:
    """Decide surjectivity of W from a certified capacity profile.

    Surjective means: the capacity-achieving input is supported on a set S of
    exactly |Y| symbols, off-support inputs have strictly smaller divergence
    than capacity, and the S-column submatrix of W has full rank.  Margins
    inside (-tol, tol) yield the verdict "indeterminate" rather than a guess.
    """
    if profile.gap > tol / 10:
        raise ValueError(f"profile gap {profile.gap:.3e} exceeds tol/10; re-run capacity_iteration")
    W = ref.W
    sing = np.linalg.svd(W, compute_uv=False)
    support = tuple(int(x) for x in np.flatnonzero(profile.p_x > tol))
    thr_all = delta_thresholds(ref, range(ref.x_size))
    s_for_thr = support if support else range(ref.x_size)

    def report(verdict, reason, slack, sig):
        return SurjectivityReport(verdict, reason, support, slack, sig,
                                  delta_thresholds(ref, s_for_thr))

    if ref.x_size < ref.y_size:
        return report("not_surjective", f"|X|={ref.x_size} < |Y|={ref.y_size}", np.nan, float(sing[-1]))
    rank_W = int(np.sum(sing > RANK_RCOND * sing[0]))
    if rank_W < ref.y_size:
        return report("not_surjective", f"rank deficient: rank(W)={rank_W} < |Y|={ref.y_size}",
                      np.nan, float(sing[-1]))

    C = profile.capacity_nats
    comp = [x for x in range(ref.x_size) if x not in support]
    slack = float(min((C - profile.divergences[x] for x in comp), default=np.inf))
    # an excluded input whose slack is not clearly positive makes the support ambiguous
    if comp and slack <= tol:
        return report("indeterminate", f"slack margin {slack:.3e} within tolerance band", slack, np.nan)
    if len(support) != ref.y_size:
        return report("not_surjective", f"support size {len(support)} != |Y|={ref.y_size}", slack, np.nan)

    eq_resid = float(max(abs(profile.divergences[x] - C) for x in support))
    if eq_resid > tol:
        return report("indeterminate", f"on-support divergence deviates by {eq_resid:.3e}", slack, np.nan)
    sub_sing = np.linalg.svd(W[:, list(support)], compute_uv=False)
    sig = float(sub_sing[-1])
    if sig <= RANK_RCOND * sub_sing[0]:
        return report("not_surjective", f"submatrix W(S) rank deficient (sigma_min={sig:.3e})", slack, sig)
    if sig <= tol:
        return report("indeterminate", f"sigma_min(W(S))={sig:.3e} within tolerance band", slack, sig)
    return report("surjective", "strict complementary slackness and full-rank W(S)", slack, sig)


def scrambling_coefficient(M: np.ndarray) -> float:
    """1 minus the minimal pairwise column overlap; < 1 means the matrix is scrambling."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ChannelSpecError(f"expected a square matrix, got shape {M.shape}")
    sums = M.sum(axis=0)
    if np.any(M < -1e-12) or np.any(np.abs(sums - 1.0) > 1e-9):
        raise ChannelSpecError("matrix is not column-stochastic")
    overlap = np.minimum(M[:, :, None], M[:, None, :]).sum(axis=0)
    return float(1.0 - overlap.min())


@dataclass(frozen=True)
class IndecomposabilityReport:
    holds: bool
    delta: float
    bound: float
    lambdas: tuple
    via_proximity: bool
    via_scrambling: bool


def check_indecomposable_sufficient(ch: PostChannel, ref: MemorylessChannel) -> IndecomposabilityReport:
    """Two sufficient routes: delta below the min-max column bound, or all state matrices scrambling."""
    delta = proximity(ch, ref).delta
    bound = float(np.min(ref.W.max(axis=0)))
    lambdas = tuple(scrambling_coefficient(ch.state_matrix(x)) for x in range(ch.x_size))
    via_proximity = delta < bound
    via_scrambling = all(lam < 1.0 for lam in lambdas)
    return IndecomposabilityReport(
        holds=via_proximity or via_scrambling,
        delta=delta,
        bound=bound,
        lambdas=lambdas,
        via_proximity=via_proximity,
        via_scrambling=via_scrambling,
    )


def check_connected(ch: PostChannel) -> bool:
    """Exact connectivity: every state reachable from every state with positive probability.

    Builds the directed graph with an edge y' -> y whenever some input gives the
    transition positive probability, then checks strong connectivity of the
    transitive closure (Warshall on the boolean adjacency matrix).
    """
    adj = (ch.kernels.max(axis=2).T > 0.0)  # adj[y, y'] : reachable in one step
    reach = adj.copy()
    for k in range(ch.y_size):
        reach = reach | (reach[:, k:k + 1] & reach[k:k + 1, :])
    return bool(reach.all())
