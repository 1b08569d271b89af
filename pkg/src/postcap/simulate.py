"""Non-feedback simulation of the optimal-feedback output process.

Given the Markov output law induced by the maximizer of the feedback program
(kernel P*_{Y|Y'} with stationary P*_{Y'}), this module constructs, per
initial state y0, the input distribution p over X^n whose induced output law
through the channel equals the Markov law exactly.  The construction runs the
entrywise recursion

    p_n[y0](x1, rest) = sum_{y1} G_{y0}(x1, y1) q*_{y0}(y1) p_{n-1}[y1](rest),

with G_{y'} the inverse state matrix, so the exponentially large inverse of
the n-fold channel matrix is never materialized (memory |Y| * |X|^(n-1) per
level).  Sequence indices use base-|X| (resp. base-|Y|) with the first symbol
most significant.

Validity of a plan is strict positivity of all entries; the normalization
sum(p) = 1 holds identically, sign pattern aside.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import json

import numpy as np

from .channels import MemorylessChannel, PostChannel, SingularKernelError
from .memoryless import CapacityProfile

DEFAULT_CAP = 10_000_000
AMBIGUOUS_FLOOR = -1e-13  # entries in (floor, 0] are roundoff-scale, not genuine failures


class SizeCapError(RuntimeError):
    """An n-fold object would exceed the configured entry budget."""


def _check_cap(entries: int, cap: int, what: str) -> None:
    if entries > cap:
        raise SizeCapError(f"{what} needs {entries} entries > cap {cap}")


@dataclass(frozen=True)
class MarkovOutputLaw:
    """Target output process: kernel column y' = P_{Y|Y'}(.|y'), initial = stationary law."""

    kernel: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        init = np.array(self.initial, dtype=float)
        if np.any(np.abs(k.sum(axis=0) - 1.0) > 1e-9) or np.any(k < -1e-12):
            raise ValueError("kernel columns must be stochastic")
        if abs(init.sum() - 1.0) > 1e-9 or np.any(init < -1e-12):
            raise ValueError("initial must be a probability vector")
        if np.max(np.abs(k @ init - init)) > 1e-9:
            raise ValueError("initial is not stationary for the kernel")
        k.flags.writeable = False
        init.flags.writeable = False
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "initial", init)

    @classmethod
    def from_feedback(cls, result) -> "MarkovOutputLaw":
        return cls(result.output_kernel, result.stationary)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]


def nfold_matrix(ch: PostChannel, y0: int, n: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """n-fold channel matrix: entry (y^n, x^n) = prod_t Q(y_t|x_t,y_{t-1}); columns sum to 1."""
    return nfold_stack(ch, n, cap)[y0]


def nfold_stack(ch: PostChannel, n: int, cap: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_cap(ch.y_size * ch.y_size**n * ch.x_size**n, cap, f"n-fold channel matrices at n={n}")
    stack = ch.kernels.copy()  # level 1: stack[y0] = transition matrix of state y0
    for level in range(2, n + 1):
        rows, cols = ch.y_size ** (level - 1), ch.x_size ** (level - 1)
        new = np.einsum("syx,yab->syaxb", ch.kernels, stack).reshape(
            ch.y_size, ch.y_size * rows, ch.x_size * cols
        )
        stack = new
    return stack


def markov_output_vector(law: MarkovOutputLaw, y0: int, n: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Markov path probabilities from y0: entry y^n = prod_t kernel(y_t|y_{t-1})."""
    return markov_stack(law, n, cap)[y0]


def markov_stack(law: MarkovOutputLaw, n: int, cap: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    m = law.n_states
    _check_cap(m * m**n, cap, f"Markov path vectors at n={n}")
    stack = law.kernel.T.copy()  # stack[y0] = kernel column y0
    for _ in range(2, n + 1):
        stack = np.einsum("sy,ya->sya", law.kernel.T, stack).reshape(m, -1)
    return stack


def _state_inverses(ch: PostChannel) -> np.ndarray:
    if ch.x_size != ch.y_size:
        raise ValueError(f"plan construction needs |X| = |Y|, got {ch.x_size} != {ch.y_size}")
    inv = np.empty_like(ch.kernels)
    for yp in range(ch.y_size):
        sig = np.linalg.svd(ch.kernels[yp], compute_uv=False)
        if sig[-1] <= 1e-12:
            raise SingularKernelError(
                f"transition matrix for state y'={yp} is singular (sigma_min={sig[-1]:.3e}); no inverse construction"
            )
        inv[yp] = np.linalg.inv(ch.kernels[yp])
    return inv


@dataclass(frozen=True)
class SimPlan:
    """Per-initial-state input distributions over X^n realizing the Markov output law."""

    n: int
    x_size: int
    vectors: np.ndarray       # shape (|Y|, |X|^n), row y0 = p for initial state y0
    min_entry: float
    norm_error: float
    valid: bool
    negative_at: tuple | None  # (y0, x^n tuple) of the worst negative entry, if any
    ambiguous: tuple           # (y0, x^n tuple) entries in the roundoff band

    def vector(self, y0: int) -> np.ndarray:
        return self.vectors[y0]

    def index_to_sequence(self, idx: int) -> tuple:
        digits = []
        for _ in range(self.n):
            digits.append(idx % self.x_size)
            idx //= self.x_size
        return tuple(reversed(digits))


def build_plan(ch: PostChannel, law: MarkovOutputLaw, n: int, cap: int = DEFAULT_CAP) -> SimPlan:
    """Run the inverse recursion for all initial states up to horizon n.

    The plan always satisfies sum(p) = 1 per state (reported as norm_error);
    it is valid only when strictly positive, which the theory guarantees for
    small enough perturbations.  Invalid plans are returned with the worst
    offending entry located for diagnostics.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_cap(ch.y_size * ch.x_size**n, cap, f"plan vectors at n={n}")
    G = _state_inverses(ch)
    weighted = G * law.kernel.T[:, None, :]  # [y0, x1, y1] = G_{y0}(x1,y1) q*_{y0}(y1)
    plans = np.einsum("sxy,ys->sx", G, law.kernel)  # level 1: p[y0] = G_{y0} q*_{y0}
    for _ in range(2, n + 1):
        plans = np.einsum("sxy,ya->sxa", weighted, plans).reshape(ch.y_size, -1)
    norm_error = float(np.max(np.abs(plans.sum(axis=1) - 1.0)))
    min_entry = float(plans.min())
    plan = SimPlan(n, ch.x_size, plans, min_entry, norm_error, bool(min_entry > 0.0), None, ())
    ambiguous = tuple(
        (int(y), plan.index_to_sequence(int(x)))
        for y, x in np.argwhere((plans > AMBIGUOUS_FLOOR) & (plans <= 0.0))
    )
    negative_at = None
    if min_entry <= AMBIGUOUS_FLOOR:
        y0_min = int(np.argmin(plans.min(axis=1)))
        negative_at = (y0_min, plan.index_to_sequence(int(np.argmin(plans[y0_min]))))
    return SimPlan(n, ch.x_size, plans, min_entry, norm_error, bool(min_entry > 0.0),
                   negative_at, ambiguous)


def verify_plan(ch: PostChannel, plan: SimPlan, law: MarkovOutputLaw, cap: int = DEFAULT_CAP) -> dict:
    """Forward check: l1 distance between the plan's induced output law and the Markov law."""
    if plan.x_size != ch.x_size or plan.vectors.shape[0] != ch.y_size:
        raise ValueError("plan does not match channel dimensions")
    Q = nfold_stack(ch, plan.n, cap)
    q = markov_stack(law, plan.n, cap)
    per_y0 = [float(np.abs(Q[y0] @ plan.vectors[y0] - q[y0]).sum()) for y0 in range(ch.y_size)]
    return {"per_y0": per_y0, "max_residual": max(per_y0)}


def plan_mutual_information(ch: PostChannel, plan: SimPlan, law: MarkovOutputLaw,
                            cap: int = DEFAULT_CAP) -> float:
    """(1/n) I(X^n; Y^n | Y0) under the plan, by exact enumeration, in nats per symbol."""
    if not plan.valid:
        raise ValueError("plan is not a valid probability assignment; rate undefined")
    Q = nfold_stack(ch, plan.n, cap)
    total = 0.0
    for y0 in range(ch.y_size):
        w = law.initial[y0]
        if w <= 0:
            continue
        p = plan.vectors[y0]
        joint = Q[y0] * p[None, :]           # (y^n, x^n)
        h_out = -_xlogx_sum(joint.sum(axis=1))
        h_cond = -float(np.sum(joint * _safe_log(Q[y0])))
        total += w * (h_out - h_cond)
    return total / plan.n


def _safe_log(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = v > 0
    out[mask] = np.log(v[mask])
    return out


def _xlogx_sum(v: np.ndarray) -> float:
    mask = v > 0
    return float(np.sum(v[mask] * np.log(v[mask])))


def kappa_bound(profile: CapacityProfile, ref: MemorylessChannel) -> float:
    """Deviation budget min_x p(x) / sum_y |W^{-1}(x,y)| q(y) for the positivity induction."""
    if ref.x_size != ref.y_size:
        raise ValueError("kappa bound needs a square reference channel")
    sig = np.linalg.svd(ref.W, compute_uv=False)
    if sig[-1] <= 1e-12:
        raise SingularKernelError(f"reference channel is singular (sigma_min={sig[-1]:.3e})")
    Winv = np.linalg.inv(ref.W)
    denom = np.abs(Winv) @ profile.p_y
    return float(np.min(profile.p_x / denom))


@dataclass(frozen=True)
class KappaReport:
    kappa_max: float
    observed_max_deviation: float
    horizon_checked: int
    within_bound: bool


def deviation_check(plans, kappa: float) -> KappaReport:
    """Largest relative spread of plan entries across initial states, against a kappa budget."""
    worst = 0.0
    horizon = 0
    for plan in plans:
        if not plan.valid:
            raise ValueError(f"plan at n={plan.n} is invalid; deviation undefined")
        horizon = max(horizon, plan.n)
        v = plan.vectors
        spread = (v.max(axis=0) - v.min(axis=0)) / v.min(axis=0)
        worst = max(worst, float(spread.max()))
    return KappaReport(kappa, worst, horizon, bool(worst <= kappa))


def save_plan(path, plan: SimPlan) -> None:
    """Plan export: structured text with the index convention stated in-file."""
    doc = {
        "format": "simulation-plan",
        "index_convention": f"x^n indexed in base {plan.x_size}, first symbol most significant",
        "n": plan.n,
        "input_size": plan.x_size,
        "min_entry": plan.min_entry,
        "norm_error": plan.norm_error,
        "valid": plan.valid,
        "vectors": [[float(v) for v in row] for row in plan.vectors],
    }
    Path(path).write_text(json.dumps(doc, indent=1))
