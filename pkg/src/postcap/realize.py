"""Realizability diagnostics: can the optimal-feedback output law be produced open-loop?

Per initial state the target path law q over Y^n must lie in the convex hull
of the columns of the n-fold channel matrix to be realizable by some
non-feedback input distribution.  Two complementary probes:

* least-squares projection onto the column span: a positive l1 residual
  already rules out realizability (span membership is necessary); the summed
  residual over initial states is the scalar diagnostic D;
* exact hull membership as a phase-1 LP {p >= 0, sum p = 1, Q p = q} with a
  feasible witness or a separating dual certificate.

``sweep_example`` drives both over the worked perturbation families and emits
CSV rows (eps, c_f_nats, D, feasible_all, rank, min_plan_entry).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channels import PostChannel, build_example
from .feedback import FeedbackResult, solve_fcap
from .linprog import simplex_solve
from .simulate import (
    DEFAULT_CAP,
    MarkovOutputLaw,
    SingularKernelError,
    SizeCapError,
    markov_stack,
    nfold_stack,
    build_plan,
)

RANK_RCOND = 1e-10

CSV_HEADER = "eps,c_f_nats,D,feasible_all,rank,min_plan_entry"


@dataclass(frozen=True)
class LstsqProjection:
    coefficients: np.ndarray
    residual_l1: float
    rank: int


def lstsq_projection(ch: PostChannel, law: MarkovOutputLaw, y0: int, n: int,
                     cap: int = DEFAULT_CAP) -> LstsqProjection:
    """Least-squares coefficients of q in the columns of the n-fold matrix, l1 residual, rank."""
    Q = nfold_stack(ch, n, cap)[y0]
    q = markov_stack(law, n, cap)[y0]
    U, sig, Vt = np.linalg.svd(Q, full_matrices=False)
    rank = int(np.sum(sig > RANK_RCOND * sig[0]))
    inv = np.zeros_like(sig)
    inv[:rank] = 1.0 / sig[:rank]
    coeff = Vt.T @ (inv * (U.T @ q))
    resid = float(np.abs(Q @ coeff - q).sum())
    return LstsqProjection(coeff, resid, rank)


def d_metric(ch: PostChannel, law: MarkovOutputLaw, n: int = 2, cap: int = DEFAULT_CAP) -> float:
    """Summed l1 projection residual over initial states; 0 iff every q lies in its column span."""
    return sum(lstsq_projection(ch, law, y0, n, cap).residual_l1 for y0 in range(ch.y_size))


@dataclass(frozen=True)
class LPVerdict:
    status: str                    # "feasible" | "infeasible" | "indeterminate"
    phase1_value: float
    witness: np.ndarray | None     # probability vector over X^n when feasible
    certificate: np.ndarray | None  # separating vector c over Y^n when infeasible


def lp_feasibility(ch: PostChannel, law: MarkovOutputLaw, y0: int, n: int,
                   tol: float = 1e-10, cap: int = DEFAULT_CAP) -> LPVerdict:
    """Hull-membership test with certificates.

    Feasible when the phase-1 optimum is <= tol/10 (witness returned),
    infeasible when >= 10*tol (separating dual c with c'q > max_col c'col
    returned).  Values inside the band are retried once with a tighter pivot
    tolerance before being declared indeterminate.
    """
    Q = nfold_stack(ch, n, cap)[y0]
    q = markov_stack(law, n, cap)[y0]
    A = np.vstack([Q, np.ones((1, Q.shape[1]))])
    b = np.concatenate([q, [1.0]])

    res = simplex_solve(A, b, tol=1e-11)
    if tol / 10 < res.phase1_value < tol * 10:
        res = simplex_solve(A, b, tol=1e-13)  # near the decision band: refine before giving up
    if res.phase1_value <= tol / 10:
        return LPVerdict("feasible", res.phase1_value, res.x, None)
    if res.phase1_value >= tol * 10:
        return LPVerdict("infeasible", res.phase1_value, None, res.dual[:-1])
    return LPVerdict("indeterminate", res.phase1_value, None, None)


@dataclass(frozen=True)
class StateVerdict:
    y0: int
    feasible: str
    ls_residual_l1: float
    rank: int


@dataclass(frozen=True)
class RealizabilityVerdict:
    n: int
    per_y0: tuple
    D: float
    all_feasible: bool
    marginal_condition_holds: bool | None  # None when skipped (full column rank or infeasible)
    marginal_note: str


def _witness_input_state_marginals(ch: PostChannel, law: MarkovOutputLaw, witnesses, n: int):
    """Per-step joint (X_t, Y_{t-1}) marginals of the witness joint distribution."""
    out = [np.zeros((ch.x_size, ch.y_size)) for _ in range(n)]
    for y0 in range(ch.y_size):
        w0 = law.initial[y0]
        if w0 <= 0:
            continue
        p = witnesses[y0]
        for idx in range(ch.x_size**n):
            weight = w0 * p[idx]
            if weight == 0.0:
                continue
            digits = []
            k = idx
            for _ in range(n):
                digits.append(k % ch.x_size)
                k //= ch.x_size
            digits.reverse()
            state = np.zeros(ch.y_size)
            state[y0] = 1.0
            for t, x in enumerate(digits):
                out[t][x] += weight * state
                state = ch.kernels[:, :, x].T @ state  # one step of the state chain
    return out


def realizability_check(ch: PostChannel, law: MarkovOutputLaw, fb: FeedbackResult, n: int,
                   tol: float = 1e-10, cap: int = DEFAULT_CAP) -> RealizabilityVerdict:
    """Finite-horizon realizability verdict for the optimal-feedback output law.

    Runs the hull LP per initial state.  When every state is feasible and some
    state matrix lacks full column rank, the per-step input-state marginals of
    the reconstructed witness are additionally compared against the program
    maximizer (a sufficient check; with full column rank it is implied by the
    output-law match and skipped).
    """
    if not fb.converged:
        raise ValueError("feedback solve did not converge; diagnose on a certified maximizer")
    per = []
    witnesses = {}
    for y0 in range(ch.y_size):
        proj = lstsq_projection(ch, law, y0, n, cap)
        lp = lp_feasibility(ch, law, y0, n, tol, cap)
        if lp.witness is not None:
            witnesses[y0] = lp.witness
        per.append(StateVerdict(y0, lp.status, proj.residual_l1, proj.rank))
    all_feasible = all(v.feasible == "feasible" for v in per)
    D = float(sum(v.ls_residual_l1 for v in per))

    full_col_rank = all(
        np.linalg.matrix_rank(ch.kernels[yp], tol=RANK_RCOND) == ch.x_size
        for yp in range(ch.y_size)
    )
    if not all_feasible:
        holds, note = None, "skipped: output-law condition already fails"
    elif full_col_rank:
        holds, note = True, "implied by full column rank"
    else:
        marg = _witness_input_state_marginals(ch, law, witnesses, n)
        dev = max(float(np.max(np.abs(m - fb.maximizer.P))) for m in marg)
        holds = bool(dev <= 1e-8)
        note = f"witness marginal deviation {dev:.3e}"
    return RealizabilityVerdict(n, tuple(per), D, all_feasible, holds, note)


@dataclass(frozen=True)
class SweepRow:
    eps: float
    c_f_nats: float
    D: float
    feasible_all: bool
    rank: int
    min_plan_entry: float


def sweep_point(example_id: int, eps: float, n: int, solver_tol: float = 1e-11,
                lp_tol: float = 1e-10) -> SweepRow:
    """One sweep row: build the channel, solve the program, run both diagnostics."""
    ch, _ = build_example(example_id, eps)
    fb = solve_fcap(ch, tol=solver_tol)
    law = MarkovOutputLaw.from_feedback(fb)
    D = 0.0
    ranks = []
    feasible_all = True
    for y0 in range(ch.y_size):
        proj = lstsq_projection(ch, law, y0, n)
        ranks.append(proj.rank)
        D += proj.residual_l1
        verdict = lp_feasibility(ch, law, y0, n, lp_tol)
        feasible_all = feasible_all and verdict.status == "feasible"
    try:
        plan = build_plan(ch, law, n)
        min_plan_entry = plan.min_entry
    except (SingularKernelError, ValueError, SizeCapError):
        min_plan_entry = float("nan")
    return SweepRow(eps, fb.c_f_nats, D, feasible_all, max(ranks), min_plan_entry)


def sweep_example(example_id: int, eps_grid, n: int = 2, solver_tol: float = 1e-11,
                  lp_tol: float = 1e-10, jobs: int = 1) -> list:
    """Sweep rows for the worked example over an eps grid, in grid order."""
    eps_list = [float(e) for e in eps_grid]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(sweep_point, example_id, e, n, solver_tol, lp_tol)
                       for e in eps_list]
            return [f.result() for f in futures]
    return [sweep_point(example_id, e, n, solver_tol, lp_tol) for e in eps_list]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def rows_to_csv(rows) -> str:
    """Deterministic CSV text: fixed header, 17-significant-digit floats, row order preserved."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in rows:
        buf.write(
            f"{_fmt(r.eps)},{_fmt(r.c_f_nats)},{_fmt(r.D)},"
            f"{'true' if r.feasible_all else 'false'},{r.rank},{_fmt(r.min_plan_entry)}\n"
        )
    return buf.getvalue()


def write_sweep_csv(rows, path) -> None:
    Path(path).write_text(rows_to_csv(rows))
