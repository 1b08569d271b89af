"""Command-line front end.

Subcommands: ``validate``, ``analyze-w``, ``fcap``, ``simulate``,
``diagnose``, ``sweep``.  Information quantities print in nats (pass
``--bits`` to convert).  Exit codes: 0 ok, 2 input error, 3 a capacity-equality
condition fails (invalid plan, infeasible/indeterminate realizability),
4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .channels import (
    ChannelSpecError,
    MemorylessChannel,
    SingularKernelError,
    load_channel_spec,
    proximity,
)
from .feedback import solve_fcap, uniqueness_probe
from .memoryless import (
    capacity_iteration,
    check_connected,
    check_indecomposable_sufficient,
    surjectivity_check,
)
from .realize import realizability_check, sweep_example, write_sweep_csv
from .simulate import (
    MarkovOutputLaw,
    SizeCapError,
    build_plan,
    plan_mutual_information,
    save_plan,
    verify_plan,
)

OK, INPUT_ERROR, CONDITION_FAIL, NO_CONVERGENCE = 0, 2, 3, 4


def _digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _unit(args):
    return (1.0 / math.log(2.0), "bits") if args.bits else (1.0, "nats")


def _reference(ch, ref):
    """Reference W: the file's reference_w if present, else the kernel average."""
    if ref is not None:
        return ref
    return MemorylessChannel(ch.kernels.mean(axis=0))


def _emit(args, payload: dict, started: float) -> None:
    if args.report:
        report = {
            "command": args.command,
            "inputs_digest": payload.get("inputs_digest"),
            "payload": payload,
            "wall_time_s": time.time() - started,
            "library_version": __version__,
        }
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=1, default=_jsonable)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"cannot serialize {type(v)}")


def cmd_validate(args) -> int:
    started = time.time()
    ch, ref = load_channel_spec(args.channel)
    print(f"ok: |X|={ch.x_size} |Y|={ch.y_size} kernels={ch.y_size}"
          + (" reference_w=present" if ref is not None else ""))
    _emit(args, {"inputs_digest": _digest(args.channel),
                 "x_size": ch.x_size, "y_size": ch.y_size}, started)
    return OK


def cmd_analyze_w(args) -> int:
    started = time.time()
    ch, ref = load_channel_spec(args.channel)
    W = _reference(ch, ref)
    scale, unit = _unit(args)
    profile = capacity_iteration(W, tol=args.tol)
    if not profile.converged:
        print(f"error: capacity iteration did not converge (gap {profile.gap:.3e})", file=sys.stderr)
        return NO_CONVERGENCE
    report = surjectivity_check(W, profile)
    prox = proximity(ch, W)
    indec = check_indecomposable_sufficient(ch, W)
    connected = check_connected(ch)
    thr = report.thresholds
    print(f"C(W) = {profile.capacity_nats * scale:.9f} {unit} (certificate gap {profile.gap:.2e})")
    print(f"P_X = {np.array2string(profile.p_x, precision=8)}")
    print(f"P_Y = {np.array2string(profile.p_y, precision=8)}")
    if report.is_surjective:
        print(f"surjective: S={list(report.support)} slack={report.slack_margin:.3e} "
              f"sigma_min(W(S))={report.sigma_min_S:.6f}")
    else:
        print(f"not surjective: {report.reason}" if report.verdict == "not_surjective"
              else f"indeterminate: {report.reason}")
    print(f"delta = {prox.delta:.6g}")
    print(f"delta thresholds: indecomposable<{thr.indec:.6g} connected<{thr.conn:.6g} "
          f"fullrank<{thr.fullrank:.6g} fullrank_S<{thr.fullrank_S:.6g}")
    print(f"checks: indecomposable_sufficient={indec.holds} connected_exact={connected}")
    _emit(args, {
        "inputs_digest": _digest(args.channel),
        "capacity_nats": profile.capacity_nats,
        "p_x": profile.p_x, "p_y": profile.p_y,
        "surjectivity": report.verdict, "reason": report.reason,
        "delta": prox.delta,
        "thresholds": {"indec": thr.indec, "conn": thr.conn,
                       "fullrank": thr.fullrank, "fullrank_S": thr.fullrank_S},
    }, started)
    return OK


def cmd_fcap(args) -> int:
    started = time.time()
    ch, _ = load_channel_spec(args.channel)
    scale, unit = _unit(args)
    if not check_connected(ch):
        print("warning: channel is not connected; the single-letter program is solved "
              "as a formal quantity only", file=sys.stderr)
    result = solve_fcap(ch, tol=args.tol)
    if not result.converged:
        print(f"error: solver did not converge (certificate gap {result.certificate_gap:.3e} "
              f"after {result.iterations} iterations)", file=sys.stderr)
        return NO_CONVERGENCE
    print(f"C_f = {result.c_f_nats * scale:.9f} {unit} "
          f"(certificate gap {result.certificate_gap:.2e}, {result.iterations} iterations)")
    print(f"P*_Y' = {np.array2string(result.stationary, precision=8)}")
    print(f"P*_X|Y' (columns by y'):\n{np.array2string(result.input_kernel, precision=8)}")
    print(f"P*_Y|Y' (columns by y'):\n{np.array2string(result.output_kernel, precision=8)}")
    payload = {
        "inputs_digest": _digest(args.channel),
        "c_f_nats": result.c_f_nats,
        "stationary": result.stationary,
        "input_kernel": result.input_kernel,
        "output_kernel": result.output_kernel,
        "maximizer": result.maximizer.P,
        "certificate_gap": result.certificate_gap,
        "iterations": result.iterations,
    }
    if args.restarts > 1:
        probe = uniqueness_probe(ch, result, args.restarts, seed=args.seed, tol=args.tol)
        print(f"uniqueness probe ({args.restarts} restarts): max TV = {probe['max_tv']:.3e}, "
              f"{probe['failures']} non-convergent excluded")
        payload["uniqueness_max_tv"] = probe["max_tv"]
    _emit(args, payload, started)
    return OK


def cmd_simulate(args) -> int:
    started = time.time()
    ch, ref = load_channel_spec(args.channel)
    if ch.x_size != ch.y_size:
        if not args.restrict_S:
            print(f"error: |X|={ch.x_size} != |Y|={ch.y_size}; the plan construction needs "
                  "equal alphabets. Re-run with --restrict-S to restrict the inputs to the "
                  "surjectivity support of the reference channel.", file=sys.stderr)
            return INPUT_ERROR
        from .feedback import support_restriction

        W = _reference(ch, ref)
        profile = capacity_iteration(W)
        report = surjectivity_check(W, profile)
        if not report.is_surjective:
            print(f"error: reference channel not surjective ({report.reason}); "
                  "no support restriction available", file=sys.stderr)
            return INPUT_ERROR
        ch = support_restriction(ch, report.support)
        print(f"restricted inputs to S={list(report.support)}")
    result = solve_fcap(ch, tol=args.tol)
    if not result.converged:
        print(f"error: solver did not converge (gap {result.certificate_gap:.3e})", file=sys.stderr)
        return NO_CONVERGENCE
    law = MarkovOutputLaw.from_feedback(result)
    code = OK
    last_plan = None
    for n in range(1, args.n + 1):
        plan = build_plan(ch, law, n)
        if not plan.valid:
            print(f"n={n}: INVALID at (y0,x^n)={plan.negative_at} "
                  f"(min_entry={plan.min_entry:.3e})")
            code = CONDITION_FAIL
            continue
        resid = verify_plan(ch, plan, law)["max_residual"]
        rate = plan_mutual_information(ch, plan, law)
        print(f"n={n}: VALID min_entry={plan.min_entry:.6e} norm_error={plan.norm_error:.2e} "
              f"output_residual={resid:.2e} rate_gap={abs(rate - result.c_f_nats):.2e}")
        last_plan = plan
    if args.emit_plan and last_plan is not None:
        save_plan(args.emit_plan, last_plan)
        print(f"plan written to {args.emit_plan}")
    _emit(args, {"inputs_digest": _digest(args.channel), "c_f_nats": result.c_f_nats,
                 "horizon": args.n, "exit": code}, started)
    return code


def cmd_diagnose(args) -> int:
    started = time.time()
    ch, _ = load_channel_spec(args.channel)
    result = solve_fcap(ch, tol=args.tol)
    if not result.converged:
        print(f"error: solver did not converge (gap {result.certificate_gap:.3e})", file=sys.stderr)
        return NO_CONVERGENCE
    law = MarkovOutputLaw.from_feedback(result)
    verdict = realizability_check(ch, law, result, args.n)
    for v in verdict.per_y0:
        print(f"y0={v.y0}: {v.feasible}, ls_residual_l1={v.ls_residual_l1:.6e}, rank={v.rank}")
    print(f"D = {verdict.D:.6e}")
    print(f"input-state marginal condition: {verdict.marginal_condition_holds} "
          f"({verdict.marginal_note})")
    _emit(args, {
        "inputs_digest": _digest(args.channel),
        "n": verdict.n,
        "D": verdict.D,
        "per_y0": [{"y0": v.y0, "feasible": v.feasible,
                    "ls_residual_l1": v.ls_residual_l1, "rank": v.rank} for v in verdict.per_y0],
        "marginal_condition_holds": verdict.marginal_condition_holds,
        "marginal_note": verdict.marginal_note,
    }, started)
    return OK if verdict.all_feasible else CONDITION_FAIL


def parse_grid(spec: str) -> list:
    """Inclusive a:b:step grid; a single point when the step overshoots the range."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be a:b:step, got {spec!r}")
    a, b, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [a + i * step for i in range(max(count, 1))]


def cmd_sweep(args) -> int:
    started = time.time()
    try:
        grid = parse_grid(args.eps)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    rows = sweep_example(args.example, grid, n=args.n, jobs=args.jobs)
    write_sweep_csv(rows, args.out)
    max_d = max(r.D for r in rows)
    first_infeasible = next((r.eps for r in rows if not r.feasible_all), None)
    print(f"{len(rows)} rows -> {args.out}; max D = {max_d:.6e}; "
          f"first infeasible eps = {first_infeasible}")
    _emit(args, {"inputs_digest": f"example{args.example}:{args.eps}:n={args.n}",
                 "rows": len(rows), "max_D": max_d,
                 "first_infeasible_eps": first_infeasible, "csv": str(args.out)}, started)
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="postcap",
                                 description="Capacity diagnostics for POST channels")
    ap.add_argument("--report", help="write a JSON run report to this path")
    ap.add_argument("--bits", action="store_true", help="print information quantities in bits")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a channel spec file")
    p.add_argument("channel")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze-w", help="capacity/surjectivity/thresholds of the reference W")
    p.add_argument("channel")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_analyze_w)

    p = sub.add_parser("fcap", help="solve the feedback-capacity program")
    p.add_argument("channel")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fcap)

    p = sub.add_parser("simulate", help="build and verify the non-feedback simulation plan")
    p.add_argument("channel")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--emit-plan", dest="emit_plan")
    p.add_argument("--restrict-S", dest="restrict_S", action="store_true",
                   help="restrict inputs to the surjectivity support when |X| > |Y|")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="realizability LP verdicts and the D diagnostic")
    p.add_argument("channel")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("sweep", help="eps sweep over a worked example family")
    p.add_argument("--example", type=int, choices=(1, 2), required=True)
    p.add_argument("--eps", required=True, help="grid a:b:step, both ends inclusive")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ChannelSpecError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except (SingularKernelError, SizeCapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
