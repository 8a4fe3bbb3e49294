"""Command-line front end.

Five subcommands: ``simulate`` (one scenario -> trace/metrics/plot data),
``stability`` (certificate report for the configured gains), ``game``
(equilibria of the configured attacker/defender game), ``string-check``
(frequency/impulse criteria for one controller), and ``sweep`` (attack
magnitude x safety threshold grid, collision rates, in parallel).

Exit codes are a stable contract: 0 ok, 1 input error, 2 domain outcome
(collision, failed certificate, unstable behavior, equilibrium gap above
tolerance).  All outputs land under ``--out`` (or $PLATOONSEC_OUT, or the
working directory); reruns with the same inputs and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ConfigError, load_scenario
from .control import ACC, CACC, DEFAULT_ACC_GAINS, DEFAULT_CACC_GAINS, assemble_closed_loop
from .engine import run_scenario, trace_metrics, write_metrics_json, write_trace_csv
from .game import best_response_gap, solve_nash, to_behavioral, to_normal_form
from .stability import (TransferFunction, check_bibo_lemma1, check_common_lyapunov,
                        check_gues_inequalities, find_common_lyapunov, hinf_norm,
                        impulse_response_nonneg, lyapunov_constants, min_dwell_time,
                        spacing_error_tf)

__all__ = ["main", "CommandRequest"]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_OUTCOME = 2

_OUT_ENV = "PLATOONSEC_OUT"


@dataclass(frozen=True)
class CommandRequest:
    """Parsed invocation: what to run, where to read, where to write."""

    subcommand: str
    config: str | None
    out: Path
    seed: int | None
    tol: float
    verbose: bool
    extra: dict


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


def _poly_str(coeffs) -> str:
    terms = []
    deg = len(coeffs) - 1
    for k, c in enumerate(coeffs):
        if c == 0 and len(coeffs) > 1:
            continue
        p = deg - k
        mag = _fmt(abs(c))
        sign = "-" if c < 0 else ("+" if terms else "")
        if p == 0:
            body = mag
        elif p == 1:
            body = f"{mag} s" if abs(c) != 1 else "s"
        else:
            body = f"{mag} s^{p}" if abs(c) != 1 else f"s^{p}"
        terms.append(f"{sign} {body}".strip() if sign else body)
    return " ".join(terms) if terms else "0"


def _load(request: CommandRequest):
    if request.config is None:
        raise ConfigError("", "this subcommand needs --config <scenario.json>")
    config = load_scenario(request.config)
    if request.seed is not None:
        config = dataclasses.replace(config, seed=request.seed)
    return config


def cmd_simulate(request: CommandRequest) -> int:
    config = _load(request)
    trace = run_scenario(config)
    metrics = trace_metrics(trace, tol=request.tol)

    out = request.out
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv")
    write_metrics_json(metrics, out / "metrics.json",
                       extra={"seed": config.seed, "duration": config.duration,
                              "step": config.step})

    n = trace.positions.shape[1]
    with open(out / "spacing.dat", "w") as f:
        f.write("# t " + " ".join(f"eps{i}" for i in range(2, n + 1)) + "\n")
        for k in range(trace.times.size):
            f.write(" ".join([repr(float(trace.times[k]))]
                             + [repr(float(e)) for e in trace.spacing_errors[k]]) + "\n")
    with open(out / "velocity.dat", "w") as f:
        f.write("# t " + " ".join(f"v{i}" for i in range(1, n + 1)) + "\n")
        for k in range(trace.times.size):
            f.write(" ".join([repr(float(trace.times[k]))]
                             + [repr(float(v)) for v in trace.velocities[k]]) + "\n")

    if metrics.collision:
        print(f"collision: follower {trace.collision.follower} at "
              f"t={_fmt(trace.collision.time)} s (gap {_fmt(trace.collision.gap)} m)")
    else:
        print(f"no collision; min spacing {_fmt(metrics.min_spacing)} m, "
              f"sup spacing errors "
              f"[{', '.join(_fmt(s) for s in metrics.sup_spacing_errors)}] m")
    if request.verbose:
        print(f"mode events: {len(trace.mode_events)}, decisions: {len(trace.decisions)}")
    print(f"wrote {out / 'trace.csv'}, {out / 'metrics.json'}, "
          f"{out / 'spacing.dat'}, {out / 'velocity.dat'}")
    return EXIT_OUTCOME if metrics.collision else EXIT_OK


def cmd_stability(request: CommandRequest) -> int:
    if request.config is not None:
        config = _load(request)
        cacc, acc, P = config.cacc_gains, config.acc_gains, config.lyapunov
        eps_ref = config.platoon.epsilon_max
    else:
        cacc, acc, P = DEFAULT_CACC_GAINS, DEFAULT_ACC_GAINS, None
        eps_ref = 4.0

    print(f"cooperative gains: k1={_fmt(cacc.k1)} k2={_fmt(cacc.k2)}  "
          f"radar gains: k3={_fmt(acc.k3)} k4={_fmt(acc.k4)}")
    for label, pair in (("cooperative", (cacc.k1, cacc.k2)),
                        ("radar-only", (acc.k3, acc.k4))):
        verdict = check_bibo_lemma1(*pair)
        print(f"  {label}: hurwitz={verdict['hurwitz']} "
              f"real-pole criterion={verdict['lemma1']}")
        if not verdict["hurwitz"]:
            print("  -> gains are not stabilizing; no certificate exists")
            return EXIT_OUTCOME

    A_list = [assemble_closed_loop(CACC, cacc).A, assemble_closed_loop(ACC, acc).A]
    searched = P is None
    if searched:
        P = find_common_lyapunov(A_list)
        if P is None:
            print("no certificate found (search budget exhausted; not a disproof)")
            return EXIT_OUTCOME

    report = check_common_lyapunov(P, A_list)
    ineq = check_gues_inequalities(cacc.k1, cacc.k2, acc.k3, acc.k4, P)
    source = "searched" if searched else "given"
    print(f"certificate P ({source}): p11={_fmt(P.p11)} p12={_fmt(P.p12)} "
          f"p22={_fmt(P.p22)}")
    print(f"  P eigenvalues: {_fmt(report.p_eigenvalues[0])}, "
          f"{_fmt(report.p_eigenvalues[1])}")
    print("  residual max eigenvalues: "
          + ", ".join(_fmt(e) for e in report.residual_max_eigenvalues))
    failed = [name for name in ("p11_positive", "p12_positive", "p_det_positive",
                                "k1_negative", "k3_negative", "k2_above_lower",
                                "k2_below_upper", "k4_above_lower", "k4_below_upper")
              if not getattr(ineq, name)]
    if ineq.ill_posed:
        print(f"  ill-posed inequality brackets: {', '.join(sorted(ineq.ill_posed))}")
    if failed:
        print(f"  violated inequalities: {', '.join(failed)}")
    ok = report.passed and ineq.all_satisfied
    if ok:
        consts = min((lyapunov_constants(P, A) for A in A_list), key=lambda c: c.lam)
        dwell = min_dwell_time((eps_ref, 0.0), (eps_ref, 0.0), consts)
        print(f"  envelope constants: a={_fmt(consts.a)} b={_fmt(consts.b)} "
              f"c={_fmt(consts.c)} rate={_fmt(consts.lam)}")
        print(f"  min dwell at |z|={_fmt(eps_ref)}: {_fmt(dwell.enforced)} s")
        print("verdict: certified")
        return EXIT_OK
    print("verdict: not certified")
    return EXIT_OUTCOME


def cmd_game(request: CommandRequest) -> int:
    if request.config is not None:
        spec = _load(request).game
    else:
        from .game import DEFAULT_GAME
        spec = DEFAULT_GAME
    print(f"detector: P(report|attack)={_fmt(spec.p_report_given_attack)} "
          f"P(report|benign)={_fmt(spec.p_report_given_benign)}")
    equilibria = solve_nash(to_normal_form(spec))
    worst = 0.0
    for idx, eq in enumerate(equilibria, start=1):
        beh = to_behavioral(eq.defender, eq.p_attack)
        gap_a, gap_d = best_response_gap(spec, beh)
        worst = max(worst, float(gap_a), float(gap_d))
        tag = " (degenerate: one of a continuum)" if eq.degenerate else ""
        print(f"equilibrium {idx}{tag}:")
        print(f"  P(attack) = {eq.p_attack} = {_fmt(eq.p_attack)}")
        print(f"  P(downgrade | report) = {beh.defender_p_downgrade_given_r} "
              f"= {_fmt(beh.defender_p_downgrade_given_r)}")
        print(f"  P(downgrade | no report) = {beh.defender_p_downgrade_given_nr} "
              f"= {_fmt(beh.defender_p_downgrade_given_nr)}")
        print(f"  best-response gaps: attacker {_fmt(gap_a)}, defender {_fmt(gap_d)}")
    print(f"{len(equilibria)} equilibria; worst gap {_fmt(worst)} "
          f"(tolerance {_fmt(request.tol)})")
    return EXIT_OK if worst <= request.tol else EXIT_OUTCOME


def cmd_string_check(request: CommandRequest) -> int:
    num = request.extra.get("num")
    den = request.extra.get("den")
    if num is not None or den is not None:
        if not num or not den:
            print("error: --num and --den must be given together", file=sys.stderr)
            return EXIT_INPUT
        H = TransferFunction(tuple(num), tuple(den))
        label = "fixture"
    else:
        mode = request.extra.get("mode", ACC)
        if request.config is not None:
            config = _load(request)
            gains = config.acc_gains if mode == ACC else config.cacc_gains
        else:
            gains = DEFAULT_ACC_GAINS if mode == ACC else DEFAULT_CACC_GAINS
        H = spacing_error_tf(mode, gains)
        label = f"{mode} spacing-error propagation"
    print(f"H(s) [{label}] = ({_poly_str(H.num)}) / ({_poly_str(H.den)})")
    if not H.is_stable():
        print("denominator is not Hurwitz: gain/norm undefined")
        return EXIT_INPUT
    norm = hinf_norm(H)
    nonneg = impulse_response_nonneg(H)
    gain_ok = norm.value <= 1.0 + 1e-12
    print(f"  peak gain {_fmt(norm.value)} at omega={_fmt(norm.omega)} rad/s "
          f"-> {'<= 1' if gain_ok else '> 1'}")
    print(f"  impulse response nonnegative: {nonneg}")
    verdict = gain_ok and nonneg
    print(f"verdict: {'string stable' if verdict else 'not string stable'}")
    return EXIT_OK if verdict else EXIT_OUTCOME


def _sweep_cell(payload) -> tuple:
    """One grid cell in a worker process: returns (xi, eps, runs, collisions)."""
    config_path, xi, eps, seed0, runs = payload
    base = load_scenario(config_path)
    attack = dataclasses.replace(base.attack, xi_max=xi,
                                 signal=dataclasses.replace(base.attack.signal,
                                                            amplitude=xi))
    platoon = dataclasses.replace(base.platoon, epsilon_max=eps)
    collisions = 0
    for j in range(runs):
        config = dataclasses.replace(base, attack=attack, platoon=platoon,
                                     seed=seed0 + j)
        if run_scenario(config).collision is not None:
            collisions += 1
    return xi, eps, runs, collisions


def cmd_sweep(request: CommandRequest) -> int:
    base = _load(request)
    if base.attack is None:
        raise ConfigError("attack", "sweep varies the attack magnitude; the base "
                                    "scenario must define an attack")
    xi_grid = request.extra["xi_grid"]
    eps_grid = request.extra["eps_grid"]
    runs = request.extra["runs"]
    seed0 = base.seed if request.seed is None else request.seed
    jobs = [(request.config, xi, eps, seed0, runs)
            for xi in xi_grid for eps in eps_grid]
    workers = min(len(jobs), request.extra.get("jobs") or os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(j) for j in jobs]

    out = request.out
    out.mkdir(parents=True, exist_ok=True)
    rows = ["xi_max,epsilon_max,runs,collisions,collision_rate"]
    print(f"{'xi_max':>10} {'eps_max':>10} {'collisions':>11} {'rate':>8}")
    for xi, eps, nruns, hits in results:
        rate = hits / nruns
        rows.append(f"{repr(float(xi))},{repr(float(eps))},{nruns},{hits},{repr(rate)}")
        print(f"{_fmt(xi):>10} {_fmt(eps):>10} {hits:>6}/{nruns:<4} {rate:>8.3f}")
    (out / "sweep.csv").write_text("\n".join(rows) + "\n")
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonsec",
        description="Platoon simulation and certification under message falsification.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="scenario JSON file")
        p.add_argument("--out", help=f"output directory (default ${_OUT_ENV} or .)")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--tol", type=float, default=None,
                       help="verdict tolerance (subcommand-specific default)")
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("simulate", help="run one scenario, write trace and metrics"))
    common(sub.add_parser("stability", help="certificate report for the configured gains"))
    common(sub.add_parser("game", help="equilibria of the configured security game"))

    p = sub.add_parser("string-check", help="frequency/impulse string-stability check")
    common(p)
    p.add_argument("--mode", choices=[ACC, CACC], default=ACC,
                   help="which controller's propagation to check (default ACC)")
    p.add_argument("--num", type=float, nargs="+",
                   help="explicit numerator coefficients, descending powers")
    p.add_argument("--den", type=float, nargs="+",
                   help="explicit denominator coefficients, descending powers")

    p = sub.add_parser("sweep", help="attack-magnitude x safety-threshold grid")
    common(p)
    p.add_argument("--xi-grid", type=float, nargs="+", required=True,
                   help="attack magnitudes to sweep")
    p.add_argument("--eps-grid", type=float, nargs="+", required=True,
                   help="safety thresholds to sweep")
    p.add_argument("--runs", type=int, default=20, help="runs per grid cell")
    p.add_argument("--jobs", type=int, default=None, help="worker processes")
    return parser


_DEFAULT_TOL = {"simulate": 1e-6, "stability": 1e-9, "game": 1e-9,
                "string-check": 1e-9, "sweep": 1e-6}

_HANDLERS = {
    "simulate": cmd_simulate,
    "stability": cmd_stability,
    "game": cmd_game,
    "string-check": cmd_string_check,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out or os.environ.get(_OUT_ENV) or ".")
    extra = {}
    for name in ("mode", "num", "den", "runs", "jobs"):
        if hasattr(args, name):
            extra[name] = getattr(args, name)
    if hasattr(args, "xi_grid"):
        extra["xi_grid"] = args.xi_grid
        extra["eps_grid"] = args.eps_grid
    request = CommandRequest(
        subcommand=args.subcommand,
        config=args.config,
        out=out,
        seed=args.seed,
        tol=args.tol if args.tol is not None else _DEFAULT_TOL[args.subcommand],
        verbose=args.verbose,
        extra=extra,
    )
    try:
        return _HANDLERS[args.subcommand](request)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
