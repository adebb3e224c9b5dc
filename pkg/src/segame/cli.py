"""Command-line interface.

Subcommands:

  solve              full equilibrium solve; writes solution.json, one CSV
                     per supported trajectory, ascent.csv and figures
  best-response      evader's best response to a fixed observer mixture
  pareto             cost trade-off sweep along one simplex edge
  visibility-debug   dump visibility masks of one patrol as PBM rasters

Exit codes: 0 on success, 1 on scenario/usage errors, 2 when a solve
completes but the equilibrium certificate fails its tolerance.  Figures
(PNG) are rendered unless --no-figures is given.  Timings are quarantined
to run_log.txt so the data outputs of identical runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time as _time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .observability import build_observability
from .hjb import solve_value_function
from .tracer import best_response_cost, path_to_csv
from .game import solve_game
from .pareto import sweep_tradeoff, tradeoff_to_csv
from .rasters import write_pbm, write_pgm

FORMAT_VERSION = 1


def _out_dir(args) -> Path:
    base = args.out or os.environ.get("SEGAME_OUTDIR") or "segame_out"
    p = Path(base)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load(args) -> Scenario:
    if args.grid is None:
        return load_scenario(args.scenario)
    # grid override: keep dt/h fixed, so the CFL margin is preserved
    with open(args.scenario) as fh:
        doc = yaml.safe_load(fh)
    n_old = int(doc["grid"]["n"])
    doc["grid"]["n"] = args.grid
    doc["time"]["dt"] = float(doc["time"]["dt"]) * n_old / args.grid
    return parse_scenario(doc)


def _floats(x) -> list:
    return [float(v) for v in np.asarray(x).ravel()]


class _Timer:
    def __init__(self):
        self.stages: list[tuple[str, float]] = []
        self._t0 = _time.perf_counter()

    def mark(self, name: str):
        t = _time.perf_counter()
        self.stages.append((name, t - self._t0))
        self._t0 = t

    def write(self, dest):
        with open(dest, "w") as fh:
            total = 0.0
            for name, dt in self.stages:
                fh.write(f"{name}: {dt:.3f} s\n")
                total += dt
            fh.write(f"total: {total:.3f} s\n")


def _progress(q, value, best):
    print(f"  ascent iter {q}: G = {value:.6f} (best {best:.6f})", file=sys.stderr)


def cmd_solve(args) -> int:
    sc = _load(args)
    if args.max_iters is not None:
        from dataclasses import replace

        sc.solver = replace(sc.solver, max_iters=args.max_iters)
    out = _out_dir(args)
    timer = _Timer()
    fields = build_observability(sc, threads=args.threads)
    timer.mark("visibility")
    sol = solve_game(sc, fields=fields, progress=_progress if args.verbose else None)
    timer.mark("equilibrium")

    traj_files = []
    for a, st in enumerate(sol.trajectories):
        name = f"traj_{a + 1}.csv"
        path_to_csv(st.path, out / name)
        traj_files.append(name)
    with open(out / "ascent.csv", "w") as fh:
        r = sc.r
        lam_cols = ",".join(f"lambda_{i + 1}" for i in range(r))
        fh.write(f"iteration,value,step,{lam_cols}\n")
        for h in sol.ascent.history:
            lam = ",".join(f"{v:.10g}" for v in h.lam)
            fh.write(f"{h.iteration},{h.value:.10g},{h.step:.10g},{lam}\n")

    doc = {
        "format_version": FORMAT_VERSION,
        "tool": {"name": "segame", "version": __version__},
        "scenario": sc.to_dict(),
        "lambda_star": _floats(sol.lam_star),
        "value": float(sol.value),
        "theta": _floats(sol.policy.theta),
        "support": [int(i) for i in sol.policy.support],
        "policy_residual": float(sol.policy.residual),
        "trajectories": [
            {
                "file": traj_files[a],
                "arrival_time": float(st.path.arrival_time),
                "reached": bool(st.path.reached),
                "costs": _floats(st.costs),
                "lambda_cost": float(st.lam_cost),
                "source_lambda": _floats(st.source_lam),
            }
            for a, st in enumerate(sol.trajectories)
        ],
        "certificate": {
            "certified": sol.certificate.certified,
            "support_gap": float(sol.certificate.support_gap),
            "off_support_gap": float(sol.certificate.off_support_gap),
            "trajectory_gap": float(sol.certificate.traj_gap),
            "expected_costs": _floats(sol.certificate.expected_costs),
            "nash_tol": sc.solver.nash_tol,
            "opt_tol": sc.solver.opt_tol,
        },
        "ascent": {
            "file": "ascent.csv",
            "iterations": len(sol.ascent.history),
            "stopped_by": sol.ascent.stopped_by,
        },
    }
    with open(out / "solution.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")

    if not args.no_figures:
        from . import report

        report.render_solution(sc, sol, out / "solution.png")
        report.render_ascent(sol.ascent.history, out / "ascent.png")
    timer.mark("output")
    timer.write(out / "run_log.txt")

    lam = ", ".join(f"{v:.4f}" for v in sol.lam_star)
    theta = ", ".join(f"{v:.4f}" for v in sol.policy.theta)
    print(f"value        {sol.value:.6f}")
    print(f"lambda*      ({lam})")
    print(f"theta        ({theta}) over {len(sol.trajectories)} trajectories")
    print(f"certificate  {'OK' if sol.certificate.certified else 'FAILED'} "
          f"(support gap {sol.certificate.support_gap:.4f}, "
          f"off-support {sol.certificate.off_support_gap:.4f}, "
          f"trajectory {sol.certificate.traj_gap:.4f})")
    print(f"outputs in   {out}")
    return 0 if sol.certificate.certified else 2


def cmd_best_response(args) -> int:
    sc = _load(args)
    lam = np.array([float(v) for v in args.mixture.split(",")])
    if len(lam) != sc.r:
        raise ScenarioError(f"mixture needs {sc.r} weights, got {len(lam)}")
    if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-9:
        raise ScenarioError("mixture must be non-negative and sum to 1")
    out = _out_dir(args)
    timer = _Timer()
    fields = build_observability(sc, threads=args.threads)
    timer.mark("visibility")
    from .observability import MixedObservability

    vf = solve_value_function(MixedObservability(fields, lam), sc)
    resp = best_response_cost(sc, fields, lam, vf=vf)
    timer.mark("solve")
    path_to_csv(resp.path, out / "trajectory.csv")
    doc = {
        "format_version": FORMAT_VERSION,
        "tool": {"name": "segame", "version": __version__},
        "scenario": sc.to_dict(),
        "lambda": _floats(lam),
        "value": float(resp.value),
        "costs": _floats(resp.costs),
        "arrival_time": float(resp.path.arrival_time),
        "reached": bool(resp.path.reached),
        "consistency_residual": float(resp.residual),
        "trajectory_file": "trajectory.csv",
    }
    with open(out / "response.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    if args.dump_u:
        np.save(out / "value_function.npy", vf.values)
        write_pgm(np.minimum(vf.values[0], resp.value * 2.0), out / "value_t0.pgm")
    if not args.no_figures:
        from . import report

        report.render_best_response(sc, resp, out / "trajectory.png")
    timer.mark("output")
    timer.write(out / "run_log.txt")
    print(f"value {resp.value:.6f}, arrival {resp.path.arrival_time:.3f}, "
          f"costs ({', '.join(f'{c:.4f}' for c in resp.costs)})")
    print(f"outputs in {out}")
    return 0


def cmd_pareto(args) -> int:
    sc = _load(args)
    pair = tuple(int(v) - 1 for v in args.pair.split(","))
    if len(pair) != 2:
        raise ScenarioError("--pair needs two comma-separated patrol numbers")
    out = _out_dir(args)
    timer = _Timer()
    fields = build_observability(sc, threads=args.threads)
    timer.mark("visibility")
    points = sweep_tradeoff(sc, fields, n_points=args.points, pair=pair)
    timer.mark("sweep")
    tradeoff_to_csv(points, pair, out / "pareto.csv")
    if not args.no_figures:
        from . import report

        report.render_tradeoff(points, pair, out / "pareto.png")
    timer.mark("output")
    timer.write(out / "run_log.txt")
    print(f"{len(points)} swept mixtures -> {out / 'pareto.csv'}")
    return 0


def cmd_visibility_debug(args) -> int:
    sc = _load(args)
    idx = args.patrol - 1
    if not (0 <= idx < sc.r):
        raise ScenarioError(f"--patrol must be in 1..{sc.r}")
    out = _out_dir(args)
    fields = build_observability(sc, threads=args.threads)
    field = fields[idx]
    ks = list(range(0, sc.time.n_t + 1, args.every))
    for k in ks:
        write_pbm(field.visibility.mask(idx, k), out / f"vis_p{args.patrol}_k{k}.pbm")
        write_pgm(field.K_slice(k), out / f"kfield_p{args.patrol}_k{k}.pgm")
    if not args.no_figures:
        from . import report

        report.render_visibility(sc, field, ks[0], out / f"vis_p{args.patrol}.png")
    print(f"wrote {len(ks)} mask/rate slices for patrol {args.patrol} to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="segame",
        description="surveillance-evasion game equilibrium solver",
    )
    ap.add_argument("--version", action="version", version=f"segame {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario YAML file")
        p.add_argument("--out", help="output directory (default $SEGAME_OUTDIR or ./segame_out)")
        p.add_argument("--grid", type=int, help="override grid.n, rescaling dt to keep dt/h")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for visibility construction")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        p.add_argument("--verbose", action="store_true", help="progress to stderr")

    ps = sub.add_parser("solve", help="solve for the equilibrium")
    common(ps)
    ps.add_argument("--max-iters", type=int, help="override solver.max_iters")
    ps.set_defaults(fn=cmd_solve)

    pb = sub.add_parser("best-response", help="best response to a fixed mixture")
    common(pb)
    pb.add_argument("--mixture", required=True,
                    help="comma-separated observer weights, e.g. 0.5,0.5")
    pb.add_argument("--dump-u", action="store_true",
                    help="also write the value-function volume (.npy) and a PGM of t=0")
    pb.set_defaults(fn=cmd_best_response)

    pp = sub.add_parser("pareto", help="cost trade-off sweep over a patrol pair")
    common(pp)
    pp.add_argument("--points", type=int, default=11, help="number of swept mixtures")
    pp.add_argument("--pair", default="1,2", help="patrol pair, 1-based (default 1,2)")
    pp.set_defaults(fn=cmd_pareto)

    pv = sub.add_parser("visibility-debug", help="dump visibility masks as rasters")
    common(pv)
    pv.add_argument("--patrol", type=int, default=1, help="patrol number, 1-based")
    pv.add_argument("--every", type=int, default=100, help="slice stride")
    pv.set_defaults(fn=cmd_visibility_debug)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as e:
        print(f"scenario error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
