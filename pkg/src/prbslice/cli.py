"""Command-line harness: reproducible runs, sweeps, and baseline comparisons.

Subcommands
    run              one scenario through the simulator, the SMT path, or both
    sweep            a (config x total_prbs x seed) matrix, one CSV row per cell
    compare          premium share: adaptive allocation vs static baseline
    gen-scenario     write a pinned scenario JSON for later runs
    validate-config  check a config document and exit

Exit codes: 0 success, 2 validation failure, 3 property failure, 4 solver
failure (unsat/unknown/timeout/process error), 5 trace mismatch in
differential mode.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .encoder import encode, emit_smtlib
from .model import ConfigError, NetworkConfig
from .oracle import diff_traces, simulate
from .presets import default_scenario_spec
from .properties import baseline_overprovision, check_all, compute_metrics
from .scenario import ScenarioSpec, ScenarioTrace
from .solver import SolverProcessError, SolverOutputError, extract_trace, solve

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PROPERTY = 3
EXIT_SOLVER = 4
EXIT_DIFF = 5


@dataclass(frozen=True)
class RunManifest:
    """Everything one run needs; differential mode always has a solver
    command because the bundled solver is the default."""

    config_path: str
    mode: str                       # oracle | smt | differential
    out_dir: str
    seed: Optional[int] = None
    scenario_path: Optional[str] = None
    scenario_spec_path: Optional[str] = None
    solver_cmd: Optional[str] = None
    timeout: float = 120.0
    total_prbs: Optional[int] = None
    horizon: Optional[int] = None


def _load_config(manifest: RunManifest) -> NetworkConfig:
    cfg = NetworkConfig.from_json(Path(manifest.config_path).read_text())
    changes = {}
    if manifest.total_prbs is not None:
        changes["total_prbs"] = manifest.total_prbs
    if manifest.horizon is not None:
        changes["horizon"] = manifest.horizon
    if changes:
        from dataclasses import replace
        cfg = replace(cfg, **changes)
    cfg.validate()
    return cfg


def _load_scenario(manifest: RunManifest, config: NetworkConfig) -> ScenarioTrace:
    if manifest.scenario_path:
        scenario = ScenarioTrace.from_json(
            Path(manifest.scenario_path).read_text())
        scenario.check_dimensions(config)
        return scenario
    if manifest.seed is None:
        raise ConfigError("either --scenario or --seed is required")
    spec = _scenario_spec(manifest, config)
    return spec.generate(config, manifest.seed)


def _scenario_spec(manifest: RunManifest, config: NetworkConfig) -> ScenarioSpec:
    if manifest.scenario_spec_path:
        return ScenarioSpec.from_json(
            Path(manifest.scenario_spec_path).read_text())
    sibling = Path(manifest.config_path).with_suffix(".scenario.json")
    if sibling.exists():
        return ScenarioSpec.from_json(sibling.read_text())
    return default_scenario_spec(config)


def _write(out_dir: Path, name: str, text: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)


def _run_oracle(config, scenario, out_dir: Path, prefix: str = "trace"):
    trace = simulate(config, scenario)
    _write(out_dir, f"{prefix}.csv", trace.to_csv())
    _write(out_dir, f"{prefix}.json", trace.to_json())
    return trace


def _run_smt(config, scenario, manifest: RunManifest, out_dir: Path):
    script = emit_smtlib(encode(config, scenario))
    _write(out_dir, "model.smt2", script)
    verdict = solve(script, timeout=manifest.timeout,
                    command=manifest.solver_cmd)
    _write(out_dir, "verdict.json", json.dumps(
        {"status": verdict.status, "wall_time": verdict.wall_time}, indent=2))
    if verdict.status != "sat":
        raise SolverProcessError(
            f"solver answered {verdict.status} after {verdict.wall_time:.2f}s")
    trace = extract_trace(verdict, config, scenario)
    _write(out_dir, "smt_trace.csv", trace.to_csv())
    return trace, verdict


def cmd_run(manifest: RunManifest) -> int:
    out_dir = Path(manifest.out_dir)
    try:
        config = _load_config(manifest)
        scenario = _load_scenario(manifest, config)
    except (ConfigError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    trace = None
    try:
        if manifest.mode in ("oracle", "differential"):
            trace = _run_oracle(config, scenario, out_dir)
        if manifest.mode in ("smt", "differential"):
            smt_trace, _ = _run_smt(config, scenario, manifest, out_dir)
            if manifest.mode == "smt":
                trace = smt_trace
            else:
                diffs = diff_traces(trace, smt_trace)
                _write(out_dir, "diff.txt", "\n".join(diffs))
                if diffs:
                    print(f"trace mismatch: {len(diffs)} difference(s), see "
                          f"{out_dir / 'diff.txt'}", file=sys.stderr)
                    return EXIT_DIFF
    except (SolverProcessError, SolverOutputError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    report = check_all(trace, config)
    metrics = compute_metrics(trace, config)
    _write(out_dir, "properties.json", report.to_json())
    _write(out_dir, "properties.csv", report.to_csv())
    _write(out_dir, "metrics.json", metrics.to_json())
    _write(out_dir, "metrics.csv", metrics.to_csv())
    if not report.all_passed:
        print(f"property failure: {', '.join(report.failing())}",
              file=sys.stderr)
        return EXIT_PROPERTY
    print(f"ok: artifacts in {out_dir}")
    return EXIT_OK


SWEEP_COLUMNS = (
    "config", "total_prbs", "seed", "status", "final_rp_shr",
    "final_rp_fraction", "topup_actions", "rampdown_actions",
    "blocked_entries", "premium_share_pct_max", "solver_wall_time",
)


def _sweep_cell(args):
    config_path, total_prbs, seed, mode, solver_cmd, timeout, horizon = args
    name = Path(config_path).stem
    row = {c: "" for c in SWEEP_COLUMNS}
    row.update({"config": name, "total_prbs": total_prbs, "seed": seed})
    try:
        manifest = RunManifest(config_path=config_path, mode=mode,
                               out_dir="", seed=seed, solver_cmd=solver_cmd,
                               timeout=timeout, total_prbs=total_prbs,
                               horizon=horizon)
        config = _load_config(manifest)
    except (ConfigError, ValueError) as exc:
        row["status"] = f"skipped: {exc}"
        return row, False
    try:
        scenario = _load_scenario(manifest, config)
        if mode == "oracle":
            trace = simulate(config, scenario)
        else:
            script = emit_smtlib(encode(config, scenario))
            verdict = solve(script, timeout=timeout, command=solver_cmd)
            if verdict.status != "sat":
                row["status"] = f"solver:{verdict.status}"
                return row, True
            trace = extract_trace(verdict, config, scenario)
            row["solver_wall_time"] = f"{verdict.wall_time:.3f}"
        metrics = compute_metrics(trace, config)
        report = check_all(trace, config)
        row.update({
            "status": "ok" if report.all_passed else
                      f"property:{','.join(report.failing())}",
            "final_rp_shr": metrics.residual_share[-1],
            "final_rp_fraction": f"{metrics.residual_fraction[-1]:.4f}",
            "topup_actions": metrics.topup_total,
            "rampdown_actions": metrics.rampdown_total,
            "blocked_entries": metrics.blocked_entries,
            "premium_share_pct_max": f"{max(metrics.premium_share_pct):.4f}",
        })
    except Exception as exc:  # partial failures stay in the table
        row["status"] = f"error: {exc}"
    return row, True


def cmd_sweep(config_paths: Sequence[str], prb_values: Sequence[int],
              seeds: Sequence[int], mode: str, out_path: str,
              solver_cmd: Optional[str], timeout: float, jobs: int,
              horizon: Optional[int] = None) -> int:
    cells = []
    skipped_notes = []
    for path in config_paths:
        for prbs in prb_values:
            # infeasible (config, total_prbs) pairs produce a note, not rows
            try:
                manifest = RunManifest(config_path=path, mode=mode, out_dir="",
                                       total_prbs=prbs, horizon=horizon)
                _load_config(manifest)
            except (ConfigError, ValueError) as exc:
                skipped_notes.append(
                    f"skipping {Path(path).stem} at {prbs} PRBs: {exc}")
                continue
            for seed in seeds:
                cells.append((path, prbs, seed, mode, solver_cmd, timeout,
                              horizon))

    rows = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for row, _ in pool.map(_sweep_cell, cells):
                rows.append(row)
    else:
        for cell in cells:
            row, _ = _sweep_cell(cell)
            rows.append(row)

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    for note in skipped_notes:
        print(note, file=sys.stderr)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_compare(manifest: RunManifest,
                baseline_fraction: Optional[float], out_path: str) -> int:
    try:
        config = _load_config(manifest)
        scenario = _load_scenario(manifest, config)
    except (ConfigError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    trace = simulate(config, scenario)
    metrics = compute_metrics(trace, config)
    if baseline_fraction is None:
        baseline_fraction = max(metrics.premium_share_pct) / 100.0
    try:
        base = baseline_overprovision(config, scenario, baseline_fraction)
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    base_metrics = compute_metrics(base, config)

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "premium_share_pct", "baseline_share_pct", "gap"])
        for j, (ours, theirs) in enumerate(zip(metrics.premium_share_pct,
                                               base_metrics.premium_share_pct)):
            writer.writerow([j, f"{ours:.4f}", f"{theirs:.4f}",
                             f"{theirs - ours:.4f}"])
    print(f"wrote comparison to {out} (baseline fraction "
          f"{float(baseline_fraction):.4f})")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="config JSON path")
    p.add_argument("--scenario", help="pinned scenario JSON path")
    p.add_argument("--seed", type=int, help="scenario generation seed")
    p.add_argument("--scenario-spec",
                   help="distribution spec JSON (default: sibling "
                        "<config>.scenario.json, else built-in rates)")
    p.add_argument("--solver-cmd",
                   help="solver command template; '{script}' expands to a "
                        "temp file path, otherwise the script arrives on "
                        "stdin (env PRBSLICE_SOLVER_CMD, then the bundled "
                        "solver, when omitted)")
    p.add_argument("--timeout", type=float, default=120.0,
                   help="solver timeout in seconds")
    p.add_argument("--total-prbs", type=int, help="override the PRB budget")
    p.add_argument("--horizon", type=int, help="override the horizon")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="prbslice",
        description="PRB allocation for sliced RANs: simulate, solve, verify")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single reproducible run")
    _add_common(p_run)
    p_run.add_argument("--mode", choices=("oracle", "smt", "differential"),
                       default="oracle")
    p_run.add_argument("--out", required=True, help="output directory")

    p_sweep = sub.add_parser("sweep", help="config x budget x seed matrix")
    p_sweep.add_argument("--config", action="append", required=True,
                         dest="configs", help="config JSON (repeatable)")
    p_sweep.add_argument("--total-prbs", action="append", type=int,
                         required=True, dest="prbs",
                         help="PRB budget (repeatable)")
    p_sweep.add_argument("--seeds", type=int, default=30,
                         help="number of seeds, 1..N")
    p_sweep.add_argument("--mode", choices=("oracle", "smt"),
                         default="oracle")
    p_sweep.add_argument("--solver-cmd")
    p_sweep.add_argument("--horizon", type=int,
                         help="override the horizon for every cell")
    p_sweep.add_argument("--timeout", type=float, default=120.0)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", required=True, help="output CSV path")

    p_cmp = sub.add_parser("compare",
                           help="premium share vs static baseline")
    _add_common(p_cmp)
    p_cmp.add_argument("--baseline-fraction", type=float,
                       help="premium fraction of total PRBs the baseline "
                            "pins at j=0 (default: the adaptive run's peak)")
    p_cmp.add_argument("--out", required=True, help="output CSV path")

    p_gen = sub.add_parser("gen-scenario", help="pin a generated scenario")
    _add_common(p_gen)
    p_gen.add_argument("--out", required=True, help="output JSON path")

    p_val = sub.add_parser("validate-config", help="validate and exit")
    p_val.add_argument("--config", required=True)

    args = parser.parse_args(argv)

    if args.command == "validate-config":
        try:
            NetworkConfig.from_json(Path(args.config).read_text()).validate()
        except (ConfigError, OSError) as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        print("ok")
        return EXIT_OK

    if args.command == "sweep":
        return cmd_sweep(
            config_paths=args.configs,
            prb_values=args.prbs,
            seeds=range(1, args.seeds + 1),
            mode=args.mode,
            out_path=args.out,
            solver_cmd=args.solver_cmd,
            timeout=args.timeout,
            jobs=args.jobs,
            horizon=args.horizon,
        )

    manifest = RunManifest(
        config_path=args.config,
        mode=getattr(args, "mode", "oracle"),
        out_dir=getattr(args, "out", ""),
        seed=args.seed,
        scenario_path=args.scenario,
        scenario_spec_path=args.scenario_spec,
        solver_cmd=args.solver_cmd,
        timeout=args.timeout,
        total_prbs=args.total_prbs,
        horizon=args.horizon,
    )

    if args.command == "run":
        return cmd_run(manifest)
    if args.command == "compare":
        return cmd_compare(manifest, args.baseline_fraction, args.out)
    if args.command == "gen-scenario":
        try:
            config = _load_config(manifest)
            if manifest.seed is None:
                raise ConfigError("--seed is required")
            scenario = _scenario_spec(manifest, config).generate(
                config, manifest.seed)
        except (ConfigError, ValueError) as exc:
            print(f"validation error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(scenario.to_json())
        print(f"wrote {out}")
        return EXIT_OK
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
