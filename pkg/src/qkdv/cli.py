"""Command line entry point.

Exit codes: 0 success, 1 the experiment ran but its claim check failed,
2 usage or configuration error.  Every command writes ``manifest.json`` into
its output directory; ``qkdv --replay manifest.json`` reruns it and checks
that every output file hashes identically.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod, harness, plotting
from .calculus import coefficient_recursion, expr_weight, principal_coefficient
from .diagnostics import CSV_COLUMNS, blowup_monitor, pde_residual
from .errors import BlowupDetected, ConfigError, QKdVError
from .field import Field
from .initial import bump
from .model import integrable_problem, validate_problem
from .solver import rhs, solve

EXIT_OK, EXIT_CLAIM, EXIT_USAGE = 0, 1, 2
SUBCOMMANDS = tuple(cfgmod.COMMANDS)


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")


class Output:
    """Output directory that remembers every file written through it."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name

    def json(self, name: str, obj) -> None:
        self.path(name).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n")

    def csv(self, name: str, header, rows) -> None:
        with self.path(name).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])

    def tables(self, tables: dict) -> None:
        for name, (header, rows) in tables.items():
            self.csv(f"{name}.csv", header, rows)

    def hashes(self) -> dict:
        return {name: hashlib.sha256((self.root / name).read_bytes()).hexdigest() for name in sorted(set(self.files))}


def _write_trajectory(out: Output, traj) -> None:
    header = ["x"] + [f"t={t!r}" for t in traj.times]
    x = traj.states[0].x
    rows = [[x[i], *[st.values[i] for st in traj.states]] for i in range(len(x))]
    out.csv("snapshots.csv", header, rows)
    out.csv("diagnostics.csv", CSV_COLUMNS, [d.row() for d in traj.diagnostics])
    plotting.plot_diagnostics(traj, out.path("diagnostics.png"))
    plotting.plot_snapshots(traj, out.path("snapshots.png"))


def read_snapshots(path) -> tuple:
    """(x, times, values[time, x]) from a snapshots.csv file."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    times = np.array([float(h.partition("=")[2]) for h in header[1:]])
    return body[:, 0], times, body[:, 1:].T


# -- commands ---------------------------------------------------------------------
def cmd_solve(cfg, out: Output, threads: int) -> int:
    problem = cfgmod.build_problem(cfg)
    scfg = cfgmod.solver_config(cfg)
    v0 = cfgmod.build_initial(cfg, scfg.n, problem.period)
    status = "ok"
    try:
        traj = solve(v0, problem, scfg)
    except BlowupDetected as exc:
        traj, status = exc.trajectory, f"blowup-suspected(t={exc.time:g})"
    _write_trajectory(out, traj)
    threshold = scfg.blowup_factor * traj.diagnostics[0].sobolev[4]
    out.json("report.json", {"experiment": "solve", "status": status, "final_time": traj.times[-1],
                             "monitor": str(blowup_monitor(traj, threshold)), "solver": scfg.as_dict()})
    print(f"solve: {status}, {len(traj.times)} records, t = {traj.times[-1]:g}")
    return EXIT_OK if status == "ok" else EXIT_CLAIM


def cmd_sweep(cfg, out: Output, threads: int) -> int:
    problem = cfgmod.build_problem(cfg)
    scfg = cfgmod.solver_config(cfg)
    v0 = cfgmod.build_initial(cfg, scfg.n, problem.period)
    sw = cfg["sweep"]
    try:
        harness._validate_ladder(sw["eps"])
    except ValueError as exc:
        raise ConfigError(f"[sweep] eps: {exc}") from None
    res = harness.epsilon_sweep(problem, v0, sw["eps"], scfg, sw["q"], threads=threads)
    out.json("report.json", res.to_json())
    out.tables(res.tables())
    plotting.plot_sweep(res, out.path("sweep.png"))
    for p in range(res.q + 1):
        ratios = ", ".join(f"{r:.3e}" for r in res.ratios[p])
        print(f"p={p}: ratios {ratios}  rate {res.fitted_rates[p]:.3f}")
    print(f"sweep-epsilon: {'PASS' if res.passed else 'FAIL'}")
    return EXIT_OK if res.passed else EXIT_CLAIM


def cmd_continuity(cfg, out: Output, threads: int) -> int:
    problem = cfgmod.build_problem(cfg)
    scfg = cfgmod.solver_config(cfg)
    v0 = cfgmod.build_initial(cfg, scfg.n, problem.period)
    cc = cfg["continuity"]
    direction = bump(scfg.n, problem.period, width=cc["direction_width"])
    res = harness.continuity_experiment(problem, v0, cc["perturbations"], scfg, cc["s"], direction=direction,
                                        K=cc["K"], tolerance=cc["tolerance"], eps_reg=cc["eps_reg"],
                                        threads=threads)
    out.json("report.json", res.to_json())
    out.tables(res.tables())
    plotting.plot_continuity(res, out.path("continuity.png"))
    for d_in, d_out in zip(res.deltas_in, res.deltas_out):
        print(f"in {d_in:.3e} -> out {d_out:.3e}")
    print(f"continuity: floor {res.floor:g}, {'PASS' if res.monotone_claim else 'FAIL'}")
    return EXIT_OK if res.monotone_claim and res.floor == 0 else EXIT_CLAIM


def cmd_soliton(cfg, out: Output, threads: int) -> int:
    problem = cfgmod.build_problem(cfg)
    if problem.spec.params.get("nonlinearity") != "power:2":
        raise ConfigError("bench-soliton needs the kdv nonlinearity")
    scfg = cfgmod.solver_config(cfg)
    sc = cfg["soliton"]
    tol = {"shape": sc["shape_tol"], "mass": sc["mass_tol"], "hamiltonian": sc["hamiltonian_tol"]}
    rep = harness.soliton_benchmark(sc["c"], problem.period, scfg, problem=problem, eps_list=sc["eps"],
                                    tolerances=tol, threads=threads)
    out.json("report.json", rep.to_json())
    out.tables(rep.tables())
    plotting.plot_soliton(rep, out.path("soliton.png"))
    print(f"residual {rep.residual:.2e}  shape {rep.shape_error:.2e}  phase {rep.phase_error:.2e}  "
          f"mass drift {rep.mass_drift:.2e}  H drift {rep.hamiltonian_drift:.2e}")
    for e, err in rep.eps_errors:
        print(f"eps={e:g}: shape {err:.2e}")
    print(f"bench-soliton: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_CLAIM


def cmd_integrable(cfg, out: Output, threads: int) -> int:
    scfg = cfgmod.solver_config(cfg)
    ic = cfg["integrable"]
    rep = harness.integrable_benchmark(ic["a"], ic["eps"], scfg, period=ic["period"], amplitude=ic["amplitude"],
                                       J=tuple(ic["J"]), refine=ic["refine"],
                                       tolerances={"mass": ic["mass_tol"], "hamiltonian": ic["hamiltonian_tol"]})
    out.json("report.json", rep.to_json())
    out.tables(rep.tables())
    plotting.plot_diagnostics(rep.trajectory, out.path("diagnostics.png"))
    plotting.plot_snapshots(rep.trajectory, out.path("snapshots.png"))
    ratio = rep.refinement_ratio
    print(f"mass drift {rep.mass_drift:.2e}  H drift {rep.hamiltonian_drift:.2e}"
          + (f"  dt/2 ratio {ratio:.2f}" if ratio else ""))
    print(f"bench-integrable: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_CLAIM


def cmd_gauge(cfg, out: Output, threads: int) -> int:
    k_top = cfg["gauge"]["k"]
    report, rows, ok = [], [], True
    for k in range(1, k_top + 1):
        c = coefficient_recursion(k)
        f_ok = c.f == principal_coefficient(k)
        g_ok = expr_weight(c.g) <= {2}
        h_ok = expr_weight(c.h) <= {k + 1, k + 3}
        ok = ok and f_ok and g_ok and h_ok
        entry = {"k": k, "f": str(c.f), "g": str(c.g), "h": str(c.h),
                 "f_terms": c.f.to_json(), "g_terms": c.g.to_json(), "h_terms": c.h.to_json(),
                 "weights": {"f": sorted(expr_weight(c.f)), "g": sorted(expr_weight(c.g)),
                             "h": sorted(expr_weight(c.h))},
                 "checks": {"f_closed_form": f_ok, "g_weight": g_ok, "h_weight": h_ok}}
        report.append(entry)
        for name, e in (("f", c.f), ("g", c.g), ("h", c.h)):
            for w in sorted(expr_weight(e)):
                rows.append((k, name, w, sum(1 for x, *_ in e.terms if sum((j + 1) * p for j, p in enumerate(x)) == w)))
    c = coefficient_recursion(k_top)
    print(f"f_{k_top} = {c.f}")
    print(f"g_{k_top} = {c.g}")
    print(f"h_{k_top} = {c.h}")
    print(f"{'k':>3} {'part':>4} {'weight':>6} {'terms':>6}")
    for k, name, w, n in rows:
        print(f"{k:>3} {name:>4} {w:>6} {n:>6}")
    out.json("gauge.json", {"experiment": "verify-gauge", "k": k_top, "pass": ok, "coefficients": report})
    out.csv("weights.csv", ["k", "part", "weight", "terms"], rows)
    plotting.plot_gauge_weights(rows, out.path("weights.png"))
    print(f"verify-gauge: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CLAIM


def cmd_residual(cfg, out: Output, threads: int) -> int:
    """Re-score a solve output directory: v_t by finite differences between snapshots."""
    src = Path(cfg["residual"]["trajectory"])
    manifest_path = src / "manifest.json"
    if not manifest_path.is_file() or not (src / "snapshots.csv").is_file():
        raise ConfigError(f"{src} is not a solve output directory")
    source = json.loads(manifest_path.read_text())
    run_cfg = cfgmod.resolve(source["command"], source["config"])
    problem = cfgmod.build_problem(run_cfg)
    eps = run_cfg["solver"]["eps"]
    x, times, values = read_snapshots(src / "snapshots.csv")
    if len(times) < 3:
        raise ConfigError("need at least three snapshots to difference in time")
    vt = np.gradient(values, times, axis=0, edge_order=2)
    rows = []
    for t, v, w in zip(times, values, vt):
        field = Field(v, problem.period)
        res = pde_residual((field, field.with_values(w)), problem, eps)
        spatial = float(np.max(np.abs(rhs(field, problem, eps, tail_tol=np.inf).values - w)))
        rows.append([t, res, spatial])
    out.csv("residual.csv", ["t", "residual_l2", "max_abs"], rows)
    worst = max(r[1] for r in rows)
    out.json("report.json", {"experiment": "residual", "source": str(src), "max_residual_l2": worst,
                             "source_hashes": source.get("outputs", {})})
    print(f"residual: max scaled L2 residual {worst:.3e} over {len(rows)} snapshots")
    return EXIT_OK


HANDLERS = {
    "solve": cmd_solve, "sweep-epsilon": cmd_sweep, "continuity": cmd_continuity,
    "bench-soliton": cmd_soliton, "bench-integrable": cmd_integrable, "verify-gauge": cmd_gauge,
    "residual": cmd_residual,
}


# -- driver -------------------------------------------------------------------------
def run(command: str, cfg: dict, out_dir, threads: int = 1) -> tuple:
    """Execute a resolved config; returns (exit code, manifest)."""
    out = Output(out_dir)
    code = HANDLERS[command](cfg, out, threads)
    fingerprint = None
    if "problem" in cfg:
        fingerprint = cfgmod.build_problem(cfg).fingerprint()
    elif command == "bench-integrable":
        ic = cfg["integrable"]
        fingerprint = validate_problem(integrable_problem(ic["a"], ic["eps"], ic["period"], ic["J"])).fingerprint()
    manifest = {"command": command, "config": cfg, "fingerprint": fingerprint, "version": __version__,
                "exit_code": code, "outputs": out.hashes()}
    (out.root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_plain) + "\n")
    return code, manifest


def replay(manifest_path, out_dir=None, threads: int = 1) -> int:
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ConfigError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
        command, raw = manifest["command"], manifest["config"]
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"malformed manifest {manifest_path}: {exc}") from None
    cfg = cfgmod.resolve(command, raw)
    if out_dir is None:
        out_dir = manifest_path.parent / "replay"
    _, fresh = run(command, cfg, out_dir, threads)
    expected, got = manifest.get("outputs", {}), fresh["outputs"]
    same = True
    for name in sorted(set(expected) | set(got)):
        match = expected.get(name) == got.get(name)
        same = same and match
        print(f"{'ok' if match else 'MISMATCH'}  {name}")
    print(f"replay: {'identical' if same else 'outputs differ'}")
    return EXIT_OK if same else EXIT_CLAIM


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--out", help="output directory (default: out/<command>)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent solves")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (TOML syntax)")
    parser = argparse.ArgumentParser(prog="qkdv", description="Quasilinear KdV laboratory",
                                     epilog=cfgmod.__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"qkdv {__version__}")
    parser.add_argument("--replay", metavar="MANIFEST", help="rerun a manifest and compare output hashes")
    parser.add_argument("--out", dest="replay_out", help="output directory for --replay")
    parser.add_argument("--threads", dest="replay_threads", type=int, default=1)
    sub = parser.add_subparsers(dest="command")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify-gauge":
            p.add_argument("--k", type=int, help="highest order k (1..8)")
        if name == "residual":
            p.add_argument("trajectory", help="output directory of a solve run")
    return parser


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.replay:
            return replay(args.replay, args.replay_out, args.replay_threads)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        overrides = list(args.set)
        if args.command == "verify-gauge" and args.k is not None:
            overrides.append(f"gauge.k={args.k}")
        if args.command == "residual":
            overrides.append(f"residual.trajectory={json.dumps(str(Path(args.trajectory).resolve()))}")
        cfg = cfgmod.load(args.config, args.command, overrides)
        out_dir = args.out or Path("out") / args.command
        code, _ = run(args.command, cfg, out_dir, args.threads)
        return code
    except (ConfigError, ValueError) as exc:
        print(f"qkdv: error: {exc}", file=sys.stderr)
        print("see `qkdv --help` for the config schema", file=sys.stderr)
        return EXIT_USAGE
    except QKdVError as exc:
        print(f"qkdv: experiment failed: {exc}", file=sys.stderr)
        return EXIT_CLAIM


if __name__ == "__main__":
    sys.exit(main())
