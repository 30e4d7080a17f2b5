"""Command-line front end.

    locwave [--config run.json] [--out DIR] [--seed N] <command> [options]

Every command validates its inputs, computes into a scratch directory and
moves the finished files into ``--out``; a failing run leaves no output.
Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from .ambiguity import ambiguity, decay_bounds, mp_bench, mp_bench_csv, mp_bench_summary
from .representations import make_transform, read_phase, write_phase
from .spaces import read_signal, write_signal
from .uncertainty import WeightProfile, global_uncertainty
from .window_design import (OptimizerConfig, builtin_window, minimizer_grid, optimize_window,
                            trace_is_nonincreasing, verify_minimizer)

SCHEMA_PATH = Path(__file__).resolve().parents[2] / "docs" / "config.schema.json"

DEFAULTS = {"transform": "fstft", "window": "builtin:gaussian", "weights": "identity", "seed": 0}


def _schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text())


def load_config(path) -> dict:
    """Read and validate a run configuration; missing keys take defaults."""
    import jsonschema

    cfg = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file {path} not found")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None
        base = path.parent
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        raise ValueError(f"invalid config: {exc.message}") from None
    out = dict(DEFAULTS)
    out.update(cfg)
    out["_base"] = base
    out["_given"] = tuple(sorted(cfg))
    return out


def _resolve(cfg, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else cfg["_base"] / p


def _transform(cfg):
    grid = dict(cfg.get("grid", {}))
    for key in ("dilations", "shears"):
        if key in grid:
            grid[key] = tuple(grid[key])
    try:
        return make_transform(cfg["transform"], **grid)
    except TypeError as exc:
        raise ValueError(f"grid parameters do not fit {cfg['transform']}: {exc}") from None


def _window(cfg, spec, source=None):
    source = source or cfg["window"]
    if source.startswith("builtin:"):
        f = builtin_window(spec, source)
    else:
        f = read_signal(_resolve(cfg, source), spec.space)
    spec.check_admissible(f)
    return f


def _weights(cfg, spec) -> WeightProfile:
    w = cfg.get("weights", "identity")
    if isinstance(w, dict):
        p = _resolve(cfg, w["file"])
        if not p.exists():
            raise FileNotFoundError(f"weight file {p} not found")
        try:
            w = WeightProfile.from_json(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{p}: invalid JSON ({exc})") from None
    return WeightProfile.for_transform(spec, w)


def _dump(obj) -> str:
    try:
        return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    except ValueError:
        raise ArithmeticError("result contains non-finite numbers") from None


# ---------------------------------------------------------------------------
# commands; each writes into ``out`` (a scratch directory)

def cmd_analyze(cfg, args, out: Path):
    spec = _transform(cfg)
    f = _window(cfg, spec)
    if not args.signal:
        raise ValueError("analyze needs --signal")
    sp = _resolve(cfg, args.signal)
    if not sp.exists():
        raise FileNotFoundError(f"signal file {sp} not found")
    s = read_signal(sp, spec.space)
    V = spec.analyze(f, s)
    write_phase(V, out / "phase.csv")
    (out / "analyze.json").write_text(_dump({
        "transform": spec.name, "grid_shape": list(spec.grid.shape),
        "calibration_constant": spec.calibration_constant(),
        "window_Af_norm_sq": spec.duflo_moore_apply(f).norm() ** 2}))


def cmd_synthesize(cfg, args, out: Path):
    spec = _transform(cfg)
    h = _window(cfg, spec)
    if not args.phase:
        raise ValueError("synthesize needs --phase")
    pp = _resolve(cfg, args.phase)
    if not pp.exists():
        raise FileNotFoundError(f"phase file {pp} not found")
    F = read_phase(spec, pp)
    s = spec.synthesize(h, F)
    write_signal(s, out / "signal.csv")
    (out / "synthesize.json").write_text(_dump({
        "transform": spec.name, "calibration_constant": spec.calibration_constant(),
        "window_Ah_norm_sq": spec.duflo_moore_apply(h).norm() ** 2}))


def cmd_uncertainty(cfg, args, out: Path):
    spec = _transform(cfg)
    f = _window(cfg, spec)
    rep = global_uncertainty(spec, f, _weights(cfg, spec), product=bool(cfg.get("product", False)))
    (out / "uncertainty.json").write_text(_dump(rep.to_dict()))


def cmd_optimize(cfg, args, out: Path):
    spec = _transform(cfg)
    opts = dict(cfg.get("optimizer", {}))
    objective = opts.pop("objective", "global")
    start = opts.pop("start", "random")
    conf = OptimizerConfig.from_dict({**opts, "seed": cfg["seed"]})
    f0 = None if start == "random" else _window(cfg, spec, start)
    res = optimize_window(spec, objective, _weights(cfg, spec), conf, f0)
    write_signal(res.window, out / "window.csv")
    (out / "trace.csv").write_text(res.trace_csv())
    summary = res.summary()
    summary["trace_nonincreasing"] = trace_is_nonincreasing(res.trace)
    summary["transform"] = spec.name
    (out / "optimize.json").write_text(_dump(summary))


def cmd_verify_minimizer(cfg, args, out: Path):
    opts = cfg.get("minimizer", {})
    spec = minimizer_grid(opts.get("n_samples", 8192), opts.get("d_omega", 0.3))
    rep = verify_minimizer(n_list=opts.get("n_list", [4, 8, 16, 32]), spec=spec)
    (out / "minimizer.csv").write_text(rep.to_csv())
    (out / "minimizer.json").write_text(_dump(rep.to_dict()))


def cmd_decay(cfg, args, out: Path):
    spec = _transform(cfg)
    f = _window(cfg, spec)
    blocks = cfg.get("decay", {}).get("blocks")
    nb = len(spec.canonical_observables())
    if blocks is not None and any(b >= nb for b in blocks):
        raise ValueError(f"{spec.name} has {nb} blocks")
    skipped = None
    if blocks is None:
        blocks = list(range(nb))
        skipped = []
    reports = decay_bounds(spec, f, blocks, skipped)
    summary = []
    for r in reports:
        (out / f"decay_block{r.block}.csv").write_text(r.to_csv())
        summary.append(r.summary())
    (out / "decay.json").write_text(_dump({"reports": summary, "skipped_blocks": skipped or [],
                                           "violations": int(sum(s["violations"] for s in summary))}))


def cmd_ambiguity(cfg, args, out: Path):
    spec = _transform(cfg)
    f = _window(cfg, spec).normalized()
    A = ambiguity(spec, f)
    write_phase(A, out / "ambiguity.csv")
    a = np.abs(A.values)
    idx = np.unravel_index(int(np.argmax(a)), a.shape)
    (out / "ambiguity.json").write_text(_dump({
        "transform": spec.name, "max_abs": float(a.max()),
        "argmax": [float(x) for x in spec.grid.coords_table()[np.ravel_multi_index(idx, a.shape)]]}))


def cmd_mp_bench(cfg, args, out: Path):
    if "transform" not in cfg["_given"]:
        cfg = dict(cfg, transform="finwave")
    spec = _transform(cfg)
    opts = cfg.get("mp_bench", {})
    conf = OptimizerConfig(seed=cfg["seed"], max_iter=opts.get("optimizer_iter", 500))
    fopt = optimize_window(spec, "global", _weights(cfg, spec), conf).window
    windows = {"optimized": fopt, "flat": builtin_window(spec, "flat")}
    rows = mp_bench(spec, windows, n_instances=opts.get("instances", 50), n_atoms=opts.get("atoms", 5),
                        seed=cfg["seed"], radius=opts.get("radius", 1.0),
                        min_separation=opts.get("min_separation", 3.0))
    (out / "mp_bench.csv").write_text(mp_bench_csv(rows))
    summary = mp_bench_summary(rows)
    summary = {"transform": spec.name, "windows": summary,
               "optimized_beats_flat": summary["optimized"]["mean_fraction"] > summary["flat"]["mean_fraction"]}
    (out / "mp_bench.json").write_text(_dump(summary))
    write_signal(fopt, out / "optimized_window.csv")


COMMANDS = {
    "analyze": cmd_analyze,
    "synthesize": cmd_synthesize,
    "uncertainty": cmd_uncertainty,
    "optimize": cmd_optimize,
    "verify-minimizer": cmd_verify_minimizer,
    "decay": cmd_decay,
    "ambiguity": cmd_ambiguity,
    "mp-bench": cmd_mp_bench,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="locwave", description="Localization and uncertainty of wavelet-type transforms.")
    p.add_argument("--config", help="run configuration (JSON, see docs/config.schema.json)")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "analyze":
            sp.add_argument("--signal", required=True, help="signal CSV (index,re,im)")
        if name == "synthesize":
            sp.add_argument("--phase", required=True, help="phase-function CSV")
    return p


def _publish(tmp: Path, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for item in sorted(tmp.iterdir()):
        os.replace(item, out / item.name)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ValueError("seed must be nonnegative")
            cfg["seed"] = args.seed
        out.parent.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=".locwave-", dir=out.parent))
        try:
            COMMANDS[args.command](cfg, args, tmp)
            _publish(tmp, out)
        finally:
            shutil.rmtree(tmp, ignore_errors=True)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"locwave: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"locwave: numerical failure: {exc}", file=sys.stderr)
        return 3
    print(f"locwave: {args.command} -> {out}")
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
