"""Command-line interface.

Every command writes into ``--out`` only.  Files are produced in a staging
directory inside ``--out`` and moved into place once the command has
succeeded, so a failed run leaves no partial outputs.  A ``manifest.json``
records the arguments, input and output digests, and which outputs are
timing-dependent; ``krafty replay`` re-runs a manifest and checks that the
deterministic outputs match byte for byte.

Exit codes: 0 success, 2 input error, 3 numeric failure or replay mismatch.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io as _io
import json
import os
import shutil
import sys
import time
import warnings
from dataclasses import asdict, fields, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from ._backend import BACKEND
from .errors import InputError, KraftyError, NumericError
from .ingest import TradeView, load_edge_list, load_vertex_universe, trade_pipeline
from .io import (
    atomic_write_text,
    format_float,
    read_assignment,
    read_dendrogram,
    read_matrix,
    read_spectrum,
    write_assignment,
    write_dendrogram,
    write_spectrum,
)
from .joint import AssignmentView, EmbeddingView, krafty, mase
from .selectk import largest_gap, merge_height_elbow, profile_likelihood_elbow, profile_likelihood_scores
from .sim import SimConfig, load_config, preset, run_experiment
from .types import Embedding

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
MANIFEST = "manifest.json"
_STAGE_PREFIX = ".krafty-stage-"


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    return format_float(x) if isinstance(x, (float, np.floating)) else str(x)


class _Run:
    """Collects inputs and outputs of one command invocation."""

    def __init__(self, stage: Path):
        self.stage = stage
        self.inputs: Dict[str, str] = {}
        self.volatile: List[str] = []

    def read(self, path) -> str:
        path = os.path.abspath(path)
        if not os.path.isfile(path):
            raise InputError(f"{path}: no such file")
        self.inputs[path] = _sha256(path)
        return path

    def write(self, name: str, text: str, volatile: bool = False) -> None:
        atomic_write_text(self.stage / name, text)
        if volatile:
            self.volatile.append(name)

    def path(self, name: str) -> Path:
        return self.stage / name


# ---------------------------------------------------------------------------
# cluster


def _parse_view_spec(spec: str):
    kind, sep, path = spec.partition(":")
    kind = kind.strip().lower()
    if not sep or kind not in ("z", "u", "x") or not path:
        raise InputError(f"view {spec!r}: expected KIND:PATH with KIND one of z, u, x")
    return kind, path


def cmd_cluster(args, run: _Run) -> dict:
    if len(args.view) < 2:
        raise InputError("cluster needs at least two --view arguments")
    views = []
    for spec in args.view:
        kind, path = _parse_view_spec(spec)
        path = run.read(path)
        if kind == "z":
            views.append(AssignmentView(read_assignment(path)))
        else:
            views.append(EmbeddingView(Embedding(read_matrix(path)), orthonormal=(kind == "u")))
    fn = krafty if args.method == "krafty" else mase
    t0 = time.perf_counter()
    res = fn(
        views,
        k=args.k,
        final_clusterer=args.clusterer,
        seed=args.seed,
        which_elbow=args.which,
        k_strategy=args.strategy,
        zero_tail_stop=True,
    )
    elapsed = time.perf_counter() - t0
    write_assignment(run.path("labels.csv"), res.labels)
    write_spectrum(run.path("spectrum.csv"), res.spectrum)
    if res.dendrogram is not None:
        write_dendrogram(run.path("dendrogram.csv"), res.dendrogram)
    summary = {
        "k_used": res.k_used,
        "k_source": res.k_source,
        "method": res.method,
        "clusterer": args.clusterer,
        "embedding_dim": res.embedding_dim,
        "cluster_sizes": res.labels.sizes.tolist(),
        "elbows": list(res.elbow.elbows) if res.elbow is not None else None,
    }
    run.write("summary.json", _json_text(summary))
    run.write("timings.json", _json_text({"joint_seconds": elapsed}), volatile=True)
    print(f"k_used={res.k_used} ({res.k_source})")
    return {"seed": args.seed}


# ---------------------------------------------------------------------------
# simulate

_CFG_FIELDS = [f.name for f in fields(SimConfig)]


def cmd_simulate(args, run: _Run) -> dict:
    if (args.preset is None) == (args.config is None):
        raise InputError("give exactly one of --preset or --config")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        if args.reps < 1:
            raise InputError("reps: must be a positive integer")
        overrides["reps"] = args.reps
    if args.preset is not None:
        grid = preset(args.preset, **overrides)
    else:
        grid = load_config(run.read(args.config))
        if overrides:
            grid = [replace(c, **overrides) for c in grid]
    if args.threads < 1:
        raise InputError("threads: must be a positive integer")
    records, summary = run_experiment(grid, threads=args.threads)

    rows, timing = [], []
    for r in records:
        cfg = asdict(r.config)
        rows.append([_num(cfg[f]) for f in _CFG_FIELDS] + [r.config_hash, r.rep, _num(r.ari), r.k_hat, r.abs_err_k, r.error])
        timing.append([r.config_hash, r.rep, _num(r.wall_time * 1000.0)])
    run.write("results.csv", _csv_text(_CFG_FIELDS + ["config_hash", "rep", "ari", "k_hat", "abs_err_k", "error"], rows))
    run.write("timings.csv", _csv_text(["config_hash", "rep", "wall_ms"], timing), volatile=True)
    srows = []
    for s in summary:
        cfg = asdict(s.config)
        srows.append(
            [_num(cfg[f]) for f in _CFG_FIELDS if f != "reps"]
            + [s.config_hash, _num(s.mean_ari), _num(s.ci_low), _num(s.ci_high), _num(s.mean_abs_err_k), s.runs, s.failures]
        )
    head = [f for f in _CFG_FIELDS if f != "reps"]
    run.write(
        "summary.csv",
        _csv_text(head + ["config_hash", "mean_ari", "ci_low", "ci_high", "mean_abs_err_k", "runs", "failures"], srows),
    )
    failed = sum(s.failures for s in summary)
    if failed:
        print(f"warning: {failed} of {len(records)} repetitions failed; see the error column", file=sys.stderr)
    print(f"{len(grid)} configurations, {len(records)} repetitions")
    return {"seed": grid[0].seed if grid else None}


# ---------------------------------------------------------------------------
# select-k


def cmd_select_k(args, run: _Run) -> dict:
    if (args.spectrum is None) == (args.dendrogram is None):
        raise InputError("give exactly one of --spectrum or --dendrogram")
    if args.dendrogram is not None:
        strategy = args.strategy or "merge-height"
        if strategy != "merge-height":
            raise InputError("a dendrogram input requires --strategy merge-height")
        d = read_dendrogram(run.read(args.dendrogram))
        est = merge_height_elbow(d)
        jumps = np.append(np.diff(d.heights), np.nan)
        rows = [(int(t), _num(h), "" if np.isnan(j) else _num(j)) for t, h, j in zip(d.steps, d.heights, jumps)]
        run.write("scores.csv", _csv_text(["step", "height", "jump"], rows))
        result = {"k_hat": est.k_hat, "strategy": strategy, "step": est.step, "low_confidence": est.low_confidence}
    else:
        strategy = args.strategy or "profile"
        s = read_spectrum(run.read(args.spectrum))
        v = s.values
        if strategy == "gap":
            k_hat = largest_gap(s)
            rows = [(i + 1, _num(g)) for i, g in enumerate(s.gaps)]
            run.write("scores.csv", _csv_text(["index", "gap"], rows))
            result = {"k_hat": k_hat, "strategy": strategy}
        elif strategy == "profile":
            est = profile_likelihood_elbow(s, args.which)
            rows, offset = [], 0
            for stage, q_end in enumerate(est.elbows, start=1):
                for q, score in enumerate(profile_likelihood_scores(v[offset:]), start=1):
                    rows.append((stage, offset + q, _num(score)))
                offset = q_end
            run.write("scores.csv", _csv_text(["stage", "index", "score"], rows))
            k_hat = est.k_hat
            result = {"k_hat": k_hat, "strategy": strategy, "which": args.which, "elbows": list(est.elbows)}
        else:
            raise InputError("a spectrum input takes --strategy gap or profile")
    run.write("select_k.json", _json_text(result))
    print(result["k_hat"])
    return {"seed": None}


# ---------------------------------------------------------------------------
# trade


def _parse_trade_view(spec: str):
    parts = spec.rsplit(":", 3)
    role = "exporter"
    if len(parts) == 4 and parts[3] in ("exporter", "importer"):
        path, d, k, role = parts
    else:
        parts = spec.rsplit(":", 2)
        if len(parts) != 3:
            raise InputError(f"view {spec!r}: expected PATH:D:K[:ROLE]")
        path, d, k = parts
    try:
        return path, int(d), int(k), role
    except ValueError:
        raise InputError(f"view {spec!r}: D and K must be integers") from None


def cmd_trade(args, run: _Run) -> dict:
    if len(args.view) < 2:
        raise InputError("trade needs at least two --view arguments")
    universe = load_vertex_universe(run.read(args.universe)) if args.universe else None
    views = []
    for spec in args.view:
        path, d, k, role = _parse_trade_view(spec)
        net = load_edge_list(run.read(path), universe)
        views.append(TradeView(net, d, k, role))
    res = trade_pipeline(views, k=args.k, method=args.method, seed=args.seed, which_elbow=args.which)
    names = res.vertex_names
    run.write("membership.csv", _csv_text(["vertex_name", "cluster"], zip(names, res.labels.tolist())))
    for i, lab in enumerate(res.view_labels, start=1):
        run.write(f"view{i}_labels.csv", _csv_text(["vertex_name", "cluster"], zip(names, lab.tolist())))
    write_spectrum(run.path("spectrum.csv"), res.joint.spectrum)
    summary = {
        "k_used": res.joint.k_used,
        "k_source": res.joint.k_source,
        "method": res.joint.method,
        "excluded": list(res.excluded),
        "vertices": len(names),
    }
    run.write("summary.json", _json_text(summary))
    print(f"k_used={res.joint.k_used} ({res.joint.k_source}), {len(res.excluded)} vertices excluded")
    return {"seed": args.seed}


# ---------------------------------------------------------------------------
# replay


def cmd_replay(args) -> int:
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            man = json.load(fh)
        command = man["command"]
        recorded = man["arguments"]
        outputs = man["outputs"]
        volatile = set(man.get("nondeterministic", []))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read manifest {args.manifest}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if command not in _COMMANDS:
        print(f"error: manifest names unknown command {command!r}", file=sys.stderr)
        return EXIT_INPUT
    for path, digest in man.get("inputs", {}).items():
        if not os.path.isfile(path):
            print(f"error: input {path} is missing", file=sys.stderr)
            return EXIT_INPUT
        if _sha256(path) != digest:
            print(f"error: input {path} changed since the manifest was written", file=sys.stderr)
            return EXIT_INPUT
    ns = argparse.Namespace(**recorded, out=args.out, command=command)
    status = _execute(command, ns)
    if status != EXIT_OK:
        return status
    bad = []
    for name, digest in sorted(outputs.items()):
        if name in volatile:
            continue
        path = Path(args.out) / name
        if not path.is_file() or _sha256(path) != digest:
            bad.append(name)
    if bad:
        print(f"error: replay differs in {', '.join(bad)}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"replay: {len(outputs) - len(volatile & set(outputs))} outputs identical", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# plumbing

_COMMANDS = {
    "cluster": cmd_cluster,
    "simulate": cmd_simulate,
    "select-k": cmd_select_k,
    "trade": cmd_trade,
}


def _recorded_arguments(ns) -> dict:
    skip = {"out", "command", "func"}
    return {k: v for k, v in sorted(vars(ns).items()) if k not in skip}


def _execute(command: str, ns) -> int:
    out = Path(ns.out)
    created = not out.exists()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INPUT
    stage = out / f"{_STAGE_PREFIX}{os.getpid()}"
    shutil.rmtree(stage, ignore_errors=True)
    stage.mkdir()
    run = _Run(stage)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            meta = _COMMANDS[command](ns, run)
        produced = sorted(p.name for p in stage.iterdir())
        manifest = {
            "command": command,
            "arguments": _recorded_arguments(ns),
            "seed": meta.get("seed"),
            "version": __version__,
            "backend": BACKEND,
            "inputs": dict(sorted(run.inputs.items())),
            "outputs": {name: _sha256(stage / name) for name in produced},
            "nondeterministic": sorted(run.volatile),
        }
        atomic_write_text(stage / MANIFEST, _json_text(manifest))
        for name in produced + [MANIFEST]:
            os.replace(stage / name, out / name)
        return EXIT_OK
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except KraftyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        shutil.rmtree(stage, ignore_errors=True)
        if created and out.exists() and not any(out.iterdir()):
            out.rmdir()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="krafty", description="Joint clustering of multi-view data.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cluster", help="joint clustering of two or more views")
    c.add_argument("--view", action="append", default=[], metavar="KIND:PATH",
                   help="z:labels.csv (one label per line), u:matrix.csv (orthonormal) or x:matrix.csv")
    c.add_argument("--k", type=int, default=None, help="number of joint clusters (estimated when omitted)")
    c.add_argument("--method", choices=("krafty", "mase"), default="krafty")
    c.add_argument("--clusterer", choices=("hc", "kmeans"), default="hc")
    c.add_argument("--which", type=int, default=2, help="profile-likelihood elbow to use")
    c.add_argument("--strategy", choices=("profile", "gap"), default="profile")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="run a simulation grid")
    s.add_argument("--preset", choices=sorted(_preset_names()), default=None)
    s.add_argument("--config", default=None, help="INI file with SimConfig fields")
    s.add_argument("--reps", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", required=True)

    k = sub.add_parser("select-k", help="estimate the number of clusters")
    k.add_argument("--spectrum", default=None, help="spectrum CSV (index,value,gap) or one value per line")
    k.add_argument("--dendrogram", default=None, help="dendrogram CSV written by `cluster`")
    k.add_argument("--strategy", choices=("gap", "profile", "merge-height"), default=None)
    k.add_argument("--which", type=int, default=2)
    k.add_argument("--out", required=True)

    t = sub.add_parser("trade", help="joint clusters of vertices from directed weighted networks")
    t.add_argument("--view", action="append", default=[], metavar="PATH:D:K[:ROLE]",
                   help="edge list, embedding dimension, k-means clusters, exporter|importer")
    t.add_argument("--universe", default=None, help="vertex names, one per line")
    t.add_argument("--k", type=int, default=None)
    t.add_argument("--method", choices=("krafty", "mase"), default="krafty")
    t.add_argument("--which", type=int, default=2)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)

    r = sub.add_parser("replay", help="re-run a manifest and verify its outputs")
    r.add_argument("manifest")
    r.add_argument("--out", required=True)
    return p


def _preset_names():
    from .sim import PRESETS

    return PRESETS.keys()


def _absolutize(ns) -> None:
    for name in ("config", "spectrum", "dendrogram", "universe"):
        if getattr(ns, name, None):
            setattr(ns, name, os.path.abspath(getattr(ns, name)))
    if ns.command == "cluster":
        specs = []
        for spec in ns.view:
            kind, sep, path = spec.partition(":")
            specs.append(f"{kind}:{os.path.abspath(path)}" if sep and path else spec)
        ns.view = specs
    elif ns.command == "trade":
        specs = []
        for spec in ns.view:
            try:
                path, d, k, role = _parse_trade_view(spec)
            except InputError:
                specs.append(spec)
            else:
                specs.append(f"{os.path.abspath(path)}:{d}:{k}:{role}")
        ns.view = specs


def main(argv: Optional[List[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    if ns.command == "replay":
        return cmd_replay(ns)
    _absolutize(ns)
    return _execute(ns.command, ns)


if __name__ == "__main__":
    sys.exit(main())
