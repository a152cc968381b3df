"""Gaussian-mixture simulation study.

A run samples a planted joint clustering over a ``K1 x K2`` grid of view
clusters, draws one Gaussian dataset per view, turns each dataset into a
view input (singular vectors, k-means labels, or scaled singular vectors),
runs KRAFTY or MASE and scores the result.

Every repetition draws from its own ``SeedSequence(cfg.seed,
spawn_key=(rep,))``, so an experiment is a pure function of the grid and
the seeds regardless of how repetitions are scheduled.  Configurations
that share data parameters see identical datasets for the same rep, which
makes method and input comparisons paired.
"""
from __future__ import annotations

import configparser
import hashlib
import itertools
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .clustering import kmeans
from .errors import InputError, RankWarning
from .joint import AssignmentView, EmbeddingView, ProjectionMatrix, krafty, mase, project_assignment
from .linalg import svd_k
from .metrics import abs_error_k, adjusted_rand_index
from .types import Assignment

__all__ = [
    "SimConfig",
    "PlantedStructure",
    "RunRecord",
    "SummaryRow",
    "sample_planted_structure",
    "generate_views",
    "prepare_inputs",
    "run_one",
    "run_experiment",
    "summarize",
    "PRESETS",
    "preset",
    "load_config",
    "MAX_COVER_ATTEMPTS",
]

MAX_COVER_ATTEMPTS = 1000
INPUT_KINDS = ("Z", "U", "X")
METHODS = ("krafty", "mase")


@dataclass(frozen=True)
class SimConfig:
    n: int = 1000
    p: int = 20
    sigma2: float = 0.1
    k1: int = 4
    k2: int = 4
    k: int = 9
    reps: int = 1
    seed: int = 0
    input_kind: str = "U"
    method: str = "krafty"
    k_known: bool = False
    which_elbow: int = 2

    def __post_init__(self):
        for name in ("n", "p", "k1", "k2", "k", "reps", "which_elbow"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name}: must be a positive integer, got {getattr(self, name)!r}")
        if not self.sigma2 >= 0 or not math.isfinite(self.sigma2):
            raise InputError(f"sigma2: must be a finite nonnegative number, got {self.sigma2!r}")
        if not max(self.k1, self.k2) <= self.k <= self.k1 * self.k2:
            raise InputError(
                f"k: must satisfy max(k1, k2) <= k <= k1 * k2, got k={self.k}, k1={self.k1}, k2={self.k2}"
            )
        if self.k > self.n:
            raise InputError(f"k: must not exceed n={self.n}")
        if self.input_kind not in INPUT_KINDS:
            raise InputError(f"input_kind: must be one of {INPUT_KINDS}, got {self.input_kind!r}")
        if self.method not in METHODS:
            raise InputError(f"method: must be one of {METHODS}, got {self.method!r}")

    def key(self) -> str:
        """Short stable digest of all fields."""
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class PlantedStructure:
    joint: Assignment
    proj1: ProjectionMatrix
    proj2: ProjectionMatrix
    cells: Tuple[Tuple[int, int], ...]

    def view_assignments(self) -> Tuple[Assignment, Assignment]:
        return project_assignment(self.joint, self.proj1), project_assignment(self.joint, self.proj2)


def _covers(cells: np.ndarray, k1: int, k2: int) -> bool:
    rows = np.zeros(k1, bool)
    cols = np.zeros(k2, bool)
    rows[cells // k2] = True
    cols[cells % k2] = True
    return bool(rows.all() and cols.all())


def _constructive_cover(k, k1, k2, rng) -> np.ndarray:
    # max(k1, k2) cells that hit every row and column, then random extras
    m = max(k1, k2)
    pr, pc = rng.permutation(k1), rng.permutation(k2)
    base = {int(pr[i % k1]) * k2 + int(pc[i % k2]) for i in range(m)}
    rest = np.setdiff1d(np.arange(k1 * k2), sorted(base))
    extra = rng.choice(rest, size=k - len(base), replace=False) if k > len(base) else []
    return np.sort(np.concatenate([sorted(base), extra]).astype(np.int64))


def _sample_cells(k, k1, k2, rng, max_attempts):
    total = k1 * k2
    for _ in range(max_attempts):
        cells = np.sort(rng.choice(total, size=k, replace=False))
        if _covers(cells, k1, k2):
            return cells, True
    return _constructive_cover(k, k1, k2, rng), False


def sample_planted_structure(
    cfg: SimConfig,
    rng: np.random.Generator,
    weights: Optional[Sequence[float]] = None,
    max_attempts: int = MAX_COVER_ATTEMPTS,
    balanced: bool = False,
) -> PlantedStructure:
    """Sample joint labels over ``cfg.k`` distinct cells of the view grid.

    Cell sets are drawn uniformly and redrawn until every view cluster is
    hit; after ``max_attempts`` failures a covering set is constructed
    directly (a random transversal plus uniform extra cells).  Each joint
    cluster first receives one item, the remaining ``n - k`` items are
    multinomial with ``weights`` (uniform by default).  ``balanced=True``
    instead assigns sizes that differ by at most one.
    """
    k, k1, k2, n = cfg.k, cfg.k1, cfg.k2, cfg.n
    if k > k1 * k2:
        raise InputError(f"k={k} exceeds k1*k2={k1 * k2}")
    if k < max(k1, k2):
        raise InputError(f"k={k} cannot cover max(k1, k2)={max(k1, k2)} view clusters")
    cells, _ = _sample_cells(k, k1, k2, rng, max_attempts)
    if balanced:
        labels = np.arange(n) % k
    else:
        if weights is None:
            w = np.full(k, 1.0 / k)
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (k,) or np.any(w < 0) or w.sum() <= 0:
                raise InputError("weights must be k nonnegative numbers with positive sum")
            w = w / w.sum()
        labels = np.concatenate([np.arange(k), rng.choice(k, size=n - k, p=w)])
    labels = rng.permutation(labels)
    r, c = cells // k2, cells % k2
    return PlantedStructure(
        joint=Assignment(labels, k),
        proj1=ProjectionMatrix(r, k1),
        proj2=ProjectionMatrix(c, k2),
        cells=tuple(zip(r.tolist(), c.tolist())),
    )


def _centers(k, p, rng):
    while True:
        mu = rng.standard_normal((k, p))
        if np.unique(mu, axis=0).shape[0] == k:
            return mu


def generate_views(s: PlantedStructure, cfg: SimConfig, rng: np.random.Generator):
    """Gaussian observations ``mu[z_v(i)] + sigma * N(0, I_p)`` for both views."""
    sigma = math.sqrt(cfg.sigma2)
    out = []
    for z in s.view_assignments():
        mu = _centers(z.k, cfg.p, rng)
        out.append(mu[z.labels] + sigma * rng.standard_normal((z.n, cfg.p)))
    return tuple(out)


def prepare_inputs(views: Sequence[np.ndarray], cfg: SimConfig, seed=0) -> List:
    """Turn raw view data into KRAFTY/MASE inputs.

    ``U``: top-``K_v`` left singular vectors.  ``Z``: k-means labels of
    those vectors with ``k = K_v``.  ``X``: singular vectors scaled by the
    square roots of their singular values.  When a view has fewer than
    ``K_v`` singular directions (``p < K_v``) all available ones are used.
    """
    kvs = (cfg.k1, cfg.k2)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = root.spawn(len(views))
    out = []
    for y, kv, ss in zip(views, kvs, seeds):
        dim = min(kv, *y.shape)
        res = svd_k(y, dim)
        u = np.asarray(res.left.matrix)
        if cfg.input_kind == "U":
            out.append(EmbeddingView(res.left))
        elif cfg.input_kind == "X":
            out.append(EmbeddingView(u * np.sqrt(res.values.values), orthonormal=False))
        else:
            km = kmeans(u, kv, restarts=10, seed=int(ss.generate_state(1)[0]))
            out.append(AssignmentView(km.assignment))
    return out


@dataclass(frozen=True)
class RunRecord:
    config: SimConfig
    config_hash: str
    rep: int
    ari: float
    k_hat: int
    abs_err_k: int
    wall_time: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def _rep_streams(cfg: SimConfig, rep: int):
    return np.random.SeedSequence(cfg.seed, spawn_key=(rep,)).spawn(3)


def run_one(cfg: SimConfig, rep: int) -> RunRecord:
    """One repetition; failures are captured in ``error`` rather than raised."""
    start = time.perf_counter()
    try:
        s_struct, s_views, s_prep = _rep_streams(cfg, rep)
        structure = sample_planted_structure(cfg, np.random.default_rng(s_struct))
        data = generate_views(structure, cfg, np.random.default_rng(s_views))
        inputs = prepare_inputs(data, cfg, seed=s_prep)
        fn = krafty if cfg.method == "krafty" else mase
        res = fn(inputs, k=cfg.k if cfg.k_known else None, which_elbow=cfg.which_elbow)
        ari = adjusted_rand_index(structure.joint, res.labels)
        return RunRecord(
            cfg, cfg.key(), rep, ari, res.k_used, abs_error_k(res.k_used, cfg.k), time.perf_counter() - start
        )
    except Exception as exc:  # recorded per rep, never fatal
        return RunRecord(cfg, cfg.key(), rep, math.nan, 0, 0, time.perf_counter() - start, repr(exc))


@dataclass(frozen=True)
class SummaryRow:
    config: SimConfig
    config_hash: str
    mean_ari: float
    ci_low: float
    ci_high: float
    mean_abs_err_k: float
    runs: int
    failures: int


def summarize(records: Sequence[RunRecord]) -> List[SummaryRow]:
    """Mean ARI with a ``mean +- 1.96 SE`` interval and mean ``|K_hat - K|`` per config."""
    groups: Dict[str, List[RunRecord]] = {}
    order = []
    for r in records:
        if r.config_hash not in groups:
            groups[r.config_hash] = []
            order.append(r.config_hash)
        groups[r.config_hash].append(r)
    rows = []
    for key in order:
        recs = sorted(groups[key], key=lambda r: r.rep)
        ok = [r for r in recs if r.ok]
        ari = np.array([r.ari for r in ok])
        err = np.array([r.abs_err_k for r in ok], dtype=float)
        if ari.size:
            mean = float(ari.mean())
            se = float(ari.std(ddof=1) / math.sqrt(ari.size)) if ari.size > 1 else 0.0
            mae = float(err.mean())
        else:
            mean = se = mae = math.nan
        rows.append(
            SummaryRow(recs[0].config, key, mean, mean - 1.96 * se, mean + 1.96 * se, mae, len(recs), len(recs) - len(ok))
        )
    return rows


def run_experiment(grid: Sequence[SimConfig], threads: int = 1, progress=None):
    """Run every ``(config, rep)`` pair and summarize.

    Returns ``(records, summary)`` with records ordered by grid position
    then rep, independent of ``threads``.
    """
    tasks = [(cfg, rep) for cfg in grid for rep in range(cfg.reps)]
    with warnings.catch_warnings():
        # MASE with k above its rank is an expected regime of the study
        warnings.simplefilter("ignore", RankWarning)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                records = list(pool.map(lambda t: run_one(*t), tasks))
        else:
            records = []
            for t in tasks:
                records.append(run_one(*t))
                if progress is not None:
                    progress(len(records), len(tasks))
    return records, summarize(records)


# ---------------------------------------------------------------------------
# presets and config files


def _product(base: SimConfig, **axes) -> List[SimConfig]:
    names = list(axes)
    out = []
    for combo in itertools.product(*(axes[k] for k in names)):
        out.append(replace(base, **dict(zip(names, combo))))
    return out


_BOTH = dict(method=("krafty", "mase"), input_kind=("Z", "U"))


def _fig2(base):
    return _product(base, k=range(4, 17), k_known=(True, False), **_BOTH)


def _fig3(base):
    return _product(base, k=(4, 9, 15), sigma2=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0), k_known=(True, False), **_BOTH)


def _fig4(base):
    return _product(base, k=range(4, 17), sigma2=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0), k_known=(False,), **_BOTH)


def _fig5(base):
    return _product(
        base,
        k=(6, 12),
        sigma2=(0.01, 0.25, 1.0, 5.0),
        p=(2, 4, 6, 8, 10, 20, 30, 40, 50),
        k_known=(True, False),
        **_BOTH,
    )


def _k1k2(base):
    out = []
    for k1, k2 in itertools.product(range(3, 11), repeat=2):
        ks = sorted({max(k1, k2), k1 + k2, (k1 * k2) // 2, k1 * k2})
        b = replace(base, k1=k1, k2=k2, p=101, k=max(k1, k2))
        out.extend(_product(b, k=ks, k_known=(True, False), **_BOTH))
    return out


def _xu(base):
    return _product(
        base, k=range(4, 17), sigma2=(0.01, 1.0), k_known=(False,), method=("krafty", "mase"), input_kind=("X", "U")
    )


PRESETS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "appendix-k1k2": _k1k2,
    "appendix-xu": _xu,
}


def preset(name: str, reps: int = 100, seed: int = 0, **overrides) -> List[SimConfig]:
    """Grid of configurations reproducing one of the published experiments.

    All presets default to ``n=1000, p=20, sigma2=0.1, k1=k2=4`` and
    override the axes each experiment varies.
    """
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    base = replace(SimConfig(), reps=reps, seed=seed)
    grid = PRESETS[name](base)
    if overrides:
        grid = [replace(c, **overrides) for c in grid]
    return grid


_FIELD_TYPES = {f.name: f.type for f in fields(SimConfig)}


def _parse_value(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise InputError(f"{name}: cannot parse {raw!r} as {kind}") from None


def load_config(path) -> List[SimConfig]:
    """Read a grid from an INI-style key/value file.

    Each section is one grid; a comma-separated value lists the levels of
    that axis and the section expands to the cartesian product::

        [fig2-like]
        n = 1000
        k = 4, 8, 12
        method = krafty, mase
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}") from None
    grid = []
    for section in parser.sections():
        axes = {}
        for key, raw in parser.items(section):
            if key not in _FIELD_TYPES:
                raise InputError(f"[{section}] {key}: unknown field; expected one of {sorted(_FIELD_TYPES)}")
            axes[key] = [_parse_value(key, part) for part in raw.split(",")]
        names = list(axes)
        for combo in itertools.product(*(axes[k] for k in names)):
            try:
                grid.append(SimConfig(**dict(zip(names, combo))))
            except InputError as exc:
                raise InputError(f"[{section}] {exc}") from None
    if not grid:
        raise InputError(f"{path}: no configuration sections found")
    return grid
