"""End-to-end simulation experiments: generate, factorize, cluster, score, aggregate.

Config files are INI-style. An ``[experiment]`` section holds global settings
and every ``[case NAME]`` section describes one dataset recipe::

    [experiment]
    datasets_per_case = 20
    methods = ncut, kmeans
    metric = l1
    rank = 8

    [case g1c3]
    pattern = same
    order = 2 vs 2
    depth = 3 vs 3
    attrs = U[2,5] vs U[10,15]
    n_attrs = 3
    count = 10

Values written as ``X vs Y`` give set A and set B separately; a single value
applies to both. ``depth`` accepts an integer or ``B(mu,p)`` for a binomial
depth. ``attrs`` takes one ``U[a,b]`` range repeated ``n_attrs`` times, or
``;``-separated ranges, one per attribute. Optional noise keys:
``attr_noise_edges``, ``attr_noise_sd``, ``topo_noise_edges``,
``topo_noise_prob``, ``topo_noise_range``. Cases sharing a ``seed_key``
generate the same clean datasets, so noisy variants pair with their clean case.
"""

from __future__ import annotations

import configparser
import os
import re
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import forest_io
from .cluster import accuracy, build_affinity, kmeans_frechet, ncut_cluster
from .forest_io import assemble_forest, normalize_attributes
from .scnmf import FactorizationConfig, scnmf_factorize
from .simgen import NoiseSpec, TreeGenSpec, apply_noise, dataset_support, generate_dataset
from .tree import SupportTreeSpec

METHODS = ("ncut", "kmeans")
TABLE_HEADER = ["case", "method", "mean", "sd", "datasets", "status"]
DETAIL_HEADER = ["case", "dataset", "method", "accuracy", "objective"]


class ConfigError(ValueError):
    pass


class CaseError(RuntimeError):
    pass


@dataclass(frozen=True)
class Recipe:
    name: str
    set_a: TreeGenSpec
    set_b: TreeGenSpec
    noise: Optional[NoiseSpec] = None
    seed_key: Optional[str] = None


@dataclass(frozen=True)
class ExperimentConfig:
    cases: tuple
    datasets_per_case: int = 20
    factorization: FactorizationConfig = FactorizationConfig()
    methods: tuple = ("ncut",)
    metric: str = "l1"
    sigma: object = "median"
    kmeans_restarts: int = 10
    normalize: bool = False
    master_seed: int = 0

    def __post_init__(self):
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}")
        if self.datasets_per_case < 1:
            raise ConfigError("datasets_per_case must be >= 1")
        if self.metric not in ("l1", "l2_path", "euclid"):
            raise ConfigError(f"unknown metric {self.metric!r}")


@dataclass
class CaseResult:
    recipe: Recipe
    accuracies: dict = field(default_factory=dict)  # method -> list per dataset
    objectives: list = field(default_factory=list)
    error: Optional[str] = None


def derive_seed(*keys) -> int:
    """Hash integer keys into an independent 64-bit seed."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def case_seed(master_seed: int, case_index: int, seed_key: Optional[str] = None) -> int:
    """Seed for one case; cases sharing ``seed_key`` draw identical clean data."""
    if seed_key is not None:
        return derive_seed(master_seed, 1, zlib.crc32(seed_key.encode()))
    return derive_seed(master_seed, 0, case_index)


def dataset_streams(cs: int, d: int) -> dict:
    gen, noise, fact, clus = np.random.SeedSequence([cs, d]).spawn(4)
    return {k: int(s.generate_state(1, np.uint64)[0]) for k, s in
            zip(("generate", "noise", "factorize", "cluster"), (gen, noise, fact, clus))}


def make_dataset(recipe: Recipe, seeds: dict):
    """Trees (noise applied) and the support spec fitted to their realized depth."""
    support = dataset_support(recipe.set_a, recipe.set_b)
    trees = generate_dataset(recipe.set_a, recipe.set_b, seed=seeds["generate"], support=support)
    if recipe.noise is not None:
        trees = apply_noise(trees, recipe.noise, support, seed=seeds["noise"])
    depth = max(t.depth(support) for t in trees)
    return trees, SupportTreeSpec(support.order, max(depth, 1), True)


def cluster_signatures(H, method, metric="l1", seed=0, k_c=2, sigma="median", restarts=10):
    if method == "ncut":
        return ncut_cluster(build_affinity(H, metric, sigma), k_c, seed)
    if method == "kmeans":
        return kmeans_frechet(H, k_c, metric, restarts, seed)
    raise ValueError(f"unknown method {method!r}")


def run_dataset(recipe: Recipe, cfg: ExperimentConfig, cs: int, d: int) -> tuple:
    seeds = dataset_streams(cs, d)
    trees, spec = make_dataset(recipe, seeds)
    forest = assemble_forest(trees, spec)
    if cfg.normalize:
        forest = normalize_attributes(forest)
    basis = scnmf_factorize(forest, replace(cfg.factorization, seed=seeds["factorize"]))
    accs = {}
    for m in cfg.methods:
        res = cluster_signatures(basis.H, m, cfg.metric, seeds["cluster"], 2, cfg.sigma, cfg.kmeans_restarts)
        accs[m] = accuracy(res.assignments, forest.labels)
    return accs, basis.objective


def run_case(recipe: Recipe, cfg: ExperimentConfig, cs: int) -> CaseResult:
    out = CaseResult(recipe, {m: [] for m in cfg.methods})
    for d in range(cfg.datasets_per_case):
        try:
            accs, obj = run_dataset(recipe, cfg, cs, d)
        except Exception as exc:
            raise CaseError(f"case {recipe.name!r}, dataset {d}: {exc}") from exc
        for m, a in accs.items():
            out.accuracies[m].append(a)
        out.objectives.append(obj)
    return out


def aggregate(values) -> tuple:
    """Mean and population standard deviation."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("aggregate of an empty list")
    mean = float(v.mean())
    return mean, float(np.sqrt(((v - mean) ** 2).mean()))


def _safe_case(args):
    recipe, cfg, cs = args
    try:
        return run_case(recipe, cfg, cs)
    except CaseError as exc:
        return CaseResult(recipe, error=str(exc))


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, progress=None) -> list:
    tasks = [(r, cfg, case_seed(cfg.master_seed, i, r.seed_key)) for i, r in enumerate(cfg.cases)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = []
            for res in ex.map(_safe_case, tasks):
                results.append(res)
                if progress:
                    progress(res)
            return results
    results = []
    for t in tasks:
        res = _safe_case(t)
        results.append(res)
        if progress:
            progress(res)
    return results


def table_rows(results, methods) -> list:
    rows = []
    for res in results:
        for m in methods:
            if res.error is not None:
                rows.append([res.recipe.name, m, "nan", "nan", 0, "failed"])
                continue
            mean, sd = aggregate(res.accuracies[m])
            rows.append([res.recipe.name, m, forest_io.fmt_number(mean), forest_io.fmt_number(sd),
                         len(res.accuracies[m]), "ok"])
    return rows


def detail_rows(results, methods) -> list:
    rows = []
    for res in results:
        if res.error is not None:
            continue
        for d, obj in enumerate(res.objectives):
            for m in methods:
                rows.append([res.recipe.name, d, m, forest_io.fmt_number(res.accuracies[m][d]),
                             forest_io.fmt_number(obj)])
    return rows


def emit_table(rows, path) -> None:
    forest_io.write_table_csv(TABLE_HEADER, rows, path)


def write_outputs(results, cfg: ExperimentConfig, outdir) -> None:
    os.makedirs(outdir, exist_ok=True)
    emit_table(table_rows(results, cfg.methods), os.path.join(outdir, "accuracy.csv"))
    forest_io.write_table_csv(DETAIL_HEADER, detail_rows(results, cfg.methods),
                              os.path.join(outdir, "details.csv"))


# -- config parsing -----------------------------------------------------------

_RANGE = re.compile(r"^U\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]$")
_BINOM = re.compile(r"^B\(\s*(\d+)\s*,\s*([^)]+)\s*\)$")

CASE_KEYS = {"pattern", "order", "depth", "attrs", "n_attrs", "count", "attr_noise_edges", "attr_noise_sd",
             "topo_noise_edges", "topo_noise_prob", "topo_noise_range", "seed_key"}
EXPERIMENT_KEYS = {"datasets_per_case", "methods", "metric", "sigma", "kmeans_restarts", "normalize", "seed",
                   "rank", "max_iters", "rel_tol", "lambda", "epsilon", "pos_threshold", "restarts"}


def _pair(value: str):
    parts = [p.strip() for p in value.split(" vs ")]
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) == 2:
        return parts[0], parts[1]
    raise ConfigError(f"expected 'X' or 'X vs Y', got {value!r}")


def parse_range(text: str) -> tuple:
    m = _RANGE.match(text.strip())
    if not m:
        raise ConfigError(f"expected U[a,b], got {text!r}")
    return float(m.group(1)), float(m.group(2))


def _depth(text: str):
    m = _BINOM.match(text)
    if m:
        return int(m.group(1)), float(m.group(2))
    return int(text)


def _ranges(text: str, n_attrs: int) -> tuple:
    parts = [s for s in text.split(";") if s.strip()]
    rs = tuple(parse_range(s) for s in parts)
    if len(rs) == 1:
        return rs * n_attrs
    if len(rs) != n_attrs:
        raise ConfigError(f"{len(rs)} ranges given for n_attrs={n_attrs}")
    return rs


def parse_recipe(name: str, sec) -> Recipe:
    unknown = set(sec) - CASE_KEYS
    if unknown:
        raise ConfigError(f"case {name!r}: unknown keys {sorted(unknown)}")
    try:
        pattern = sec.get("pattern", "same").strip()
        n_attrs = int(sec.get("n_attrs", "3"))
        orders = _pair(sec.get("order", "2"))
        depths = _pair(sec.get("depth", "3"))
        attrs = _pair(sec.get("attrs", "U[2,5]"))
        counts = _pair(sec.get("count", "10"))
        sets = [TreeGenSpec(int(orders[s]), _depth(depths[s]), pattern, _ranges(attrs[s], n_attrs),
                            int(counts[s])) for s in (0, 1)]
        noise = None
        if any(k in sec for k in ("attr_noise_edges", "topo_noise_edges")):
            noise = NoiseSpec(
                attr_edges=int(sec.get("attr_noise_edges", "0")),
                attr_sd_frac=float(sec.get("attr_noise_sd", "0.30")),
                topo_candidates=int(sec.get("topo_noise_edges", "0")),
                topo_prob=float(sec.get("topo_noise_prob", "0.5")),
                topo_attr_range=parse_range(sec.get("topo_noise_range", "U[2,5]")),
            )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"case {name!r}: {exc}") from None
    return Recipe(name, sets[0], sets[1], noise, sec.get("seed_key", None))


def parse_config(text: str, master_seed: Optional[int] = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    exp = cp["experiment"] if cp.has_section("experiment") else {}
    unknown = set(exp) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"[experiment]: unknown keys {sorted(unknown)}")
    cases = []
    for s in cp.sections():
        if s == "experiment":
            continue
        if not s.startswith("case "):
            raise ConfigError(f"unknown section [{s}]")
        cases.append(parse_recipe(s[5:].strip(), cp[s]))
    if not cases:
        raise ConfigError("config defines no [case ...] sections")
    try:
        fcfg = FactorizationConfig(
            rank=int(exp.get("rank", "8")),
            max_iters=int(exp.get("max_iters", "500")),
            rel_tol=float(exp.get("rel_tol", "1e-6")),
            lam=float(exp.get("lambda", "1e-3")),
            epsilon=float(exp.get("epsilon", "1e-12")),
            pos_threshold=float(exp.get("pos_threshold", "1e-9")),
            restarts=int(exp.get("restarts", "5")),
        )
        sigma = exp.get("sigma", "median").strip()
        return ExperimentConfig(
            cases=tuple(cases),
            datasets_per_case=int(exp.get("datasets_per_case", "20")),
            factorization=fcfg,
            methods=tuple(m.strip() for m in exp.get("methods", "ncut").split(",") if m.strip()),
            metric=exp.get("metric", "l1").strip(),
            sigma=sigma if sigma == "median" else float(sigma),
            kmeans_restarts=int(exp.get("kmeans_restarts", "10")),
            normalize=exp.get("normalize", "false").strip().lower() in ("1", "true", "yes", "on"),
            master_seed=int(exp.get("seed", "0")) if master_seed is None else master_seed,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, master_seed=None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), master_seed)
