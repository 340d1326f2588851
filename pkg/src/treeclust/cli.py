"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import experiment as ex
from .cluster import accuracy
from .forest_io import (ForestFormatError, assemble_forest, normalize_attributes, read_forest, read_labels_csv,
                        write_forest, write_labels_csv, write_matrix_csv, write_table_csv)
from .scnmf import FactorizationConfig, FactorizationError, scnmf_factorize
from .tree import TreeError

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
METRIC_FLAGS = {"l1": "l1", "l2path": "l2_path", "euclid": "euclid"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Help(argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        if action.required or action.default is None:
            return action.help
        return super()._get_help_string(action)


def _positive_int(lo):
    def conv(s):
        v = int(s)
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}")
        return v
    return conv


def _add_factor_flags(p):
    d = FactorizationConfig()
    p.add_argument("--rank", type=_positive_int(1), default=d.rank, help="meta-tree count k")
    p.add_argument("--max-iters", type=_positive_int(1), default=d.max_iters, help="sweeps per restart")
    p.add_argument("--rel-tol", type=float, default=d.rel_tol, help="relative objective change for convergence")
    p.add_argument("--lam", type=float, default=d.lam, help="tau correction magnitude")
    p.add_argument("--restarts", type=_positive_int(1), default=d.restarts, help="random restarts, best kept")
    p.add_argument("--normalize", action="store_true", help="scale each attribute by its forest maximum")


def build_parser():
    fmt = _Help
    parser = _Parser(prog="treeclust", description="Cluster attributed trees through constrained NMF.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic forest from a config case", formatter_class=fmt)
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--case", default=None, help="case name (default: first case)")
    p.add_argument("--dataset", type=_positive_int(0), default=0, help="dataset index within the case")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", required=True, help="forest file to write")

    p = sub.add_parser("factorize", help="factorize a forest and dump tau(W), H and the objective trace",
                       formatter_class=fmt)
    p.add_argument("--in", dest="inp", required=True, help="forest file")
    _add_factor_flags(p)
    p.add_argument("--seed", type=int, default=0, help="seed for initialization")
    p.add_argument("--outdir", required=True, help="directory for W.csv, H.csv, objective.csv")

    p = sub.add_parser("cluster", help="factorize and cluster a forest", formatter_class=fmt)
    p.add_argument("--in", dest="inp", required=True, help="forest file")
    p.add_argument("--method", choices=ex.METHODS, default="ncut", help="clustering method")
    p.add_argument("--metric", choices=sorted(METRIC_FLAGS), default="l1", help="signature-vector distance")
    _add_factor_flags(p)
    p.add_argument("--clusters", type=int, default=2, help="number of clusters (>= 2)")
    p.add_argument("--sigma", default="median", help="affinity bandwidth: 'median' or a number")
    p.add_argument("--seed", type=int, default=0, help="seed for factorization and clustering")
    p.add_argument("--out", required=True, help="labels CSV to write")

    p = sub.add_parser("evaluate", help="score predicted labels against forest ground truth", formatter_class=fmt)
    p.add_argument("--in", dest="inp", required=True, help="forest file with labels")
    p.add_argument("--pred", required=True, help="labels CSV written by 'cluster'")
    p.add_argument("--out", default=None, help="optional CSV with the accuracy (default: none)")

    p = sub.add_parser("experiment", help="run every case of an experiment config", formatter_class=fmt)
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--seed", type=int, default=None, help="master seed (default: config 'seed', else 0)")
    p.add_argument("--outdir", required=True, help="directory for accuracy.csv and details.csv")
    p.add_argument("--jobs", type=_positive_int(1), default=1, help="worker processes")
    return parser


def _fcfg(args):
    return FactorizationConfig(rank=args.rank, max_iters=args.max_iters, rel_tol=args.rel_tol, lam=args.lam,
                               restarts=args.restarts, seed=args.seed)


def _load_forest(path, normalize=False):
    trees, spec, attrs = read_forest(path)
    forest = assemble_forest(trees, spec)
    return (normalize_attributes(forest) if normalize else forest), attrs


def cmd_simulate(args):
    cfg = ex.load_config(args.config, args.seed)
    idx = 0
    if args.case is not None:
        names = [c.name for c in cfg.cases]
        if args.case not in names:
            raise ex.ConfigError(f"no case named {args.case!r}")
        idx = names.index(args.case)
    recipe = cfg.cases[idx]
    cs = ex.case_seed(cfg.master_seed, idx, recipe.seed_key)
    trees, spec = ex.make_dataset(recipe, ex.dataset_streams(cs, args.dataset))
    write_forest(trees, spec, args.out)
    print(f"case={recipe.name} n={len(trees)} p={spec.p} q={trees[0].q}")
    return 0


def cmd_factorize(args):
    forest, _ = _load_forest(args.inp, args.normalize)
    basis = scnmf_factorize(forest, _fcfg(args))
    os.makedirs(args.outdir, exist_ok=True)
    write_matrix_csv(basis.W, os.path.join(args.outdir, "W.csv"), [f"m{j}" for j in range(basis.W.shape[1])])
    write_matrix_csv(basis.H, os.path.join(args.outdir, "H.csv"), list(forest.ids))
    write_table_csv(["iteration", "objective"], [[i, repr(v)] for i, v in enumerate(basis.objective_trace)],
                    os.path.join(args.outdir, "objective.csv"))
    print(f"n={forest.n} pq={forest.data.shape[0]} k={basis.H.shape[0]} objective={basis.objective:.6g} "
          f"iterations={len(basis.objective_trace)} converged={basis.converged}")
    return 0


def cmd_cluster(args):
    if args.clusters < 2:
        raise UsageError("--clusters must be >= 2")
    sigma = args.sigma
    if sigma != "median":
        try:
            sigma = float(sigma)
        except ValueError:
            raise UsageError("--sigma must be 'median' or a number") from None
    forest, _ = _load_forest(args.inp, args.normalize)
    if forest.n < 2:
        raise ex.ConfigError("forest needs at least two trees")
    if args.clusters > forest.n:
        raise UsageError(f"--clusters {args.clusters} exceeds tree count {forest.n}")
    basis = scnmf_factorize(forest, _fcfg(args))
    if not np.isfinite(basis.objective):
        raise FactorizationError("non-finite objective")
    res = ex.cluster_signatures(basis.H, args.method, METRIC_FLAGS[args.metric], args.seed, args.clusters, sigma)
    extra = {"truth": list(forest.labels)} if forest.labels is not None else None
    write_labels_csv(forest.ids, [int(a) for a in res.assignments], args.out, extra)
    print(f"objective={basis.objective:.6g} method={res.method} metric={res.metric} value={res.value:.6g}")
    if forest.labels is not None and None not in forest.labels:
        print(f"accuracy={accuracy(res.assignments, forest.labels):.4f}")
    return 0


def cmd_evaluate(args):
    trees, _, _ = read_forest(args.inp)
    truth = {t.id: t.label for t in trees}
    if any(v is None for v in truth.values()):
        raise ex.ConfigError("forest has unlabeled trees")
    ids, pred = read_labels_csv(args.pred)
    if sorted(ids) != sorted(truth):
        raise ex.ConfigError("prediction ids do not match forest ids")
    acc = accuracy(pred, [truth[i] for i in ids])
    if args.out:
        write_table_csv(["n", "accuracy"], [[len(ids), repr(acc)]], args.out)
    print(f"n={len(ids)} accuracy={acc:.4f}")
    return 0


def cmd_experiment(args):
    cfg = ex.load_config(args.config, args.seed)

    def progress(res):
        if res.error:
            print(f"[{res.recipe.name}] FAILED: {res.error}")
        else:
            summ = " ".join(f"{m}={ex.aggregate(v)[0]:.3f}" for m, v in res.accuracies.items())
            print(f"[{res.recipe.name}] {summ}")
        sys.stdout.flush()

    results = ex.run_experiment(cfg, args.jobs, progress)
    ex.write_outputs(results, cfg, args.outdir)
    print(f"wrote {os.path.join(args.outdir, 'accuracy.csv')}")
    if all(r.error is not None for r in results):
        return EXIT_DATA
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "factorize": cmd_factorize,
    "cluster": cmd_cluster,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"treeclust {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FactorizationError as exc:
        print(f"treeclust: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ForestFormatError, TreeError, ex.ConfigError, ValueError, OSError) as exc:
        print(f"treeclust: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
