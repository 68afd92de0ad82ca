"""The ``tailcausal`` command.

Each subcommand reads a CSV (or graph fixture), runs one pipeline, and
emits a canonical JSON report to --out or stdout. Reports carry no
timestamps and all floats are rounded at emission, so a rerun with the
same inputs, options, and seed writes identical bytes. Options can
also come from a ``key = value`` config file; explicit flags win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .causev import DEFAULT_TAU_GRID
from .errors import TailCausalError
from .evaluation import reachability_distance
from .io import (
    REPORT_FORMAT,
    emit_report,
    load_config,
    load_dag_file,
    load_series_csv,
    load_structure,
    load_treatment_csv,
    write_matrix_csv,
    write_series_csv,
)
from .models import NoiseSpec, WeightedDag, sample_lscm, sample_rmlm
from .pipelines import (
    causev_pipeline,
    ease_pipeline,
    fit_tails,
    rmlm_pipeline,
    tree_pipeline,
)
from .qte import qte_bootstrap

_STOCHASTIC = {"causev", "qte", "simulate"}


def _float_list(text: str) -> list[float]:
    values = [float(t) for t in text.split(",") if t.strip()]
    if not values:
        raise ValueError("expected a comma-separated list of numbers")
    return values


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


class _Resolver:
    """Merge flag values over config-file values over defaults."""

    def __init__(self, args: argparse.Namespace, config: dict[str, str]):
        self.args = args
        self.config = dict(config)

    def get(self, key: str, coerce, default=None):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.config:
            try:
                return coerce(self.config[key])
            except ValueError as err:
                raise ValueError(f"config key {key}: {err}") from err
        return default

    def choice(self, key: str, options: tuple[str, ...], default=None):
        value = self.get(key, str, default)
        if value is not None and value not in options:
            raise ValueError(
                f"{key} must be one of {', '.join(options)}, got {value!r}"
            )
        return value


def _meta(table) -> dict:
    return {
        "package": "tailcausal",
        "version": __version__,
        "n": table.n,
        "d": table.d,
        "names": list(table.names),
    }


def _matrix(names, entries) -> dict:
    return {"names": list(names), "entries": entries}


def _comparison_block(est_names, est_reach, truth_path) -> dict:
    truth_names, truth = load_structure(truth_path)
    if truth_names is not None and tuple(truth_names) != tuple(est_names):
        raise ValueError(
            "truth column names do not match the input columns: "
            f"{list(truth_names)} vs {list(est_names)}"
        )
    cmp = reachability_distance(est_reach, truth)
    return {
        "distance": cmp.distance,
        "mismatches": [list(cell) for cell in cmp.mismatches],
        "d": cmp.d,
    }


def _discovery_report(res, config_echo, table, truth_path, dump_csv) -> dict:
    report = {
        "format": REPORT_FORMAT,
        "config": config_echo,
        "meta": _meta(table),
        "order": list(res.order) if res.order is not None else None,
        "scores": {"kind": res.score_kind, **_matrix(res.names, res.scores)},
        "reachability": _matrix(res.names, res.reach),
        "diagnostics": res.meta,
    }
    if res.cells is not None:
        report["cells"] = res.cells
    if truth_path:
        report["comparison"] = _comparison_block(res.names, res.reach, truth_path)
    if dump_csv:
        write_matrix_csv(res.names, res.reach, dump_csv)
        report["dump_csv"] = str(dump_csv)
    return report


def _load_table(resolver: _Resolver):
    drop = resolver.get("drop_columns", _str_list, [])
    return load_series_csv(resolver.args.input, drop_columns=drop), drop


def _run_ease(args, resolver):
    k_frac = resolver.get("k_frac", float)
    edge_threshold = resolver.get("edge_threshold", float, 0.1)
    table, dropped = _load_table(resolver)
    res = ease_pipeline(table, k_frac, edge_threshold)
    echo = {
        "method": "ease",
        "input": args.input,
        "drop_columns": dropped,
        "k_frac": k_frac,
        "edge_threshold": edge_threshold,
    }
    return _discovery_report(res, echo, table, args.truth, args.dump_csv)


def _run_causev(args, resolver):
    u = resolver.get("threshold_q", float, 0.9)
    tau_grid = resolver.get("tau_grid", _float_list, list(DEFAULT_TAU_GRID))
    n_boot = resolver.get("n_boot", int, 300)
    seed = resolver.get("seed", int)
    table, dropped = _load_table(resolver)
    res = causev_pipeline(table, u, tau_grid, n_boot, seed)
    echo = {
        "method": "causev",
        "input": args.input,
        "drop_columns": dropped,
        "threshold_q": u,
        "tau_grid": tau_grid,
        "n_boot": n_boot,
        "seed": seed,
    }
    return _discovery_report(res, echo, table, args.truth, args.dump_csv)


def _run_rmlm(args, resolver):
    k_frac = resolver.get("k_frac", float, 0.01)
    edge_threshold = resolver.get("edge_threshold", float, 0.05)
    table, dropped = _load_table(resolver)
    res = rmlm_pipeline(table, k_frac, edge_threshold)
    echo = {
        "method": "rmlm",
        "input": args.input,
        "drop_columns": dropped,
        "k_frac": k_frac,
        "edge_threshold": edge_threshold,
    }
    return _discovery_report(res, echo, table, args.truth, args.dump_csv)


def _run_tree(args, resolver):
    alpha_level = resolver.get("threshold_q", float, 0.9)
    score_order = resolver.get("score_order", float, 0.75)
    root = resolver.get("root", int)
    table, dropped = _load_table(resolver)
    res = tree_pipeline(table, alpha_level, score_order, root)
    echo = {
        "method": "tree",
        "input": args.input,
        "drop_columns": dropped,
        "threshold_q": alpha_level,
        "score_order": score_order,
        "root": root,
    }
    return _discovery_report(res, echo, table, args.truth, args.dump_csv)


def _run_fit_gpd(args, resolver):
    threshold_q = resolver.get("threshold_q", float, 0.95)
    gap = resolver.get("decluster_gap", int)
    table, dropped = _load_table(resolver)
    fits = fit_tails(table, threshold_q, gap)
    return {
        "format": REPORT_FORMAT,
        "config": {
            "method": "fit-gpd",
            "input": args.input,
            "drop_columns": dropped,
            "threshold_q": threshold_q,
            "decluster_gap": gap,
        },
        "meta": _meta(table),
        "tail_fits": {
            name: {
                "xi": fit.xi,
                "sigma": fit.sigma,
                "threshold": fit.threshold,
                "n_exceed": fit.n_exceed,
                "se_xi": fit.se_xi,
                "method": fit.method,
            }
            for name, fit in fits.items()
        },
    }


def _run_qte(args, resolver):
    basis_degree = resolver.get("basis_degree", int, 2)
    tau_n = resolver.get("tau_n", float, 0.05)
    p_n = resolver.get("p_n", float, 0.005)
    n_boot = resolver.get("n_boot", int, 300)
    seed = resolver.get("seed", int)
    sample = load_treatment_csv(args.input)
    est = qte_bootstrap(sample, basis_degree, tau_n, p_n, n_boot=n_boot, seed=seed)
    return {
        "format": REPORT_FORMAT,
        "config": {
            "method": "qte",
            "input": args.input,
            "basis_degree": basis_degree,
            "tau_n": tau_n,
            "p_n": p_n,
            "n_boot": n_boot,
            "seed": seed,
        },
        "meta": {
            "package": "tailcausal",
            "version": __version__,
            "n": sample.n,
            "r": sample.r,
            "n_treated": sample.n_treated,
        },
        "qte": {
            "estimate": est.qte,
            "ci": list(est.ci),
            "q1_int": est.q1_int,
            "q0_int": est.q0_int,
            "xi1": est.xi1,
            "xi0": est.xi0,
            "boot_failures": est.boot_failures,
        },
    }


def _run_simulate(args, resolver):
    model = resolver.choice("model", ("lscm", "rmlm"))
    noise = resolver.choice("noise", ("pareto", "frechet", "student_t"), "pareto")
    alpha = resolver.get("alpha", float)
    n_rows = resolver.get("n_rows", int, 10_000)
    seed = resolver.get("seed", int)
    if model is None:
        raise ValueError("simulate needs --model lscm or --model rmlm")
    if alpha is None:
        raise ValueError("simulate needs --alpha for the innovation family")
    if not args.dump_csv:
        raise ValueError("simulate needs --dump-csv for the sampled table")
    dag, weights = load_dag_file(args.input)
    if weights is None:
        raise ValueError("simulate needs edge weights in the DAG file")
    kind = "linear" if model == "lscm" else "maxlinear"
    wd = WeightedDag(dag, weights, kind)
    innovations = NoiseSpec(noise, alpha=alpha)
    sampler = sample_lscm if model == "lscm" else sample_rmlm
    table = sampler(wd, innovations, n_rows, seed)
    write_series_csv(table, args.dump_csv)
    return {
        "format": REPORT_FORMAT,
        "config": {
            "method": "simulate",
            "input": args.input,
            "model": model,
            "noise": noise,
            "alpha": alpha,
            "n_rows": n_rows,
            "seed": seed,
        },
        "meta": {"package": "tailcausal", "version": __version__},
        "data": {
            "path": str(args.dump_csv),
            "n": table.n,
            "d": table.d,
            "names": list(table.names),
        },
    }


def _run_evaluate(args, resolver):
    est_names, est = load_structure(args.input)
    truth_names, truth = load_structure(args.truth)
    if (
        est_names is not None
        and truth_names is not None
        and tuple(est_names) != tuple(truth_names)
    ):
        raise ValueError(
            "estimated and true structures name different columns: "
            f"{list(est_names)} vs {list(truth_names)}"
        )
    cmp = reachability_distance(est, truth)
    names = est_names or truth_names
    return {
        "format": REPORT_FORMAT,
        "config": {"method": "evaluate", "input": args.input, "truth": args.truth},
        "meta": {
            "package": "tailcausal",
            "version": __version__,
            "d": cmp.d,
            "names": list(names) if names else None,
        },
        "comparison": {
            "distance": cmp.distance,
            "mismatches": [list(cell) for cell in cmp.mismatches],
            "d": cmp.d,
        },
    }


_RUNNERS = {
    "ease": _run_ease,
    "causev": _run_causev,
    "rmlm": _run_rmlm,
    "tree": _run_tree,
    "fit-gpd": _run_fit_gpd,
    "qte": _run_qte,
    "simulate": _run_simulate,
    "evaluate": _run_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailcausal",
        description="Causal discovery and effect estimation in heavy tails.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="method", required=True, metavar="method")

    def add(name, help_text, *, truth=False, dump=False, seed=False):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--input", required=True, help="input file")
        sp.add_argument("--config", help="key = value option file; flags win")
        sp.add_argument("--out", help="report destination (default stdout)")
        if truth:
            sp.add_argument("--truth", help="true structure: DAG file or matrix CSV")
        if dump:
            sp.add_argument("--dump-csv", dest="dump_csv", help="matrix CSV dump")
        if seed:
            sp.add_argument("--seed", type=int, help="bootstrap / sampling seed")
        return sp

    sp = add("ease", "order variables by extremal ancestry", truth=True, dump=True)
    sp.add_argument("--k-frac", dest="k_frac", type=float)
    sp.add_argument("--edge-threshold", dest="edge_threshold", type=float)
    sp.add_argument("--drop-column", dest="drop_columns", action="append")

    sp = add("causev", "pairwise extremal direction scores", truth=True, dump=True, seed=True)
    sp.add_argument("--threshold-q", dest="threshold_q", type=float)
    sp.add_argument("--tau-grid", dest="tau_grid", type=_float_list)
    sp.add_argument("--n-boot", dest="n_boot", type=int)
    sp.add_argument("--drop-column", dest="drop_columns", action="append")

    sp = add("rmlm", "max-linear coefficient reconstruction", truth=True, dump=True)
    sp.add_argument("--k-frac", dest="k_frac", type=float)
    sp.add_argument("--edge-threshold", dest="edge_threshold", type=float)
    sp.add_argument("--drop-column", dest="drop_columns", action="append")

    sp = add("tree", "minimum arborescence over pair scores", truth=True, dump=True)
    sp.add_argument("--threshold-q", dest="threshold_q", type=float)
    sp.add_argument("--score-order", dest="score_order", type=float)
    sp.add_argument("--root", type=int)
    sp.add_argument("--drop-column", dest="drop_columns", action="append")

    sp = add("fit-gpd", "per-column tail fits")
    sp.add_argument("--threshold-q", dest="threshold_q", type=float)
    sp.add_argument("--decluster-gap", dest="decluster_gap", type=int)
    sp.add_argument("--drop-column", dest="drop_columns", action="append")

    sp = add("qte", "extremal quantile treatment effect", seed=True)
    sp.add_argument("--basis-degree", dest="basis_degree", type=int)
    sp.add_argument("--tau-n", dest="tau_n", type=float)
    sp.add_argument("--p-n", dest="p_n", type=float)
    sp.add_argument("--n-boot", dest="n_boot", type=int)

    sp = add("simulate", "sample a structural model to CSV", dump=True, seed=True)
    sp.add_argument("--model", choices=("lscm", "rmlm"))
    sp.add_argument("--noise", choices=("pareto", "frechet", "student_t"))
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--n-rows", dest="n_rows", type=int)

    sp = add("evaluate", "distance between two structures", truth=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
        resolver = _Resolver(args, config)
        if args.method in _STOCHASTIC and resolver.get("seed", int) is None:
            raise ValueError(f"{args.method} is stochastic; --seed is required")
        if args.method == "evaluate" and not args.truth:
            raise ValueError("evaluate needs --truth")
        report = _RUNNERS[args.method](args, resolver)
    except (TailCausalError, ValueError, OSError) as err:
        print(f"tailcausal: error: {err}", file=sys.stderr)
        return 1
    text = emit_report(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
