"""Command-line interface: simulate, fit, select, fdr, evaluate, benchmark.

Relative ``--out`` paths are resolved against ``$RIWGM_OUTPUT_ROOT`` when it
is set. Failures exit with status 1 and a one-line JSON error on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .core import RngStream, sample_mvn_zero, spd_inverse
from .fdr import fdr_threshold, inclusion_matrix, point_estimate
from .sampler import DUpdate, LambdaUpdate, Prior, default_hyperparameters, run_chain, standardize
from .selection import build_path
from .simbench import (
    EstimatorConfig,
    FgnSpec,
    confusion,
    fgn_covariance,
    hub_degrees,
    roc_auc,
    roc_points,
    run_case1,
    sparse_precision_generator,
    summarize,
    true_edge_set,
)

OUTPUT_ROOT_ENV = "RIWGM_OUTPUT_ROOT"

RUN_DEFAULTS = {
    "seed": 0,
    "iters": 15000,
    "burnin": 5000,
    "thin": 1,
    "prior": "riw",
    "conditional_d": "paper_ig",
    "lambda_shape": "paper",
    "delta_count": 50,
    "rule": "and",
    "eta": 0.1,
    "store_draws": False,
}


class UsageError(RuntimeError):
    pass


def _out_dir(path: str, create: bool = True) -> Path:
    p = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not p.is_absolute():
        p = Path(root) / p
    if create:
        if not p.parent.exists():
            raise UsageError(f"parent directory does not exist: {p.parent}")
        p.mkdir(exist_ok=True)
    return p


def _in_dir(path: str, what: str) -> Path:
    p = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not p.is_absolute() and not p.exists():
        p = Path(root) / p
    if not p.is_dir():
        raise io.ArtifactError(f"{what} directory not found: {p}")
    return p


def _config(args) -> dict:
    """Defaults, then a JSON config file, then explicit flags."""
    cfg = dict(RUN_DEFAULTS)
    if getattr(args, "config", None):
        loaded = io.read_json(args.config)
        unknown = set(loaded) - set(cfg) - {"data_path"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in RUN_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def cmd_simulate(args) -> dict:
    out = _out_dir(args.out)
    rng = RngStream(args.seed)
    if args.case == "fgn":
        cov = fgn_covariance(FgnSpec(args.p, args.hurst))
        omega0 = spd_inverse(cov)
        hubs = []
    else:
        truth = sparse_precision_generator(
            args.p, args.hubs, args.hub_degree, rng.child(1), extra_edges=args.extra_edges
        )
        omega0, hubs = truth.omega0, truth.hubs
        cov = spd_inverse(omega0)
    x = sample_mvn_zero(cov, args.n, rng.child(0))
    io.write_matrix_csv(out / "data.csv", x)
    io.write_matrix_csv(out / "omega0.csv", omega0)
    truths = {}
    for c in args.cm:
        name = f"truth_cm_{c:g}.csv"
        io.write_edge_list(out / name, io.adjacency_to_edges(true_edge_set(omega0, c)))
        truths[f"{c:g}"] = name
    if args.case == "sparse":
        io.write_edge_list(out / "truth_support.csv", io.adjacency_to_edges(true_edge_set(omega0, 0.0)))
        truths["support"] = "truth_support.csv"
    record = {
        "case": args.case,
        "n": args.n,
        "p": args.p,
        "seed": args.seed,
        "hurst": args.hurst if args.case == "fgn" else None,
        "hubs": [h + 1 for h in hubs],
        "hub_degree": args.hub_degree if args.case == "sparse" else None,
        "extra_edges": args.extra_edges if args.case == "sparse" else None,
        "truth_files": truths,
    }
    io.write_json(out / "provenance.json", record)
    return {"out": str(out), "shape": [args.n, args.p]}


def cmd_fit(args) -> dict:
    cfg = _config(args)
    data_path = args.data or cfg.get("data_path")
    if not data_path:
        raise UsageError("no data file given (--data or data_path in --config)")
    raw = io.read_matrix_csv(data_path)
    out = _out_dir(args.out)
    data = standardize(raw)
    n, p = data.x.shape
    hyper = default_hyperparameters(
        n,
        p,
        variant=Prior(cfg["prior"]),
        conditional_d=DUpdate(cfg["conditional_d"]),
        lambda_update=LambdaUpdate(cfg["lambda_shape"]),
    )
    log = logging.getLogger("riwgm.sampler")
    handler = logging.FileHandler(out / "fit.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        samples = run_chain(
            data,
            hyper,
            cfg["iters"],
            cfg["burnin"],
            RngStream(cfg["seed"]),
            thin=cfg["thin"],
            store_draws=cfg["store_draws"],
        )
    finally:
        log.removeHandler(handler)
        handler.close()
    # wall-clock time lives only in the log so artifacts stay reproducible
    samples.meta.pop("seconds", None)
    io.write_chain(
        out,
        samples,
        hyper.to_dict(),
        extra={"config": cfg, "data_path": str(data_path), "column_means": data.column_means, "column_sds": data.column_sds},
    )
    return {"out": str(out), "p": p, "n": n, "draws_used": samples.count}


def cmd_select(args) -> dict:
    fit = _in_dir(args.fit, "fit")
    samples = io.read_chain(fit)
    out = _out_dir(args.out)
    path = build_path(samples, rule=args.rule, delta_count=args.delta_count)
    io.write_path(out, path)
    inc = inclusion_matrix(path)
    io.write_matrix_csv(out / "inclusion.csv", inc.p_mat)
    return {
        "out": str(out),
        "grid": [float(path.grid.values[0]), float(path.grid.values[-1])],
        "edges_at_min": int(np.triu(path.adjacency_at(0)).sum()),
        "edges_at_max": int(np.triu(path.adjacency_at(path.grid.size - 1)).sum()),
    }


def cmd_fdr(args) -> dict:
    sel = _in_dir(args.select, "selection")
    fit = _in_dir(args.fit, "fit")
    out = _out_dir(args.out)
    p_mat = io.read_matrix_csv(sel / "inclusion.csv")
    omega_mean = io.read_matrix_csv(fit / "omega_mean.csv")
    if p_mat.shape != omega_mean.shape:
        raise io.ArtifactError(f"inclusion matrix {p_mat.shape} does not match posterior mean {omega_mean.shape}")
    res = fdr_threshold(p_mat, args.eta, mode=args.mode)
    est = point_estimate(p_mat, res.threshold, omega_mean)
    io.write_edge_list(out / "edges.csv", est.edges)
    io.write_matrix_csv(out / "omega_est.csv", est.omega_est)
    io.write_dot(out / "graph.dot", est.adjacency)
    record = {
        "eta": res.eta,
        "c_eta": None if not np.isfinite(res.threshold) else res.threshold,
        "zeta": res.count,
        "mode": res.mode,
        "edges": len(est.edges),
        "min_eigenvalue": est.min_eigenvalue,
    }
    io.write_json(out / "fdr.json", record)
    return {"out": str(out), **record}


def _truth_adjacency(path: str, p: int, cm: float | None) -> np.ndarray:
    src = Path(path)
    with src.open() as fh:
        first = fh.readline().strip()
    if first.replace(" ", "") == "i,j":
        return io.edges_to_adjacency(io.read_edge_list(src), p)
    omega0 = io.read_matrix_csv(src)
    if omega0.shape != (p, p):
        raise io.ArtifactError(f"truth has p={omega0.shape[0]}, estimate has p={p}")
    return true_edge_set(omega0, 0.0 if cm is None else cm)


def cmd_evaluate(args) -> dict:
    out = _out_dir(args.out)
    rows, roc_rows, summary = [], [], {}
    path = None
    if args.select:
        path = io.read_path(_in_dir(args.select, "selection"))
        p = path.p
    est_adj = None
    if args.estimate:
        edges = io.read_edge_list(args.estimate)
        if p_hint := (path.p if path is not None else args.p):
            est_adj = io.edges_to_adjacency(edges, p_hint)
        else:
            raise UsageError("--p is required when only --estimate is given")
        p = est_adj.shape[0]
    if path is None and est_adj is None:
        raise UsageError("nothing to evaluate: give --select and/or --estimate")
    truth_specs = args.cm if args.cm else [None]
    for cm in truth_specs:
        label = "support" if cm is None else f"{cm:g}"
        truth = _truth_adjacency(args.truth, p, cm)
        if truth.shape[0] != p:
            raise io.ArtifactError(f"truth has p={truth.shape[0]}, estimate has p={p}")
        entry = {"true_edges": int(np.triu(truth, 1).sum())}
        upper = truth[np.triu_indices(p, 1)]
        # ROC needs both edges and non-edges in the truth
        if path is not None and upper.any() and not upper.all():
            adjs = path.adjacencies(args.rule)
            entry["auc"] = roc_auc(adjs, truth)
            for fpr, tpr in roc_points(adjs, truth):
                roc_rows.append((label, float(fpr), float(tpr)))
        if est_adj is not None:
            cm_ = confusion(est_adj, truth)
            entry.update(asdict(cm_), sp=cm_.sp, se=cm_.se)
        summary[label] = entry
        rows.append([label] + [entry.get(k, "") for k in ("true_edges", "auc", "tp", "tn", "fp", "fn", "sp", "se")])
    io.write_rows_csv(out / "metrics.csv", ["threshold", "true_edges", "auc", "tp", "tn", "fp", "fn", "sp", "se"], rows)
    if roc_rows:
        io.write_rows_csv(out / "roc.csv", ["threshold", "fpr", "tpr"], roc_rows)
    if est_adj is not None and args.hub_threshold is not None:
        summary["hubs"] = [(k + 1, d) for k, d in hub_degrees(est_adj, args.hub_threshold)]
    io.write_json(out / "metrics.json", summary)
    return {"out": str(out), "metrics": summary}


def cmd_benchmark(args) -> dict:
    out = _out_dir(args.out)
    config = EstimatorConfig(
        prior=args.prior,
        conditional_d=args.conditional_d,
        lambda_update=args.lambda_shape,
        iters=args.iters,
        burnin=args.burnin,
        delta_count=args.delta_count,
        rule=args.rule,
        eta=args.eta,
    )
    seeds = range(args.seed, args.seed + args.replicates)
    records = run_case1(args.n, args.p, args.hurst, seeds, config, jobs=args.jobs)
    rows = []
    for r in records:
        for c, auc in r["auc_by_threshold"].items():
            rows.append((r["seed"], c, auc, "", ""))
        for name, m in r["named"].items():
            rows.append((r["seed"], name, m["auc"], m["sp"], m["se"]))
    io.write_rows_csv(out / "metrics.csv", ["seed", "threshold", "auc", "sp", "se"], rows)
    summary = summarize(records)
    summary["config"] = asdict(config)
    summary["n"], summary["p"], summary["hurst"] = args.n, args.p, args.hurst
    io.write_json(out / "summary.json", summary)
    return {"out": str(out), "named": summary["named"]}


def _add_sampler_flags(sp, defaults: bool):
    d = RUN_DEFAULTS if defaults else {k: None for k in RUN_DEFAULTS}
    sp.add_argument("--seed", type=int, default=d["seed"])
    sp.add_argument("--iters", type=int, default=d["iters"])
    sp.add_argument("--burnin", type=int, default=d["burnin"])
    sp.add_argument("--prior", choices=["riw", "iw"], default=d["prior"])
    sp.add_argument("--conditional-d", dest="conditional_d", choices=["paper_ig", "exact_gig"], default=d["conditional_d"])
    sp.add_argument("--lambda-shape", dest="lambda_shape", choices=["paper", "derived", "exact"], default=d["lambda_shape"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riwgm", description="Regularized inverse-Wishart graphical model pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate data and ground truth")
    s.add_argument("--case", choices=["fgn", "sparse"], default="fgn")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--hurst", type=float, default=0.7)
    s.add_argument("--hubs", type=int, default=0)
    s.add_argument("--hub-degree", dest="hub_degree", type=int, default=0)
    s.add_argument("--extra-edges", dest="extra_edges", type=int, default=0)
    s.add_argument("--cm", type=float, nargs="*", default=[0.1, 0.005])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="run the Gibbs sampler on a data CSV")
    f.add_argument("--data")
    f.add_argument("--config", help="JSON run configuration; explicit flags override it")
    _add_sampler_flags(f, defaults=False)
    f.add_argument("--thin", type=int)
    f.add_argument("--store-draws", dest="store_draws", action="store_true", default=None)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("select", help="credible-region selection path from a fit")
    c.add_argument("--fit", required=True)
    c.add_argument("--delta-count", dest="delta_count", type=int, default=RUN_DEFAULTS["delta_count"])
    c.add_argument("--rule", choices=["and", "or"], default=RUN_DEFAULTS["rule"])
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_select)

    d = sub.add_parser("fdr", help="FDR point-estimate graph from a selection path")
    d.add_argument("--select", required=True)
    d.add_argument("--fit", required=True)
    d.add_argument("--eta", type=float, default=RUN_DEFAULTS["eta"])
    d.add_argument("--mode", choices=["complement", "printed"], default="complement")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_fdr)

    e = sub.add_parser("evaluate", help="confusion counts, ROC and AUC against a truth")
    e.add_argument("--truth", required=True, help="true precision CSV or true edge list CSV")
    e.add_argument("--select", help="selection-path directory (for ROC/AUC)")
    e.add_argument("--estimate", help="estimated edge list (for SP/SE)")
    e.add_argument("--p", type=int)
    e.add_argument("--cm", type=float, nargs="*", help="partial-correlation thresholds applied to a precision truth")
    e.add_argument("--rule", choices=["and", "or"], default=None)
    e.add_argument("--hub-threshold", dest="hub_threshold", type=int)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("benchmark", help="replicated fractional-Gaussian-noise benchmark")
    b.add_argument("--n", type=int, default=300)
    b.add_argument("--p", type=int, default=100)
    b.add_argument("--hurst", type=float, default=0.7)
    _add_sampler_flags(b, defaults=True)
    b.add_argument("--delta-count", dest="delta_count", type=int, default=50)
    b.add_argument("--rule", choices=["and", "or"], default="and")
    b.add_argument("--eta", type=float, default=0.2)
    b.add_argument("--replicates", type=int, default=10)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_benchmark)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except Exception as exc:  # reported as JSON for scripted callers
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(err), file=sys.stderr)
        return 1
    print(json.dumps(io.clean_json(result), default=io._default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
