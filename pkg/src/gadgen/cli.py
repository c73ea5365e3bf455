"""Command line surface: dataset prep, training, scoring, evaluation,
benchmarking, sensitivity sweeps, and data export.

Exit codes are stable for scripting: 0 success, 2 configuration or
contract error, 3 data error, 4 numeric failure. Every subcommand echoes
its fully resolved configuration (seeds included) as the first output
line, and writes only to explicitly named paths. GAD_THREADS caps how
many worker processes a sweep may spawn.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .align import align
from .errors import ConfigError, DataError, GadError, NumericError
from .graph import Graph, load_graph, normalize_adjacency, save_graph
from .inject import InjectionSpec, default_spec, inject
from .metrics import report
from .pipeline import embed_graph, score_few_shot
from .scoring import ContextSplit, ScoreVector, cross_attend
from .synth import DomainSpec, acceptance_preset, generate
from .train import Checkpoint, init_params, log_jsonl, train
from .zeroshot import score_zero_shot


def _parse_ids(text: str) -> np.ndarray:
    try:
        return np.array([int(x) for x in text.split(",") if x != ""], dtype=np.int64)
    except ValueError as e:
        raise ConfigError(f"bad node id list {text!r}") from e


def _write_scores_csv(path: Path, sv: ScoreVector) -> None:
    order = np.argsort(sv.node_ids, kind="stable")
    lines = ["node_id,score"]
    lines += [f"{int(sv.node_ids[i])},{float(sv.scores[i])!r}" for i in order]
    path.write_text("\n".join(lines) + "\n")


def _read_scores_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    rows = Path(path).read_text().strip().splitlines()
    if not rows or rows[0] != "node_id,score":
        raise DataError(f"{path}: expected header 'node_id,score'")
    ids, scores = [], []
    for line in rows[1:]:
        node, value = line.split(",")
        ids.append(int(node))
        scores.append(float(value))
    return np.array(ids, dtype=np.int64), np.array(scores)


def _write_matrix_csv(path: Path, ids: np.ndarray, matrix: np.ndarray, prefix: str) -> None:
    header = "node_id," + ",".join(f"{prefix}{j}" for j in range(matrix.shape[1]))
    lines = [header]
    lines += [f"{int(i)}," + ",".join(repr(float(v)) for v in row)
              for i, row in zip(ids, matrix)]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_inject(args) -> None:
    g = load_graph(args.graph)
    if args.spec:
        spec = InjectionSpec.from_json(Path(args.spec).read_text())
    else:
        spec = default_spec(g.node_count, seed=args.seed)
        overrides = {}
        if args.clique_size is not None:
            overrides["clique_size"] = args.clique_size
        if args.clique_count is not None:
            overrides["clique_count"] = args.clique_count
        if args.attribute_count is not None:
            overrides["attribute_count"] = args.attribute_count
        if args.candidate_pool is not None:
            overrides["candidate_pool"] = args.candidate_pool
        spec = replace(spec, **overrides)
    print(json.dumps({"resolved_spec": json.loads(spec.to_json())}, sort_keys=True))
    out = inject(g, spec)
    save_graph(out, args.out)
    print(json.dumps({"written": str(args.out), "n": out.node_count,
                      "m": out.edge_count, "anomalies": int(out.labels.sum())},
                     sort_keys=True))


def cmd_train(args) -> None:
    resolved = cfgmod.load(args.config)
    print(cfgmod.echo(resolved))
    paths = list(args.datasets) + list(resolved["datasets"])
    if not paths:
        raise ConfigError("no training datasets given")
    graphs = [load_graph(p) for p in paths]
    tcfg = cfgmod.train_config(resolved, datasets=tuple(str(p) for p in paths))
    ck = train(graphs, tcfg, log=log_jsonl)
    ck.save(args.out)
    print(json.dumps({"checkpoint": str(args.out), "epochs": ck.epoch}, sort_keys=True))


def cmd_score(args) -> None:
    resolved = cfgmod.load(args.config)
    print(cfgmod.echo(resolved))
    ck = Checkpoint.load(args.checkpoint)
    g = load_graph(args.graph)
    enc = ck.encoder_config()

    if args.mode == "fewshot":
        if not args.normal_ids:
            raise ConfigError("fewshot scoring requires --normal-ids")
        if args.trace:
            raise ConfigError("--trace applies to zeroshot only")
        ids = _parse_ids(args.normal_ids)
        sv, _ = score_few_shot(g, ck.params, enc, ck.unified_dim, ids,
                               align_mode=ck.align_mode)
    else:
        if args.normal_ids:
            raise ConfigError("zeroshot scoring forbids --normal-ids")
        zcfg = cfgmod.zero_shot_config(resolved)
        sv, trace = score_zero_shot(g, ck.params, enc, ck.unified_dim, zcfg,
                                    align_mode=ck.align_mode)
        if args.trace:
            trace.save(args.trace)
    _write_scores_csv(Path(args.out), sv)
    print(json.dumps({"scores": str(args.out), "nodes": int(sv.node_ids.size)},
                     sort_keys=True))


def cmd_eval(args) -> None:
    ids, scores = _read_scores_csv(Path(args.scores))
    g = load_graph(args.graph)
    if g.labels is None:
        raise DataError(f"{args.graph}: graph has no labels to evaluate against")
    if np.unique(ids).size != ids.size:
        raise DataError("duplicate node ids in scores CSV")
    if ids.min(initial=0) < 0 or ids.max(initial=-1) >= g.node_count:
        raise DataError(f"scores reference node ids outside [0, {g.node_count})")
    rep = report(scores, g.labels[ids])
    if args.out:
        Path(args.out).write_text(rep.to_json() + "\n")
    print(rep.to_json())


def _bench_graph(n: int, edge_factor: float, seed: int) -> Graph:
    spec = DomainSpec(name=f"bench-{edge_factor}x", n=n, raw_dim=64, cluster_count=4,
                      intra_p=min(1.0, 0.02 * edge_factor),
                      inter_p=min(1.0, 0.001 * edge_factor),
                      separation=16.0,
                      injection=InjectionSpec(clique_size=10, clique_count=1,
                                              attribute_count=10, candidate_pool=20),
                      seed=seed)
    return generate(spec)


def cmd_bench(args) -> None:
    resolved = cfgmod.load(args.config)
    print(cfgmod.echo(resolved))
    enc = cfgmod.encoder_config(resolved)
    d_u = int(resolved["unified_dim"])
    if args.checkpoint:
        ck = Checkpoint.load(args.checkpoint)
        params, enc, d_u = ck.params, ck.encoder_config(), ck.unified_dim
    else:
        params = init_params(d_u, enc, int(resolved["seed"]))

    factors = [float(x) for x in args.edge_factors.split(",")]
    if len(factors) < 2:
        raise ConfigError("bench needs at least two edge factors")
    n_k = int(resolved["zero_shot"]["n_k"])
    rows = []
    rng = np.random.Generator(np.random.PCG64(int(resolved["seed"])))
    for factor in factors:
        g = _bench_graph(args.nodes, factor, seed=int(resolved["seed"]))
        timings = {"alignment": [], "encoding": [], "scoring": []}
        context = np.sort(rng.choice(g.node_count, size=n_k, replace=False))
        split = ContextSplit(context_ids=context,
                             query_ids=np.setdiff1d(np.arange(g.node_count), context))
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            aligned = align(g, d_u)
            t1 = time.perf_counter()
            adj = normalize_adjacency(g)
            from .encoder import encode
            emb = encode(adj, aligned.matrix, params, enc)
            t2 = time.perf_counter()
            from .scoring import score_split
            score_split(emb.h_matrix, split, params)
            t3 = time.perf_counter()
            timings["alignment"].append(t1 - t0)
            timings["encoding"].append(t2 - t1)
            timings["scoring"].append(t3 - t2)
        for phase, ts in timings.items():
            rows.append({"n": g.node_count, "m": g.edge_count, "factor": factor,
                         "phase": phase, "seconds": float(np.median(ts))})
    doc = json.dumps({"bench": rows}, sort_keys=True)
    if args.out:
        Path(args.out).write_text(doc + "\n")
    print(doc)


def _sweep_job(job: dict) -> dict:
    resolved = job["resolved"]
    param, value, seed = job["param"], job["value"], job["seed"]
    overlay = json.loads(json.dumps(resolved))
    overlay["seed"] = seed
    if param == "n_k":
        overlay["train"]["n_k"] = value
        overlay["zero_shot"]["n_k"] = value
    elif param == "rounds":
        overlay["zero_shot"]["rounds"] = value
    elif param == "hops":
        overlay["encoder"]["hops"] = value
    elif param == "hidden":
        overlay["encoder"]["hidden"] = value

    train_graphs = [load_graph(p) for p in job["train_paths"]]
    eval_graphs = [load_graph(p) for p in job["eval_paths"]]
    tcfg = cfgmod.train_config(overlay, datasets=tuple(job["train_paths"]))
    ck = train(train_graphs, tcfg)

    enc = ck.encoder_config()
    zcfg = cfgmod.zero_shot_config(overlay)
    few, zero = [], []
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x5C0])))
    n_k = int(overlay["zero_shot"]["n_k"])
    for g in eval_graphs:
        if g.labels is None:
            raise DataError(f"sweep eval graph {g.name!r} has no labels")
        normals = np.flatnonzero(g.labels == 0)
        ctx = np.sort(rng.choice(normals, size=min(n_k, normals.size - 1), replace=False))
        sv, _ = score_few_shot(g, ck.params, enc, ck.unified_dim, ctx,
                               align_mode=ck.align_mode)
        few.append(report(sv.scores, g.labels[sv.node_ids]).auroc)
        zsv, _ = score_zero_shot(g, ck.params, enc, ck.unified_dim, zcfg,
                                 align_mode=ck.align_mode)
        zero.append(report(zsv.scores, g.labels).auroc)
    return {"param": param, "value": value, "seed": seed,
            "auroc_fewshot": float(np.mean(few)), "auroc_zeroshot": float(np.mean(zero))}


def cmd_sweep(args) -> None:
    resolved = cfgmod.load(args.config)
    print(cfgmod.echo(resolved))
    values = [int(x) for x in args.values.split(",")]
    if args.param not in ("n_k", "hops", "rounds", "hidden"):
        raise ConfigError(f"cannot sweep parameter {args.param!r}")
    if not args.train_data or not args.eval_data:
        raise ConfigError("sweep needs --train-data and --eval-data")

    jobs = [{"resolved": resolved, "param": args.param, "value": v,
             "seed": int(resolved["seed"]) + r,
             "train_paths": list(args.train_data), "eval_paths": list(args.eval_data)}
            for v in values for r in range(args.repeats)]

    max_workers = int(os.environ.get("GAD_THREADS", "0")) or min(len(jobs), os.cpu_count() or 1)
    if max_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]

    table = []
    for v in values:
        rows = [r for r in results if r["value"] == v]
        table.append({
            "param": args.param, "value": v,
            "seeds": [r["seed"] for r in rows],
            "auroc_fewshot_mean": float(np.mean([r["auroc_fewshot"] for r in rows])),
            "auroc_fewshot_std": float(np.std([r["auroc_fewshot"] for r in rows])),
            "auroc_zeroshot_mean": float(np.mean([r["auroc_zeroshot"] for r in rows])),
            "auroc_zeroshot_std": float(np.std([r["auroc_zeroshot"] for r in rows])),
        })
    doc = json.dumps({"sweep": table, "rows": results}, sort_keys=True)
    if args.out:
        Path(args.out).write_text(doc + "\n")
    print(doc)


def cmd_export(args) -> None:
    resolved = cfgmod.load(args.config)
    print(cfgmod.echo(resolved))
    g = load_graph(args.graph)
    out = Path(args.out)
    ids = np.arange(g.node_count)

    if args.what == "edges":
        pairs = g.edge_pairs()
        lines = ["src,dst"] + [f"{int(a)},{int(b)}" for a, b in pairs]
        out.write_text("\n".join(lines) + "\n")
    elif args.what == "features":
        _write_matrix_csv(out, ids, g.features, "f")
    elif args.what == "aligned":
        aligned = align(g, int(resolved["unified_dim"]),
                        mode=str(resolved["align_mode"]), seed=int(resolved["seed"]))
        _write_matrix_csv(out, ids, aligned.matrix, "c")
    else:
        if not args.checkpoint:
            raise ConfigError(f"--what {args.what} requires --checkpoint")
        ck = Checkpoint.load(args.checkpoint)
        _, emb = embed_graph(g, ck.params, ck.encoder_config(), ck.unified_dim,
                             align_mode=ck.align_mode)
        if args.what == "embeddings":
            _write_matrix_csv(out, ids, emb.h_matrix, "h")
        else:  # attention
            if not args.normal_ids:
                raise ConfigError("--what attention requires --normal-ids")
            ctx = _parse_ids(args.normal_ids)
            qry = np.setdiff1d(ids, ctx)
            attn = cross_attend(emb.h_matrix[qry], emb.h_matrix[ctx], ck.params)
            _write_matrix_csv(out, qry, attn.weights, "w")
    print(json.dumps({"written": str(out), "what": args.what}, sort_keys=True))


def cmd_synth(args) -> None:
    out = Path(args.out)
    if args.preset:
        if args.preset != "acceptance":
            raise ConfigError(f"unknown preset {args.preset!r}")
        out.mkdir(parents=True, exist_ok=True)
        train_specs, test_specs = acceptance_preset(base_seed=args.seed)
        manifest = {"train": [], "test": []}
        for role, specs in (("train", train_specs), ("test", test_specs)):
            for spec in specs:
                g = generate(spec)
                path = out / f"{spec.name}.gadg"
                save_graph(g, path)
                manifest[role].append({"name": spec.name, "path": str(path),
                                       "n": g.node_count, "m": g.edge_count,
                                       "anomalies": int(g.labels.sum())})
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        print(json.dumps({"preset": "acceptance", "dir": str(out)}, sort_keys=True))
    else:
        if not args.spec:
            raise ConfigError("synth needs --preset or --spec")
        spec = DomainSpec.from_json(Path(args.spec).read_text())
        g = generate(spec)
        save_graph(g, out)
        print(json.dumps({"written": str(out), "n": g.node_count, "m": g.edge_count,
                          "anomalies": int(g.labels.sum())}, sort_keys=True))


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gad",
        description="Generalist graph anomaly detection: train once, score unseen graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inject", help="inject structural/attribute anomalies into a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--spec", help="InjectionSpec JSON file")
    p.add_argument("--clique-size", type=int, dest="clique_size")
    p.add_argument("--clique-count", type=int, dest="clique_count")
    p.add_argument("--attribute-count", type=int, dest="attribute_count")
    p.add_argument("--candidate-pool", type=int, dest="candidate_pool")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("train", help="train one model on a collection of labeled graphs")
    p.add_argument("datasets", nargs="*", help="GADG dataset paths")
    p.add_argument("--config")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score anomalies on an unseen graph")
    p.add_argument("--mode", choices=("fewshot", "zeroshot"), required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True, help="scores CSV output path")
    p.add_argument("--normal-ids", dest="normal_ids",
                   help="comma-separated labeled normal node ids (fewshot only)")
    p.add_argument("--trace", help="zero-shot trace JSON output path")
    p.add_argument("--config")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="AUROC/AUPRC of a scores CSV against a labeled graph")
    p.add_argument("--scores", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="wall-time of alignment/encoding/scoring phases")
    p.add_argument("--nodes", type=int, default=4000)
    p.add_argument("--edge-factors", dest="edge_factors", default="1,4")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--checkpoint")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="metric-vs-value table for one hyperparameter")
    p.add_argument("--param", required=True, choices=("n_k", "hops", "rounds", "hidden"))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--train-data", dest="train_data", nargs="+")
    p.add_argument("--eval-data", dest="eval_data", nargs="+")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="CSV export of graph-derived matrices")
    p.add_argument("--graph", required=True)
    p.add_argument("--what", required=True,
                   choices=("aligned", "embeddings", "attention", "edges", "features"))
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--normal-ids", dest="normal_ids")
    p.add_argument("--config")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("synth", help="generate synthetic benchmark graphs")
    p.add_argument("--preset", help="'acceptance' writes the fixed acceptance-suite graphs")
    p.add_argument("--spec", help="DomainSpec JSON file for a single graph")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 4
    except GadError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
