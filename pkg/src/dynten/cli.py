"""Command-line pipeline: synth, embed, linkpred, cluster, anomaly.

Options resolve in three layers: built-in defaults, then a flat ``key = value``
config file (``--config``), then explicit command-line flags. Every run writes
a manifest echoing the fully resolved configuration; with a fixed seed the
CSV/JSON outputs are byte-identical across runs except for the measured
``timing_ms`` field of link-prediction reports.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, clustering, embed, io, linkpred, synth
from .graphs import DynamicNetwork
from .tensors import AlsConfig

log = logging.getLogger("dynten")

METHODS = ("dynacpd", "dynaocpd", "adj_last", "res_last", "adj_wt", "res_wt")

_EMBED_OPTS = [
    ("data", str, None, "dataset file or directory of per-snapshot files"),
    ("directed", bool, False, "treat edges as directed"),
    ("method", str, "dynacpd", f"one of {', '.join(METHODS)}"),
    ("d", int, 32, "embedding dimension"),
    ("rank", int, 0, "decomposition rank (0 = min(2 d, n))"),
    ("pre", str, "uniform", "pre-conditioning weights: uniform|exponential|gaussian"),
    ("alpha", float, 1.0, "exponential decay rate"),
    ("sigma", float, 8.0, "gaussian width"),
    ("post", str, "", "post-conditioning weight scheme (default: same as pre)"),
    ("post_alpha", float, 0.0, "exponential rate for post weights (default: alpha)"),
    ("post_sigma", float, 0.0, "gaussian width for post weights (default: sigma)"),
    ("variant", str, "raw", "per-slice adjacency variant: raw|symmetrized|katz"),
    ("omega", float, 0.0, "katz damping (checked against the spectral bound)"),
    ("teleport", float, 1e-3, "teleport epsilon for the symmetrized variant"),
    ("sweeps", int, 200, "ALS sweep budget"),
    ("tol", float, 1e-10, "ALS relative fit tolerance"),
    ("normalize", bool, False, "scale embedding rows to unit norm"),
    ("seed", int, 0, "master seed for all derived random streams"),
    ("out", str, "out", "output directory"),
]


def _weights(scheme, tau, alpha, sigma):
    if scheme == "uniform":
        return embed.make_weights("uniform", tau)
    if scheme == "exponential":
        return embed.make_weights("exponential", tau, alpha=alpha)
    if scheme == "gaussian":
        return embed.make_weights("gaussian", tau, sigma=sigma)
    raise ValueError(f"unknown weight scheme {scheme!r}")


def _load_net(cfg) -> DynamicNetwork:
    if not cfg.get("data"):
        raise ValueError("--data is required")
    return io.load_dynamic_network(cfg["data"], directed=cfg["directed"])


def compute_embedding(net: DynamicNetwork, cfg: dict):
    """Run the configured method; returns (embedding, diagnostics dict)."""
    tau = net.tau
    pre = _weights(cfg["pre"], tau, cfg["alpha"], cfg["sigma"])
    post_scheme = cfg["post"] or cfg["pre"]
    post = _weights(post_scheme, tau, cfg["post_alpha"] or cfg["alpha"],
                    cfg["post_sigma"] or cfg["sigma"])
    method = cfg["method"]
    diag = {"method": method, "pre_weights": [repr(float(x)) for x in pre.values],
            "post_weights": [repr(float(x)) for x in post.values]}
    if method in ("dynacpd", "dynaocpd"):
        decomposition = "cpd" if method == "dynacpd" else "ocpd"
        rank_cap = net.n if decomposition == "ocpd" else min(net.n * tau, net.n ** 2)
        rank = cfg["rank"] or min(2 * cfg["d"], rank_cap)
        als = AlsConfig(rank=rank, max_sweeps=cfg["sweeps"], rel_tol=cfg["tol"],
                        seed=cfg["seed"],
                        orthogonality="node_factor" if decomposition == "ocpd" else "none")
        dcfg = embed.DynEmbedConfig(
            d=cfg["d"], pre_weights=pre, post_weights=post,
            decomposition=decomposition, adjacency_variant=cfg["variant"],
            katz_omega=cfg["omega"], teleport=cfg["teleport"], als=als,
            seed=cfg["seed"])
        res = embed.dynamic_embedding(net, dcfg)
        matrix = res.embedding
        diag.update(rank=rank, fit=repr(float(res.model.fit)),
                    sweeps=res.model.sweeps,
                    sigmas=[repr(float(x)) for x in res.sigmas],
                    selected=[int(k) for k in res.selected])
    elif method == "adj_last":
        matrix = embed.adj_last_embedding(net, cfg["d"], seed=cfg["seed"])
    elif method == "res_last":
        matrix = embed.res_last_embedding(net, cfg["d"], seed=cfg["seed"])
    elif method == "adj_wt":
        matrix = embed.adj_wt_embedding(net, pre, cfg["d"], seed=cfg["seed"])
    elif method == "res_wt":
        matrix = embed.res_wt_embedding(net, pre, cfg["d"], seed=cfg["seed"])
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if cfg["normalize"]:
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        matrix = matrix / np.where(norms > 0, norms, 1.0)
    return matrix, diag


def _write_manifest(outdir: Path, command: str, cfg: dict, net, diag) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": {k: v for k, v in sorted(cfg.items())},
        "n": net.n,
        "tau": net.tau,
        "diagnostics": diag,
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_embed(cfg) -> int:
    net = _load_net(cfg)
    matrix, diag = compute_embedding(net, cfg)
    outdir = Path(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    io.write_embedding_csv(outdir / "embedding.csv", net.labels, matrix)
    _write_manifest(outdir, "embed", cfg, net, diag)
    log.info("wrote %s", outdir / "embedding.csv")
    return 0


def cmd_linkpred(cfg) -> int:
    net = _load_net(cfg)
    if net.tau < 2:
        raise ValueError("link prediction needs tau >= 2 (one slice is held out)")
    train = DynamicNetwork(labels=net.labels, snapshots=net.snapshots[:-1],
                           directed=net.directed)
    t0 = time.perf_counter()
    matrix, diag = compute_embedding(train, cfg)
    target = net.tau - 1
    snap = net.snapshots[target]
    n_edges = len({(min(i, j), max(i, j)) if not net.directed else (i, j)
                   for i, j, _ in snap.edge_list() if i != j})
    n_pos = min(cfg["n_pos"], n_edges) if cfg["n_pos"] else n_edges
    report = linkpred.evaluate_link_prediction(
        net, target, matrix, cfg["metric"], n_pos, cfg["seed"], folds=cfg["folds"])
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    outdir = Path(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    io.write_embedding_csv(outdir / "embedding.csv", net.labels, matrix)
    _write_manifest(outdir, "linkpred", cfg, net, diag)
    payload = {
        "method": cfg["method"],
        "metric": cfg["metric"],
        "d": cfg["d"],
        "AP": report["AP"],
        "AUC": report["AUC"],
        "cv_auc": report["cv_auc"],
        "n_pos": n_pos,
        "seed": cfg["seed"],
        "timing_ms": elapsed_ms,
    }
    (outdir / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if cfg["dump_scores"]:
        sample, probs = report["sample"], report["probabilities"]
        lines = ["i,j,separation,probability,label"]
        for (i, j), x, p, y in zip(sample.pairs, sample.separations, probs, sample.labels):
            lines.append(f"{int(i)},{int(j)},{float(x)!r},{float(p)!r},{int(y)}")
        (outdir / "scores.csv").write_text("\n".join(lines) + "\n")
    print(f"{cfg['method']} {cfg['metric']} d={cfg['d']}: "
          f"AP={report['AP']:.4f} AUC={report['AUC']:.4f}")
    return 0


def _cluster_common(cfg):
    if cfg.get("embedding"):
        labels, matrix = io.load_embedding_csv(cfg["embedding"])
        net = None
    else:
        net = _load_net(cfg)
        matrix, _ = compute_embedding(net, cfg)
        labels = [str(l) for l in net.labels]
    state = clustering.kmeans(matrix, cfg["k"], seed=cfg["seed"], alpha=cfg["alpha_decay"])
    assignments = clustering.assign_clusters(state, matrix)
    scores = clustering.anomaly_scores(state, matrix)
    threshold = cfg["threshold"] if cfg["threshold"] >= 0 else \
        clustering.suggest_threshold(scores, cfg["threshold_pct"])
    flags = clustering.classify_anomalies(scores, threshold)
    return labels, assignments, scores, flags, threshold


def cmd_cluster(cfg, name="clusters.csv") -> int:
    labels, assignments, scores, flags, threshold = _cluster_common(cfg)
    outdir = Path(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    lines = ["node,cluster,score,anomalous"]
    for lab, c, s, f in zip(labels, assignments, scores, flags):
        lines.append(f"{lab},{int(c)},{float(s)!r},{str(bool(f)).lower()}")
    (outdir / name).write_text("\n".join(lines) + "\n")
    meta = {"command": name.split(".")[0], "k": cfg["k"], "threshold": repr(float(threshold)),
            "seed": cfg["seed"], "version": __version__,
            "config": {k: v for k, v in sorted(cfg.items())}}
    (outdir / "manifest.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"k={cfg['k']} threshold={threshold:.6g} anomalous={int(flags.sum())}")
    return 0


def cmd_synth(cfg) -> int:
    if cfg["kind"] == "sbm":
        net, _ = synth.dynamic_sbm(cfg["n"], cfg["tau"], cfg["blocks"],
                                   cfg["p_in"], cfg["p_out"], cfg["drift"],
                                   seed=cfg["seed"])
    elif cfg["kind"] == "er":
        net = synth.dynamic_er(cfg["n"], cfg["tau"], cfg["p"], seed=cfg["seed"])
    else:
        raise ValueError(f"unknown synthetic kind {cfg['kind']!r}")
    io.write_dynamic_network(cfg["out"], net)
    print(f"wrote {cfg['out']}: n={net.n} tau={net.tau}")
    return 0


def read_config_file(path) -> dict:
    """Flat ``key = value`` pairs, # comments, later keys win."""
    values = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _coerce(value, typ):
    if isinstance(value, typ):
        return value
    if typ is bool:
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    return typ(value)


def _add_opts(parser, opts):
    for name, typ, default, help_text in opts:
        flag = "--" + name.replace("_", "-")
        if typ is bool:
            parser.add_argument(flag, action="store_true", default=argparse.SUPPRESS,
                                help=help_text)
        else:
            parser.add_argument(flag, type=typ, default=argparse.SUPPRESS,
                                help=f"{help_text} (default: {default})")


def _resolve(args, opts) -> dict:
    cfg = {name: default for name, _typ, default, _h in opts}
    types = {name: typ for name, typ, _d, _h in opts}
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = read_config_file(args.config)
    for key, val in file_cfg.items():
        if key not in cfg:
            raise ValueError(f"unknown config key {key!r}")
        cfg[key] = _coerce(val, types[key])
    for key, val in vars(args).items():
        if key in cfg:
            cfg[key] = val
    return cfg


_LINKPRED_OPTS = _EMBED_OPTS + [
    ("metric", str, "l2", "separation metric: l2|hadamard"),
    ("n_pos", int, 0, "positives per class (0 = all edges of the held-out slice)"),
    ("folds", int, 5, "stratified cross-validation folds"),
    ("dump_scores", bool, False, "also write scores.csv with per-pair decisions"),
]

_CLUSTER_OPTS = _EMBED_OPTS + [
    ("embedding", str, "", "use an existing embedding.csv instead of embedding"),
    ("k", int, 2, "number of clusters"),
    ("alpha_decay", float, 0.5, "streaming decay factor stored in the state"),
    ("threshold", float, -1.0, "anomaly threshold (-1 = percentile rule)"),
    ("threshold_pct", float, 95.0, "percentile for the default threshold"),
]

_SYNTH_OPTS = [
    ("kind", str, "sbm", "generator: sbm|er"),
    ("n", int, 100, "nodes"),
    ("tau", int, 8, "snapshots"),
    ("blocks", int, 2, "SBM blocks"),
    ("p_in", float, 0.2, "within-block link probability"),
    ("p_out", float, 0.01, "cross-block link probability"),
    ("drift", float, 0.05, "per-slice membership switch / dyad churn rate"),
    ("p", float, 0.1, "ER link probability"),
    ("seed", int, 0, "generator seed"),
    ("out", str, "synthetic.edges", "output edge-list file"),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynten",
        description="dynamic-network embeddings via sparse tensor decompositions")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts, fn in (("embed", _EMBED_OPTS, cmd_embed),
                           ("linkpred", _LINKPRED_OPTS, cmd_linkpred),
                           ("cluster", _CLUSTER_OPTS, cmd_cluster),
                           ("anomaly", _CLUSTER_OPTS, None),
                           ("synth", _SYNTH_OPTS, cmd_synth)):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None,
                       help="flat key = value config file; flags override it")
        _add_opts(p, opts)
        p.set_defaults(_opts=opts, _fn=fn)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("DYNTEN_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args, args._opts)
        if args.command == "anomaly":
            return cmd_cluster(cfg, name="anomalies.csv")
        return args._fn(cfg)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
