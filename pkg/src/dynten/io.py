"""File formats: snapshot edge lists, embedding CSV, CP model archives.

Edge-list format, one line per edge, whitespace separated, ``#`` comments:

    t src_label dst_label [weight]     (combined file; t non-decreasing)
    src_label dst_label [weight]       (one file per snapshot in a directory)

weight defaults to 1.0. A comment line ``# nodes: a b c`` may declare labels
that should exist even if isolated in every snapshot. Floats are written with
``repr`` so values round-trip exactly.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .graphs import DynamicNetwork, align_snapshots
from .tensors import AlsConfig, CPModel

_NODES_DIRECTIVE = "# nodes:"


def _parse_lines(lines, with_time, where):
    rows = []
    declared = []
    for ln, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith(_NODES_DIRECTIVE):
            declared.extend(line[len(_NODES_DIRECTIVE):].split())
            continue
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        want = (3, 4) if with_time else (2, 3)
        if len(parts) not in want:
            raise ValueError(f"{where}:{ln}: expected {want} fields, got {len(parts)}")
        try:
            w = float(parts[-1]) if len(parts) == want[1] else 1.0
        except ValueError:
            raise ValueError(f"{where}:{ln}: bad weight {parts[-1]!r}") from None
        if with_time:
            rows.append((parts[0], parts[1], parts[2], w))
        else:
            rows.append((parts[0], parts[1], w))
    return rows, declared


def load_dynamic_network(path, directed: bool = False) -> DynamicNetwork:
    """Load a combined edge-list file, or a directory of per-snapshot files
    (snapshot order = sorted file names)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.is_file())
        if not files:
            raise ValueError(f"no snapshot files in {path}")
        per_slice = []
        declared = []
        for f in files:
            rows, extra = _parse_lines(f.read_text().splitlines(), False, str(f))
            per_slice.append([(s, d, w) for s, d, w in rows])
            declared.extend(extra)
    else:
        rows, declared = _parse_lines(path.read_text().splitlines(), True, str(path))
        if not rows and not declared:
            raise ValueError(f"{path}: empty dataset")
        slices_keys = []
        per_key = {}
        prev = None
        for t, s, d, w in rows:
            if prev is not None and _time_key(t) < _time_key(prev):
                raise ValueError(f"{path}: time column must be non-decreasing "
                                 f"({t!r} after {prev!r})")
            prev = t
            if t not in per_key:
                per_key[t] = []
                slices_keys.append(t)
            per_key[t].append((s, d, w))
        per_slice = [per_key[k] for k in slices_keys] or [[]]
    labels = [declared] + [[] for _ in per_slice[1:]] if declared else None
    return align_snapshots(per_slice, snapshot_labels=labels, directed=directed)


def _time_key(token: str):
    try:
        return (0, float(token), token)
    except ValueError:
        return (1, 0.0, token)


def write_dynamic_network(path, net: DynamicNetwork) -> None:
    """Write a combined edge-list file (with a node-list directive so globally
    isolated nodes survive a round trip)."""
    lines = [_NODES_DIRECTIVE + " " + " ".join(str(l) for l in net.labels)]
    for t, snap in enumerate(net.snapshots):
        seen = set()
        for i, j, w in snap.edge_list():
            if not net.directed:
                key = (min(i, j), max(i, j))
                if key in seen:
                    continue
                seen.add(key)
            lines.append(f"{t} {net.labels[i]} {net.labels[j]} {w!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_embedding_csv(path, labels, embedding) -> None:
    emb = np.asarray(embedding, dtype=np.float64)
    if emb.ndim != 2 or emb.shape[0] != len(labels):
        raise ValueError("embedding must be n x d with one row per label")
    header = "node," + ",".join(f"dim_{k}" for k in range(emb.shape[1]))
    lines = [header]
    for lab, row in zip(labels, emb):
        lines.append(str(lab) + "," + ",".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_embedding_csv(path):
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("node,"):
        raise ValueError(f"{path}: not an embedding CSV")
    labels, rows = [], []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        labels.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    return labels, np.asarray(rows)


def _write_matrix_csv(path, M):
    lines = [",".join(repr(float(x)) for x in row) for row in np.atleast_2d(M)]
    Path(path).write_text("\n".join(lines) + "\n")


def _read_matrix_csv(path):
    rows = [[float(x) for x in line.split(",")]
            for line in Path(path).read_text().splitlines() if line]
    return np.asarray(rows)


def save_cp_model(directory, model: CPModel, config: AlsConfig | None = None) -> None:
    """Persist a decomposition as metadata.json plus one CSV per factor."""
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    meta = {
        "rank": model.rank,
        "dims": list(model.dims),
        "lambdas": [repr(float(x)) for x in model.lambdas],
        "fit": repr(float(model.fit)),
        "sweeps": model.sweeps,
    }
    if config is not None:
        meta["config"] = {
            "rank": config.rank, "max_sweeps": config.max_sweeps,
            "rel_tol": config.rel_tol, "init": config.init,
            "orthogonality": config.orthogonality, "seed": config.seed,
        }
    (directory / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    _write_matrix_csv(directory / "factor_a.csv", model.factor_a)
    _write_matrix_csv(directory / "factor_b.csv", model.factor_b)
    _write_matrix_csv(directory / "factor_c.csv", model.factor_c)


def load_cp_model(directory) -> CPModel:
    directory = Path(directory)
    meta = json.loads((directory / "metadata.json").read_text())
    model = CPModel(
        lambdas=np.asarray([float(x) for x in meta["lambdas"]]),
        factor_a=_read_matrix_csv(directory / "factor_a.csv"),
        factor_b=_read_matrix_csv(directory / "factor_b.csv"),
        factor_c=_read_matrix_csv(directory / "factor_c.csv"),
        fit=float(meta["fit"]),
        sweeps=int(meta.get("sweeps", 0)),
    )
    if list(model.dims) != meta["dims"] or model.rank != meta["rank"]:
        raise ValueError(f"{directory}: metadata does not match factor shapes")
    return model
