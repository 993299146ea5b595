"""Reading and writing chain, path, FDR and metric artifacts.

Matrices are plain CSV without header, edge lists are CSV with an ``i,j``
header and 1-based node indices, manifests are JSON. Floats are written with
17 significant digits so that a write/read cycle is lossless.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .sampler import ChainSamples
from .selection import DeltaGrid, SelectionPath

__all__ = [
    "ArtifactError",
    "FLOAT_FMT",
    "read_matrix_csv",
    "write_matrix_csv",
    "read_edge_list",
    "write_edge_list",
    "write_json",
    "read_json",
    "DRAW_MAGIC",
    "write_draws",
    "read_draws",
    "write_chain",
    "read_chain",
    "write_path",
    "read_path",
    "write_dot",
    "write_rows_csv",
]

FLOAT_FMT = "%.17g"
DRAW_MAGIC = b"RIWC"
DRAW_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


class ArtifactError(RuntimeError):
    """Missing, unreadable or inconsistent artifact file."""


def read_matrix_csv(path) -> np.ndarray:
    """Numeric CSV without header; malformed rows are reported by line number."""
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"file not found: {path}")
    rows = []
    width = None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ArtifactError(f"{path}: line {lineno}: non-numeric entry") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ArtifactError(f"{path}: line {lineno}: expected {width} columns, found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ArtifactError(f"{path}: no data rows")
    arr = np.array(rows)
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
        raise ArtifactError(f"{path}: non-finite value in data row {bad + 1}")
    return arr


def write_matrix_csv(path, m) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    np.savetxt(path, m, delimiter=",", fmt=FLOAT_FMT)


def write_edge_list(path, edges) -> None:
    """Write 0-based ``(i, j)`` pairs as 1-based rows under an ``i,j`` header."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j"])
        for i, j in edges:
            w.writerow([int(i) + 1, int(j) + 1])


def read_edge_list(path) -> list[tuple[int, int]]:
    """Edge list back as 0-based ``(i, j)`` with ``i < j``."""
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"file not found: {path}")
    out = []
    with path.open(newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or [h.strip() for h in header] != ["i", "j"]:
            raise ArtifactError(f"{path}: line 1: expected header 'i,j'")
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            try:
                i, j = (int(c) for c in row)
            except ValueError:
                raise ArtifactError(f"{path}: line {lineno}: expected two integer node indices") from None
            if i < 1 or j < 1 or i == j:
                raise ArtifactError(f"{path}: line {lineno}: invalid edge ({i}, {j})")
            out.append((min(i, j) - 1, max(i, j) - 1))
    return out


def edges_to_adjacency(edges, p: int) -> np.ndarray:
    adj = np.zeros((p, p), dtype=bool)
    for i, j in edges:
        if max(i, j) >= p:
            raise ArtifactError(f"edge ({i + 1}, {j + 1}) outside a graph on {p} nodes")
        adj[i, j] = adj[j, i] = True
    return adj


def adjacency_to_edges(adj) -> list[tuple[int, int]]:
    i, j = np.nonzero(np.triu(np.asarray(adj, dtype=bool), 1))
    return list(zip(i.tolist(), j.tolist()))


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def clean_json(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean_json(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj) -> None:
    with Path(path).open("w") as fh:
        json.dump(clean_json(obj), fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from None


def write_draws(path, omega, d, lam) -> None:
    """Binary draw file: header then one record ``(Omega, d, lambda)`` per draw.

    Header is ``<4sIIQ``: magic ``RIWC``, format version, p, draw count. Each
    record holds ``p*p + 2p`` little-endian float64 values, Omega row-major.
    """
    omega = np.asarray(omega, dtype="<f8")
    count, p = omega.shape[0], omega.shape[1]
    rec = np.concatenate(
        [omega.reshape(count, p * p), np.asarray(d, dtype="<f8").reshape(count, p), np.asarray(lam, dtype="<f8").reshape(count, p)],
        axis=1,
    )
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(DRAW_MAGIC, DRAW_VERSION, p, count))
        fh.write(np.ascontiguousarray(rec).tobytes())


def read_draws(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ArtifactError(f"{path}: truncated header")
    magic, version, p, count = _HEADER.unpack_from(raw)
    if magic != DRAW_MAGIC:
        raise ArtifactError(f"{path}: bad magic {magic!r}")
    if version != DRAW_VERSION:
        raise ArtifactError(f"{path}: unsupported version {version}")
    width = p * p + 2 * p
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != count * width:
        raise ArtifactError(f"{path}: expected {count} draws of {width} values, found {body.size} values")
    body = body.reshape(count, width)
    return body[:, : p * p].reshape(count, p, p).copy(), body[:, p * p : p * p + p].copy(), body[:, p * p + p :].copy()


def _node_name(kind: str, k: int) -> str:
    return f"{kind}_{k + 1:04d}.csv"


def write_chain(directory, samples: ChainSamples, hyper_dict: dict, extra: dict | None = None) -> Path:
    """Serialize ChainSamples into ``directory`` (created if needed)."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    nodes = out / "nodes"
    nodes.mkdir(exist_ok=True)
    p = samples.p
    meta = {
        "format": "riwgm-chain",
        "version": 1,
        "p": p,
        "count": samples.count,
        "covariance": "full" if samples.full_covariance else "diag",
        "chain": samples.meta,
        "hyperparameters": hyper_dict,
        "wishart_convention": "Omega ~ Wishart(df=b+p-1, scale=D^-1); posterior df = b+n+p-1",
        "node_indexing": "1-based file names; coefficients listed for j != k in ascending order",
        "draws": samples.draws_omega is not None,
    }
    if extra:
        meta.update(extra)
    write_json(out / "meta.json", meta)
    write_matrix_csv(out / "omega_mean.csv", samples.omega_mean)
    write_matrix_csv(out / "d_mean.csv", samples.d_mean[None, :])
    write_matrix_csv(out / "lambda_mean.csv", samples.lam_mean[None, :])
    for k in range(p):
        write_matrix_csv(nodes / _node_name("beta", k), samples.beta_hat(k)[None, :])
        cov = samples.beta_cov(k)
        write_matrix_csv(nodes / _node_name("sigma", k), cov if samples.full_covariance else np.diag(cov)[None, :])
    if samples.draws_omega is not None:
        write_draws(out / "draws.bin", samples.draws_omega, samples.draws_d, samples.draws_lam)
    return out


def read_chain(directory) -> ChainSamples:
    """Inverse of :func:`write_chain` (centered sums rebuilt from covariances)."""
    src = Path(directory)
    meta = read_json(src / "meta.json")
    if meta.get("format") != "riwgm-chain":
        raise ArtifactError(f"{src}: not a chain artifact directory")
    p, count = int(meta["p"]), int(meta["count"])
    full = meta["covariance"] == "full"
    omega_mean = read_matrix_csv(src / "omega_mean.csv")
    if omega_mean.shape != (p, p):
        raise ArtifactError(f"{src}/omega_mean.csv: expected {p}x{p}, found {omega_mean.shape}")
    coef_mean = np.zeros((p, p))
    m2 = np.zeros((p, p, p)) if full else np.zeros((p, p))
    others = [np.delete(np.arange(p), k) for k in range(p)]
    for k in range(p):
        beta = read_matrix_csv(src / "nodes" / _node_name("beta", k)).ravel()
        sig = read_matrix_csv(src / "nodes" / _node_name("sigma", k))
        if beta.size != p - 1:
            raise ArtifactError(f"node {k + 1}: expected {p - 1} coefficients, found {beta.size}")
        coef_mean[k, others[k]] = beta
        if full:
            if sig.shape != (p - 1, p - 1):
                raise ArtifactError(f"node {k + 1}: covariance shape {sig.shape}")
            m2[k][np.ix_(others[k], others[k])] = sig * (count - 1)
        else:
            m2[k, others[k]] = sig.ravel() * (count - 1)
    out = ChainSamples(
        omega_mean=omega_mean,
        coef_mean=coef_mean,
        coef_m2=m2,
        count=count,
        d_mean=read_matrix_csv(src / "d_mean.csv").ravel(),
        lam_mean=read_matrix_csv(src / "lambda_mean.csv").ravel(),
        meta=meta.get("chain", {}),
    )
    if meta.get("draws") and (src / "draws.bin").is_file():
        out.draws_omega, out.draws_d, out.draws_lam = read_draws(src / "draws.bin")
    return out


def write_path(directory, path: SelectionPath) -> Path:
    """Grid CSV, per-penalty edge lists for both rules and a JSON manifest."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(out / "grid.csv", ["index", "delta"], [(m + 1, d) for m, d in enumerate(path.grid.values)])
    files = {}
    for rule in ("and", "or"):
        sub = out / f"edges_{rule}"
        sub.mkdir(exist_ok=True)
        names = []
        for m in range(path.grid.size):
            name = f"delta_{m + 1:03d}.csv"
            write_edge_list(sub / name, adjacency_to_edges(path.adjacency_at(m, rule)))
            names.append(f"edges_{rule}/{name}")
        files[rule] = names
    supports = out / "supports.csv"
    # node k selected j at grid index m: rows (m, k, j), 1-based
    m_i, k_i, j_i = np.nonzero(path.supports)
    write_rows_csv(supports, ["m", "k", "j"], zip((m_i + 1).tolist(), (k_i + 1).tolist(), (j_i + 1).tolist()))
    write_json(
        out / "manifest.json",
        {
            "format": "riwgm-path",
            "version": 1,
            "p": path.p,
            "rule": path.rule,
            "grid_size": path.grid.size,
            "grid_file": "grid.csv",
            "supports_file": "supports.csv",
            "edge_files": files,
            "terminal_knots": path.terminals,
        },
    )
    return out


def read_path(directory) -> SelectionPath:
    src = Path(directory)
    man = read_json(src / "manifest.json")
    if man.get("format") != "riwgm-path":
        raise ArtifactError(f"{src}: not a selection-path directory")
    p, r = int(man["p"]), int(man["grid_size"])
    grid_rows = _read_rows(src / man["grid_file"], ["index", "delta"])
    grid = DeltaGrid(np.array([float(row[1]) for row in grid_rows]))
    if grid.size != r:
        raise ArtifactError(f"{src}: grid has {grid.size} values, manifest says {r}")
    sup = np.zeros((r, p, p), dtype=bool)
    for row in _read_rows(src / man["supports_file"], ["m", "k", "j"]):
        m, k, j = (int(v) - 1 for v in row)
        sup[m, k, j] = True
    return SelectionPath(grid, sup, man["rule"], np.asarray(man.get("terminal_knots", []), dtype=float))


def _read_rows(path, header):
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise ArtifactError(f"{path}: line 1: expected header {','.join(header)}")
    return [r for r in rows[1:] if r]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return v


def write_rows_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_dot(path, adjacency, name: str = "G", weights=None) -> None:
    """Undirected DOT graph listing every node, 1-based labels."""
    adj = np.asarray(adjacency, dtype=bool)
    p = adj.shape[0]
    lines = [f"graph {name} {{"]
    lines += [f"  {k + 1};" for k in range(p)]
    for i, j in adjacency_to_edges(adj):
        attr = f' [weight="{FLOAT_FMT % weights[i, j]}"]' if weights is not None else ""
        lines.append(f"  {i + 1} -- {j + 1}{attr};")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")
