"""Persistence: dataset files, model checkpoints, edge lists and layer dumps.

Byte layouts are specified in ``docs/formats.md``. All binary numbers are
little-endian; floats are IEEE-754 binary64.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError, EdgeListError, LengthMismatchError, SchemaError, TruncatedFileError,
    VersionMismatchError,
)
from .synth import SIMILARITY_KINDS, Dataset

MAGIC = b"GSLD"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIIIIB7x")  # 28 bytes
TRAILER_LEN = struct.Struct("<Q")
MODEL_FORMAT_VERSION = 1
F8 = np.dtype("<f8")


def _payload_size(count: int, n: int, p: int) -> int:
    return count * (2 * n * n + n * p) * 8


def write_dataset(ds: Dataset, path) -> None:
    """Write ``ds`` to ``path``. Concurrent writers to one path must be serialized by the caller."""
    count, n, p = len(ds), ds.n, ds.p
    meta = dict(ds.metadata)
    meta["sizes"] = dict(ds.sizes)
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, count, n, p, SIMILARITY_KINDS.index(ds.kind)))
        for i in range(count):
            fh.write(np.ascontiguousarray(ds.adjacency[i], dtype=F8).tobytes())
            fh.write(np.ascontiguousarray(ds.signals[i], dtype=F8).tobytes())
            fh.write(np.ascontiguousarray(ds.similarity[i], dtype=F8).tobytes())
        fh.write(TRAILER_LEN.pack(len(blob)))
        fh.write(blob)


def read_header(buf: bytes) -> dict:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    if len(buf) < HEADER.size:
        raise TruncatedFileError(HEADER.size, len(buf), "header")
    magic, version, count, n, p, kind = HEADER.unpack_from(buf)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"format version {version}, this reader supports {FORMAT_VERSION}")
    if kind >= len(SIMILARITY_KINDS):
        raise SchemaError(f"unknown similarity kind code {kind}")
    return {"version": version, "count": count, "n": n, "p": p, "kind": SIMILARITY_KINDS[kind]}


def read_dataset(path) -> Dataset:
    buf = Path(path).read_bytes()
    hdr = read_header(buf)
    count, n, p = hdr["count"], hdr["n"], hdr["p"]
    body_end = HEADER.size + _payload_size(count, n, p)
    if len(buf) < body_end + TRAILER_LEN.size:
        raise TruncatedFileError(body_end + TRAILER_LEN.size, len(buf))
    (meta_len,) = TRAILER_LEN.unpack_from(buf, body_end)
    expected = body_end + TRAILER_LEN.size + meta_len
    if len(buf) < expected:
        raise TruncatedFileError(expected, len(buf))
    if len(buf) != expected:
        raise LengthMismatchError(f"file is {len(buf)} bytes, header implies {expected}")
    per = 2 * n * n + n * p
    flat = np.frombuffer(buf, dtype=F8, count=count * per, offset=HEADER.size).reshape(count, per)
    adj = flat[:, :n * n].reshape(count, n, n).astype(float)
    sig = flat[:, n * n:n * n + n * p].reshape(count, n, p).astype(float)
    sim = flat[:, n * n + n * p:].reshape(count, n, n).astype(float)
    try:
        meta = json.loads(buf[expected - meta_len:expected].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"metadata block is not valid JSON: {exc}") from exc
    sizes = meta.get("sizes")
    if not isinstance(sizes, dict) or sum(sizes.get(k, 0) for k in ("train", "val", "test")) != count:
        raise SchemaError(f"split sizes {sizes} do not sum to sample count {count}")
    return Dataset(adj, sig, sim, hdr["kind"], {k: int(sizes[k]) for k in ("train", "val", "test")},
                   meta)


def dataset_info(path) -> dict:
    """Header fields plus metadata, without loading the payload."""
    path = Path(path)
    size = path.stat().st_size
    with open(path, "rb") as fh:
        hdr = read_header(fh.read(HEADER.size))
        body_end = HEADER.size + _payload_size(hdr["count"], hdr["n"], hdr["p"])
        fh.seek(body_end)
        raw = fh.read(TRAILER_LEN.size)
        if len(raw) < TRAILER_LEN.size:
            raise TruncatedFileError(body_end + TRAILER_LEN.size, size)
        (meta_len,) = TRAILER_LEN.unpack(raw)
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
    return {**hdr, "bytes": size, "metadata": meta}


# -- edge lists ---------------------------------------------------------------

def parse_edge_list(text: str, n: int | None = None) -> np.ndarray:
    """``i j [weight]`` per line, 0-based, ``#`` starts a comment.

    Duplicate edges keep the last weight; missing weights are 1.0.
    """
    edges = {}
    top = -1
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(lineno, f"expected 'i j [weight]', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise EdgeListError(lineno, f"malformed entry {line!r}") from exc
        if i < 0 or j < 0:
            raise EdgeListError(lineno, "node indices must be nonnegative")
        if i == j:
            raise EdgeListError(lineno, f"self-loop on node {i}")
        if not np.isfinite(w) or w < 0:
            raise EdgeListError(lineno, f"edge weight must be finite and nonnegative, got {w}")
        if n is not None and max(i, j) >= n:
            raise EdgeListError(lineno, f"node index {max(i, j)} out of range for n={n}")
        edges[(min(i, j), max(i, j))] = w
        top = max(top, i, j)
    size = n if n is not None else top + 1
    a = np.zeros((size, size))
    for (i, j), w in edges.items():
        a[i, j] = a[j, i] = w
    return a


def import_edge_list(path, n: int | None = None) -> np.ndarray:
    return parse_edge_list(Path(path).read_text(), n)


# -- model checkpoints --------------------------------------------------------

def model_to_json(model) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "method": model.method,
        "depth": model.depth,
        "tied": model.tied,
        "order": model.order,
        "names": list(model.layer.names),
        "raw": [[format(float(x), ".17g") for x in row] for row in model.raw],
    }


def model_from_json(doc: dict, method: str | None = None):
    from .unroll.model import UnrollingModel

    try:
        if doc["format_version"] != MODEL_FORMAT_VERSION:
            raise VersionMismatchError(f"model format version {doc['format_version']}")
        m, depth, tied, order = doc["method"], int(doc["depth"]), bool(doc["tied"]), int(doc["order"])
        raw = np.array([[float(x) for x in row] for row in doc["raw"]], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model document: {exc}") from exc
    if method is not None and m != method:
        raise SchemaError(f"checkpoint holds a {m!r} model, expected {method!r}")
    rows = 1 if tied else depth
    if raw.ndim != 2 or raw.shape[0] != rows:
        raise SchemaError(f"depth {depth} (tied={tied}) needs {rows} parameter rows, found {len(raw)}")
    try:
        return UnrollingModel(m, depth, raw, tied, order)
    except Exception as exc:
        raise SchemaError(str(exc)) from exc


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model), indent=1) + "\n")


def load_model(path, method: str | None = None):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"checkpoint is not valid JSON: {exc}") from exc
    return model_from_json(doc, method)


# -- dumps --------------------------------------------------------------------

def write_csv_matrix(m: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        for row in np.asarray(m, dtype=float):
            fh.write(",".join(format(float(x), ".17g") for x in row) + "\n")


def read_csv_matrix(path) -> np.ndarray:
    rows = [[float(x) for x in line.split(",")] for line in Path(path).read_text().splitlines() if line]
    return np.array(rows, dtype=float)


def pgm_bytes(m: np.ndarray) -> bytes:
    """8-bit binary PGM (P5), values min-max scaled; a constant matrix is all zeros."""
    m = np.asarray(m, dtype=float)
    lo, hi = float(m.min()), float(m.max())
    if hi > lo:
        pix = np.rint((m - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pix = np.zeros(m.shape, dtype=np.uint8)
    h, w = m.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes()


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise BadMagicError("not a binary PGM file")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)


def dump_matrices(mats, directory) -> list:
    """Write ``layer_{i:03}.csv`` and ``layer_{i:03}.pgm`` for each matrix."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for i, m in enumerate(mats):
        csv_path = directory / f"layer_{i:03}.csv"
        pgm_path = directory / f"layer_{i:03}.pgm"
        write_csv_matrix(m, csv_path)
        pgm_path.write_bytes(pgm_bytes(m))
        files += [csv_path, pgm_path]
    return files


def dump_intermediates(model, trace, directory) -> list:
    """Adjacency view of every state in ``trace`` (initialization is layer 000)."""
    from .unroll.model import layer_views

    views = layer_views(model, trace)
    mats = [v[0] if v.ndim == 3 else v for v in views]
    return dump_matrices(mats, directory)
