"""Bit-exact persistence for matrices and fitted models.

Matrix files are a small binary format: magic "AAMX", u32 version, u64 rows,
u64 cols (all little-endian), then rows*cols float64 little-endian values in
column-major order. Model files are JSON so the archetype compositions stay
human-inspectable; floats are written with repr precision, which round-trips
exactly in IEEE double.
"""

import json
import struct

import numpy as np

from .errors import DataError, FormatError, ParseError
from .fitting import ArchetypeModel, FitConfig
from .numcore import as_dense

MATRIX_MAGIC = b"AAMX"
MATRIX_VERSION = 1
MODEL_VERSION = 1
SPARSE_DROP = 1e-12  # entries below this are dropped from stored columns


def save_matrix(path, M):
    M = as_dense(M, "matrix")
    rows, cols = M.shape
    header = MATRIX_MAGIC + struct.pack("<IQQ", MATRIX_VERSION, rows, cols)
    payload = np.asfortranarray(M).astype("<f8").tobytes(order="F")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_matrix(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 24 or blob[:4] != MATRIX_MAGIC:
        raise FormatError(f"{path}: not a matrix file (bad magic)")
    version, rows, cols = struct.unpack("<IQQ", blob[4:24])
    if version != MATRIX_VERSION:
        raise FormatError(f"{path}: unsupported matrix version {version}")
    expected = 24 + 8 * rows * cols
    if len(blob) != expected:
        raise FormatError(f"{path}: payload length mismatch "
                          f"({len(blob)} vs {expected} bytes)")
    data = np.frombuffer(blob, dtype="<f8", offset=24, count=rows * cols)
    M = np.reshape(data, (rows, cols), order="F")
    if not np.all(np.isfinite(M)):
        raise DataError(f"{path}: non-finite values in payload")
    return np.asfortranarray(M.astype(np.float64))


def _sparse_columns(M):
    cols = []
    for j in range(M.shape[1]):
        col = M[:, j]
        idx = np.flatnonzero(np.abs(col) >= SPARSE_DROP)
        cols.append([[int(i), float(col[i])] for i in idx])
    return cols


def _dense_from_sparse(cols, nrows, what):
    M = np.zeros((nrows, len(cols)), order="F")
    for j, pairs in enumerate(cols):
        for i, v in pairs:
            M[i, j] = v
        s = M[:, j].sum()
        if abs(s - 1.0) > 1e-8 or np.any(M[:, j] < -1e-10):
            raise FormatError(f"stored {what} column {j} is not a simplex vector")
        # renormalize only when dropped entries moved the sum, so exact
        # round-trips stay bit-exact
        if s != 1.0 and abs(s - 1.0) > 1e-15:
            M[:, j] /= s
    return M


def save_model(path, model):
    doc = {
        "format": "aakit-model",
        "version": MODEL_VERSION,
        "dims": {"m": int(model.Z.shape[0]), "n": int(model.A.shape[1]),
                 "p": int(model.A.shape[0])},
        "config": {
            "p": model.config.p, "n_iter": model.config.n_iter,
            "seed": model.config.seed, "tol": model.config.tol,
            "robust": model.config.robust, "eps": model.config.eps,
        },
        "converged": bool(model.converged),
        "degenerate": bool(model.degenerate),
        "history": [float(v) for v in model.history],
        "B": _sparse_columns(model.B),
        "A": _sparse_columns(model.A),
        "Z": [[float(v) for v in model.Z[:, j]] for j in range(model.Z.shape[1])],
    }
    if model.weights is not None:
        doc["weights"] = [float(v) for v in model.weights]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid model file: {exc}") from None
    if doc.get("format") != "aakit-model":
        raise FormatError(f"{path}: not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported model version {doc.get('version')}")
    dims = doc["dims"]
    m, n, p = dims["m"], dims["n"], dims["p"]
    cfg = doc["config"]
    config = FitConfig(p=cfg["p"], n_iter=cfg["n_iter"], seed=cfg["seed"],
                       tol=cfg["tol"], robust=cfg["robust"], eps=cfg["eps"])
    B = _dense_from_sparse(doc["B"], n, "B")
    A = _dense_from_sparse(doc["A"], p, "A")
    Z = np.array(doc["Z"], dtype=np.float64).T
    Z = np.asfortranarray(Z.reshape(m, p))
    weights = None
    if "weights" in doc:
        weights = np.array(doc["weights"], dtype=np.float64)
    return ArchetypeModel(A=A, B=B, Z=Z, history=list(doc["history"]),
                          config=config, converged=doc["converged"],
                          degenerate=doc["degenerate"], weights=weights)


def import_delimited_text(path, delimiter=None, transpose=False):
    """Read a rectangular numeric text file as a matrix.

    By default rows map to dimensions and columns to data points; pass
    transpose=True for points-as-rows files.
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(delimiter) if delimiter else line.split()
            try:
                row = [float(tok) for tok in parts]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(
                    f"expected {width} fields, got {len(row)}", line=lineno)
            rows.append(row)
    if not rows:
        raise ParseError("file contains no numeric rows")
    M = np.array(rows, dtype=np.float64)
    if transpose:
        M = M.T
    if not np.all(np.isfinite(M)):
        raise DataError(f"{path}: non-finite values")
    return np.asfortranarray(M)
