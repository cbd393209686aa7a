"""File formats: numeric CSV matrices and versioned JSON models.

CSV files have no header, one sample per row, ``.`` as decimal mark and
LF line endings. Values are written with 17 significant digits so a
write/read round trip is exact.
"""
from __future__ import annotations

import base64
import json

import numpy as np

from randsdr.sdr import EdrModel

__all__ = [
    "InputError",
    "read_matrix",
    "write_matrix",
    "format_matrix",
    "read_vector",
    "write_vector",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "dump_json",
    "MODEL_FORMAT",
    "MODEL_VERSION",
]

MODEL_FORMAT = "randsdr-edr-model"
MODEL_VERSION = 1


class InputError(ValueError):
    """Malformed input file; the message names the offending location."""


def format_matrix(A) -> str:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in A)


def write_matrix(path, A):
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(format_matrix(A))


def read_matrix(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, encoding="ascii", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise InputError(f"{path}: line {lineno} has {len(fields)} fields, expected {width}")
            try:
                row = [float(f) for f in fields]
            except ValueError:
                bad = next(i for i, f in enumerate(fields) if not _is_float(f))
                raise InputError(f"{path}: line {lineno}, column {bad + 1}: "
                                 f"not a number: {fields[bad]!r}") from None
            if not all(np.isfinite(row)):
                raise InputError(f"{path}: line {lineno} contains NaN or Inf")
            rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data")
    return np.array(rows, dtype=float)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_vector(path) -> np.ndarray:
    """A one-column CSV, or a single row, as a vector.

    Columns holding only integers come back as ``int64`` so they are
    treated as class labels.
    """
    A = read_matrix(path)
    if A.shape[1] != 1 and A.shape[0] != 1:
        raise InputError(f"{path}: expected a single column, got shape {A.shape}")
    v = A.ravel()
    with open(path, encoding="ascii") as fh:
        text = fh.read()
    if all(tok.strip().lstrip("+-").isdigit() for tok in text.replace("\n", ",").split(",") if tok.strip()):
        return v.astype(np.int64)
    return v


def write_vector(path, v):
    v = np.asarray(v)
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        if v.dtype.kind in "biu":
            fh.write("".join(f"{int(x)}\n" for x in v))
        else:
            fh.write("".join(f"{float(x):.17g}\n" for x in v))


def _encode(A):
    A = np.asarray(A, dtype="<f8")
    return base64.b64encode(A.tobytes(order="F")).decode("ascii")


def _decode(text, shape):
    buf = base64.b64decode(text.encode("ascii"))
    return np.frombuffer(buf, dtype="<f8").reshape(shape, order="F").copy()


def model_to_dict(model: EdrModel) -> dict:
    p, r = model.G.shape
    d = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "method": model.method,
        "p": p,
        "r": r,
        "d_star": int(model.d_star),
        "t_star": int(model.t_star),
        "G": {"shape": [p, r], "order": "F", "dtype": "float64-le", "data": _encode(model.G)},
        "means": [float(f"{v:.17g}") for v in model.means],
        "y_mean": model.y_mean,
    }
    if model.eigenvalues is not None:
        d["eigenvalues"] = [float(v) for v in model.eigenvalues]
    return d


def model_from_dict(d) -> EdrModel:
    if d.get("format") != MODEL_FORMAT:
        raise InputError("not a model file")
    if d.get("version") != MODEL_VERSION:
        raise InputError(f"unsupported model version {d.get('version')}")
    g = d["G"]
    G = _decode(g["data"], tuple(g["shape"]))
    ev = d.get("eigenvalues")
    return EdrModel(G, d["method"], np.array(d["means"], float), d_star=d["d_star"],
                    t_star=d["t_star"], y_mean=d.get("y_mean"),
                    eigenvalues=None if ev is None else np.array(ev, float))


def dump_json(path, obj):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_model(path, model: EdrModel):
    dump_json(path, model_to_dict(model))


def load_model(path) -> EdrModel:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(d)
