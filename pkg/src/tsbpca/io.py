"""Dataset readers and writers.

Two input formats are understood: a long-form CSV with one row per
(instance, time) pair, and the equal-length subset of the UEA ``.ts``
format. Compact representations are written as long-form CSV plus a JSON
sidecar holding the run configuration, eigenvalue trajectory and per-time
point convergence reports.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from ._types import CompactRepresentation, Dataset, validate_dataset
from .exceptions import (
    InconsistentLabel,
    MetadataMissing,
    MissingCell,
    ParseError,
    RaggedRow,
    UnsupportedFeature,
)

SIDECAR_SUFFIX = ".meta.json"


def _fmt(x) -> str:
    # shortest repr that round-trips exactly
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _long_form(values, labels, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["instance", "time", *columns]
    if labels is not None:
        header.append("label")
    w.writerow(header)
    B, N, _ = values.shape
    for b in range(B):
        tail = [int(labels[b])] if labels is not None else []
        for n in range(N):
            w.writerow([b, n, *(_fmt(v) for v in values[b, n]), *tail])
    return buf.getvalue()


def write_csv(ds: Dataset, path) -> None:
    names = ds.names or tuple(f"v{i}" for i in range(ds.n_vars))
    atomic_write_text(path, _long_form(ds.values, ds.labels, names))


def _parse_int(token, line, column):
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", line, column) from None


def _parse_float(token, line, column):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected a number, got {token!r}", line, column) from None


def _dense_labels(raw):
    """Integers stay as they are; anything else is numbered by first appearance."""
    try:
        return np.array([int(v) for v in raw], dtype=np.int64)
    except ValueError:
        order = {}
        return np.array([order.setdefault(v, len(order)) for v in raw], dtype=np.int64)


def read_csv(path) -> Dataset:
    """Read ``instance,time,<vars...>[,label]`` long-form CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.reader(fh)
        try:
            header = next(rows)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "instance" or header[1] != "time":
            raise ParseError("header must start with 'instance,time' and name at least one variable", 1)
        has_label = header[-1] == "label"
        names = header[2:-1] if has_label else header[2:]
        if not names:
            raise ParseError("no variable columns in header", 1)
        width = len(header)

        cells = {}
        labels = {}
        for lineno, row in enumerate(rows, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise RaggedRow(f"expected {width} fields, got {len(row)}", lineno)
            b = _parse_int(row[0], lineno, 1)
            n = _parse_int(row[1], lineno, 2)
            if b < 0 or n < 0:
                raise ParseError("instance and time must be >= 0", lineno)
            if (b, n) in cells:
                raise ParseError(f"duplicate row for instance {b}, time {n}", lineno)
            cells[(b, n)] = [_parse_float(v, lineno, c) for c, v in enumerate(row[2:2 + len(names)], start=3)]
            if has_label:
                lab = row[-1].strip()
                if labels.setdefault(b, lab) != lab:
                    raise InconsistentLabel(b)

    if not cells:
        raise ParseError("no data rows", 2)
    instances = sorted({b for b, _ in cells})
    times = sorted({n for _, n in cells})
    values = np.empty((len(instances), len(times), len(names)))
    for i, b in enumerate(instances):
        for t, n in enumerate(times):
            try:
                values[i, t] = cells[(b, n)]
            except KeyError:
                raise MissingCell(b, n) from None
    lab = _dense_labels([labels[b] for b in instances]) if has_label else None
    return validate_dataset(Dataset(values, lab, names))


def _meta_bool(value, tag, lineno):
    v = value.lower()
    if v not in ("true", "false"):
        raise ParseError(f"{tag} expects true or false, got {value!r}", lineno)
    return v == "true"


def read_ts(path) -> Dataset:
    """Read an equal-length UEA ``.ts`` file.

    Class labels become integers following the order of the ``@classlabel``
    declaration (or first appearance when the declaration lists none).
    """
    meta = {}
    declared = []
    cases = []
    data_started = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not data_started:
                if not line.startswith("@"):
                    raise ParseError("data before @data tag", lineno)
                tag, _, rest = line.partition(" ")
                tag = tag.lower()
                rest = rest.strip()
                if tag == "@data":
                    data_started = True
                elif tag in ("@univariate", "@equallength", "@timestamps", "@missing"):
                    meta[tag] = _meta_bool(rest, tag, lineno)
                elif tag == "@classlabel":
                    parts = rest.split()
                    if not parts:
                        raise ParseError("@classlabel needs true or false", lineno)
                    meta[tag] = _meta_bool(parts[0], tag, lineno)
                    declared = parts[1:]
                elif tag in ("@dimensions", "@serieslength"):
                    meta[tag] = _parse_int(rest, lineno, None)
                elif tag == "@targetlabel":
                    if _meta_bool(rest.split()[0] if rest else "", tag, lineno):
                        raise UnsupportedFeature("regression targets (@targetlabel true) are not supported")
                else:
                    meta[tag] = rest
                continue
            cases.append((lineno, line))

    if meta.get("@equallength") is False:
        raise UnsupportedFeature(
            "variable-length series (@equallength false) are not supported; "
            "resample or pad the series to a common length first"
        )
    if meta.get("@timestamps"):
        raise UnsupportedFeature("timestamped series (@timestamps true) are not supported")
    if "@univariate" not in meta and "@dimensions" not in meta:
        raise MetadataMissing("need @univariate or @dimensions")
    if "@classlabel" not in meta:
        raise MetadataMissing("need @classlabel")
    if meta.get("@equallength") and "@serieslength" not in meta:
        raise MetadataMissing("@equallength true requires @serieslength")
    if not data_started:
        raise MetadataMissing("no @data section")
    if not cases:
        raise ParseError("no cases after @data")

    has_class = meta["@classlabel"]
    n_dims = meta.get("@dimensions", 1 if meta.get("@univariate") else None)
    length = meta.get("@serieslength")

    series, raw_labels = [], []
    for lineno, line in cases:
        parts = line.split(":")
        if has_class:
            if len(parts) < 2:
                raise ParseError("missing class label", lineno)
            raw_labels.append(parts.pop().strip())
        if n_dims is None:
            n_dims = len(parts)
        if len(parts) != n_dims:
            raise ParseError(f"expected {n_dims} dimensions, got {len(parts)}", lineno)
        dims = []
        for col, chunk in enumerate(parts, start=1):
            tokens = chunk.split(",")
            if any(t.strip() == "?" for t in tokens):
                raise ParseError("missing values ('?') are not supported", lineno, col)
            vals = [_parse_float(t, lineno, col) for t in tokens]
            if length is None:
                length = len(vals)
            if len(vals) != length:
                raise ParseError(
                    f"dimension has {len(vals)} values, expected series length {length}",
                    lineno, col,
                )
            dims.append(vals)
        series.append(dims)

    values = np.transpose(np.array(series, dtype=np.float64), (0, 2, 1))
    labels = None
    if has_class:
        if declared:
            index = {name: i for i, name in enumerate(declared)}
            for (lineno, _), lab in zip(cases, raw_labels):
                if lab not in index:
                    raise ParseError(f"class label {lab!r} not declared in @classlabel", lineno)
            labels = np.array([index[lab] for lab in raw_labels], dtype=np.int64)
        else:
            order = {}
            labels = np.array([order.setdefault(lab, len(order)) for lab in raw_labels], dtype=np.int64)
    return validate_dataset(Dataset(values, labels))


def read_dataset(path, fmt=None) -> Dataset:
    fmt = fmt or ("ts" if str(path).lower().endswith(".ts") else "csv")
    if fmt == "ts":
        return read_ts(path)
    if fmt == "csv":
        return read_csv(path)
    raise ValueError(f"unknown format {fmt!r}")


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def sidecar_path(path) -> Path:
    return Path(str(path) + SIDECAR_SUFFIX)


def compact_metadata(rep: CompactRepresentation) -> dict:
    return {
        "config": rep.config.to_dict(),
        "shape": list(rep.values.shape),
        "eigen_trajectory": [
            {"batch": int(i), "lambda": [_finite_or_none(v) for v in lam]}
            for i, lam in rep.eigen_trajectory
        ],
        "reports": [
            {**r.to_dict(), "final_subspace_delta": _finite_or_none(r.final_subspace_delta)}
            for r in rep.reports
        ],
    }


def write_compact(rep: CompactRepresentation, path) -> Path:
    """Write ``instance,time,c0..`` CSV at ``path`` and the JSON sidecar next to it.

    Returns the sidecar path.
    """
    k = rep.values.shape[2]
    text = _long_form(rep.values, rep.labels, [f"c{i}" for i in range(k)])
    meta = json.dumps(compact_metadata(rep), indent=2, allow_nan=False) + "\n"
    side = sidecar_path(path)
    atomic_write_text(side, meta)
    atomic_write_text(path, text)
    return side


def read_sidecar(path) -> dict:
    with open(sidecar_path(path), encoding="utf-8") as fh:
        return json.load(fh)
