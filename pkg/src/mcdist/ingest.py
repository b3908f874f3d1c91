"""Readers for numeric classification data: CSV and the numeric ARFF subset.

Only real-valued features are accepted. Categorical attributes and missing
values are rejected, not encoded or imputed.
"""

from __future__ import annotations

import csv
import io
import os
import re
from pathlib import Path

import numpy as np

from .knn import Dataset, DatasetError

_DECIMAL = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")
_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, str):
        return source
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise DatasetError(f"input is not UTF-8: {exc}") from None


def _number(cell: str, where: str) -> float:
    s = cell.strip()
    if not _DECIMAL.match(s):
        raise DatasetError(f"{where}: {cell!r} is not a finite decimal number")
    value = float(s)
    if not np.isfinite(value):
        raise DatasetError(f"{where}: {cell!r} overflows a double")
    return value


def _classes(labels):
    table = list(dict.fromkeys(labels))
    index = {c: i for i, c in enumerate(table)}
    return tuple(table), np.array([index[c] for c in labels], dtype=np.int64)


def parse_csv(source, label_column=None, name: str = "dataset") -> Dataset:
    """Parse a headed, comma-separated file into a :class:`Dataset`.

    ``label_column`` is a header name or index; the last column by default.
    Classes are numbered in order of first appearance.
    """
    rows = [r for r in csv.reader(io.StringIO(_text(source), newline="")) if any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{name}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise DatasetError(f"{name}: need at least one feature column and a label column")
    if label_column is None:
        li = len(header) - 1
    elif isinstance(label_column, int):
        li = label_column % len(header)
    else:
        if label_column not in header:
            raise DatasetError(f"{name}: no column named {label_column!r}")
        li = header.index(label_column)
    body = rows[1:]
    if not body:
        raise DatasetError(f"{name}: no instances")
    feats = [i for i in range(len(header)) if i != li]
    X = np.empty((len(body), len(feats)))
    labels = []
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DatasetError(f"{name}: row {r} has {len(row)} fields, header has {len(header)}")
        for j, c in enumerate(feats):
            X[r - 2, j] = _number(row[c], f"{name}: row {r}, column {header[c]!r}")
        labels.append(row[li].strip())
    table, y = _classes(labels)
    if len(table) < 2:
        raise DatasetError(f"{name}: fewer than 2 classes")
    return Dataset(name, table, X, y, tuple(header[c] for c in feats), header[li])


def write_csv(dataset: Dataset, stream) -> None:
    """Write ``dataset`` in the layout :func:`parse_csv` reads back exactly."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(list(dataset.feature_names) + [dataset.label_name])
    for x, c in zip(dataset.X, dataset.y):
        w.writerow([repr(float(v)) for v in x] + [dataset.class_table[c]])


def _unquote(s: str) -> str:
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "'\"":
        return s[1:-1]
    return s


def _split_values(s: str) -> list:
    return [_unquote(v) for v in next(csv.reader([s], skipinitialspace=True, quotechar="'"))]


def parse_arff(source, name: str | None = None) -> Dataset:
    """Parse the numeric ARFF subset: numeric attributes then a nominal class.

    Keywords are case-insensitive and ``%`` comments are skipped. The class
    table follows the order declared in the nominal attribute.
    """
    relation = None
    attrs = []  # (name, type or list of nominal values)
    data_line = None
    lines = _text(source).splitlines()
    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        low = line.lower()
        if low.startswith("@relation"):
            relation = _unquote(line[len("@relation"):])
        elif low.startswith("@attribute"):
            m = re.match(r"@attribute\s+('[^']*'|\"[^\"]*\"|\S+)\s+(.*)$", line, re.IGNORECASE)
            if not m:
                raise DatasetError(f"line {i + 1}: malformed @attribute")
            aname, atype = _unquote(m.group(1)), m.group(2).strip()
            if atype.startswith("{"):
                if not atype.endswith("}"):
                    raise DatasetError(f"line {i + 1}: unterminated nominal value list")
                attrs.append((aname, _split_values(atype[1:-1])))
            else:
                attrs.append((aname, atype.split()[0].lower()))
        elif low.startswith("@data"):
            data_line = i + 1
            break
        else:
            raise DatasetError(f"line {i + 1}: unexpected header line {line!r}")
    name = name or relation or "dataset"
    if data_line is None:
        raise DatasetError(f"{name}: missing @data section")
    if len(attrs) < 2:
        raise DatasetError(f"{name}: need numeric attributes and a class attribute")
    *features, (label_name, classes) = attrs
    if not isinstance(classes, list):
        raise DatasetError(f"{name}: the last attribute must be a nominal class")
    for aname, atype in features:
        if isinstance(atype, list) or atype not in _NUMERIC_TYPES:
            raise DatasetError(f"{name}: attribute {aname!r}: categorical attributes unsupported")
    index = {c: k for k, c in enumerate(classes)}
    rows, labels = [], []
    for i in range(data_line, len(lines)):
        line = lines[i].strip()
        if not line or line.startswith("%"):
            continue
        where = f"{name}: data line {i + 1}"
        if line.startswith("{"):
            raise DatasetError(f"{where}: sparse ARFF rows are unsupported")
        values = _split_values(line)
        if len(values) != len(attrs):
            raise DatasetError(f"{where}: {len(values)} values for {len(attrs)} attributes")
        if any(v.strip() == "?" for v in values):
            raise DatasetError(f"{where}: missing value '?'")
        rows.append([_number(v, where) for v in values[:-1]])
        if values[-1] not in index:
            raise DatasetError(f"{where}: class {values[-1]!r} not declared")
        labels.append(index[values[-1]])
    if not rows:
        raise DatasetError(f"{name}: no instances")
    return Dataset(name, tuple(classes), np.array(rows), np.array(labels), tuple(a for a, _ in features), label_name)


def load_dataset(path) -> Dataset:
    """Read a ``.csv`` or ``.arff`` file, naming the dataset after the file stem."""
    path = Path(path)
    ext = path.suffix.lower()
    data = path.read_bytes()
    if ext == ".arff":
        return parse_arff(data, name=path.stem)
    if ext == ".csv":
        return parse_csv(data, name=path.stem)
    raise DatasetError(f"{path}: unsupported extension {ext!r}")


def load_directory(path):
    """Load every CSV/ARFF file in ``path`` (sorted by name).

    Returns ``(datasets, skipped)`` where ``skipped`` lists ``(file, reason)``.
    """
    datasets, skipped = [], []
    for entry in sorted(os.listdir(path)):
        full = Path(path) / entry
        if not full.is_file() or full.suffix.lower() not in (".csv", ".arff"):
            continue
        try:
            datasets.append(load_dataset(full))
        except (DatasetError, OSError) as exc:
            skipped.append((entry, str(exc)))
    return datasets, skipped


def minmax_rescale(dataset: Dataset) -> Dataset:
    """Map each feature column affinely onto [0, 1]; constant columns become 0."""
    X = dataset.X
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    scaled = np.where(span > 0, (X - lo) / np.where(span > 0, span, 1.0), 0.0)
    return dataset.with_features(np.clip(scaled, 0.0, 1.0))
