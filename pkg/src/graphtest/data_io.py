"""Reading and writing points, labels, distance matrices, graphs and reports.

Numeric inputs are CSV; graphs, network samples and reports are JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AsymmetryError,
    IoError,
    LabelCardinalityError,
    LengthMismatch,
    NegativeDistance,
    ParseError,
    ShapeError,
    TooFewObservations,
)

ASYMMETRY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PointSet:
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[1] < 1:
            raise ShapeError("points must be an N x d matrix with d >= 1")
        if data.shape[0] < 2:
            raise TooFewObservations(f"need at least 2 observations, got {data.shape[0]}")
        if not np.all(np.isfinite(data)):
            raise ShapeError("points contain non-finite values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_points(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        return isinstance(other, PointSet) and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class Labeling:
    """Group indicators: 0 marks sample X, 1 marks sample Y."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ShapeError("labels must be one-dimensional")
        if not np.all((labels == 0) | (labels == 1)):
            raise LabelCardinalityError("labels must be 0 or 1")
        labels = labels.astype(np.int8)
        n = int(np.sum(labels == 0))
        if n == 0 or n == labels.size:
            raise LabelCardinalityError("both samples must be non-empty")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def N(self) -> int:
        return int(self.labels.size)

    @property
    def n(self) -> int:
        return int(np.sum(self.labels == 0))

    @property
    def m(self) -> int:
        return int(np.sum(self.labels == 1))

    def __len__(self):
        return self.N

    def __eq__(self, other):
        return isinstance(other, Labeling) and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray

    def __post_init__(self):
        values = validate_distance_values(self.values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        return isinstance(other, DistanceMatrix) and np.array_equal(self.values, other.values)


def validate_distance_values(values) -> np.ndarray:
    """Check shape, sign and symmetry; return a cleaned float copy.

    Entries within the asymmetry tolerance are averaged so the result is
    exactly symmetric, and tiny diagonal entries are forced to zero.
    """
    v = np.array(values, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ShapeError(f"distance matrix must be square, got shape {v.shape}")
    if v.shape[0] < 2:
        raise TooFewObservations("need at least 2 observations")
    if not np.all(np.isfinite(v)):
        raise ShapeError("distance matrix contains non-finite values")
    neg = np.argwhere(v < 0)
    if len(neg):
        i, j = neg[0]
        raise NegativeDistance(int(i), int(j))
    bad = np.argwhere(np.triu(np.abs(v - v.T) > ASYMMETRY_TOL, 1))
    if len(bad):
        i, j = bad[0]
        raise AsymmetryError(int(i), int(j))
    diag = np.diag(v)
    if np.any(np.abs(diag) > ASYMMETRY_TOL):
        i = int(np.argmax(np.abs(diag) > ASYMMETRY_TOL))
        raise ShapeError(f"nonzero diagonal entry at ({i}, {i})")
    v = 0.5 * (v + v.T)
    np.fill_diagonal(v, 0.0)
    return v


def check_pairing(n_rows: int, lab: Labeling) -> None:
    if n_rows != lab.N:
        raise LengthMismatch(f"{n_rows} observations but {lab.N} labels")


# -- CSV parsing --------------------------------------------------------------


def _read_text(path) -> str:
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _parse_float(tok: str) -> float:
    val = float(tok.strip())
    if not math.isfinite(val):
        raise ValueError(tok)
    return val


def _parse_numeric_rows(text: str, allow_header: bool) -> tuple[list[list[float]], bool]:
    rows = [(k + 1, r) for k, r in enumerate(csv.reader(io.StringIO(text)))]
    rows = [(lineno, r) for lineno, r in rows if r and any(c.strip() for c in r)]
    header = False
    if allow_header and rows:
        try:
            [_parse_float(c) for c in rows[0][1]]
        except ValueError:
            header = True
            rows = rows[1:]
    out: list[list[float]] = []
    width = None
    for lineno, r in rows:
        if width is None:
            width = len(r)
        elif len(r) != width:
            raise ParseError(f"expected {width} fields, found {len(r)}", line=lineno)
        vals = []
        for col, tok in enumerate(r, start=1):
            try:
                vals.append(_parse_float(tok))
            except ValueError:
                raise ParseError(f"non-numeric value {tok!r}", line=lineno, col=col) from None
        out.append(vals)
    return out, header


def parse_points(text: str) -> PointSet:
    rows, _ = _parse_numeric_rows(text, allow_header=True)
    if len(rows) < 2:
        raise TooFewObservations(f"need at least 2 observations, got {len(rows)}")
    return PointSet(np.array(rows, dtype=float))


def load_points(path, format: str = "csv") -> PointSet:
    if format != "csv":
        raise ValueError(f"unsupported points format {format!r}")
    return parse_points(_read_text(path))


def parse_labels(text: str, x_label: str | None = None) -> tuple[Labeling, tuple[str, str]]:
    tokens = [line.strip() for line in text.splitlines()]
    tokens = [t for t in tokens if t]
    distinct = sorted(set(tokens))
    if len(distinct) != 2:
        raise LabelCardinalityError(
            f"expected exactly two distinct labels, found {len(distinct)}"
        )
    if x_label is not None:
        if x_label not in distinct:
            raise LabelCardinalityError(f"--x-label {x_label!r} not among labels {distinct}")
        x_tok = x_label
    else:
        x_tok = distinct[0]
    y_tok = distinct[1] if x_tok == distinct[0] else distinct[0]
    labels = np.array([0 if t == x_tok else 1 for t in tokens], dtype=np.int8)
    return Labeling(labels), (x_tok, y_tok)


def load_labels(path, x_label: str | None = None) -> Labeling:
    """Read one token per line; the lexicographically smaller token is sample X."""
    lab, _ = parse_labels(_read_text(path), x_label=x_label)
    return lab


def parse_distance_matrix(text: str) -> DistanceMatrix:
    rows, _ = _parse_numeric_rows(text, allow_header=False)
    if not rows:
        raise ShapeError("empty distance matrix")
    if len(rows) != len(rows[0]):
        raise ShapeError(f"distance matrix must be square, got {len(rows)}x{len(rows[0])}")
    return DistanceMatrix(np.array(rows, dtype=float))


def load_distance_matrix(path) -> DistanceMatrix:
    return parse_distance_matrix(_read_text(path))


def _fmt(x: float) -> str:
    return repr(float(x))


def format_matrix_csv(mat: np.ndarray) -> str:
    return "".join(",".join(_fmt(v) for v in row) + "\n" for row in np.asarray(mat))


def write_points(points: PointSet, path) -> None:
    _write_text(path, format_matrix_csv(points.data))


def write_distance_matrix(dist: DistanceMatrix, path) -> None:
    _write_text(path, format_matrix_csv(dist.values))


def write_labels(lab: Labeling, path, tokens: Sequence[str] = ("0", "1")) -> None:
    _write_text(path, "".join(tokens[int(g)] + "\n" for g in lab.labels))


# -- JSON ---------------------------------------------------------------------


def _write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            tmp.unlink()
        except OSError:
            pass
        raise IoError(f"cannot write {path}: {exc}") from exc


def dumps(obj) -> str:
    # repr-based float printing round-trips exactly (<= 17 significant digits)
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def graph_to_dict(g) -> dict:
    return {"n_nodes": int(g.n_nodes), "edges": [[int(i), int(j)] for i, j in g.edges]}


def graph_from_dict(obj: dict):
    from .graph import SimilarityGraph

    try:
        n_nodes = int(obj["n_nodes"])
        edges = [(int(e[0]), int(e[1])) for e in obj["edges"]]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed graph JSON: {exc}", line=1) from None
    return SimilarityGraph.from_edges(n_nodes, edges)


def load_graph(path):
    try:
        obj = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, col=exc.colno) from None
    return graph_from_dict(obj)


def write_graph(g, path) -> None:
    _write_text(path, dumps(graph_to_dict(g)))


def load_network_samples(path) -> list:
    """Read directed-network samples, one JSON object per line."""
    from .distance import DirectedGraphSample

    samples = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            samples.append(
                DirectedGraphSample(int(obj["n_actors"]), [tuple(e) for e in obj["edges"]])
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"malformed network sample: {exc}", line=lineno) from None
    return samples


def write_network_samples(samples: Iterable, path) -> None:
    lines = []
    for s in samples:
        edges = sorted(s.edge_set)
        lines.append(json.dumps({"n_actors": s.n_actors, "edges": [list(e) for e in edges]}))
    _write_text(path, "\n".join(lines) + "\n")


def write_report(report, path) -> None:
    """Serialize a TestReport as JSON (fixed key order)."""
    _write_text(path, dumps(report.to_dict()))


def read_report(path):
    from .inference import TestReport

    try:
        obj = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, col=exc.colno) from None
    return TestReport.from_dict(obj)
