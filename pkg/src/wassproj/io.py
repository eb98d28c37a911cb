"""CSV readers and writers for distributions, coefficients and tables.

Formats (long, one row per item, header required):

* samples:       ``dist_id,value``
* histograms:    ``dist_id,edge_lo,edge_hi,mass``
* coefficients:  ``dist_id,c1,...,cJ`` (extra non-``c`` columns are ignored)

Floats are written with 17 significant digits so doubles round-trip.
"""

from __future__ import annotations

import csv
import io as _io
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .distributions import EmpiricalDistribution, QuantileSpline
from .errors import InvalidArgumentError, ParseError
from .spline_basis import SplineBasis

SAMPLE_HEADER = ("dist_id", "value")
HIST_HEADER = ("dist_id", "edge_lo", "edge_hi", "mass")


def fmt(x) -> str:
    return "%.17g" % float(x)


def _float(text, line, name):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{name} {text!r} is not a number", line) from None
    if not np.isfinite(v):
        raise ParseError(f"{name} must be finite", line)
    return v


def _rows(path):
    """Header (lower-cased, stripped) and an iterator of (line_number, row)."""
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("file is empty; a header row is required", 1) from None
    header = tuple(h.strip().lower() for h in header)
    rows = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        rows.append((reader.line_num, [c.strip() for c in row]))
    return header, rows


def detect_format(path) -> str:
    """``samples``, ``histogram`` or ``coefficients`` from the header row."""
    header, _ = _rows(path)
    return _kind(header)


def _kind(header):
    if header == SAMPLE_HEADER:
        return "samples"
    if header == HIST_HEADER:
        return "histogram"
    if header and header[0] == "dist_id" and any(h.startswith("c") and h[1:].isdigit() for h in header[1:]):
        return "coefficients"
    raise ParseError(
        "unrecognized header; expected 'dist_id,value', 'dist_id,edge_lo,edge_hi,mass' or 'dist_id,c1,...'", 1
    )


def read_distributions(path):
    """Ordered ids and :class:`EmpiricalDistribution` objects from a samples or histogram CSV."""
    header, rows = _rows(path)
    kind = _kind(header)
    if kind == "coefficients":
        raise ParseError("expected samples or histogram CSV, got coefficients", 1)
    groups: OrderedDict[str, list] = OrderedDict()
    width = len(header)
    for line, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} fields, got {len(row)}", line)
        if not row[0]:
            raise ParseError("empty dist_id", line)
        groups.setdefault(row[0], []).append((line, row[1:]))
    dists = []
    for did, items in groups.items():
        if kind == "samples":
            dists.append(EmpiricalDistribution.from_samples([_float(r[0], ln, "value") for ln, r in items]))
        else:
            dists.append(_histogram(items))
    return list(groups), dists


def _histogram(items):
    cells = []
    for line, (lo, hi, m) in items:
        lo, hi, m = _float(lo, line, "edge_lo"), _float(hi, line, "edge_hi"), _float(m, line, "mass")
        if not hi > lo:
            raise ParseError("edge_hi must exceed edge_lo", line)
        if m < 0:
            raise ParseError("mass must be nonnegative", line)
        cells.append((lo, hi, m, line))
    cells.sort()
    edges, masses = [cells[0][0]], []
    for lo, hi, m, line in cells:
        if lo < edges[-1] - 1e-12 * max(1.0, abs(lo)):
            raise ParseError("histogram cells overlap", line)
        if lo > edges[-1]:
            # gap between cells: an empty cell
            masses.append(0.0)
            edges.append(lo)
        masses.append(m)
        edges.append(hi)
    if sum(masses) <= 0:
        raise ParseError("histogram has zero total mass", cells[0][3])
    return EmpiricalDistribution.from_histogram(edges, masses)


def read_coefficients(path, basis: SplineBasis | None = None):
    """Ids and :class:`QuantileSpline` objects from a coefficients CSV."""
    header, rows = _rows(path)
    if _kind(header) != "coefficients":
        raise ParseError("expected a coefficients CSV with columns dist_id,c1,...,cJ", 1)
    cols = [i for i, h in enumerate(header) if h.startswith("c") and h[1:].isdigit()]
    J = len(cols)
    if basis is None:
        basis = SplineBasis(J)
    elif basis.J != J:
        raise InvalidArgumentError(f"file has J={J} coefficients, expected J={basis.J}")
    ids, out = [], []
    for line, row in rows:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
        c = [_float(row[i], line, header[i]) for i in cols]
        try:
            out.append(QuantileSpline(c, basis))
        except InvalidArgumentError as exc:
            raise ParseError(str(exc), line) from None
        ids.append(row[0])
    return ids, out, basis


def read_any(path, basis: SplineBasis | None, encoder):
    """Ids and quantile splines from either a coefficients CSV or a distributions CSV.

    Distributions are passed through ``encoder(dists, basis)``; ``basis`` is
    required in that case.
    """
    if detect_format(path) == "coefficients":
        return read_coefficients(path, basis)
    if basis is None:
        raise InvalidArgumentError("--basis-size is required for distribution input")
    ids, dists = read_distributions(path)
    return ids, encoder(dists, basis), basis


def write_table(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def coefficient_header(J: int):
    return ["dist_id"] + [f"c{j}" for j in range(1, J + 1)]


def write_coefficients(path, ids, quantiles, J: int, extra: dict | None = None):
    """Coefficient rows, optionally with extra per-row columns placed after ``dist_id``."""
    extra = extra or {}
    header = ["dist_id", *extra] + [f"c{j}" for j in range(1, J + 1)]
    rows = []
    for i, (did, q) in enumerate(zip(ids, quantiles)):
        rows.append([str(did), *(col[i] for col in extra.values()), *q.coeffs])
    write_table(path, header, rows)


def write_distributions(path, dists, ids=None):
    """Samples or histograms in long format; all entries must be of one kind."""
    dists = list(dists)
    ids = [str(i) for i in (ids if ids is not None else range(len(dists)))]
    if dists and all(d.is_sample for d in dists):
        rows = [[did, v] for did, d in zip(ids, dists) for v in d.samples]
        write_table(path, SAMPLE_HEADER, rows)
    elif all(not d.is_sample for d in dists):
        rows = [
            [did, lo, hi, m]
            for did, d in zip(ids, dists)
            for lo, hi, m in zip(d.edges[:-1], d.edges[1:], d.masses)
        ]
        write_table(path, HIST_HEADER, rows)
    else:
        raise InvalidArgumentError("cannot mix samples and histograms in one file")
