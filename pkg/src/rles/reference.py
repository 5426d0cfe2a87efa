"""Reference profile ingestion and run-vs-reference comparison."""

import csv
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ComparisonError, MappingError, ReferenceDataError

# accepted spellings -> canonical quantity name
QUANTITY_ALIASES = {
    "y": "y", "yplus": "y_plus", "y+": "y_plus", "y_plus": "y_plus",
    "uplus": "U_plus", "u+": "U_plus", "u_plus": "U_plus", "umean": "U_plus",
    "uvplus": "uv_plus", "uv+": "uv_plus", "uv_plus": "uv_plus",
    "urmsplus": "urms_plus", "urms+": "urms_plus", "urms_plus": "urms_plus", "urms": "urms_plus",
    "vrmsplus": "vrms_plus", "vrms+": "vrms_plus", "vrms_plus": "vrms_plus", "vrms": "vrms_plus",
    "wrmsplus": "wrms_plus", "wrms+": "wrms_plus", "wrms_plus": "wrms_plus", "wrms": "wrms_plus",
}
COORDINATES = ("y", "y_plus")


def canonical_name(name):
    key = name.strip().lower()
    if key not in QUANTITY_ALIASES:
        raise MappingError(f"unknown quantity {name!r}; known: {sorted(set(QUANTITY_ALIASES.values()))}")
    return QUANTITY_ALIASES[key]


def parse_mapping(spec):
    """``"y:1,Uplus:3"`` -> ``{"y": 0, "U_plus": 2}`` (zero-based columns)."""
    mapping = {}
    for item in filter(None, (s.strip() for s in spec.split(","))):
        name, sep, col = item.partition(":")
        if not sep:
            raise MappingError(f"mapping entry {item!r} is not 'name:column'")
        try:
            index = int(col)
        except ValueError:
            raise MappingError(f"column in {item!r} is not an integer") from None
        if index < 1:
            raise MappingError(f"columns are 1-based, got {index} in {item!r}")
        canon = canonical_name(name)
        if canon in mapping:
            raise MappingError(f"quantity {canon} mapped twice")
        mapping[canon] = index - 1
    if not any(c in mapping for c in COORDINATES):
        raise MappingError("mapping must bind a wall coordinate (y or yplus)")
    if len(mapping) < 2:
        raise MappingError("mapping must bind at least one profile quantity besides the coordinate")
    return mapping


@dataclass
class ReferenceProfile:
    source: str
    columns: dict = field(default_factory=dict)
    mapping: str = ""

    def __len__(self):
        return len(next(iter(self.columns.values())))

    @property
    def coordinate(self):
        return "y_plus" if "y_plus" in self.columns else "y"


def load_reference_profiles(path, mapping):
    """Read whitespace-separated numeric columns; ``%`` and ``#`` lines are comments."""
    cols = parse_mapping(mapping) if isinstance(mapping, str) else dict(mapping)
    rows = []
    width = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text[0] in "%#":
                continue
            cells = text.split()
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ReferenceDataError(f"expected {width} columns, found {len(cells)}", line=lineno)
            row = []
            for c, cell in enumerate(cells, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise ReferenceDataError(f"non-numeric value {cell!r}", line=lineno, column=c) from None
                if not math.isfinite(value):
                    raise ReferenceDataError(f"non-finite value {cell!r}", line=lineno, column=c)
                row.append(value)
            rows.append(row)
    if not rows:
        raise ReferenceDataError(f"{path}: no data rows")
    data = np.array(rows)
    for name, idx in cols.items():
        if idx >= width:
            raise MappingError(f"{name} mapped to column {idx + 1} but the file has {width} columns")
    columns = {name: data[:, idx].copy() for name, idx in cols.items()}
    prof = ReferenceProfile(str(path), columns, mapping if isinstance(mapping, str) else "")
    coord = columns[prof.coordinate]
    if len(coord) > 1 and not (np.all(np.diff(coord) > 0) or np.all(np.diff(coord) < 0)):
        raise ReferenceDataError(f"{prof.coordinate} column is not strictly monotone")
    return prof


def load_run_profiles(path):
    """Read a run's ``profiles.csv`` into a dict of columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in r] for r in reader if r]
    data = np.array(rows)
    return {name: data[:, i] for i, name in enumerate(header)}


@dataclass
class ComparisonReport:
    quantity: str
    coordinate: str
    x: np.ndarray
    run: np.ndarray
    reference: np.ndarray
    rel_l2: float
    rel_linf: float

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow((self.coordinate, f"{self.quantity}_run", f"{self.quantity}_ref", "difference"))
            for row in zip(self.x, self.run, self.reference, self.run - self.reference):
                writer.writerow([repr(float(v)) for v in row])


def compare_profiles(run, reference, quantity, window=None):
    """Interpolate ``reference`` onto the run's coordinate points and measure differences.

    ``run`` maps column names to arrays (see :func:`load_run_profiles`).
    Norms are relative to the reference: ``max|d| / max|ref|`` and
    ``||d||_2 / ||ref||_2`` over the overlapping points, optionally
    restricted to ``window = (lo, hi)`` in the coordinate.
    """
    q = canonical_name(quantity)
    if q in COORDINATES:
        raise ComparisonError(f"{quantity} is a coordinate, not a profile quantity")
    if q not in reference.columns:
        raise ComparisonError(f"reference has no {q} column")
    if q not in run:
        raise ComparisonError(f"run profiles have no {q} column")
    coord = reference.coordinate
    if coord not in run:
        raise ComparisonError(f"run profiles have no {coord} column")
    rx = np.asarray(reference.columns[coord])
    ry = np.asarray(reference.columns[q])
    order = np.argsort(rx)
    rx, ry = rx[order], ry[order]
    x = np.asarray(run[coord], dtype=float)
    y = np.asarray(run[q], dtype=float)
    lo, hi = rx[0], rx[-1]
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    keep = (x >= lo) & (x <= hi)
    if not keep.any():
        raise ComparisonError(f"no overlap between run {coord} range [{x.min():.4g}, {x.max():.4g}] "
                              f"and reference range [{rx[0]:.4g}, {rx[-1]:.4g}]")
    x, y = x[keep], y[keep]
    ref = np.interp(x, rx, ry)
    diff = y - ref
    ref_inf = float(np.max(np.abs(ref)))
    ref_l2 = float(np.linalg.norm(ref))
    if ref_inf == 0.0:
        raise ComparisonError(f"reference {q} is identically zero over the overlap")
    return ComparisonReport(q, coord, x, y, ref, float(np.linalg.norm(diff)) / ref_l2,
                            float(np.max(np.abs(diff))) / ref_inf)
