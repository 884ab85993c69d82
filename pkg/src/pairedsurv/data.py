"""Paired right-censored survival samples: data model, CSV I/O and validation.

Each subject contributes two event times. The first (``t1``) is usually
observed exactly; the second (``y2``) is right-censored with indicator
``delta2``. A censoring indicator ``delta1`` for the first time is supported
and defaults to 1.
"""

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DataError

__all__ = [
    "PairedRecord",
    "PairedDataset",
    "load_csv",
    "write_csv",
    "validate",
]

REQUIRED_COLUMNS = ("id", "t1", "y2", "delta2")


@dataclass(frozen=True)
class PairedRecord:
    """One subject's pair of observed times."""

    id: str
    t1: float
    y2: float
    delta2: int
    delta1: int = 1

    def __post_init__(self):
        for name in ("t1", "y2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DataError(f"{name} must be a positive finite time, "
                                f"got {value!r}", row=self.id, column=name)
        for name in ("delta1", "delta2"):
            if getattr(self, name) not in (0, 1):
                raise DataError(f"{name} must be 0 or 1", row=self.id,
                                column=name)


class PairedDataset:
    """Immutable ordered collection of :class:`PairedRecord`.

    Numeric columns are exposed as read-only numpy arrays (``t1``, ``delta1``,
    ``y2``, ``delta2``) for the estimators.
    """

    def __init__(self, records):
        records = tuple(records)
        if not records:
            raise DataError("a dataset needs at least one record")
        seen = set()
        for rec in records:
            if rec.id in seen:
                raise DataError("duplicate id", row=rec.id, column="id")
            seen.add(rec.id)
        self._records = records

    @classmethod
    def from_arrays(cls, t1, y2, delta2, delta1=None, ids=None):
        t1 = np.asarray(t1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        delta2 = np.asarray(delta2, dtype=int)
        n = t1.shape[0]
        if delta1 is None:
            delta1 = np.ones(n, dtype=int)
        delta1 = np.asarray(delta1, dtype=int)
        if not (y2.shape[0] == delta2.shape[0] == delta1.shape[0] == n):
            raise DataError("columns must have equal lengths")
        if ids is None:
            ids = [str(i + 1) for i in range(n)]
        return cls(PairedRecord(str(i), float(a), float(b), int(d2), int(d1))
                   for i, a, b, d2, d1 in zip(ids, t1, y2, delta2, delta1))

    @property
    def records(self):
        return self._records

    @property
    def n(self):
        return len(self._records)

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __getitem__(self, i):
        return self._records[i]

    def __eq__(self, other):
        if not isinstance(other, PairedDataset):
            return NotImplemented
        return self._records == other._records

    def __repr__(self):
        return f"PairedDataset(n={self.n})"

    def _column(self, name, dtype):
        arr = np.array([getattr(r, name) for r in self._records], dtype=dtype)
        arr.flags.writeable = False
        return arr

    @cached_property
    def ids(self):
        return tuple(r.id for r in self._records)

    @cached_property
    def t1(self):
        return self._column("t1", float)

    @cached_property
    def y2(self):
        return self._column("y2", float)

    @cached_property
    def delta1(self):
        return self._column("delta1", int)

    @cached_property
    def delta2(self):
        return self._column("delta2", int)


def _parse_float(text, row, column):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise DataError(f"cannot parse {text!r} as a number",
                        row=row, column=column) from None
    if not (math.isfinite(value) and value > 0):
        raise DataError(f"time must be positive, got {text!r}",
                        row=row, column=column)
    return value


def _parse_indicator(text, row, column):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise DataError(f"cannot parse {text!r} as an indicator",
                        row=row, column=column) from None
    if value not in (0.0, 1.0):
        raise DataError(f"indicator must be 0 or 1, got {text!r}",
                        row=row, column=column)
    return int(value)


def load_csv(path):
    """Read a paired dataset from a CSV file.

    The header must name the columns ``id``, ``t1``, ``y2`` and ``delta2``;
    ``delta1`` is optional and filled with 1 when absent. Row order is kept.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        reader.fieldnames = header
        has_delta1 = "delta1" in header
        records = []
        for lineno, row in enumerate(reader, start=2):
            rid = (row.get("id") or "").strip()
            if not rid:
                raise DataError("empty id", row=lineno, column="id")
            t1 = _parse_float(row["t1"], rid, "t1")
            y2 = _parse_float(row["y2"], rid, "y2")
            delta2 = _parse_indicator(row["delta2"], rid, "delta2")
            delta1 = (_parse_indicator(row["delta1"], rid, "delta1")
                      if has_delta1 else 1)
            records.append(PairedRecord(rid, t1, y2, delta2, delta1))
    return PairedDataset(records)


def write_csv(ds, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "t1", "delta1", "y2", "delta2"])
        for r in ds:
            writer.writerow([r.id, repr(r.t1), r.delta1, repr(r.y2), r.delta2])


def validate(ds, delta=None, censoring_warn_fraction=0.5):
    """Return human-readable warnings about a dataset (possibly empty).

    Checks for ties between ``delta * t1`` and ``y2`` (only when `delta` is
    given), for an absence of uncensored second events, and for heavy
    censoring of the second component.
    """
    warnings = []
    delta2 = ds.delta2
    n_cens = int(np.sum(delta2 == 0))
    if n_cens == ds.n:
        warnings.append("no uncensored second events")
    elif n_cens / ds.n >= censoring_warn_fraction:
        warnings.append(f"{n_cens / ds.n:.1%} of second times are censored")
    if delta is not None:
        ties = np.flatnonzero(delta * ds.t1 == ds.y2)
        if ties.size:
            ids = ", ".join(ds.ids[i] for i in ties[:5])
            more = "" if ties.size <= 5 else f" (+{ties.size - 5} more)"
            warnings.append(f"{ties.size} tie(s) between delta*t1 and y2: "
                            f"{ids}{more}")
    if np.any(ds.delta1 == 0):
        warnings.append(f"{int(np.sum(ds.delta1 == 0))} first time(s) are "
                        "censored; independent censoring of both components "
                        "is assumed")
    return warnings
