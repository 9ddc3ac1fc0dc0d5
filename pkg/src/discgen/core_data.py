"""Discontinuity records, sets, CSV ingestion and the dataset catalog.

Dip direction is handled as a linear quantity on [0, 360); no circular
statistics are used anywhere in the package. Standard deviations use the
population denominator ``n`` throughout.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    CountMismatch,
    DatasetFileMissing,
    EmptyFile,
    InvariantViolation,
    ManifestParseError,
    MissingColumn,
    UnparseableCell,
)

PARAMETERS = ("dip_direction", "dip_angle", "trace_length")
DEFAULT_COLUMNS = {p: p for p in PARAMETERS}
SCENARIOS = ("I", "II", "III", "IV")


@dataclass(frozen=True)
class DiscontinuityRecord:
    dip_direction: float  # degrees, [0, 360)
    dip_angle: float  # degrees, [0, 90]
    trace_length: float  # metres, > 0

    def __post_init__(self):
        reason = _record_problem(self.dip_direction, self.dip_angle, self.trace_length)
        if reason:
            raise InvariantViolation(None, reason)


@dataclass(frozen=True)
class Source:
    """Provenance: ``Source()`` for field observations, ``Source.generated(...)`` otherwise."""

    kind: str = "observed"
    engine: str | None = None
    seed: int | None = None

    @classmethod
    def generated(cls, engine: str, seed: int) -> "Source":
        return cls("generated", engine, int(seed))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "engine": self.engine, "seed": self.seed}


OBSERVED = Source()


def _record_problem(dd, da, tl) -> str | None:
    if not (math.isfinite(dd) and 0.0 <= dd < 360.0):
        return f"dip_direction {dd!r} outside [0, 360)"
    if not (math.isfinite(da) and 0.0 <= da <= 90.0):
        return f"dip_angle {da!r} outside [0, 90]"
    if not (math.isfinite(tl) and tl > 0.0):
        return f"trace_length {tl!r} must be positive and finite"
    return None


def normalize_dip_direction(values):
    """Reduce azimuths modulo 360 into [0, 360)."""
    out = np.mod(np.asarray(values, dtype=float), 360.0)
    # np.mod(-tiny, 360) rounds to 360.0
    return np.where(out >= 360.0, 0.0, out)


class DiscontinuitySet:
    """An immutable, validated, ordered collection of discontinuities.

    Records are stored column-wise in a read-only ``(n, 3)`` array whose
    columns follow :data:`PARAMETERS`.
    """

    __slots__ = ("name", "location", "group_id", "source", "_data")

    def __init__(self, name, data, *, location="", group_id=0, source=OBSERVED):
        arr = np.array(data, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected an (n, 3) array, got shape {arr.shape}")
        if arr.shape[0] == 0:
            raise EmptyFile(f"dataset {name!r} has no records")
        bad = ~(
            np.isfinite(arr).all(axis=1)
            & (arr[:, 0] >= 0.0) & (arr[:, 0] < 360.0)
            & (arr[:, 1] >= 0.0) & (arr[:, 1] <= 90.0)
            & (arr[:, 2] > 0.0)
        )
        if bad.any():
            i = int(np.argmax(bad))
            raise InvariantViolation(i + 1, _record_problem(*arr[i]))
        arr.setflags(write=False)
        object.__setattr__(self, "_data", arr)
        object.__setattr__(self, "name", str(name))
        object.__setattr__(self, "location", str(location))
        object.__setattr__(self, "group_id", int(group_id))
        object.__setattr__(self, "source", source)

    def __setattr__(self, key, value):
        raise AttributeError("DiscontinuitySet is immutable")

    def __reduce__(self):
        kw = {"location": self.location, "group_id": self.group_id, "source": self.source}
        return (_rebuild_set, (self.name, np.array(self._data), kw))

    @classmethod
    def from_records(cls, name, records, **kw) -> "DiscontinuitySet":
        rows = [(r.dip_direction, r.dip_angle, r.trace_length) for r in records]
        return cls(name, np.array(rows, dtype=float).reshape(-1, 3), **kw)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def records(self) -> tuple[DiscontinuityRecord, ...]:
        return tuple(DiscontinuityRecord(*map(float, row)) for row in self._data)

    @property
    def n(self) -> int:
        return self._data.shape[0]

    def __len__(self):
        return self.n

    def column(self, parameter: str) -> np.ndarray:
        return self._data[:, PARAMETERS.index(parameter)]

    def features(self) -> np.ndarray:
        """Columns with trace length replaced by its natural log."""
        out = self._data.copy()
        out[:, 2] = np.log(out[:, 2])
        return out

    def __eq__(self, other):
        if not isinstance(other, DiscontinuitySet):
            return NotImplemented
        return (
            self.name == other.name
            and self.location == other.location
            and self.group_id == other.group_id
            and self.source == other.source
            and np.array_equal(self._data, other._data)
        )

    __hash__ = None

    def __repr__(self):
        return f"DiscontinuitySet({self.name!r}, n={self.n}, source={self.source.kind})"


def _rebuild_set(name, data, kw):
    return DiscontinuitySet(name, data, **kw)


# --- CSV ------------------------------------------------------------------

def parse_csv(path, column_map: Mapping[str, str] | None = None, *, name=None,
              location="", group_id=0, source=OBSERVED) -> DiscontinuitySet:
    """Read a discontinuity table.

    ``column_map`` maps each of :data:`PARAMETERS` to the header used in the
    file (defaults to identical names). Rows are numbered from 1 after the
    header in error messages. Dip directions are reduced modulo 360; blank
    cells are errors, never imputed.
    """
    path = Path(path)
    cols = dict(DEFAULT_COLUMNS)
    if column_map:
        cols.update(column_map)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        index = {}
        for param in PARAMETERS:
            if cols[param] not in header:
                raise MissingColumn(cols[param])
            index[param] = header.index(cols[param])
        rows = []
        for rowno, row in enumerate(reader, start=1):
            if not any(cell.strip() for cell in row):
                continue
            values = []
            for param in PARAMETERS:
                j = index[param]
                cell = row[j].strip() if j < len(row) else ""
                try:
                    values.append(float(cell))
                except ValueError:
                    raise UnparseableCell(rowno, cols[param], cell) from None
            values[0] = float(normalize_dip_direction(values[0]))
            reason = _record_problem(*values)
            if reason:
                raise InvariantViolation(rowno, reason)
            rows.append(values)
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    return DiscontinuitySet(name or path.stem, rows, location=location,
                            group_id=group_id, source=source)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(dset: DiscontinuitySet, path, column_map: Mapping[str, str] | None = None,
              sidecar: dict | None = None) -> None:
    """Write ``dset`` in the input schema; generated sets also get a JSON sidecar."""
    cols = dict(DEFAULT_COLUMNS)
    if column_map:
        cols.update(column_map)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([cols[p] for p in PARAMETERS])
        for row in dset.data:
            w.writerow([_fmt(v) for v in row])
    if dset.source.kind == "generated" or sidecar is not None:
        meta = {"name": dset.name, "n": dset.n, "source": dset.source.to_dict()}
        if sidecar:
            meta.update(sidecar)
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".json")


# --- summaries ----------------------------------------------------------------

@dataclass(frozen=True)
class ParameterSummary:
    mean: float
    std: float
    min: float
    max: float
    count: int


def summary_stats(dset: DiscontinuitySet) -> dict[str, ParameterSummary]:
    """Per-parameter mean, population std, min, max and count.

    Sums are exactly rounded (``math.fsum``) so the result does not depend on
    record order.
    """
    out = {}
    n = dset.n
    for j, param in enumerate(PARAMETERS):
        x = dset.data[:, j]
        mean = math.fsum(x) / n
        var = math.fsum((x - mean) ** 2) / n
        out[param] = ParameterSummary(mean, math.sqrt(var), float(x.min()), float(x.max()), n)
    return out


# --- catalog --------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    location: str
    group: int
    path: Path
    count: int
    scenario: str


@dataclass(frozen=True)
class DatasetCatalog:
    entries: tuple[CatalogEntry, ...]
    mismatches: tuple[CountMismatch, ...] = ()
    _sets: dict = field(default_factory=dict, repr=False, compare=False)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def entry(self, name: str) -> CatalogEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def load(self, name: str) -> DiscontinuitySet:
        if name not in self._sets:
            e = self.entry(name)
            self._sets[name] = parse_csv(e.path, name=e.name, location=e.location,
                                         group_id=e.group)
        return self._sets[name]

    def by_scenario(self, *tags: str) -> list[CatalogEntry]:
        return [e for e in self.entries if e.scenario in tags]


def load_catalog(path, strict: bool = True) -> DatasetCatalog:
    """Load a JSON manifest and cross-check every referenced dataset.

    Paths in the manifest are resolved relative to the manifest's directory.
    With ``strict`` (default) a record-count disagreement raises
    :class:`CountMismatch`; otherwise it is collected in ``mismatches`` and the
    file's actual count is kept.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise ManifestParseError(f"{path}: manifest must be a non-empty JSON array")

    entries, mismatches, sets, seen = [], [], {}, set()
    for i, item in enumerate(raw):
        try:
            name = str(item["name"])
            entry = CatalogEntry(
                name=name,
                location=str(item["location"]),
                group=int(item["group"]),
                path=(path.parent / item["path"]).resolve(),
                count=int(item["count"]),
                scenario=str(item["scenario"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestParseError(f"{path}: entry {i}: {exc!r}") from exc
        if entry.scenario not in SCENARIOS:
            raise ManifestParseError(f"{path}: entry {name!r}: unknown scenario {entry.scenario!r}")
        if entry.count <= 0:
            raise ManifestParseError(f"{path}: entry {name!r}: count must be positive")
        if name in seen:
            raise ManifestParseError(f"{path}: duplicate dataset name {name!r}")
        seen.add(name)
        if not os.path.isfile(entry.path):
            raise DatasetFileMissing(name, entry.path)
        dset = parse_csv(entry.path, name=name, location=entry.location, group_id=entry.group)
        if dset.n != entry.count:
            err = CountMismatch(name, entry.count, dset.n)
            if strict:
                raise err
            mismatches.append(err)
            entry = CatalogEntry(entry.name, entry.location, entry.group, entry.path,
                                 dset.n, entry.scenario)
        sets[name] = dset
        entries.append(entry)
    return DatasetCatalog(tuple(entries), tuple(mismatches), sets)
