"""Domain types, wide-CSV ingestion, validation and dataset statistics.

The source datasets are wide DoE-style CSV files: one column per ingredient
(APIs and excipients side by side), one row per formulation, plus columns
for the filament aspect and the printability label. A
:class:`DatasetSchema` names the role of each column; nothing is ever
inferred from the column text itself.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DomainError, JsonlError, RowError, SchemaError
from .textnorm import normalize_text

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# Default tolerance, in w/w%, for the composition-sum rule. Literature-sourced
# rows are often rounded to the nearest percent, so exact-100 is too strict.
DEFAULT_SUM_TOLERANCE = 0.5


class IngredientKind(Enum):
    API = "api"
    EXCIPIENT = "excipient"


@dataclass(frozen=True)
class Ingredient:
    """An ingredient name plus its role, as declared by the schema."""

    name: str
    kind: IngredientKind
    normalized: str = field(init=False)

    def __post_init__(self):
        norm = normalize_text(self.name)
        if not norm:
            raise DomainError(f"ingredient name {self.name!r} is empty after normalization")
        object.__setattr__(self, "normalized", norm)


class FilamentAspect(Enum):
    """Mechanical quality of the extruded filament."""

    GOOD = "Good"
    FLEXIBLE = "Flexible"
    BRITTLE = "Brittle"
    UNEXTRUDABLE = "Unextrudable"
    UNKNOWN = "Unknown"


def parse_aspect(label: str) -> tuple[FilamentAspect, bool]:
    """Map a free-text label onto an aspect, case-insensitively.

    Returns ``(aspect, recognized)``; unrecognized labels map to UNKNOWN
    with ``recognized=False`` so callers can emit a diagnostic.
    """
    key = label.strip().lower()
    for aspect in FilamentAspect:
        if key == aspect.value.lower():
            return aspect, True
    return FilamentAspect.UNKNOWN, not key


class Printability(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


_PRINTABLE_LABELS = {
    "yes": Printability.YES,
    "true": Printability.YES,
    "1": Printability.YES,
    "no": Printability.NO,
    "false": Printability.NO,
    "0": Printability.NO,
}


def parse_printability(label: str) -> tuple[Printability, bool]:
    """Map a cell value onto the printability tri-state.

    Accepts yes/no/true/false/1/0 case-insensitively; anything else is
    UNKNOWN with ``recognized=False``.
    """
    key = label.strip().lower()
    if key in _PRINTABLE_LABELS:
        return _PRINTABLE_LABELS[key], True
    if key in ("", "unknown"):
        return Printability.UNKNOWN, True
    return Printability.UNKNOWN, False


@dataclass(frozen=True)
class Formulation:
    """One dataset row: composition in w/w% plus the two outcome labels.

    ``composition`` maps the ingredient's display name to its proportion.
    Ingredients that are absent from the row do not appear at all; a zero
    cell means absent, not "present at 0%".
    """

    id: str
    composition: Mapping[str, float]
    printable: Printability = Printability.UNKNOWN
    aspect: FilamentAspect = FilamentAspect.UNKNOWN

    def __post_init__(self):
        object.__setattr__(self, "composition", dict(self.composition))

    def total(self) -> float:
        return sum(self.composition.values())

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "composition": dict(self.composition),
            "printable": self.printable.value,
            "aspect": self.aspect.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Formulation":
        return cls(
            id=str(d["id"]),
            composition={str(k): float(v) for k, v in d["composition"].items()},
            printable=Printability(d.get("printable", "unknown")),
            aspect=FilamentAspect(d.get("aspect", "Unknown")),
        )


@dataclass(frozen=True)
class DatasetSchema:
    """Column roles for a wide formulation CSV."""

    api_columns: tuple[str, ...]
    excipient_columns: tuple[str, ...]
    aspect_column: str
    printability_column: str
    sum_tolerance: float = DEFAULT_SUM_TOLERANCE
    id_column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "api_columns", tuple(self.api_columns))
        object.__setattr__(self, "excipient_columns", tuple(self.excipient_columns))
        overlap = set(self.api_columns) & set(self.excipient_columns)
        if overlap:
            raise SchemaError(f"columns listed as both API and excipient: {sorted(overlap)}")
        for col in (self.aspect_column, self.printability_column):
            if col in self.api_columns or col in self.excipient_columns:
                raise SchemaError(f"label column {col!r} also listed as an ingredient column")

    @property
    def ingredient_columns(self) -> tuple[str, ...]:
        return self.api_columns + self.excipient_columns

    def kind_of(self, column: str) -> IngredientKind:
        if column in self.api_columns:
            return IngredientKind.API
        if column in self.excipient_columns:
            return IngredientKind.EXCIPIENT
        raise SchemaError(f"column {column!r} is not declared in the schema")

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "api_columns": list(self.api_columns),
            "excipient_columns": list(self.excipient_columns),
            "aspect_column": self.aspect_column,
            "printability_column": self.printability_column,
            "sum_tolerance": self.sum_tolerance,
        }
        if self.id_column:
            d["id_column"] = self.id_column
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "DatasetSchema":
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        try:
            return cls(
                api_columns=tuple(d["api_columns"]),
                excipient_columns=tuple(d["excipient_columns"]),
                aspect_column=d["aspect_column"],
                printability_column=d["printability_column"],
                sum_tolerance=float(d.get("sum_tolerance", DEFAULT_SUM_TOLERANCE)),
                id_column=d.get("id_column"),
            )
        except KeyError as exc:
            raise SchemaError(f"schema config misses key {exc.args[0]!r}") from None

    @classmethod
    def from_json_file(cls, path: str | Path) -> "DatasetSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_wide_csv(path: str | Path, schema: DatasetSchema) -> list[Formulation]:
    """Read a wide CSV into formulations, one per data row, order preserved.

    Empty and zero cells mean the ingredient is absent. IDs come from the
    schema's ``id_column`` when configured, otherwise they are the 1-based
    data-row index.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return read_wide_csv(fh, schema)


def read_wide_csv(lines: Iterable[str], schema: DatasetSchema) -> list[Formulation]:
    reader = csv.DictReader(lines)
    header = reader.fieldnames
    if header is None:
        raise SchemaError("CSV has no header row")
    required = list(schema.ingredient_columns) + [schema.aspect_column, schema.printability_column]
    if schema.id_column:
        required.append(schema.id_column)
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"CSV header misses schema column(s): {missing}")

    formulations: list[Formulation] = []
    for row_index, row in enumerate(reader, start=1):
        composition: dict[str, float] = {}
        for col in schema.ingredient_columns:
            cell = (row.get(col) or "").strip()
            if not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise RowError(row_index, f"non-numeric proportion {cell!r} in column {col!r}") from None
            if value != 0.0:
                composition[col] = value
        aspect, ok = parse_aspect((row.get(schema.aspect_column) or ""))
        if not ok:
            log.warning("row %d: unrecognized aspect label %r mapped to Unknown",
                        row_index, row.get(schema.aspect_column))
        printable, ok = parse_printability((row.get(schema.printability_column) or ""))
        if not ok:
            log.warning("row %d: unrecognized printability label %r mapped to unknown",
                        row_index, row.get(schema.printability_column))
        fid = (row.get(schema.id_column) or "").strip() if schema.id_column else ""
        formulations.append(Formulation(
            id=fid or str(row_index),
            composition=composition,
            printable=printable,
            aspect=aspect,
        ))
    return formulations


@dataclass(frozen=True)
class ValidationFinding:
    code: str
    message: str


SUM_OUT_OF_RANGE = "SUM_OUT_OF_RANGE"
NEGATIVE_PROPORTION = "NEGATIVE_PROPORTION"
NON_FINITE_PROPORTION = "NON_FINITE_PROPORTION"
EMPTY_COMPOSITION = "EMPTY_COMPOSITION"
UNKNOWN_ASPECT = "UNKNOWN_ASPECT"


def validate_formulation(f: Formulation, tolerance: float = DEFAULT_SUM_TOLERANCE) -> list[ValidationFinding]:
    """Check one formulation against the composition rules.

    Returns findings instead of raising: validation is a report, not a
    gate, and never mutates its input.
    """
    findings: list[ValidationFinding] = []
    if not f.composition:
        findings.append(ValidationFinding(EMPTY_COMPOSITION, "composition has no ingredients"))
    for name, value in f.composition.items():
        if value != value or value in (float("inf"), float("-inf")):
            findings.append(ValidationFinding(NON_FINITE_PROPORTION, f"{name}: proportion {value!r} is not finite"))
        elif value < 0:
            findings.append(ValidationFinding(NEGATIVE_PROPORTION, f"{name}: proportion {value} is negative"))
    if f.composition and not any(fi.code == NON_FINITE_PROPORTION for fi in findings):
        total = f.total()
        if not (100.0 - tolerance <= total <= 100.0 + tolerance):
            findings.append(ValidationFinding(
                SUM_OUT_OF_RANGE,
                f"composition sums to {total:g} w/w%, outside 100±{tolerance:g}",
            ))
    if f.aspect is FilamentAspect.UNKNOWN:
        findings.append(ValidationFinding(UNKNOWN_ASPECT, "filament aspect is Unknown"))
    return findings


@dataclass(frozen=True)
class EdaReport:
    """Frequency statistics over a dataset, ready for external plotting."""

    api_counts: Mapping[str, int]
    excipient_counts: Mapping[str, int]
    pair_counts: Mapping[tuple[str, str], int]
    aspect_proportions: Mapping[FilamentAspect, float]
    n_formulations: int

    def to_dict(self) -> dict:
        return {
            "n_formulations": self.n_formulations,
            "api_counts": [{"name": n, "count": c} for n, c in _ordered(self.api_counts)],
            "excipient_counts": [{"name": n, "count": c} for n, c in _ordered(self.excipient_counts)],
            "pair_counts": [
                {"api": a, "excipient": e, "count": c}
                for (a, e), c in _ordered(self.pair_counts)
            ],
            "aspect_proportions": [
                {"aspect": a.value, "proportion": p}
                for a, p in sorted(self.aspect_proportions.items(), key=lambda kv: (-kv[1], kv[0].value))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        """Flat CSV rendering: kind,name,paired_with,value."""
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["kind", "name", "paired_with", "value"])
        for name, count in _ordered(self.api_counts):
            writer.writerow(["api", name, "", count])
        for name, count in _ordered(self.excipient_counts):
            writer.writerow(["excipient", name, "", count])
        for (api, exc), count in _ordered(self.pair_counts):
            writer.writerow(["pair", api, exc, count])
        for aspect, prop in sorted(self.aspect_proportions.items(), key=lambda kv: (-kv[1], kv[0].value)):
            writer.writerow(["aspect", aspect.value, "", repr(prop)])
        return buf.getvalue()


def _ordered(counts: Mapping) -> list:
    # Descending count, then lexicographic key, so serialized output is stable.
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def eda_summary(dataset: list[Formulation], schema: DatasetSchema) -> EdaReport:
    """Count API/excipient usage, API-excipient co-occurrence and aspects.

    Counts are per formulation (an ingredient counts once per row no matter
    its proportion); only nonzero counts appear in the maps.
    """
    api_set = set(schema.api_columns)
    exc_set = set(schema.excipient_columns)
    api_counts: Counter[str] = Counter()
    exc_counts: Counter[str] = Counter()
    pair_counts: Counter[tuple[str, str]] = Counter()
    aspect_counts: Counter[FilamentAspect] = Counter()

    for f in dataset:
        apis = [n for n in f.composition if n in api_set]
        excs = [n for n in f.composition if n in exc_set]
        api_counts.update(apis)
        exc_counts.update(excs)
        for a in apis:
            for e in excs:
                pair_counts[(a, e)] += 1
        aspect_counts[f.aspect] += 1

    n = len(dataset)
    proportions = {aspect: count / n for aspect, count in aspect_counts.items()} if n else {}
    return EdaReport(
        api_counts=dict(api_counts),
        excipient_counts=dict(exc_counts),
        pair_counts=dict(pair_counts),
        aspect_proportions=proportions,
        n_formulations=n,
    )


def write_formulations_jsonl(formulations: Iterable[Formulation], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for f in formulations:
            fh.write(json.dumps(f.to_dict(), ensure_ascii=False) + "\n")


def read_formulations_jsonl(path: str | Path) -> list[Formulation]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(Formulation.from_dict(json.loads(line)))
            except (ValueError, KeyError) as exc:
                raise JsonlError(line_no, f"bad formulation record: {exc}") from None
    return out
