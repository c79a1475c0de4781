"""Typed incident records over the 25-feature supply-chain schema.

The schema describes one forced-labor incident as 25 typed features
(free text, date ranges, integers, tri-state booleans, and one
categorical field). Records are validated against the schema, stored
as CSV, and encoded into Boolean variables for the formula miners:
booleans pass through, integers become two-sigma outlier flags, and
categorical features expand into one indicator variable per category.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

__all__ = [
    "Kind",
    "TriState",
    "Label",
    "Missing",
    "MISSING",
    "Text",
    "DateRange",
    "Integer",
    "Category",
    "FeatureValue",
    "FeatureSpec",
    "FeatureSchema",
    "IncidentRecord",
    "LabeledDataset",
    "BooleanizedDataset",
    "Violation",
    "UnknownFeatureError",
    "AllMissingError",
    "MalformedHeaderError",
    "BadValueError",
    "default_schema",
    "validate_record",
    "integer_stats",
    "booleanize",
    "parse_incident_csv",
    "write_incident_csv",
    "schema_from_mapping",
    "schema_to_mapping",
    "load_schema_file",
]


class Kind(str, Enum):
    """Value type of a feature."""

    TEXT = "text"
    DATE_RANGE = "date_range"
    INTEGER = "integer"
    BOOLEAN = "boolean"
    CATEGORICAL = "categorical"


class TriState(str, Enum):
    """Boolean answer that may also be marked not applicable."""

    YES = "yes"
    NO = "no"
    NOT_APPLICABLE = "not_applicable"


class Label(str, Enum):
    """Incident class: a forced-labor instance or a non-instance."""

    POSITIVE = "pos"
    NEGATIVE = "neg"


@dataclass(frozen=True)
class Missing:
    """Sentinel for an absent value; legal for every feature kind."""

    def __repr__(self) -> str:  # pragma: no cover - repr cosmetics
        return "MISSING"


MISSING = Missing()


@dataclass(frozen=True)
class Text:
    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise ValueError("empty text is not a value; use MISSING")


@dataclass(frozen=True)
class DateRange:
    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"date range start {self.start} after end {self.end}")


@dataclass(frozen=True)
class Integer:
    value: int


@dataclass(frozen=True)
class Category:
    label: str

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("empty category label; use MISSING")


FeatureValue = Missing | Text | DateRange | Integer | TriState | Category

_KIND_OF_VALUE = {
    Text: Kind.TEXT,
    DateRange: Kind.DATE_RANGE,
    Integer: Kind.INTEGER,
    TriState: Kind.BOOLEAN,
    Category: Kind.CATEGORICAL,
}


@dataclass(frozen=True)
class FeatureSpec:
    """One feature: key, human-readable name, kind, and value restrictions."""

    key: str
    display_name: str
    kind: Kind
    allowed_categories: tuple[str, ...] | None = None
    allowed_integers: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if not re.fullmatch(r"[a-z_][a-z0-9_]*", self.key):
            raise ValueError(f"feature key {self.key!r} is not a lowercase identifier")
        if self.kind is Kind.CATEGORICAL and not self.allowed_categories:
            raise ValueError(f"categorical feature {self.key!r} needs allowed_categories")
        if self.kind is not Kind.CATEGORICAL and self.allowed_categories:
            raise ValueError(f"allowed_categories only applies to categorical features ({self.key!r})")
        if self.allowed_integers is not None and self.kind is not Kind.INTEGER:
            raise ValueError(f"allowed_integers only applies to integer features ({self.key!r})")


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature list with unique keys."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self) -> None:
        keys = [f.key for f in self.features]
        if len(set(keys)) != len(keys):
            dupes = sorted({k for k in keys if keys.count(k) > 1})
            raise ValueError(f"duplicate feature keys: {dupes}")

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(f.key for f in self.features)

    def spec(self, key: str) -> FeatureSpec:
        for f in self.features:
            if f.key == key:
                return f
        raise UnknownFeatureError(key)

    def __contains__(self, key: str) -> bool:
        return any(f.key == key for f in self.features)


@dataclass(frozen=True)
class IncidentRecord:
    """One incident: labeled feature values plus source-article provenance."""

    incident_id: str
    label: Label
    values: Mapping[str, FeatureValue] = field(default_factory=dict)
    source_article_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.incident_id:
            raise ValueError("incident_id must be nonempty")
        for aid in self.source_article_ids:
            if ";" in aid:
                raise ValueError(f"source article id {aid!r} may not contain ';'")

    def value(self, key: str) -> FeatureValue:
        return self.values.get(key, MISSING)


@dataclass(frozen=True)
class LabeledDataset:
    """Schema plus incident records with unique ids."""

    schema: FeatureSchema
    records: tuple[IncidentRecord, ...] = ()

    def __post_init__(self) -> None:
        ids = [r.incident_id for r in self.records]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate incident ids: {dupes}")


@dataclass(frozen=True)
class BooleanizedDataset:
    """Boolean encoding of a dataset: one row of {True, False, None} per incident.

    ``None`` marks a missing value. Variable order follows the schema;
    row order follows the source records.
    """

    variables: tuple[str, ...]
    rows: tuple[Mapping[str, bool | None], ...]
    labels: tuple[Label, ...]
    incident_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.labels):
            raise ValueError("rows and labels must have equal length")
        if self.incident_ids and len(self.incident_ids) != len(self.rows):
            raise ValueError("incident_ids must align with rows")


@dataclass(frozen=True)
class Violation:
    """One broken validation rule, attributed to a feature key."""

    key: str
    rule: str
    message: str


class FeatureModelError(Exception):
    pass


class UnknownFeatureError(FeatureModelError):
    def __init__(self, key: str, detail: str = "unknown feature"):
        self.key = key
        super().__init__(f"{detail}: {key!r}")


class AllMissingError(FeatureModelError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"feature {key!r} has no non-missing values")


class MalformedHeaderError(FeatureModelError):
    pass


class BadValueError(FeatureModelError):
    def __init__(self, row: int, key: str, reason: str):
        self.row = row
        self.key = key
        self.reason = reason
        super().__init__(f"row {row}, column {key!r}: {reason}")


SOURCING_CATEGORIES = (
    "Agriculture",
    "Fishing",
    "Mining",
    "Sex Work",
    "Clothing/Textiles",
    "Hospitality",
)


def default_schema() -> FeatureSchema:
    """The shipped 25-feature incident schema."""
    t, b, i = Kind.TEXT, Kind.BOOLEAN, Kind.INTEGER
    return FeatureSchema(
        features=(
            FeatureSpec("company", "Company", t),
            FeatureSpec("product", "Product", t),
            FeatureSpec("supply_chain", "Supply Chain", t),
            FeatureSpec("date_of_incident", "Date of Incident", Kind.DATE_RANGE),
            FeatureSpec("industry", "Industry", t),
            FeatureSpec("sic", "SIC", t),
            FeatureSpec(
                "sourcing_characteristic",
                "Sourcing Characteristic",
                Kind.CATEGORICAL,
                allowed_categories=SOURCING_CATEGORIES,
            ),
            FeatureSpec("cross_border", "Product or Service Crosses National Border", b),
            FeatureSpec("company_age", "Age of Company", i),
            FeatureSpec("country_of_incident", "Country of Incident", t),
            FeatureSpec("state_of_incident", "State/Region/Province of Incident", t),
            FeatureSpec("high_risk_source", "High Risk Sourcing Country", b),
            FeatureSpec("high_risk_product", "High Risk Product", b),
            FeatureSpec("forged_documentation", "Concerns or Evidence of Fake/Forged Documentation", b),
            FeatureSpec(
                "position_in_supply_chain",
                "Position in Supply Chain",
                i,
                allowed_integers=(1, 2, 3, 4),
            ),
            FeatureSpec("raw_material_supplier", "Raw Material Supplier", b),
            FeatureSpec("firm_provided_housing", "Firm Provided Housing", b),
            FeatureSpec("firm_provided_transportation", "Firm Provided Transportation", b),
            FeatureSpec("forced_labor_detected", "Forced Labor Detected", b),
            FeatureSpec("slave_labor_detected", "Slave Labor Detected", b),
            FeatureSpec("child_labor_detected", "Child Labor Detected", b),
            FeatureSpec("mandatory_overtime", "Mandatory Overtime", b),
            FeatureSpec("sex_trafficking", "Sex Trafficking", b),
            FeatureSpec("prison_labor_voluntary", "Prison Labor (Voluntary)", b),
            FeatureSpec("prison_labor_forced", "Prison Labor (Forced)", b),
        )
    )


def validate_record(record: IncidentRecord, schema: FeatureSchema) -> list[Violation]:
    """Check a record against the schema; violations are data, not errors."""
    violations: list[Violation] = []
    for key, value in record.values.items():
        if key not in schema:
            violations.append(Violation(key, "unknown_feature", f"{key!r} is not in the schema"))
            continue
        if isinstance(value, Missing):
            continue
        spec = schema.spec(key)
        kind = _KIND_OF_VALUE.get(type(value))
        if kind is not spec.kind:
            violations.append(
                Violation(
                    key,
                    "kind_mismatch",
                    f"{key!r} expects {spec.kind.value}, got {kind.value if kind else type(value).__name__}",
                )
            )
            continue
        if isinstance(value, Category) and value.label not in (spec.allowed_categories or ()):
            violations.append(
                Violation(key, "category_not_allowed", f"{value.label!r} is not an allowed category for {key!r}")
            )
        if isinstance(value, Integer) and spec.allowed_integers is not None:
            if value.value not in spec.allowed_integers:
                violations.append(
                    Violation(
                        key,
                        "integer_not_allowed",
                        f"{value.value} is outside {sorted(spec.allowed_integers)} for {key!r}",
                    )
                )
    return violations


def _integer_values(dataset: LabeledDataset, key: str) -> list[int]:
    return [
        r.values[key].value
        for r in dataset.records
        if isinstance(r.values.get(key), Integer)
    ]


def _exact_stats(values: list[int]) -> tuple[Fraction, Fraction]:
    """Exact sample mean and sample variance (divisor n-1; variance 0 when n=1)."""
    n = len(values)
    mean = Fraction(sum(values), n)
    if n == 1:
        return mean, Fraction(0)
    var = sum((Fraction(v) - mean) ** 2 for v in values) / (n - 1)
    return mean, var


def integer_stats(dataset: LabeledDataset, key: str) -> tuple[float, float, int]:
    """Sample mean, sample standard deviation, and count over non-missing values."""
    if key not in dataset.schema:
        raise UnknownFeatureError(key)
    if dataset.schema.spec(key).kind is not Kind.INTEGER:
        raise UnknownFeatureError(key, detail="not an integer feature")
    values = _integer_values(dataset, key)
    if not values:
        raise AllMissingError(key)
    mean, var = _exact_stats(values)
    return float(mean), math.sqrt(var), len(values)


def category_slug(label: str) -> str:
    """Lowercase identifier for a category label, e.g. 'Clothing/Textiles' -> 'clothing_textiles'."""
    return re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")


def booleanized_variables(schema: FeatureSchema) -> tuple[str, ...]:
    """Variable names booleanize() will produce, in schema order."""
    names: list[str] = []
    for spec in schema.features:
        if spec.kind is Kind.BOOLEAN:
            names.append(spec.key)
        elif spec.kind is Kind.INTEGER:
            names.append(f"{spec.key}_outlier")
        elif spec.kind is Kind.CATEGORICAL:
            names.extend(f"{spec.key}_{category_slug(c)}" for c in spec.allowed_categories or ())
    return tuple(names)


def booleanize(dataset: LabeledDataset) -> BooleanizedDataset:
    """Encode a dataset as Boolean variables for the miners.

    Tri-state booleans map yes/no to True/False and not-applicable to
    missing. An integer feature ``k`` becomes ``k_outlier``, true when the
    value sits strictly more than two sample standard deviations from the
    feature's sample mean (never true for a zero-variance column). A
    categorical feature becomes one indicator per allowed category. Text
    and date-range features produce no variables. Missing propagates.
    """
    schema = dataset.schema
    variables = booleanized_variables(schema)

    # Exact rational statistics make the 2-sigma boundary deterministic:
    # the comparison |v - mean| > 2*stddev is evaluated as
    # (v - mean)^2 > 4 * variance with no floating-point rounding.
    stats: dict[str, tuple[Fraction, Fraction]] = {}
    for spec in schema.features:
        if spec.kind is Kind.INTEGER:
            values = _integer_values(dataset, spec.key)
            if values:
                stats[spec.key] = _exact_stats(values)

    rows: list[dict[str, bool | None]] = []
    for record in dataset.records:
        row: dict[str, bool | None] = {}
        for spec in schema.features:
            value = record.value(spec.key)
            if spec.kind is Kind.BOOLEAN:
                if isinstance(value, TriState):
                    row[spec.key] = {TriState.YES: True, TriState.NO: False}.get(value)
                else:
                    row[spec.key] = None
            elif spec.kind is Kind.INTEGER:
                name = f"{spec.key}_outlier"
                if isinstance(value, Integer) and spec.key in stats:
                    mean, var = stats[spec.key]
                    row[name] = (Fraction(value.value) - mean) ** 2 > 4 * var
                else:
                    row[name] = None
            elif spec.kind is Kind.CATEGORICAL:
                for cat in spec.allowed_categories or ():
                    name = f"{spec.key}_{category_slug(cat)}"
                    if isinstance(value, Category):
                        row[name] = value.label == cat
                    else:
                        row[name] = None
        rows.append(row)

    return BooleanizedDataset(
        variables=variables,
        rows=tuple(rows),
        labels=tuple(r.label for r in dataset.records),
        incident_ids=tuple(r.incident_id for r in dataset.records),
    )


# -- CSV interchange ------------------------------------------------------
#
# Columns: incident_id,label,source_article_ids then the feature keys in
# schema order. label is pos/neg; tri-state booleans are Y/N/NA; missing is
# an empty cell; date ranges are YYYY-MM-DD/YYYY-MM-DD; article ids are
# ';'-separated. Values that break semantic rules (an unlisted category,
# an out-of-range integer) still round-trip; validate_record reports them.

_TRI_ENCODE = {TriState.YES: "Y", TriState.NO: "N", TriState.NOT_APPLICABLE: "NA"}
_TRI_DECODE = {v: k for k, v in _TRI_ENCODE.items()}


def encode_value(value: FeatureValue) -> str:
    if isinstance(value, Missing):
        return ""
    if isinstance(value, Text):
        return value.value
    if isinstance(value, DateRange):
        return f"{value.start.isoformat()}/{value.end.isoformat()}"
    if isinstance(value, Integer):
        return str(value.value)
    if isinstance(value, TriState):
        return _TRI_ENCODE[value]
    if isinstance(value, Category):
        return value.label
    raise TypeError(f"not a feature value: {value!r}")


def decode_value(cell: str, kind: Kind) -> FeatureValue:
    """Decode one CSV cell; raises ValueError on unrepresentable input."""
    if cell == "":
        return MISSING
    if kind is Kind.TEXT:
        return Text(cell)
    if kind is Kind.CATEGORICAL:
        return Category(cell)
    if kind is Kind.INTEGER:
        try:
            return Integer(int(cell))
        except ValueError:
            raise ValueError(f"not an integer: {cell!r}") from None
    if kind is Kind.BOOLEAN:
        if cell not in _TRI_DECODE:
            raise ValueError(f"expected Y, N or NA, got {cell!r}")
        return _TRI_DECODE[cell]
    if kind is Kind.DATE_RANGE:
        parts = cell.split("/")
        if len(parts) != 2:
            raise ValueError(f"expected YYYY-MM-DD/YYYY-MM-DD, got {cell!r}")
        try:
            start, end = date.fromisoformat(parts[0]), date.fromisoformat(parts[1])
        except ValueError:
            raise ValueError(f"bad date in range: {cell!r}") from None
        if start > end:
            raise ValueError(f"range start after end: {cell!r}")
        return DateRange(start, end)
    raise ValueError(f"unhandled kind {kind}")  # pragma: no cover


def write_incident_csv(dataset: LabeledDataset) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["incident_id", "label", "source_article_ids", *dataset.schema.keys])
    for record in dataset.records:
        writer.writerow(
            [
                record.incident_id,
                record.label.value,
                ";".join(record.source_article_ids),
                *(encode_value(record.value(k)) for k in dataset.schema.keys),
            ]
        )
    return buf.getvalue().encode("utf-8")


def parse_incident_csv(data: bytes, schema: FeatureSchema | None = None) -> LabeledDataset:
    """Parse incident CSV bytes; inverse of write_incident_csv."""
    schema = schema if schema is not None else default_schema()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedHeaderError(f"not valid UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeaderError("empty file") from None
    expected = ["incident_id", "label", "source_article_ids", *schema.keys]
    if header != expected:
        raise MalformedHeaderError(f"header mismatch: expected {expected[:4]}..., got {header[:4]}...")

    records: list[IncidentRecord] = []
    seen: set[str] = set()
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(expected):
            raise BadValueError(row_no, "", f"expected {len(expected)} columns, got {len(row)}")
        incident_id, label_cell, sources_cell, *cells = row
        if not incident_id:
            raise BadValueError(row_no, "incident_id", "empty id")
        if incident_id in seen:
            raise BadValueError(row_no, "incident_id", f"duplicate id {incident_id!r}")
        seen.add(incident_id)
        try:
            label = Label(label_cell)
        except ValueError:
            raise BadValueError(row_no, "label", f"expected pos or neg, got {label_cell!r}") from None
        sources = tuple(s for s in sources_cell.split(";") if s)
        values: dict[str, FeatureValue] = {}
        for key, cell in zip(schema.keys, cells):
            try:
                value = decode_value(cell, schema.spec(key).kind)
            except ValueError as exc:
                raise BadValueError(row_no, key, str(exc)) from None
            if not isinstance(value, Missing):
                values[key] = value
        records.append(IncidentRecord(incident_id, label, values, sources))
    return LabeledDataset(schema=schema, records=tuple(records))


# -- schema files ----------------------------------------------------------


def schema_from_mapping(data: Mapping) -> FeatureSchema:
    """Build a schema from parsed file content ({'features': [...]})."""
    raw = data.get("features")
    if not isinstance(raw, list) or not raw:
        raise ValueError("schema file needs a nonempty 'features' list")
    specs = []
    for entry in raw:
        specs.append(
            FeatureSpec(
                key=entry["key"],
                display_name=entry.get("display_name", entry["key"]),
                kind=Kind(entry["kind"]),
                allowed_categories=tuple(entry["categories"]) if entry.get("categories") else None,
                allowed_integers=tuple(entry["allowed_integers"]) if entry.get("allowed_integers") else None,
            )
        )
    return FeatureSchema(features=tuple(specs))


def schema_to_mapping(schema: FeatureSchema) -> dict:
    features = []
    for spec in schema.features:
        entry: dict = {"key": spec.key, "display_name": spec.display_name, "kind": spec.kind.value}
        if spec.allowed_categories:
            entry["categories"] = list(spec.allowed_categories)
        if spec.allowed_integers:
            entry["allowed_integers"] = list(spec.allowed_integers)
        features.append(entry)
    return {"features": features}


def load_schema_file(path: str) -> FeatureSchema:
    import yaml

    with open(path, "r", encoding="utf-8") as fh:
        return schema_from_mapping(yaml.safe_load(fh))
