"""Shared fixture builders and independent oracles used across the suite."""

from __future__ import annotations

import random
from datetime import date, timedelta
from fractions import Fraction

from laborlens.features import (
    Category,
    DateRange,
    FeatureSchema,
    IncidentRecord,
    Integer,
    Kind,
    Label,
    LabeledDataset,
    MISSING,
    Text,
    TriState,
)

WORDS = ["tuna", "onions", "cobalt", "textiles", "steel", "shrimp", "bricks", "coffee", "gold", "rubber"]


def random_value(rng: random.Random, kind: Kind, categories=None):
    if rng.random() < 0.2:
        return MISSING
    if kind is Kind.TEXT:
        return Text(" ".join(rng.sample(WORDS, rng.randint(1, 3))))
    if kind is Kind.INTEGER:
        return Integer(rng.randint(-50, 200))
    if kind is Kind.BOOLEAN:
        return rng.choice(list(TriState))
    if kind is Kind.CATEGORICAL:
        return Category(rng.choice(list(categories)))
    start = date(2016, 1, 1) + timedelta(days=rng.randint(0, 3000))
    return DateRange(start, start + timedelta(days=rng.randint(0, 90)))


def random_record(rng: random.Random, schema: FeatureSchema, incident_id: str) -> IncidentRecord:
    values = {}
    for spec in schema.features:
        value = random_value(rng, spec.kind, spec.allowed_categories)
        if value is not MISSING:
            values[spec.key] = value
    return IncidentRecord(
        incident_id=incident_id,
        label=rng.choice([Label.POSITIVE, Label.NEGATIVE]),
        values=values,
        source_article_ids=tuple(f"a{rng.randint(0, 99)}" for _ in range(rng.randint(0, 3))),
    )


def random_dataset(rng: random.Random, schema: FeatureSchema, n: int) -> LabeledDataset:
    return LabeledDataset(
        schema=schema,
        records=tuple(random_record(rng, schema, f"inc-{i}") for i in range(n)),
    )


def outlier_oracle(values: list[int | None]) -> list[bool | None]:
    """Two-sigma outlier flags computed independently with exact rationals.

    Sample statistics over the non-missing entries (variance divisor n-1,
    zero when n=1); a present value is an outlier iff |v - mean| > 2*stddev,
    decided as (v - mean)^2 > 4*variance to avoid square roots.
    """
    present = [v for v in values if v is not None]
    if not present:
        return [None] * len(values)
    n = len(present)
    mean = Fraction(sum(present), n)
    var = Fraction(0) if n == 1 else sum((Fraction(v) - mean) ** 2 for v in present) / (n - 1)
    flags: list[bool | None] = []
    for v in values:
        if v is None:
            flags.append(None)
        else:
            flags.append((Fraction(v) - mean) ** 2 > 4 * var)
    return flags
