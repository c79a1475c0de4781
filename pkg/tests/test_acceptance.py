"""Acceptance suite: every release criterion, each at its stated tolerance.

All tolerances here are exact (integer counts, bit-equal floats, or
byte-identical files) except the wall-clock budget on exemplar
recovery. Oracles are the independent implementations from the unit
suites: Python-eval translation for propositional formulas,
satisfaction-set labeling for temporal formulas, exact-rational
statistics for the outlier rule, and raw generate-all-ASTs censuses
for enumeration.
"""

from __future__ import annotations

import itertools
import json
import random
import time
from pathlib import Path

import pytest

from laborlens.cli import main
from laborlens.fake_news import FakeNewsServer, sample_articles
from laborlens.features import (
    BooleanizedDataset,
    FeatureSchema,
    FeatureSpec,
    IncidentRecord,
    Integer,
    Kind,
    Label,
    LabeledDataset,
    booleanize,
)
from laborlens.formulas import (
    EnumerationConfig,
    Not,
    SatStatus,
    enumerate_formulas,
    eval_formula,
    formula_size,
    mine,
    parse_formula,
    sat_status,
    score_formula,
    truth_table,
)
from laborlens.qtree import Answer, QuestionNode, QuestionTree, evaluate, relevance_score
from laborlens.temporal import eval_mltl, eval_response, infer_bound

from helpers import outlier_oracle
from test_formulas import all_raw_formulas, bool_dataset, oracle_eval, oracle_table_bits, random_formula
from test_qtree import FakeArticle, MapProvider, random_tree
from test_temporal import oracle_min_bound, oracle_sat_set, random_mltl, random_trace

SEPARATOR_TEXT = "cross_border & (high_risk_source | high_risk_product)"


def exemplar_fixture() -> BooleanizedDataset:
    """200 rows over 5 variables; labels decided exactly by the separator.

    All 8 patterns of the three live variables appear with all 4 noise
    combinations, so a formula is a perfect separator on this data only
    if it is semantically the separator or its negation over the full
    variable space.
    """
    variables = [
        "cross_border",
        "high_risk_source",
        "high_risk_product",
        "mandatory_overtime",
        "sex_trafficking",
    ]
    rows, labels = [], []
    shapes = list(itertools.product([False, True], repeat=5))  # 32 shapes
    for repeat in range(6):  # 192 rows
        for cb, hrs, hrp, n1, n2 in shapes:
            rows.append(dict(zip(variables, (cb, hrs, hrp, n1, n2))))
            labels.append(Label.POSITIVE if cb and (hrs or hrp) else Label.NEGATIVE)
    for cb, hrs, hrp in itertools.product([False, True], repeat=3):  # 8 more -> 200
        rows.append(dict(zip(variables, (cb, hrs, hrp, False, True))))
        labels.append(Label.POSITIVE if cb and (hrs or hrp) else Label.NEGATIVE)
    order = list(range(len(rows)))
    random.Random(1337).shuffle(order)
    return bool_dataset(variables, [rows[k] for k in order], [labels[k] for k in order])


def is_perfect(f, data: BooleanizedDataset) -> bool:
    """Exact perfect-separation check by direct counting with the oracle."""
    sat_by_label = {Label.POSITIVE: [0, 0], Label.NEGATIVE: [0, 0]}
    for row, label in zip(data.rows, data.labels):
        sat_by_label[label][oracle_eval(f, row)] += 1
    (pu, ps), (nu, ns) = sat_by_label[Label.POSITIVE], sat_by_label[Label.NEGATIVE]
    return (pu == 0 and ns == 0) or (ps == 0 and nu == 0)


def test_criterion_exemplar_formula_recovery():
    """A truth-table equivalent of the known separating formula ranks first
    with j exactly 1.0 on a 200-row fixture, in under 10 seconds, and no
    smaller formula separates (brute force over every AST of size < 5)."""
    data = exemplar_fixture()
    assert len(data.rows) == 200

    for f in all_raw_formulas(data.variables, max_size=4):
        assert not is_perfect(f, data), f"smaller separator exists: {f}"

    config = EnumerationConfig(variables=data.variables, max_size=5, max_vars_per_formula=3)
    started = time.perf_counter()
    ranked = mine(config, data, top_k=10)
    elapsed = time.perf_counter() - started

    best = ranked[0]
    assert best.j == 1.0
    assert truth_table(best.formula) == truth_table(parse_formula(SEPARATOR_TEXT))
    assert elapsed < 10.0, f"mining took {elapsed:.2f}s"


def test_criterion_enumeration_census():
    """1 variable -> exactly 2 classes; 2 variables at size cap 9 -> exactly
    14 = 2^4 - 2; 3 variables at a full cap -> all emitted tables distinct
    and contingent. Cross-checked against raw-AST brute force censuses."""
    one = list(enumerate_formulas(EnumerationConfig(variables=("a",), max_size=3)))
    assert len(one) == 2

    config2 = EnumerationConfig(variables=("a", "b"), max_size=9, max_vars_per_formula=2)
    two = list(enumerate_formulas(config2))
    tables2 = {oracle_table_bits(f, ("a", "b")) for f in two}
    assert len(two) == 14 and len(tables2) == 14
    assert tables2 == {bits for bits in range(16) if bits not in (0b0000, 0b1111)}

    # brute-force oracle at equal caps: the class census must match exactly
    raw = set()
    for f in all_raw_formulas(("a", "b"), max_size=7):
        bits = oracle_table_bits(f, ("a", "b"))
        if bits not in (0b0000, 0b1111):
            raw.add(bits)
    emitted7 = {
        oracle_table_bits(f, ("a", "b"))
        for f in enumerate_formulas(EnumerationConfig(("a", "b"), max_size=7, max_vars_per_formula=2))
    }
    assert emitted7 == raw

    config3 = EnumerationConfig(variables=("a", "b", "c"), max_size=9)
    three = list(enumerate_formulas(config3))
    tables3 = [oracle_table_bits(f, ("a", "b", "c")) for f in three]
    assert len(set(tables3)) == len(tables3)
    assert all(bits not in (0x00, 0xFF) for bits in tables3)
    assert len(three) <= 254
    assert all(sat_status(f) is SatStatus.CONTINGENT for f in three)


def test_criterion_evaluator_oracle_equivalence():
    """eval_formula and eval_mltl each agree with their independent oracles
    on at least 10^4 random cases; zero mismatches."""
    rng = random.Random(424242)
    variables = ["a", "b", "c", "d"]
    for _ in range(10_000):
        f = random_formula(rng, variables, rng.randint(1, 5))
        assignment = {v: rng.random() < 0.5 for v in variables}
        assert eval_formula(f, assignment) == oracle_eval(f, assignment)

    atoms = ["p", "q"]
    checked = 0
    while checked < 10_000:
        length = rng.randint(1, 8)
        trace = random_trace(rng, "t", atoms, length)
        f = random_mltl(rng, atoms, rng.randint(1, 3), max_bound=length + 2)
        sat = oracle_sat_set(f, trace)
        for i in range(length):
            assert eval_mltl(f, trace, i) == (i in sat)
            checked += 1


def test_criterion_score_bookkeeping():
    """sat + unsat + skipped equals the class size for every mined formula on
    datasets with injected missing values; j(f) == -j(!f) bit-for-bit on
    missing-free data."""
    rng = random.Random(31415)
    variables = ("a", "b", "c")
    for _ in range(30):
        n = rng.randint(6, 40)
        rows = [{v: rng.choice([True, False, None]) for v in variables} for _ in range(n)]
        labels = [Label.POSITIVE if i % 2 else Label.NEGATIVE for i in range(n)]
        data = bool_dataset(variables, rows, labels)
        n_pos = sum(1 for l in labels if l is Label.POSITIVE)
        mined = mine(EnumerationConfig(variables, max_size=4), data, top_k=200)
        assert mined, "mining produced no evidenced formulas"
        for score in mined:
            assert score.n_pos_sat + score.n_pos_unsat + score.n_pos_skipped == n_pos
            assert score.n_neg_sat + score.n_neg_unsat + score.n_neg_skipped == n - n_pos

    for _ in range(500):
        n = rng.randint(2, 30)
        rows = [{v: rng.random() < 0.5 for v in variables} for _ in range(n)]
        labels = [Label.POSITIVE if i % 2 else Label.NEGATIVE for i in range(n)]
        data = bool_dataset(variables, rows, labels)
        f = random_formula(rng, list(variables), rng.randint(1, 4))
        assert score_formula(f, data).j == -score_formula(Not(f), data).j


def test_criterion_question_tree_laws():
    """Root-no scores 0, all-yes scores 1, uniform weights equal the yes
    fraction exactly, the evaluation is independent of frontier draw order,
    and flipping a no to yes never shrinks the asked set; 10^3 random DAGs."""
    rng = random.Random(8128)
    for _ in range(1000):
        n = rng.randint(1, 9)
        uniform = rng.random() < 0.5
        tree = random_tree(rng, n, uniform_weights=uniform)
        answers = {nid: rng.choice([Answer.YES, Answer.NO]) for nid in tree.nodes}
        evaluation = evaluate(tree, MapProvider(answers), FakeArticle())
        score = relevance_score(tree, evaluation)

        assert 0.0 <= score <= 1.0
        if answers["n00"] is Answer.NO:
            assert score == 0.0
        if all(a is Answer.YES for a in answers.values()):
            assert score == 1.0
        if uniform:
            assert score == sum(r.score for r in evaluation.results.values()) / n

        shuffled = evaluate(
            tree, MapProvider(answers), FakeArticle(), draw_order=lambda f: rng.choice(list(f))
        )
        assert shuffled == evaluation

        asked = {nid for nid, r in evaluation.results.items() if r.asked}
        noes = [nid for nid in asked if answers[nid] is Answer.NO]
        if noes:
            flipped = dict(answers)
            flipped[rng.choice(noes)] = Answer.YES
            wider = evaluate(tree, MapProvider(flipped), FakeArticle())
            assert asked <= {nid for nid, r in wider.results.items() if r.asked}


def test_criterion_booleanization_two_sigma():
    """The outlier rule flags exactly the brute-force-computed outliers on
    10^3 random integer columns; zero-variance columns flag nothing."""
    schema = FeatureSchema((FeatureSpec("metric", "Metric", Kind.INTEGER),))
    rng = random.Random(2020)
    for case in range(1000):
        n = rng.randint(1, 30)
        if case % 7 == 0:
            constant = rng.randint(-5, 5)
            values: list[int | None] = [constant] * n
        else:
            values = [rng.randint(-40, 40) if rng.random() > 0.2 else None for _ in range(n)]
        records = tuple(
            IncidentRecord(f"r{i}", Label.POSITIVE, {} if v is None else {"metric": Integer(v)})
            for i, v in enumerate(values)
        )
        out = booleanize(LabeledDataset(schema, records))
        flags = [row["metric_outlier"] for row in out.rows]
        assert flags == outlier_oracle(values)
        if len(set(v for v in values if v is not None)) == 1:
            assert not any(flags)


def test_criterion_mltl_bound_inference():
    """infer_bound returns the brute-force minimal t: the response holds at
    t_star on every positive trace and fails at t_star - 1 when t_star > 0."""
    rng = random.Random(60902)
    for _ in range(1000):
        traces = [
            random_trace(
                rng,
                f"t{k}",
                ["a", "c"],
                rng.randint(1, 9),
                label=rng.choice([Label.POSITIVE, Label.NEGATIVE]),
            )
            for k in range(rng.randint(1, 5))
        ]
        inference = infer_bound(traces, "a", "c")
        assert inference.t_star == oracle_min_bound(traces, "a", "c")
        positives = [t for t in traces if t.label is Label.POSITIVE]
        if inference.t_star is not None:
            assert all(eval_response(t, "a", "c", inference.t_star) for t in positives)
            if inference.t_star > 0:
                assert not all(eval_response(t, "a", "c", inference.t_star - 1) for t in positives)


@pytest.fixture
def incidents_csv_bytes() -> bytes:
    from test_cli import write_incidents_csv

    class Holder:
        pass

    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "incidents.csv"
        write_incidents_csv(path)
        return path.read_bytes()


def run_pipeline(workdir: Path, endpoint: str, incidents: bytes) -> dict[str, bytes]:
    import os

    (workdir / "incidents.csv").write_bytes(incidents)
    cwd = os.getcwd()
    os.chdir(workdir)
    try:
        base = ["--now", "2026-02-03T04:05:06+00:00", "--seed", "7"]
        assert main(base + ["--set", f"news_search.endpoint={endpoint}", "fetch"]) == 0
        assert main(base + ["score"]) == 0
        assert main(base + ["booleanize"]) == 0
        assert main(base + ["mine", "--max-size", "5"]) == 0
    finally:
        os.chdir(cwd)
    return {
        name: (workdir / name).read_bytes()
        for name in (
            "corpus.jsonl",
            "reports/evaluations.jsonl",
            "reports/booleanized.json",
            "reports/mining.json",
            "reports/mining.txt",
        )
    }


def test_criterion_pipeline_determinism(tmp_path, incidents_csv_bytes):
    """fetch -> score -> booleanize -> mine against the in-repo fake news
    server produces byte-identical reports across two fresh runs."""
    with FakeNewsServer(sample_articles(30)) as server:
        run_a = tmp_path / "run_a"
        run_b = tmp_path / "run_b"
        run_a.mkdir()
        run_b.mkdir()
        artifacts_a = run_pipeline(run_a, server.endpoint, incidents_csv_bytes)
        artifacts_b = run_pipeline(run_b, server.endpoint, incidents_csv_bytes)
    assert artifacts_a.keys() == artifacts_b.keys()
    for name in artifacts_a:
        assert artifacts_a[name] == artifacts_b[name], f"{name} differs between runs"
    evaluations = artifacts_a["reports/evaluations.jsonl"].decode().splitlines()
    assert evaluations, "score stage produced no evaluations"
    assert json.loads(artifacts_a["reports/mining.json"])["rows"], "mine stage produced no rows"


def test_criterion_parallel_determinism():
    """mine with 1 worker and with 4 workers returns identical ranked output."""
    data = exemplar_fixture()
    config = EnumerationConfig(variables=data.variables, max_size=5, max_vars_per_formula=3)
    single = mine(config, data, top_k=40, n_workers=1)
    multi = mine(config, data, top_k=40, n_workers=4)
    assert single == multi
    assert [s.text for s in single] == [s.text for s in multi]
