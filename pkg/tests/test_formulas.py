"""Parser, evaluator, truth tables, enumeration, and mining for Boolean formulas.

Oracles here are deliberately independent of the implementation:
evaluation is cross-checked by translating formulas to Python
expressions, and enumeration is cross-checked by a raw generate-all-ASTs
census.
"""

from __future__ import annotations

import itertools
import random

import pytest

from laborlens.features import BooleanizedDataset, Label
from laborlens.formulas import (
    And,
    DegenerateDatasetError,
    EnumerationConfig,
    Implies,
    Not,
    Or,
    ParseError,
    SatStatus,
    TooManyVariablesError,
    TruthTable,
    UnboundVariableError,
    UnknownVariableError,
    Var,
    enumerate_formulas,
    eval_formula,
    format_formula,
    formula_size,
    formula_variables,
    mine,
    normalize_implies,
    parse_formula,
    sat_status,
    score_formula,
    support_table,
    truth_table,
)

SEPARATOR_TEXT = "cross_border & (high_risk_source | high_risk_product)"
# Frozen from the brute-force oracle below (see test_truth_table_matches_oracle):
# sorted variables (cross_border, high_risk_product, high_risk_source),
# outcomes F,F,F,F,F,T,T,T for assignment indices 0..7.
SEPARATOR_TABLE_BITS = 0b11100000


# -- independent oracles -----------------------------------------------------


def to_python_expr(f) -> str:
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Not):
        return f"(not {to_python_expr(f.operand)})"
    if isinstance(f, And):
        return f"({to_python_expr(f.left)} and {to_python_expr(f.right)})"
    if isinstance(f, Or):
        return f"({to_python_expr(f.left)} or {to_python_expr(f.right)})"
    return f"((not {to_python_expr(f.left)}) or {to_python_expr(f.right)})"


def oracle_eval(f, assignment: dict[str, bool]) -> bool:
    return bool(eval(to_python_expr(f), {"__builtins__": {}}, dict(assignment)))


def oracle_table_bits(f, variables: tuple[str, ...]) -> int:
    """Outcome bits over all assignments of `variables`, first var most significant."""
    bits = 0
    for index, values in enumerate(itertools.product([False, True], repeat=len(variables))):
        if oracle_eval(f, dict(zip(variables, values))):
            bits |= 1 << index
    return bits


def all_raw_formulas(variables, max_size, operators=("not", "and", "or", "implies")):
    """Every AST up to max_size, generated without any deduplication."""
    by_size: dict[int, list] = {1: [Var(v) for v in variables]}
    for s in range(2, max_size + 1):
        grown = []
        if "not" in operators:
            grown.extend(Not(f) for f in by_size[s - 1])
        ops = [op for name, op in (("and", And), ("or", Or), ("implies", Implies)) if name in operators]
        for op in ops:
            for i in range(1, s - 1):
                for left in by_size[i]:
                    for right in by_size[s - 1 - i]:
                        grown.append(op(left, right))
        by_size[s] = grown
    return [f for bucket in by_size.values() for f in bucket]


def random_formula(rng: random.Random, variables, depth: int):
    if depth == 0 or rng.random() < 0.3:
        return Var(rng.choice(variables))
    pick = rng.randrange(4)
    if pick == 0:
        return Not(random_formula(rng, variables, depth - 1))
    left = random_formula(rng, variables, depth - 1)
    right = random_formula(rng, variables, depth - 1)
    return (And, Or, Implies)[pick - 1](left, right)


def bool_dataset(variables, rows, labels) -> BooleanizedDataset:
    return BooleanizedDataset(
        variables=tuple(variables),
        rows=tuple(dict(r) for r in rows),
        labels=tuple(labels),
    )


# -- parser -------------------------------------------------------------------


class TestParser:
    def test_separating_formula_shape(self):
        assert parse_formula(SEPARATOR_TEXT) == And(
            Var("cross_border"), Or(Var("high_risk_source"), Var("high_risk_product"))
        )

    def test_single_variable(self):
        assert parse_formula("a") == Var("a")

    def test_implies_is_right_associative(self):
        assert parse_formula("a -> b -> c") == Implies(Var("a"), Implies(Var("b"), Var("c")))

    def test_precedence_chain(self):
        assert parse_formula("!a & b | c -> d") == Implies(
            Or(And(Not(Var("a")), Var("b")), Var("c")), Var("d")
        )

    def test_word_operators(self):
        assert parse_formula("not a and b or c") == parse_formula("!a & b | c")

    def test_parse_errors_carry_position(self):
        for text, pos in [("a &", 3), ("(a", 2), ("a b", 2), ("A", 0), ("", 0)]:
            with pytest.raises(ParseError) as err:
                parse_formula(text)
            assert err.value.position == pos

    def test_format_round_trip_on_random_formulas(self):
        rng = random.Random(11)
        for _ in range(400):
            f = random_formula(rng, ["a", "b", "c", "d"], 4)
            assert parse_formula(format_formula(f)) == f

    def test_normalize_implies(self):
        assert normalize_implies(parse_formula("a -> b")) == Or(Not(Var("a")), Var("b"))
        f = parse_formula("!(a -> b) & c")
        assert "Implies" not in repr(normalize_implies(f))


# -- evaluation ----------------------------------------------------------------


class TestEval:
    def test_separating_formula_cases(self):
        f = parse_formula(SEPARATOR_TEXT)
        assert eval_formula(f, {"cross_border": True, "high_risk_source": False, "high_risk_product": True})
        assert not eval_formula(
            f, {"cross_border": True, "high_risk_source": False, "high_risk_product": False}
        )

    def test_negation(self):
        assert eval_formula(parse_formula("!a"), {"a": True}) is False

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariableError):
            eval_formula(parse_formula("a & b"), {"a": True})

    def test_matches_oracle_on_random_cases(self):
        rng = random.Random(23)
        variables = ["a", "b", "c", "d"]
        for _ in range(1000):
            f = random_formula(rng, variables, 4)
            assignment = {v: rng.random() < 0.5 for v in variables}
            assert eval_formula(f, assignment) == oracle_eval(f, assignment)


# -- truth tables ----------------------------------------------------------------


class TestTruthTable:
    def test_single_variable(self):
        assert truth_table(Var("a")) == TruthTable(("a",), 0b10)

    def test_contradiction_is_all_zero(self):
        assert truth_table(parse_formula("a & !a")).bits == 0

    def test_truth_table_matches_oracle(self):
        f = parse_formula(SEPARATOR_TEXT)
        table = truth_table(f)
        assert table.variables == ("cross_border", "high_risk_product", "high_risk_source")
        assert oracle_table_bits(f, table.variables) == SEPARATOR_TABLE_BITS
        assert table.bits == SEPARATOR_TABLE_BITS

    def test_random_formulas_match_oracle(self):
        rng = random.Random(31)
        for _ in range(300):
            f = random_formula(rng, ["a", "b", "c"], 4)
            table = truth_table(f)
            assert table.bits == oracle_table_bits(f, table.variables)

    def test_variable_cap(self):
        wide = Var("v00")
        for i in range(1, 17):
            wide = And(wide, Var(f"v{i:02d}"))
        with pytest.raises(TooManyVariablesError):
            truth_table(wide)

    def test_support_collapses_padded_formulas(self):
        padded = parse_formula("a & (b | !b)")
        assert support_table(truth_table(padded)) == truth_table(Var("a"))


class TestSatStatus:
    def test_three_statuses(self):
        assert sat_status(parse_formula("a | !a")) is SatStatus.TAUTOLOGY
        assert sat_status(parse_formula("a & !a")) is SatStatus.CONTRADICTION
        assert sat_status(parse_formula(SEPARATOR_TEXT)) is SatStatus.CONTINGENT


# -- enumeration -------------------------------------------------------------------


class TestEnumeration:
    def test_one_variable_yields_two_classes(self):
        config = EnumerationConfig(variables=("a",), max_size=2)
        assert [format_formula(f) for f in enumerate_formulas(config)] == ["a", "!a"]

    def test_two_variables_yield_fourteen_classes(self):
        config = EnumerationConfig(variables=("a", "b"), max_size=9, max_vars_per_formula=2)
        emitted = list(enumerate_formulas(config))
        tables = {oracle_table_bits(f, ("a", "b")) for f in emitted}
        assert len(emitted) == 14
        assert len(tables) == 14
        assert 0b0000 not in tables and 0b1111 not in tables

    def test_census_matches_raw_ast_brute_force(self):
        # Same caps on both sides: the representative-based enumeration must
        # reach exactly the classes reachable by any AST within the caps.
        config = EnumerationConfig(variables=("a", "b"), max_size=7, max_vars_per_formula=2)
        emitted_tables = {oracle_table_bits(f, ("a", "b")) for f in enumerate_formulas(config)}
        raw_tables = set()
        for f in all_raw_formulas(("a", "b"), 7):
            bits = oracle_table_bits(f, ("a", "b"))
            if bits not in (0b0000, 0b1111):
                raw_tables.add(bits)
        assert emitted_tables == raw_tables

    def test_three_variables_all_distinct_and_contingent(self):
        config = EnumerationConfig(variables=("a", "b", "c"), max_size=6)
        emitted = list(enumerate_formulas(config))
        tables = [oracle_table_bits(f, ("a", "b", "c")) for f in emitted]
        assert len(set(tables)) == len(tables)
        assert all(b not in (0, 0xFF) for b in tables)
        assert all(sat_status(f) is SatStatus.CONTINGENT for f in emitted)
        assert len(emitted) <= 254

    def test_stream_is_deterministic_and_size_ordered(self):
        config = EnumerationConfig(variables=("b", "a"), max_size=5)
        first = [format_formula(f) for f in enumerate_formulas(config)]
        second = [format_formula(f) for f in enumerate_formulas(config)]
        assert first == second
        sizes = [formula_size(f) for f in enumerate_formulas(config)]
        assert sizes == sorted(sizes)
        assert first[:2] == ["a", "b"]

    def test_emitted_formulas_round_trip(self):
        config = EnumerationConfig(variables=("a", "b"), max_size=6)
        for f in enumerate_formulas(config):
            assert parse_formula(format_formula(f)) == f

    def test_max_vars_per_formula_enforced(self):
        config = EnumerationConfig(variables=("a", "b", "c"), max_size=5, max_vars_per_formula=2)
        assert all(len(formula_variables(f)) <= 2 for f in enumerate_formulas(config))

    def test_operator_subset(self):
        config = EnumerationConfig(variables=("a", "b"), max_size=5, operators=frozenset({"and"}))
        texts = [format_formula(f) for f in enumerate_formulas(config)]
        assert texts == ["a", "b", "a & b"]


# -- scoring ------------------------------------------------------------------------


class TestScoring:
    def test_hand_counted_example(self):
        data = bool_dataset(
            ["a"],
            [{"a": True}, {"a": False}, {"a": False}],
            [Label.POSITIVE, Label.POSITIVE, Label.NEGATIVE],
        )
        score = score_formula(Var("a"), data)
        assert (score.tpr, score.tnr, score.j) == (0.5, 1.0, 0.5)
        assert (score.n_pos_sat, score.n_pos_unsat, score.n_neg_sat, score.n_neg_unsat) == (1, 1, 0, 1)

    def test_missing_rows_are_skipped(self):
        data = bool_dataset(["a"], [{"a": None}], [Label.POSITIVE])
        score = score_formula(Var("a"), data)
        assert score.n_pos_skipped == 1
        assert (score.n_pos_sat, score.n_pos_unsat) == (0, 0)
        assert score.tpr == 0.0 and not score.tpr_defined

    def test_unknown_variable(self):
        data = bool_dataset(["a"], [{"a": True}], [Label.POSITIVE])
        with pytest.raises(UnknownVariableError):
            score_formula(Var("zz"), data)

    def test_bookkeeping_and_negation_antisymmetry(self):
        rng = random.Random(47)
        variables = ["a", "b", "c"]
        for _ in range(100):
            n = rng.randint(2, 30)
            rows = []
            labels = []
            for i in range(n):
                rows.append({v: rng.choice([True, False, None]) for v in variables})
                # guarantee both classes: the antisymmetry identity needs both rates defined
                labels.append(Label.POSITIVE if i % 2 == 0 else Label.NEGATIVE)
            data = bool_dataset(variables, rows, labels)
            n_pos = sum(1 for l in labels if l is Label.POSITIVE)
            f = random_formula(rng, variables, 3)
            s = score_formula(f, data)
            assert s.n_pos_sat + s.n_pos_unsat + s.n_pos_skipped == n_pos
            assert s.n_neg_sat + s.n_neg_unsat + s.n_neg_skipped == n - n_pos

            complete = [{v: rng.random() < 0.5 for v in variables} for _ in range(n)]
            full = bool_dataset(variables, complete, labels)
            assert score_formula(f, full).j == -score_formula(Not(f), full).j

    def test_score_agrees_with_direct_evaluation(self):
        rng = random.Random(53)
        variables = ["a", "b"]
        rows = [{v: rng.random() < 0.5 for v in variables} for _ in range(40)]
        labels = [Label.POSITIVE if i < 20 else Label.NEGATIVE for i in range(40)]
        data = bool_dataset(variables, rows, labels)
        for _ in range(50):
            f = random_formula(rng, variables, 3)
            s = score_formula(f, data)
            expected_pos = sum(1 for r, l in zip(rows, labels) if l is Label.POSITIVE and oracle_eval(f, r))
            assert s.n_pos_sat == expected_pos


# -- mining -------------------------------------------------------------------------


def separating_fixture(n_rows=48, seed=5) -> BooleanizedDataset:
    """Labels decided exactly by the size-5 separating formula; all eight
    patterns of the three live variables appear, plus one balanced noise
    variable, so nothing smaller separates."""
    rng = random.Random(seed)
    variables = ["cross_border", "high_risk_source", "high_risk_product", "mandatory_overtime"]
    rows, labels = [], []
    patterns = list(itertools.product([False, True], repeat=3))
    i = 0
    while len(rows) < n_rows:
        for cb, hrs, hrp in patterns:
            noise = i % 2 == 0
            rows.append(
                {
                    "cross_border": cb,
                    "high_risk_source": hrs,
                    "high_risk_product": hrp,
                    "mandatory_overtime": noise,
                }
            )
            labels.append(Label.POSITIVE if cb and (hrs or hrp) else Label.NEGATIVE)
            i += 1
    order = list(range(len(rows)))
    rng.shuffle(order)
    return bool_dataset(variables, [rows[k] for k in order], [labels[k] for k in order])


class TestMine:
    def test_perfect_separator_ranks_first(self):
        data = separating_fixture()
        config = EnumerationConfig(variables=data.variables, max_size=5)
        ranked = mine(config, data, top_k=5)
        best = ranked[0]
        assert best.j == 1.0
        assert truth_table(best.formula) == truth_table(parse_formula(SEPARATOR_TEXT))

    def test_independent_labels_score_zero(self):
        rows, labels = [], []
        for label in (Label.POSITIVE, Label.NEGATIVE):
            for a, b in itertools.product([False, True], repeat=2):
                rows.append({"a": a, "b": b})
                labels.append(label)
        data = bool_dataset(["a", "b"], rows, labels)
        config = EnumerationConfig(variables=("a", "b"), max_size=6, max_vars_per_formula=2)
        for score in mine(config, data, top_k=100):
            assert score.j == 0.0

    def test_single_class_dataset_rejected(self):
        data = bool_dataset(["a"], [{"a": True}], [Label.POSITIVE])
        with pytest.raises(DegenerateDatasetError):
            mine(EnumerationConfig(variables=("a",)), data, top_k=3)

    def test_worker_count_does_not_change_ranking(self):
        data = separating_fixture()
        config = EnumerationConfig(variables=data.variables, max_size=5)
        single = mine(config, data, top_k=20, n_workers=1)
        multi = mine(config, data, top_k=20, n_workers=3)
        assert single == multi

    def test_ranking_prefers_smaller_then_text(self):
        data = separating_fixture()
        config = EnumerationConfig(variables=data.variables, max_size=6)
        ranked = mine(config, data, top_k=50)
        keys = [(-abs(s.j), s.size, s.text) for s in ranked]
        assert keys == sorted(keys)
