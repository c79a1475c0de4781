"""Propositional formula mining over Booleanized incident features.

Pipeline: enumerate candidate formulas over the Boolean variable set,
keep one representative per semantic equivalence class, drop tautologies
and contradictions, score every survivor against the labeled rows, and
rank by how cleanly it separates instances from non-instances.

The separation statistic is Youden's J (true-positive rate plus
true-negative rate minus one). Candidates are ranked by |J| so a formula
that is characteristically false on instances ranks as high as its
negation; J is reported signed so the direction stays visible.
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .features import BooleanizedDataset, Label

__all__ = [
    "Var",
    "Not",
    "And",
    "Or",
    "Implies",
    "BoolFormula",
    "TruthTable",
    "SatStatus",
    "EnumerationConfig",
    "FormulaScore",
    "ParseError",
    "UnboundVariableError",
    "TooManyVariablesError",
    "UnknownVariableError",
    "DegenerateDatasetError",
    "parse_formula",
    "format_formula",
    "eval_formula",
    "formula_size",
    "formula_variables",
    "normalize_implies",
    "truth_table",
    "sat_status",
    "enumerate_formulas",
    "score_formula",
    "mine",
]

VARIABLE_CAP = 16


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("variable name must be nonempty")


@dataclass(frozen=True)
class Not:
    operand: "BoolFormula"


@dataclass(frozen=True)
class And:
    left: "BoolFormula"
    right: "BoolFormula"


@dataclass(frozen=True)
class Or:
    left: "BoolFormula"
    right: "BoolFormula"


@dataclass(frozen=True)
class Implies:
    left: "BoolFormula"
    right: "BoolFormula"


BoolFormula = Var | Not | And | Or | Implies

_BINARY = {And: "&", Or: "|", Implies: "->"}


class FormulaError(Exception):
    pass


class ParseError(FormulaError):
    def __init__(self, position: int, expected: str):
        self.position = position
        self.expected = expected
        super().__init__(f"at position {position}: expected {expected}")


class UnboundVariableError(FormulaError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable {name!r} is not bound")


class TooManyVariablesError(FormulaError):
    pass


class UnknownVariableError(FormulaError):
    def __init__(self, names: Iterable[str]):
        self.names = tuple(sorted(names))
        super().__init__(f"variables not in dataset: {self.names}")


class DegenerateDatasetError(FormulaError):
    pass


def formula_size(f: BoolFormula) -> int:
    """AST node count, leaves included."""
    if isinstance(f, Var):
        return 1
    if isinstance(f, Not):
        return 1 + formula_size(f.operand)
    return 1 + formula_size(f.left) + formula_size(f.right)


def formula_variables(f: BoolFormula) -> frozenset[str]:
    if isinstance(f, Var):
        return frozenset((f.name,))
    if isinstance(f, Not):
        return formula_variables(f.operand)
    return formula_variables(f.left) | formula_variables(f.right)


def normalize_implies(f: BoolFormula) -> BoolFormula:
    """Rewrite every Implies(a, b) as Or(Not(a), b)."""
    if isinstance(f, Var):
        return f
    if isinstance(f, Not):
        return Not(normalize_implies(f.operand))
    left, right = normalize_implies(f.left), normalize_implies(f.right)
    if isinstance(f, Implies):
        return Or(Not(left), right)
    return type(f)(left, right)


def eval_formula(f: BoolFormula, assignment: Mapping[str, bool]) -> bool:
    if isinstance(f, Var):
        try:
            return bool(assignment[f.name])
        except KeyError:
            raise UnboundVariableError(f.name) from None
    if isinstance(f, Not):
        return not eval_formula(f.operand, assignment)
    if isinstance(f, And):
        return eval_formula(f.left, assignment) and eval_formula(f.right, assignment)
    if isinstance(f, Or):
        return eval_formula(f.left, assignment) or eval_formula(f.right, assignment)
    return (not eval_formula(f.left, assignment)) or eval_formula(f.right, assignment)


# -- text form ---------------------------------------------------------------
#
# Grammar (whitespace insignificant):
#   implies := or ('->' implies)?           right-associative
#   or      := and (('|' | 'or') and)*      left-associative
#   and     := not (('&' | 'and') not)*     left-associative
#   not     := ('!' | 'not') not | atom
#   atom    := identifier | '(' implies ')'
#   identifier := [a-z_][a-z0-9_]*

_PREC_IMPLIES, _PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt(f: BoolFormula) -> tuple[str, int]:
    if isinstance(f, Var):
        return f.name, _PREC_ATOM
    if isinstance(f, Not):
        text, prec = _fmt(f.operand)
        if prec < _PREC_NOT:
            text = f"({text})"
        return f"!{text}", _PREC_NOT
    lt, lp = _fmt(f.left)
    rt, rp = _fmt(f.right)
    if isinstance(f, Implies):
        # right-associative: parenthesize a left implication
        if lp <= _PREC_IMPLIES:
            lt = f"({lt})"
        return f"{lt} -> {rt}", _PREC_IMPLIES
    own = _PREC_AND if isinstance(f, And) else _PREC_OR
    if lp < own:
        lt = f"({lt})"
    if rp <= own:  # left-associative: a right child at equal precedence keeps its parens
        rt = f"({rt})"
    return f"{lt} {_BINARY[type(f)]} {rt}", own


def format_formula(f: BoolFormula) -> str:
    """Minimal-parentheses text; parse_formula(format_formula(f)) == f."""
    return _fmt(f)[0]


_TOKEN_RE = re.compile(r"(?P<ws>\s+)|(?P<ident>[a-z_][a-z0-9_]*)|(?P<arrow>->)|(?P<sym>[!&|()])")
_KEYWORDS = {"not": "!", "and": "&", "or": "|"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens: list[tuple[str, int]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(pos, f"a token (found {text[pos]!r})")
        if m.lastgroup == "ident":
            word = m.group("ident")
            tokens.append((_KEYWORDS.get(word, word), pos))
        elif m.lastgroup in ("arrow", "sym"):
            tokens.append((m.group(0), pos))
        pos = m.end()
    tokens.append(("<end>", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    def peek(self) -> tuple[str, int]:
        return self.tokens[self.index]

    def take(self) -> tuple[str, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, token: str) -> None:
        got, pos = self.peek()
        if got != token:
            raise ParseError(pos, f"{token!r} (found {got!r})")
        self.index += 1

    def implies(self) -> BoolFormula:
        left = self.disjunction()
        if self.peek()[0] == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> BoolFormula:
        node = self.conjunction()
        while self.peek()[0] == "|":
            self.take()
            node = Or(node, self.conjunction())
        return node

    def conjunction(self) -> BoolFormula:
        node = self.negation()
        while self.peek()[0] == "&":
            self.take()
            node = And(node, self.negation())
        return node

    def negation(self) -> BoolFormula:
        if self.peek()[0] == "!":
            self.take()
            return Not(self.negation())
        return self.atom()

    def atom(self) -> BoolFormula:
        token, pos = self.peek()
        if token == "(":
            self.take()
            node = self.implies()
            self.expect(")")
            return node
        if re.fullmatch(r"[a-z_][a-z0-9_]*", token):
            self.take()
            return Var(token)
        raise ParseError(pos, f"a variable or '(' (found {token!r})")


def parse_formula(text: str) -> BoolFormula:
    parser = _Parser(text)
    node = parser.implies()
    token, pos = parser.peek()
    if token != "<end>":
        raise ParseError(pos, f"end of input (found {token!r})")
    return node


# -- truth tables ------------------------------------------------------------


@dataclass(frozen=True)
class TruthTable:
    """Outcome bit vector over all assignments of a sorted variable tuple.

    Bit i is the outcome under the i-th assignment in lexicographic order
    (the first variable is the most significant position, False < True).
    """

    variables: tuple[str, ...]
    bits: int

    @property
    def n_assignments(self) -> int:
        return 1 << len(self.variables)

    def outcome(self, index: int) -> bool:
        return bool((self.bits >> index) & 1)


_MASK_CACHE: dict[tuple[str, ...], tuple[dict[str, int], int]] = {}


def _variable_masks(variables: tuple[str, ...]) -> tuple[dict[str, int], int]:
    """Per-variable bit masks enabling one-pass table evaluation via int ops."""
    cached = _MASK_CACHE.get(variables)
    if cached is not None:
        return cached
    n = len(variables)
    total = 1 << n
    full = (1 << total) - 1
    masks: dict[str, int] = {}
    for k, name in enumerate(variables):
        block = 1 << (n - 1 - k)
        chunk = (1 << block) - 1
        mask = 0
        for start in range(block, total, 2 * block):
            mask |= chunk << start
        masks[name] = mask
    _MASK_CACHE[variables] = (masks, full)
    return masks, full


def _table_bits(f: BoolFormula, masks: Mapping[str, int], full: int) -> int:
    if isinstance(f, Var):
        return masks[f.name]
    if isinstance(f, Not):
        return full & ~_table_bits(f.operand, masks, full)
    left = _table_bits(f.left, masks, full)
    right = _table_bits(f.right, masks, full)
    if isinstance(f, And):
        return left & right
    if isinstance(f, Or):
        return left | right
    return (full & ~left) | right


def truth_table(f: BoolFormula, cap: int = VARIABLE_CAP) -> TruthTable:
    variables = tuple(sorted(formula_variables(f)))
    if len(variables) > cap:
        raise TooManyVariablesError(f"{len(variables)} variables exceeds cap {cap}")
    masks, full = _variable_masks(variables)
    return TruthTable(variables, _table_bits(f, masks, full))


class SatStatus(Enum):
    CONTINGENT = "contingent"
    TAUTOLOGY = "tautology"
    CONTRADICTION = "contradiction"


def sat_status(f: BoolFormula, cap: int = VARIABLE_CAP) -> SatStatus:
    """Complete satisfiability check by exhausting the formula's assignments."""
    table = truth_table(f, cap=cap)
    full = (1 << table.n_assignments) - 1
    if table.bits == 0:
        return SatStatus.CONTRADICTION
    if table.bits == full:
        return SatStatus.TAUTOLOGY
    return SatStatus.CONTINGENT


def support_table(table: TruthTable) -> TruthTable:
    """Project a table onto the variables its function actually depends on.

    This is the canonical semantic key used for deduplication: it maps
    'a' and 'a & (b | !b)' to the same table.
    """
    n = len(table.variables)
    essential: list[int] = []
    for k in range(n):
        flip = 1 << (n - 1 - k)
        if any(table.outcome(i) != table.outcome(i ^ flip) for i in range(table.n_assignments) if not i & flip):
            essential.append(k)
    if len(essential) == n:
        return table
    m = len(essential)
    new_bits = 0
    for j in range(1 << m):
        index = 0
        for t, k in enumerate(essential):
            if (j >> (m - 1 - t)) & 1:
                index |= 1 << (n - 1 - k)
        if table.outcome(index):
            new_bits |= 1 << j
    return TruthTable(tuple(table.variables[k] for k in essential), new_bits)


# -- enumeration --------------------------------------------------------------


@dataclass(frozen=True)
class EnumerationConfig:
    """Bounds on the candidate space: variables, AST size, and operators."""

    variables: tuple[str, ...]
    max_size: int = 7
    max_vars_per_formula: int = 3
    operators: frozenset[str] = frozenset({"not", "and", "or", "implies"})

    def __post_init__(self) -> None:
        if not self.variables:
            raise ValueError("at least one variable required")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("variables must be unique")
        if self.max_size < 1:
            raise ValueError("max_size must be >= 1")
        if not 1 <= self.max_vars_per_formula <= VARIABLE_CAP:
            raise ValueError(f"max_vars_per_formula must be in 1..{VARIABLE_CAP}")
        unknown = self.operators - {"not", "and", "or", "implies"}
        if unknown:
            raise ValueError(f"unknown operators: {sorted(unknown)}")


_BINARY_BUILDERS = (("and", And), ("or", Or), ("implies", Implies))


def _class_key(f: BoolFormula) -> tuple[tuple[str, ...], int]:
    reduced = support_table(truth_table(f))
    return reduced.variables, reduced.bits


def enumerate_formulas(config: EnumerationConfig) -> Iterator[BoolFormula]:
    """Yield one contingent representative per semantic equivalence class.

    Candidates are built bottom-up by size from previously yielded
    representatives, which preserves the class census while skipping
    redundant syntax: if a class is reachable at size s, it is reachable
    at size <= s by combining representatives. Within one size candidates
    are processed in text order, so representatives are size-minimal with
    text-order tie-breaking, and the stream order is deterministic.
    Constant (tautological or contradictory) classes are recorded so they
    are never revisited, but never yielded and never used as children.
    """
    seen: set[tuple[tuple[str, ...], int]] = set()
    pool: dict[int, list[tuple[BoolFormula, frozenset[str]]]] = {s: [] for s in range(1, config.max_size + 1)}
    binaries = [(name, op) for name, op in _BINARY_BUILDERS if name in config.operators]

    for size in range(1, config.max_size + 1):
        candidates: list[tuple[str, BoolFormula, frozenset[str]]] = []
        if size == 1:
            for name in sorted(config.variables):
                candidates.append((name, Var(name), frozenset((name,))))
        else:
            if "not" in config.operators:
                for operand, ovars in pool[size - 1]:
                    f = Not(operand)
                    candidates.append((format_formula(f), f, ovars))
            for _, op in binaries:
                for left_size in range(1, size - 1):
                    right_size = size - 1 - left_size
                    for left, lvars in pool[left_size]:
                        for right, rvars in pool[right_size]:
                            union = lvars | rvars
                            if len(union) > config.max_vars_per_formula:
                                continue
                            f = op(left, right)
                            candidates.append((format_formula(f), f, union))
        candidates.sort(key=lambda c: c[0])
        for _, formula, fvars in candidates:
            key = _class_key(formula)
            if key in seen:
                continue
            seen.add(key)
            if not key[0]:  # constant function: filtered, like an unsatisfiable or vacuous candidate
                continue
            pool[size].append((formula, fvars))
            yield formula


# -- scoring and mining --------------------------------------------------------


@dataclass(frozen=True)
class FormulaScore:
    """Separation statistics for one formula over a labeled Boolean dataset."""

    formula: object
    text: str
    size: int
    n_pos_sat: int
    n_pos_unsat: int
    n_neg_sat: int
    n_neg_unsat: int
    n_pos_skipped: int
    n_neg_skipped: int
    tpr: float
    tnr: float
    j: float
    tpr_defined: bool = True
    tnr_defined: bool = True
    bounds: tuple[tuple[int, int], ...] = ()


def _make_score(formula, text, size, pos_sat, pos_unsat, neg_sat, neg_unsat, pos_skip, neg_skip, bounds=()):
    # Exact rational rates converted to float once, so identities such as
    # j(f) == -j(!f) hold bit-for-bit.
    pos_den = pos_sat + pos_unsat
    neg_den = neg_sat + neg_unsat
    tpr = Fraction(pos_sat, pos_den) if pos_den else Fraction(0)
    tnr = Fraction(neg_unsat, neg_den) if neg_den else Fraction(0)
    j = tpr + tnr - 1
    return FormulaScore(
        formula=formula,
        text=text,
        size=size,
        n_pos_sat=pos_sat,
        n_pos_unsat=pos_unsat,
        n_neg_sat=neg_sat,
        n_neg_unsat=neg_unsat,
        n_pos_skipped=pos_skip,
        n_neg_skipped=neg_skip,
        tpr=float(tpr),
        tnr=float(tnr),
        j=float(j),
        tpr_defined=pos_den > 0,
        tnr_defined=neg_den > 0,
        bounds=tuple(bounds),
    )


def score_formula(f: BoolFormula, data: BooleanizedDataset) -> FormulaScore:
    """Count satisfactions per label; rows missing any variable of f are skipped."""
    fvars = tuple(sorted(formula_variables(f)))
    unknown = set(fvars) - set(data.variables)
    if unknown:
        raise UnknownVariableError(unknown)
    table = truth_table(f)
    pos_sat = pos_unsat = neg_sat = neg_unsat = pos_skip = neg_skip = 0
    for row, label in zip(data.rows, data.labels):
        index = 0
        skip = False
        for name in fvars:
            value = row[name]
            if value is None:
                skip = True
                break
            index = (index << 1) | value
        positive = label is Label.POSITIVE
        if skip:
            if positive:
                pos_skip += 1
            else:
                neg_skip += 1
        elif table.outcome(index):
            if positive:
                pos_sat += 1
            else:
                neg_sat += 1
        else:
            if positive:
                pos_unsat += 1
            else:
                neg_unsat += 1
    return _make_score(
        f, format_formula(f), formula_size(f), pos_sat, pos_unsat, neg_sat, neg_unsat, pos_skip, neg_skip
    )


def _score_batch(args: tuple[list[BoolFormula], BooleanizedDataset]) -> list[FormulaScore]:
    formulas, data = args
    return [score_formula(f, data) for f in formulas]


def rank_scores(scores: Iterable[FormulaScore]) -> list[FormulaScore]:
    """Order by |j| descending, then smaller size, then formula text."""
    return sorted(scores, key=lambda s: (-abs(s.j), s.size, s.text))


def mine(
    config: EnumerationConfig,
    data: BooleanizedDataset,
    top_k: int,
    n_workers: int = 1,
) -> list[FormulaScore]:
    """Enumerate, score, and rank formulas; return the top_k by |j|.

    Formulas whose variables are missing on every row of one class have
    an empty effective denominator: they carry no separation evidence,
    so they are dropped rather than ranked (the raw j formula would
    score them as perfect separators).

    Results are identical for any worker count: the candidate list is
    fixed before scoring and scores are reassembled in candidate order.
    """
    labels = set(data.labels)
    if not data.rows or labels != {Label.POSITIVE, Label.NEGATIVE}:
        raise DegenerateDatasetError("mining needs at least one positive and one negative row")
    unknown = set(config.variables) - set(data.variables)
    if unknown:
        raise UnknownVariableError(unknown)
    formulas = list(enumerate_formulas(config))
    if n_workers <= 1 or len(formulas) < 2 * n_workers:
        scores = [score_formula(f, data) for f in formulas]
    else:
        chunk = (len(formulas) + n_workers - 1) // n_workers
        batches = [(formulas[i : i + chunk], data) for i in range(0, len(formulas), chunk)]
        scores = []
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for batch in pool.map(_score_batch, batches):
                scores.extend(batch)
    evidenced = [s for s in scores if s.tpr_defined and s.tnr_defined]
    return rank_scores(evidenced)[: max(top_k, 0)]
