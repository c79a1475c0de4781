"""Bounded temporal formulas over finite traces of Boolean observations.

Evaluation follows finite-trace semantics with integer-bounded operators:
``Finally(lo, hi, f)`` looks for f within the window, clipped to the end
of the trace, and is false once the window starts past the end (an
observation that never happened is not satisfied). ``Globally`` is its
dual. Response bounds ("the consequent follows the antecedent within t
steps") can be inferred from positive traces, and the same
enumerate/filter/score pipeline as the propositional miner runs over a
depth- and bound-limited temporal grammar.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .features import Label
from .formulas import (
    DegenerateDatasetError,
    FormulaScore,
    UnknownVariableError,
    _make_score,
    rank_scores,
)

__all__ = [
    "Atom",
    "Not",
    "And",
    "Or",
    "Implies",
    "Finally",
    "Globally",
    "Until",
    "MltlFormula",
    "Trace",
    "BoundInference",
    "TemporalMiningConfig",
    "IndexOutOfRangeError",
    "UnboundAtomError",
    "eval_mltl",
    "eval_response",
    "infer_bound",
    "enumerate_temporal",
    "mine_temporal",
    "format_mltl",
    "mltl_size",
    "mltl_bounds",
    "read_traces",
    "write_traces",
]


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "MltlFormula"


@dataclass(frozen=True)
class And:
    left: "MltlFormula"
    right: "MltlFormula"


@dataclass(frozen=True)
class Or:
    left: "MltlFormula"
    right: "MltlFormula"


@dataclass(frozen=True)
class Implies:
    left: "MltlFormula"
    right: "MltlFormula"


def _check_bounds(lo: int, hi: int) -> None:
    if lo < 0 or hi < 0 or lo > hi:
        raise ValueError(f"bounds must satisfy 0 <= lo <= hi, got [{lo},{hi}]")


@dataclass(frozen=True)
class Finally:
    lo: int
    hi: int
    operand: "MltlFormula"

    def __post_init__(self) -> None:
        _check_bounds(self.lo, self.hi)


@dataclass(frozen=True)
class Globally:
    lo: int
    hi: int
    operand: "MltlFormula"

    def __post_init__(self) -> None:
        _check_bounds(self.lo, self.hi)


@dataclass(frozen=True)
class Until:
    lo: int
    hi: int
    left: "MltlFormula"
    right: "MltlFormula"

    def __post_init__(self) -> None:
        _check_bounds(self.lo, self.hi)


MltlFormula = Atom | Not | And | Or | Implies | Finally | Globally | Until


class TemporalError(Exception):
    pass


class IndexOutOfRangeError(TemporalError):
    pass


class UnboundAtomError(TemporalError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"atom {name!r} is not bound at this step")


@dataclass(frozen=True)
class Trace:
    """Finite sequence of Boolean observations; every step binds the same atoms."""

    trace_id: str
    label: Label
    steps: tuple[Mapping[str, bool], ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError(f"trace {self.trace_id!r} must have at least one step")
        first = set(self.steps[0])
        for index, step in enumerate(self.steps):
            if set(step) != first:
                raise ValueError(f"trace {self.trace_id!r} step {index} binds a different variable set")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self.steps[0]))

    def __len__(self) -> int:
        return len(self.steps)


def eval_mltl(f: MltlFormula, trace: Trace, i: int) -> bool:
    """Evaluate at time index i; windows are clipped to the trace end."""
    n = len(trace.steps)
    if not 0 <= i < n:
        raise IndexOutOfRangeError(f"index {i} outside trace of length {n}")
    if isinstance(f, Atom):
        step = trace.steps[i]
        if f.name not in step:
            raise UnboundAtomError(f.name)
        return bool(step[f.name])
    if isinstance(f, Not):
        return not eval_mltl(f.operand, trace, i)
    if isinstance(f, And):
        return eval_mltl(f.left, trace, i) and eval_mltl(f.right, trace, i)
    if isinstance(f, Or):
        return eval_mltl(f.left, trace, i) or eval_mltl(f.right, trace, i)
    if isinstance(f, Implies):
        return (not eval_mltl(f.left, trace, i)) or eval_mltl(f.right, trace, i)
    if isinstance(f, Finally):
        if i + f.lo >= n:
            return False
        end = min(i + f.hi, n - 1)
        return any(eval_mltl(f.operand, trace, j) for j in range(i + f.lo, end + 1))
    if isinstance(f, Globally):
        # dual of Finally: vacuously true once the window starts past the end
        if i + f.lo >= n:
            return True
        end = min(i + f.hi, n - 1)
        return all(eval_mltl(f.operand, trace, j) for j in range(i + f.lo, end + 1))
    if isinstance(f, Until):
        if i + f.lo >= n:
            return False
        end = min(i + f.hi, n - 1)
        for j in range(i + f.lo, end + 1):
            if eval_mltl(f.right, trace, j):
                return True
            if not eval_mltl(f.left, trace, j):
                return False
        return False
    raise TypeError(f"not a temporal formula: {f!r}")  # pragma: no cover


def response_formula(antecedent: str, consequent: str, t: int, trace_length: int) -> MltlFormula:
    """Whole-trace response shape: whenever the antecedent holds, the
    consequent follows within t steps (inclusive)."""
    return Globally(0, trace_length - 1, Implies(Atom(antecedent), Finally(0, t, Atom(consequent))))


def eval_response(trace: Trace, antecedent: str, consequent: str, t: int) -> bool:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return eval_mltl(response_formula(antecedent, consequent, t, len(trace)), trace, 0)


@dataclass(frozen=True)
class BoundInference:
    """Least response bound found in positive traces.

    per_trace_delays holds (trace_id, minimal t) for each positive trace
    containing at least one antecedent occurrence; None marks a trace where
    some occurrence is never followed by the consequent. t_star is the
    maximum of the delays, or None when any trace is unbounded.
    """

    antecedent: str
    consequent: str
    t_star: int | None
    per_trace_delays: tuple[tuple[str, int | None], ...]


def infer_bound(traces: Sequence[Trace], antecedent: str, consequent: str) -> BoundInference:
    if not traces:
        raise ValueError("traces must be nonempty")
    delays: list[tuple[str, int | None]] = []
    for trace in traces:
        if trace.label is not Label.POSITIVE:
            continue
        missing = {antecedent, consequent} - set(trace.variables)
        if missing:
            raise UnknownVariableError(missing)
        occurrences = [s for s, step in enumerate(trace.steps) if step[antecedent]]
        if not occurrences:
            continue
        worst: int | None = 0
        for start in occurrences:
            delay = next(
                (j - start for j in range(start, len(trace.steps)) if trace.steps[j][consequent]),
                None,
            )
            if delay is None:
                worst = None
                break
            worst = max(worst, delay)
        delays.append((trace.trace_id, worst))
    if any(d is None for _, d in delays):
        t_star = None
    else:
        t_star = max((d for _, d in delays), default=0)
    return BoundInference(antecedent, consequent, t_star, tuple(delays))


# -- text form and measures -----------------------------------------------------

_PREC_ATOM, _PREC_UNARY, _PREC_UNTIL, _PREC_AND, _PREC_OR, _PREC_IMPLIES = 6, 5, 4, 3, 2, 1


def _fmt(f: MltlFormula) -> tuple[str, int]:
    if isinstance(f, Atom):
        return f.name, _PREC_ATOM
    if isinstance(f, Not):
        text, prec = _fmt(f.operand)
        if prec < _PREC_UNARY:
            text = f"({text})"
        return f"!{text}", _PREC_UNARY
    if isinstance(f, (Finally, Globally)):
        text, prec = _fmt(f.operand)
        if prec < _PREC_UNARY:
            text = f"({text})"
        op = "F" if isinstance(f, Finally) else "G"
        return f"{op}[{f.lo},{f.hi}] {text}", _PREC_UNARY
    if isinstance(f, Until):
        lt, lp = _fmt(f.left)
        rt, rp = _fmt(f.right)
        if lp <= _PREC_UNTIL:
            lt = f"({lt})"
        if rp <= _PREC_UNTIL:
            rt = f"({rt})"
        return f"{lt} U[{f.lo},{f.hi}] {rt}", _PREC_UNTIL
    lt, lp = _fmt(f.left)
    rt, rp = _fmt(f.right)
    if isinstance(f, Implies):
        if lp <= _PREC_IMPLIES:
            lt = f"({lt})"
        return f"{lt} -> {rt}", _PREC_IMPLIES
    own = _PREC_AND if isinstance(f, And) else _PREC_OR
    symbol = "&" if isinstance(f, And) else "|"
    if lp < own:
        lt = f"({lt})"
    if rp <= own:
        rt = f"({rt})"
    return f"{lt} {symbol} {rt}", own


def format_mltl(f: MltlFormula) -> str:
    return _fmt(f)[0]


def mltl_size(f: MltlFormula) -> int:
    if isinstance(f, Atom):
        return 1
    if isinstance(f, (Not, Finally, Globally)):
        return 1 + mltl_size(f.operand)
    return 1 + mltl_size(f.left) + mltl_size(f.right)


def mltl_bounds(f: MltlFormula) -> tuple[tuple[int, int], ...]:
    """Temporal windows appearing in the formula, in prefix order."""
    if isinstance(f, Atom):
        return ()
    if isinstance(f, Not):
        return mltl_bounds(f.operand)
    if isinstance(f, (Finally, Globally)):
        return ((f.lo, f.hi),) + mltl_bounds(f.operand)
    if isinstance(f, Until):
        return ((f.lo, f.hi),) + mltl_bounds(f.left) + mltl_bounds(f.right)
    return mltl_bounds(f.left) + mltl_bounds(f.right)


# -- mining ----------------------------------------------------------------------


@dataclass(frozen=True)
class TemporalMiningConfig:
    """Finite temporal grammar: atoms, operators, window upper bounds, depth."""

    bounds: tuple[int, ...] = (0, 1, 2, 3, 5, 10)
    max_depth: int = 2
    operators: frozenset[str] = frozenset({"not", "and", "or", "implies", "finally", "globally"})
    atoms: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.bounds:
            raise ValueError("at least one bound required")
        if any(b < 0 for b in self.bounds):
            raise ValueError("bounds must be nonnegative")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        unknown = self.operators - {"not", "and", "or", "implies", "finally", "globally", "until"}
        if unknown:
            raise ValueError(f"unknown operators: {sorted(unknown)}")


_BINARY_BUILDERS = (("and", And), ("or", Or), ("implies", Implies))


def enumerate_temporal(config: TemporalMiningConfig, atoms: Sequence[str]) -> list[MltlFormula]:
    """All formulas of the bounded grammar up to max_depth, in a fixed order."""
    bounds = tuple(sorted(set(config.bounds)))
    by_depth: dict[int, list[MltlFormula]] = {0: [Atom(a) for a in sorted(atoms)]}
    for depth in range(1, config.max_depth + 1):
        grown: list[MltlFormula] = []
        newest = by_depth[depth - 1]
        shallower = [f for d in range(depth - 1) for f in by_depth[d]]
        everything = shallower + newest
        if "not" in config.operators:
            grown.extend(Not(f) for f in newest)
        for name, op in _BINARY_BUILDERS:
            if name not in config.operators:
                continue
            # exactly one side must reach depth-1 to keep depths disjoint
            grown.extend(op(f, g) for f in newest for g in everything)
            grown.extend(op(f, g) for f in shallower for g in newest)
        for t in bounds:
            if "finally" in config.operators:
                grown.extend(Finally(0, t, f) for f in newest)
            if "globally" in config.operators:
                grown.extend(Globally(0, t, f) for f in newest)
            if "until" in config.operators:
                grown.extend(Until(0, t, f, g) for f in newest for g in everything)
                grown.extend(Until(0, t, f, g) for f in shallower for g in newest)
        by_depth[depth] = grown
    return [f for d in range(config.max_depth + 1) for f in by_depth[d]]


def _outcome_score(f: MltlFormula, traces: Sequence[Trace]) -> FormulaScore | None:
    """Score a candidate by its outcome at time zero; None when constant."""
    outcomes = [eval_mltl(f, trace, 0) for trace in traces]
    if all(outcomes) or not any(outcomes):
        return None
    pos_sat = pos_unsat = neg_sat = neg_unsat = 0
    for outcome, trace in zip(outcomes, traces):
        if trace.label is Label.POSITIVE:
            pos_sat, pos_unsat = pos_sat + outcome, pos_unsat + (not outcome)
        else:
            neg_sat, neg_unsat = neg_sat + outcome, neg_unsat + (not outcome)
    return _make_score(
        f, format_mltl(f), mltl_size(f), pos_sat, pos_unsat, neg_sat, neg_unsat, 0, 0, bounds=mltl_bounds(f)
    )


def _temporal_score_batch(args: tuple[list[MltlFormula], tuple[Trace, ...]]) -> list[FormulaScore | None]:
    formulas, traces = args
    return [_outcome_score(f, traces) for f in formulas]


def mine_temporal(
    config: TemporalMiningConfig,
    traces: Sequence[Trace],
    top_k: int,
    n_workers: int = 1,
) -> list[FormulaScore]:
    """Enumerate the bounded grammar, drop candidates constant across the
    trace set, and rank the rest by |j|."""
    labels = {trace.label for trace in traces}
    if labels != {Label.POSITIVE, Label.NEGATIVE}:
        raise DegenerateDatasetError("temporal mining needs positive and negative traces")
    if config.atoms is not None:
        atoms: Sequence[str] = config.atoms
    else:
        shared = set(traces[0].variables)
        for trace in traces[1:]:
            shared &= set(trace.variables)
        if not shared:
            raise UnknownVariableError({"<no shared atoms>"})
        atoms = sorted(shared)
    candidates = enumerate_temporal(config, atoms)
    traces = tuple(traces)
    if n_workers <= 1 or len(candidates) < 2 * n_workers:
        maybe_scores = [_outcome_score(f, traces) for f in candidates]
    else:
        chunk = (len(candidates) + n_workers - 1) // n_workers
        batches = [(candidates[i : i + chunk], traces) for i in range(0, len(candidates), chunk)]
        maybe_scores = []
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for batch in pool.map(_temporal_score_batch, batches):
                maybe_scores.extend(batch)
    return rank_scores(s for s in maybe_scores if s is not None)[: max(top_k, 0)]


# -- trace files -------------------------------------------------------------------
#
# One JSON record per line: {"trace_id", "label", "vars", "steps"} with
# steps as rows of 0/1 aligned to vars.


def write_traces(traces: Iterable[Trace]) -> bytes:
    lines = []
    for trace in traces:
        variables = trace.variables
        lines.append(
            json.dumps(
                {
                    "trace_id": trace.trace_id,
                    "label": trace.label.value,
                    "vars": list(variables),
                    "steps": [[int(step[v]) for v in variables] for step in trace.steps],
                },
                separators=(",", ":"),
            )
        )
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def read_traces(data: bytes) -> tuple[Trace, ...]:
    traces = []
    for line_no, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            variables = list(entry["vars"])
            steps = tuple(
                {v: bool(bit) for v, bit in zip(variables, row, strict=True)} for row in entry["steps"]
            )
            traces.append(Trace(entry["trace_id"], Label(entry["label"]), steps))
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"trace file line {line_no}: {exc}") from None
    return tuple(traces)
