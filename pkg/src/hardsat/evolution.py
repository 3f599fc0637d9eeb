"""Local search over formula space.

A run keeps one current formula together with its solver statistics.  Each
generation mutates it with a transition operator, solves the candidate and
keeps it when the stage's selection criterion says so; otherwise the parent
stays.  Stages run in order and share the random stream, the weights and
the best-ever archive.
"""

from __future__ import annotations

import enum
import logging
import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence, Union

from .cnf import (
    Clause,
    CnfFormula,
    RandomFormulaSpec,
    generate_random_clause,
    generate_random_kcnf,
    make_rng,
)
from .solver import Heuristic, SolverConfig, SolveStats, SolveStatus, solve

log = logging.getLogger(__name__)

DEFAULT_DECISION_LIMIT = 10**6
DEFAULT_BREAK_WINDOW = 1000
UNSAT_RATIO_3CNF = 6.0
EVOLVE_STREAM = 0x5DEECE66D


class ConfigError(ValueError):
    pass


class OperatorError(ValueError):
    """A transition operator cannot be applied to the given formula."""


class OperatorKind(str, enum.Enum):
    REPLACE_CLAUSE = "replace"
    FLIP_LITERAL = "flip"
    ADD_CLAUSE = "add"
    REMOVE_CLAUSE = "remove"
    MULTI_REPLACE = "multi"


class Metric(str, enum.Enum):
    PROPAGATIONS = "propagations"
    DECISIONS = "decisions"

    def of(self, stats: SolveStats) -> int:
        return stats.decisions if self is Metric.DECISIONS else stats.propagations


class ScoreRule(str, enum.Enum):
    NON_DECREASING = "non_decreasing"
    STRICTLY_INCREASING = "strictly_increasing"
    ANY = "any"


class StatusConstraint(str, enum.Enum):
    NONE = "none"
    MUST_BE_SAT = "sat"
    MUST_BE_UNSAT = "unsat"

    def holds(self, status: SolveStatus) -> bool:
        # a run stopped by the decision limit certifies neither status
        if self is StatusConstraint.NONE:
            return True
        if self is StatusConstraint.MUST_BE_SAT:
            return status is SolveStatus.SAT
        return status is SolveStatus.UNSAT


class ClauseSelection(str, enum.Enum):
    UNIFORM = "uniform"
    WEIGHT_BIASED = "weighted"


class Event(str, enum.Enum):
    NORMAL = "NORMAL"
    BREAK = "BREAK"


@dataclass(frozen=True)
class TransitionOperator:
    kind: OperatorKind
    count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", OperatorKind(self.kind))
        if self.kind is OperatorKind.MULTI_REPLACE and self.count < 2:
            raise ConfigError("MULTI_REPLACE needs a count of at least 2")

    @classmethod
    def multi(cls, count: int) -> TransitionOperator:
        return cls(OperatorKind.MULTI_REPLACE, count)


@dataclass(frozen=True)
class SelectionCriterion:
    score_rule: ScoreRule = ScoreRule.NON_DECREASING
    status_constraint: StatusConstraint = StatusConstraint.NONE

    def __post_init__(self):
        object.__setattr__(self, "score_rule", ScoreRule(self.score_rule))
        object.__setattr__(self, "status_constraint", StatusConstraint(self.status_constraint))


@dataclass(frozen=True)
class WeightParams:
    increment: float = 1.0
    decay: float = 0.95
    floor: float = 1.0


@dataclass
class VariableWeights:
    """Per-variable guidance weights; index 0 is unused."""

    weights: list[float]
    params: WeightParams = field(default_factory=WeightParams)

    @classmethod
    def uniform(cls, n: int, params: WeightParams | None = None) -> VariableWeights:
        params = params or WeightParams()
        return cls([params.floor] * (n + 1), params)

    def __getitem__(self, var: int) -> float:
        return self.weights[var]

    def clause_weight(self, clause: Clause) -> float:
        w = self.weights
        return sum(w[abs(lit)] for lit in clause)


def update_weights(weights: VariableWeights, changed_clause: Clause, improved: bool) -> VariableWeights:
    """Reinforce the variables of a clause whose change improved the score, decay otherwise."""
    p = weights.params
    new = list(weights.weights)
    for var in {abs(lit) for lit in changed_clause}:
        if improved:
            new[var] += p.increment
        else:
            new[var] = max(p.floor, new[var] * p.decay)
    return VariableWeights(new, p)


@dataclass(frozen=True)
class StagePlan:
    operator: TransitionOperator
    criterion: SelectionCriterion = SelectionCriterion()
    metric: Metric = Metric.PROPAGATIONS
    duration: Optional[int] = None
    # duration as a multiple of the clause count at stage start
    duration_per_clause: Optional[float] = None
    clause_selection: ClauseSelection = ClauseSelection.UNIFORM
    stop: Optional[Callable[["EvolutionState"], bool]] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        object.__setattr__(self, "clause_selection", ClauseSelection(self.clause_selection))
        if self.duration is None and self.duration_per_clause is None and self.stop is None:
            raise ConfigError(f"stage {self.name or '?'} has no duration")
        if self.duration is not None and self.duration <= 0:
            raise ConfigError(f"stage {self.name or '?'}: duration must be positive")
        if self.duration_per_clause is not None and self.duration_per_clause <= 0:
            raise ConfigError(f"stage {self.name or '?'}: duration_per_clause must be positive")

    def generations_for(self, num_clauses: int) -> Optional[int]:
        if self.duration is not None:
            return self.duration
        if self.duration_per_clause is not None:
            return max(1, math.ceil(self.duration_per_clause * num_clauses))
        return None

    def to_dict(self) -> dict:
        if self.stop is not None:
            raise ConfigError("stages with a stop predicate cannot be serialized")
        return {
            "name": self.name,
            "operator": self.operator.kind.value,
            "operator_count": self.operator.count,
            "score_rule": self.criterion.score_rule.value,
            "status_constraint": self.criterion.status_constraint.value,
            "metric": self.metric.value,
            "duration": self.duration,
            "duration_per_clause": self.duration_per_clause,
            "clause_selection": self.clause_selection.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> StagePlan:
        return cls(
            operator=TransitionOperator(d["operator"], d.get("operator_count", 1)),
            criterion=SelectionCriterion(
                d.get("score_rule", "non_decreasing"), d.get("status_constraint", "none")
            ),
            metric=d.get("metric", "propagations"),
            duration=d.get("duration"),
            duration_per_clause=d.get("duration_per_clause"),
            clause_selection=d.get("clause_selection", "uniform"),
            name=d.get("name", ""),
        )


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    score_value: int
    decisions: int
    propagations: int
    clause_count: int
    accepted: bool
    status: SolveStatus
    event: Event = Event.NORMAL


@dataclass(frozen=True)
class EvolutionConfig:
    initial: Union[CnfFormula, RandomFormulaSpec]
    stages: Sequence[StagePlan]
    solver_config: SolverConfig = SolverConfig(decision_limit=DEFAULT_DECISION_LIMIT)
    seed: int = 0
    break_window: Optional[int] = None
    break_size: int = 3
    record_every: int = 1
    archive_best: bool = True
    weight_params: WeightParams = WeightParams()
    clause_width: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ConfigError("at least one stage is required")
        if self.break_window is not None and self.break_window < 1:
            raise ConfigError("break_window must be positive")
        if self.break_size < 2:
            raise ConfigError("break_size must be at least 2")
        if self.record_every < 1:
            raise ConfigError("record_every must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def width(self) -> int:
        if self.clause_width is not None:
            return self.clause_width
        if isinstance(self.initial, RandomFormulaSpec):
            return self.initial.clause_width
        widths = [len(c) for c in self.initial.clauses]
        return max(widths, default=3) or 3


@dataclass
class Archive:
    formula: CnfFormula
    stats: SolveStats
    score: int
    generation: int


@dataclass
class EvolutionState:
    formula: CnfFormula
    stats: SolveStats
    weights: VariableWeights
    generation: int = 0
    stagnation: int = 0
    best: Optional[Archive] = None


class TraceSink(Protocol):
    def emit(self, record: GenerationRecord, formula: CnfFormula) -> None: ...


class ListSink:
    def __init__(self):
        self.records: list[GenerationRecord] = []

    def emit(self, record: GenerationRecord, formula: CnfFormula) -> None:
        self.records.append(record)


@dataclass
class EvolutionResult:
    initial: CnfFormula
    initial_stats: SolveStats
    final: CnfFormula
    final_stats: SolveStats
    best: Optional[Archive]
    trace: list[GenerationRecord]
    stage_ends: list[int]


def select_clause_index(
    formula: CnfFormula,
    mode: ClauseSelection,
    rng: random.Random,
    weights: VariableWeights | None = None,
) -> int:
    m = len(formula.clauses)
    if m == 0:
        raise OperatorError("formula has no clauses")
    if m == 1:
        return 0
    if mode is ClauseSelection.WEIGHT_BIASED:
        if weights is None:
            raise ValueError("weight-biased selection needs weights")
        totals = [weights.clause_weight(c) for c in formula.clauses]
        if sum(totals) > 0:
            return rng.choices(range(m), weights=totals)[0]
    return rng.randrange(m)


def _mutate(
    formula: CnfFormula,
    op: TransitionOperator,
    rng: random.Random,
    width: int,
    selection: ClauseSelection = ClauseSelection.UNIFORM,
    weights: VariableWeights | None = None,
) -> tuple[CnfFormula, Clause]:
    """Apply ``op``; also returns the clause the change is attributed to."""
    n = formula.num_variables
    clauses = formula.clauses
    kind = op.kind

    if kind is OperatorKind.ADD_CLAUSE:
        new = generate_random_clause(n, width, rng)
        return formula.with_clauses(clauses + (new,)), new

    if not clauses:
        raise OperatorError(f"{kind.value}: formula has no clauses")

    if kind is OperatorKind.MULTI_REPLACE:
        count = min(op.count, len(clauses))
        out = list(clauses)
        touched: list[int] = []
        for i in rng.sample(range(len(clauses)), count):
            out[i] = generate_random_clause(n, len(clauses[i]) or width, rng)
            touched.extend(out[i])
        return formula.with_clauses(out), tuple(touched)

    i = select_clause_index(formula, selection, rng, weights)
    old = clauses[i]
    if kind is OperatorKind.REPLACE_CLAUSE:
        new = generate_random_clause(n, len(old) or width, rng)
    elif kind is OperatorKind.REMOVE_CLAUSE:
        if len(clauses) == 1:
            raise OperatorError("remove: refusing to empty the formula")
        return formula.with_clauses(clauses[:i] + clauses[i + 1 :]), old
    elif kind is OperatorKind.FLIP_LITERAL:
        if not old:
            raise OperatorError("flip: selected clause is empty")
        j = rng.randrange(len(old))
        used = {abs(lit) for lit in old}
        if rng.random() < 0.5 or len(used) >= n:
            lit = -old[j]
        else:
            var = rng.choice([v for v in range(1, n + 1) if v not in used])
            lit = var if rng.random() < 0.5 else -var
        new = old[:j] + (lit,) + old[j + 1 :]
    else:  # pragma: no cover
        raise OperatorError(f"unknown operator {kind}")
    return formula.with_clauses(clauses[:i] + (new,) + clauses[i + 1 :]), new


def apply_operator(
    formula: CnfFormula,
    op: TransitionOperator,
    rng: random.Random,
    weights: VariableWeights | None = None,
    selection: ClauseSelection = ClauseSelection.UNIFORM,
    width: int = 3,
) -> CnfFormula:
    """Return a mutated copy of ``formula``; the input is left untouched.

    Replacement clauses keep the width of the clause they replace; ``width``
    is used for added clauses and for replacing empty clauses.
    """
    return _mutate(formula, op, rng, width, selection, weights)[0]


def accept(
    old_stats: SolveStats,
    new_stats: SolveStats,
    criterion: SelectionCriterion,
    metric: Metric,
) -> bool:
    if not criterion.status_constraint.holds(new_stats.status):
        return False
    rule = criterion.score_rule
    if rule is ScoreRule.ANY:
        return True
    old, new = metric.of(old_stats), metric.of(new_stats)
    if rule is ScoreRule.STRICTLY_INCREASING:
        return new > old
    return new >= old


def initial_ratio_for_unsat(n: int, k: int = 3, ratio: float | None = None) -> int:
    """Clause count for an initial formula well above the satisfiability threshold."""
    if ratio is None:
        if k != 3:
            raise ConfigError("an explicit clause/variable ratio is required for k != 3")
        ratio = UNSAT_RATIO_3CNF
    return math.ceil(ratio * n)


def _archive(state: EvolutionState, metric: Metric) -> None:
    score = metric.of(state.stats)
    if state.best is None or score > state.best.score:
        state.best = Archive(state.formula, state.stats, score, state.generation)


def evolve_stage(
    state: EvolutionState,
    plan: StagePlan,
    config: EvolutionConfig,
    rng: random.Random,
    sinks: Iterable[TraceSink] = (),
    archive_metric: Metric | None = None,
) -> EvolutionState:
    sinks = list(sinks)
    solver_config = config.solver_config
    metric = plan.metric
    archive_metric = archive_metric or metric
    criterion = plan.criterion
    width = config.width()
    biased = plan.clause_selection is ClauseSelection.WEIGHT_BIASED
    total = plan.generations_for(len(state.formula.clauses))

    done = 0
    while total is None or done < total:
        done += 1
        state.generation += 1
        event = Event.NORMAL
        candidate = cand_stats = None
        accepted = False

        if config.break_window is not None and state.stagnation >= config.break_window:
            event = Event.BREAK
            state.stagnation = 0
            try:
                candidate, _ = _mutate(
                    state.formula, TransitionOperator.multi(config.break_size), rng, width
                )
            except OperatorError:
                candidate = None
            if candidate is not None:
                cand_stats = solve(candidate, solver_config)
                accepted = criterion.status_constraint.holds(cand_stats.status)
        else:
            try:
                candidate, touched = _mutate(
                    state.formula, plan.operator, rng, width, plan.clause_selection, state.weights
                )
            except OperatorError as exc:
                log.debug("generation %d: %s", state.generation, exc)
                candidate = None
            improved = False
            if candidate is not None:
                cand_stats = solve(candidate, solver_config)
                accepted = accept(state.stats, cand_stats, criterion, metric)
                improved = accepted and metric.of(cand_stats) > metric.of(state.stats)
                if biased:
                    state.weights = update_weights(state.weights, touched, improved)
            state.stagnation = 0 if improved else state.stagnation + 1

        if accepted:
            state.formula, state.stats = candidate, cand_stats
            if config.archive_best:
                _archive(state, archive_metric)

        if (state.generation - 1) % config.record_every == 0:
            record = GenerationRecord(
                generation=state.generation,
                score_value=metric.of(state.stats),
                decisions=state.stats.decisions,
                propagations=state.stats.propagations,
                clause_count=len(state.formula.clauses),
                accepted=accepted,
                status=state.stats.status,
                event=event,
            )
            for sink in sinks:
                sink.emit(record, state.formula)

        if plan.stop is not None and plan.stop(state):
            break
    return state


def materialize_initial(config: EvolutionConfig) -> CnfFormula:
    if isinstance(config.initial, RandomFormulaSpec):
        return generate_random_kcnf(config.initial)
    return config.initial


def evolve(config: EvolutionConfig, sinks: Iterable[TraceSink] = ()) -> EvolutionResult:
    # distinct from the stream that generates a random initial formula with the same seed
    rng = make_rng(config.seed ^ EVOLVE_STREAM)
    initial = materialize_initial(config)
    initial_stats = solve(initial, config.solver_config)

    first = config.stages[0]
    if not first.criterion.status_constraint.holds(initial_stats.status):
        raise ConfigError(
            f"stage {first.name or 1!r} requires status "
            f"{first.criterion.status_constraint.value} but the initial formula is "
            f"{initial_stats.status.value}"
        )

    collector = ListSink()
    sinks = [collector, *sinks]
    archive_metric = config.stages[-1].metric
    state = EvolutionState(
        formula=initial,
        stats=initial_stats,
        weights=VariableWeights.uniform(initial.num_variables, config.weight_params),
    )
    if config.archive_best:
        _archive(state, archive_metric)

    stage_ends = []
    for plan in config.stages:
        state.stagnation = 0
        evolve_stage(state, plan, config, rng, sinks, archive_metric)
        stage_ends.append(state.generation)
        log.info(
            "stage %s done at generation %d: %s decisions=%d propagations=%d clauses=%d",
            plan.name or len(stage_ends), state.generation, state.stats.status.value,
            state.stats.decisions, state.stats.propagations, len(state.formula.clauses),
        )

    return EvolutionResult(
        initial=initial,
        initial_stats=initial_stats,
        final=state.formula,
        final_stats=state.stats,
        best=state.best,
        trace=collector.records,
        stage_ends=stage_ends,
    )


def fig1_config(
    n: int = 50,
    m: int = 100,
    k: int = 3,
    generations: int = 10**5,
    seed: int = 0,
    metric: Metric = Metric.PROPAGATIONS,
    **overrides,
) -> EvolutionConfig:
    """Single-stage greedy clause replacement on a random formula."""
    stage = StagePlan(
        operator=TransitionOperator(OperatorKind.REPLACE_CLAUSE),
        criterion=SelectionCriterion(ScoreRule.NON_DECREASING, StatusConstraint.NONE),
        metric=metric,
        duration=generations,
        name="replace",
    )
    # static ordering makes satisfiable formulas blow up exponentially within a few
    # hundred generations; the dynamic heuristic keeps the climb gradual
    overrides.setdefault(
        "solver_config",
        SolverConfig(Heuristic.JEROSLOW_WANG, decision_limit=DEFAULT_DECISION_LIMIT),
    )
    return EvolutionConfig(
        initial=RandomFormulaSpec(n, m, k, seed), stages=[stage], seed=seed, **overrides
    )


def two_stage_unsat_config(
    n: int = 50,
    k: int = 3,
    ratio: float | None = None,
    stage1_per_clause: float = 10.0,
    stage2_generations: int = 10**5,
    seed: int = 0,
    **overrides,
) -> EvolutionConfig:
    """Shrink an over-constrained formula while it stays UNSAT, then replace clauses
    keeping UNSAT and never lowering the decision count."""
    m = initial_ratio_for_unsat(n, k, ratio)
    stage1 = StagePlan(
        operator=TransitionOperator(OperatorKind.REMOVE_CLAUSE),
        criterion=SelectionCriterion(ScoreRule.ANY, StatusConstraint.MUST_BE_UNSAT),
        metric=Metric.DECISIONS,
        duration_per_clause=stage1_per_clause,
        name="remove",
    )
    stage2 = StagePlan(
        operator=TransitionOperator(OperatorKind.REPLACE_CLAUSE),
        criterion=SelectionCriterion(ScoreRule.NON_DECREASING, StatusConstraint.MUST_BE_UNSAT),
        metric=Metric.DECISIONS,
        duration=stage2_generations,
        name="replace",
    )
    return EvolutionConfig(
        initial=RandomFormulaSpec(n, m, k, seed), stages=[stage1, stage2], seed=seed, **overrides
    )


PRESETS: dict[str, Callable[..., EvolutionConfig]] = {
    "fig1": fig1_config,
    "two-stage-unsat": two_stage_unsat_config,
}


def with_seed(config: EvolutionConfig, seed: int) -> EvolutionConfig:
    """Copy of ``config`` with a new run seed; a random initial spec gets it too."""
    initial = config.initial
    if isinstance(initial, RandomFormulaSpec):
        initial = replace(initial, seed=seed)
    return replace(config, seed=seed, initial=initial)
