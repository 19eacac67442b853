"""The active-learning loop.

``LearningSession`` is a resumable state machine: it surfaces one pending
question at a time (seed-phase class questions first, then budgeted
questions chosen by the configured strategy) and absorbs answers through
``submit_answer``. The simulated driver ``run_active_learning`` and the
HTTP session service both run the same machine, so an interactive
transcript replayed against the simulated oracle reproduces the run
bit for bit.

Strategies:

* ``proposed``  -- cost-normalized answer-entropy index over all kinds,
* ``entropy``   -- classic max-entropy class queries only,
* ``random``    -- uniformly random class queries,
* ``ideal``     -- the proposed loop with the index numerator replaced by
                   expected cross-entropy under a supplied true model.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .acquisition import (
    AcquisitionConfig,
    NoFeasibleQuestionError,
    optimize_question_point,
    select_question,
)
from .exploration import ThresholdSchedule, build_schedule, candidate_set
from .models import TrainingConfig, TrainingDivergedError, make_model, train_model
from .questions import (
    ALL,
    CLASS,
    KnowledgeBase,
    QuestionKind,
    QuestionPoint,
    answer_entropy,
)

STRATEGIES = ("proposed", "entropy", "random", "ideal")

LOG_SCHEMA_VERSION = 1

AWAITING_ANSWER = "awaiting_answer"
TRAINING = "training"
BUDGET_EXHAUSTED = "budget_exhausted"


class SessionStateError(RuntimeError):
    """An answer arrived while no question was pending."""


@dataclass
class EngineConfig:
    """Everything one run needs besides the data itself."""

    budget: float
    kinds: List[QuestionKind] = field(default_factory=lambda: [QuestionKind(CLASS)])
    strategy: str = "proposed"
    use_exploration_frame: bool = True
    batch_size: int = 1
    initial_labels: Optional[int] = None
    warmup_budget: float = 0.0
    seed: int = 0
    rho: float = 0.5
    schedule_levels: int = 6
    metric: str = "model"
    model_family: str = "linear"
    hidden: Tuple[int, ...] = (16,)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if not self.kinds:
            raise ValueError("need at least one question kind")
        first = self.kinds[0]
        if first.family != CLASS or first.cost != 1.0:
            raise ValueError("kinds[0] must be the class question at unit cost")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 budget unit")
        if self.initial_labels is not None and self.initial_labels < 1:
            raise ValueError("initial_labels must be >= 1")
        if self.warmup_budget < 0:
            raise ValueError("warmup_budget must be >= 0")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")


@dataclass
class QueryEvent:
    """One budgeted oracle interaction (the ledger's history row)."""

    step: int
    kind_index: int
    cost: float
    entropy: float
    level: int
    members: Tuple[int, ...]
    target_class: Optional[int]
    answer: int
    budget_after: float


@dataclass
class MetricsRow:
    """Holdout metrics emitted at the seed model and after each retrain."""

    budget: float
    accuracy: float
    sum_cross_entropy: float
    kind_index: Optional[int]
    entropy: Optional[float]
    level: int


@dataclass
class BudgetLedger:
    spent: float = 0.0
    per_kind_counts: List[int] = field(default_factory=list)
    history: List[QueryEvent] = field(default_factory=list)

    def charge(self, event: QueryEvent) -> None:
        self.history.append(event)
        self.spent += event.cost
        while len(self.per_kind_counts) <= event.kind_index:
            self.per_kind_counts.append(0)
        self.per_kind_counts[event.kind_index] += 1


class RunMetrics:
    """Per-run output: metric rows, the full query history, final state."""

    def __init__(self) -> None:
        self.rows: List[MetricsRow] = []
        self.queries: List[QueryEvent] = []
        self.status: str = "ok"
        self.error: Optional[str] = None
        self.seed_points: Tuple[int, ...] = ()
        self.final_parameters: Optional[np.ndarray] = None

    @property
    def budgets(self) -> np.ndarray:
        return np.array([r.budget for r in self.rows])

    @property
    def final_accuracy(self) -> float:
        return self.rows[-1].accuracy if self.rows else float("nan")

    @property
    def final_sum_cross_entropy(self) -> float:
        return self.rows[-1].sum_cross_entropy if self.rows else float("nan")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["budget", "accuracy", "sum_cross_entropy", "kind", "entropy", "level_s"])
            for r in self.rows:
                writer.writerow(
                    [
                        repr(r.budget),
                        repr(r.accuracy),
                        repr(r.sum_cross_entropy),
                        "" if r.kind_index is None else r.kind_index,
                        "" if r.entropy is None else repr(r.entropy),
                        r.level,
                    ]
                )


@dataclass
class SimulatedOracle:
    """Deterministic oracle answering from hidden ground-truth labels."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=int)

    def answer(self, q: QuestionPoint) -> int:
        members = np.asarray(q.members, dtype=int)
        if members.max(initial=0) >= len(self.labels):
            raise ValueError("oracle has no label for a question member")
        got = self.labels[members]
        if q.kind.family == CLASS:
            return int(got[0])
        if q.kind.family == ALL:
            return int(np.all(got == q.target_class))
        return int(np.any(got == q.target_class))


def evaluate(model, X, y) -> Tuple[float, float]:
    """Holdout accuracy and summed cross-entropy of the true labels."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    probs = np.atleast_2d(model.predict_proba(X))
    pred = np.argmax(probs, axis=1) + 1
    accuracy = float(np.mean(pred == y))
    p_true = probs[np.arange(len(y)), y - 1]
    p_true = np.clip(p_true, 1e-12, 1.0 - 1e-12)
    return accuracy, float(-np.log(p_true).sum())


@dataclass
class _PendingQuestion:
    question: QuestionPoint
    kind_index: int
    entropy: Optional[float]
    level: int
    cost: float
    is_seed: bool
    step: int


class LearningSession:
    """One active-learning run, driven by answers arriving one at a time."""

    def __init__(
        self,
        pool: np.ndarray,
        config: EngineConfig,
        holdout: Optional[Tuple[np.ndarray, np.ndarray]] = None,
        n_classes: Optional[int] = None,
        true_model=None,
        log: Optional[Callable[[dict], None]] = None,
    ):
        self.pool = np.asarray(pool, dtype=float)
        if self.pool.ndim != 2:
            raise ValueError("pool must be a 2-D feature matrix")
        self.config = config
        if holdout is not None:
            hx, hy = holdout
            self.holdout = (np.asarray(hx, dtype=float), np.asarray(hy, dtype=int))
        else:
            self.holdout = None
        if n_classes is None:
            if self.holdout is None:
                raise ValueError("n_classes is required when no labeled holdout is given")
            n_classes = int(self.holdout[1].max())
        self.n_classes = int(n_classes)
        if config.strategy == "ideal" and true_model is None:
            raise ValueError("the ideal strategy needs a true model (or the 'self' sentinel)")
        self.true_model = true_model
        self._log = log

        self.rng = np.random.default_rng(config.seed)
        self.model = make_model(
            config.model_family,
            self.n_classes,
            self.pool.shape[1],
            hidden=config.hidden,
            seed=config.seed,
        )
        self.kb = KnowledgeBase(self.pool, self.n_classes, n_kinds=len(config.kinds))
        self.ledger = BudgetLedger()
        self.metrics = RunMetrics()
        self._status = AWAITING_ANSWER
        self._pending: Optional[_PendingQuestion] = None
        self._step = 0
        self._since_retrain = 0.0
        self._unretrained_records = 0
        self._schedule: Optional[ThresholdSchedule] = None
        self._schedule_version = -1
        self._model_version = 0

        n_seed = config.initial_labels if config.initial_labels is not None else 3 * self.n_classes
        n_seed = min(n_seed, len(self.pool))
        seed_points = self.rng.choice(len(self.pool), size=n_seed, replace=False)
        self._seed_queue = [int(i) for i in seed_points]
        self._seed_cursor = 0
        self.metrics.seed_points = tuple(self._seed_queue)
        self._emit(
            {
                "event": "start",
                "version": LOG_SCHEMA_VERSION,
                "seed": config.seed,
                "strategy": config.strategy,
                "budget": config.budget,
                "n_pool": len(self.pool),
                "n_classes": self.n_classes,
                "kinds": [
                    {"family": k.family, "m": k.m, "cost": k.cost} for k in config.kinds
                ],
                "seed_points": self._seed_queue,
            }
        )
        self._advance_seed_phase()

    # -- public surface --------------------------------------------------

    @property
    def status(self) -> str:
        return self._status

    @property
    def pending_question(self) -> Optional[QuestionPoint]:
        return self._pending.question if self._pending is not None else None

    @property
    def pending(self) -> Optional[_PendingQuestion]:
        return self._pending

    @property
    def budget_spent(self) -> float:
        return self.ledger.spent

    def answer_set(self) -> Tuple[int, ...]:
        if self._pending is None:
            return ()
        return self._pending.question.answer_set(self.n_classes)

    def submit_answer(self, answer: int) -> None:
        """Record the oracle's answer to the pending question and advance."""
        if self._status != AWAITING_ANSWER or self._pending is None:
            raise SessionStateError("no question is pending")
        answer = int(answer)
        if answer not in self.answer_set():
            raise ValueError(
                f"answer {answer} not in the pending question's answer set {self.answer_set()}"
            )
        pending = self._pending
        self._pending = None
        if pending.is_seed:
            self.kb.add(0, pending.question, answer, step=pending.step, budget_spent=0.0)
            self._emit(
                {
                    "event": "seed_query",
                    "step": pending.step,
                    "point": pending.question.members[0],
                    "answer": answer,
                }
            )
            self._advance_seed_phase()
            return
        self.kb.add(
            pending.kind_index,
            pending.question,
            answer,
            step=pending.step,
            budget_spent=pending.cost,
        )
        event = QueryEvent(
            step=pending.step,
            kind_index=pending.kind_index,
            cost=pending.cost,
            entropy=pending.entropy if pending.entropy is not None else float("nan"),
            level=pending.level,
            members=pending.question.members,
            target_class=pending.question.target_class,
            answer=answer,
            budget_after=self.ledger.spent + pending.cost,
        )
        self.ledger.charge(event)
        self.metrics.queries.append(event)
        self._unretrained_records += 1
        self._since_retrain += pending.cost
        self._emit(
            {
                "event": "query",
                "step": event.step,
                "kind": event.kind_index,
                "family": pending.question.kind.family,
                "cost": event.cost,
                "members": list(event.members),
                "target_class": event.target_class,
                "answer": event.answer,
                "entropy": event.entropy,
                "level_s": event.level,
                "budget": event.budget_after,
            }
        )
        if self._since_retrain >= self.config.batch_size - 1e-9:
            if not self._retrain_and_report(pending):
                return
            self._since_retrain = 0.0
        self._next_budgeted_question(last=pending)

    # -- internals --------------------------------------------------------

    def _emit(self, event: dict) -> None:
        if self._log is not None:
            self._log(event)

    def _advance_seed_phase(self) -> None:
        if self._seed_cursor < len(self._seed_queue):
            point = self._seed_queue[self._seed_cursor]
            self._seed_cursor += 1
            self._pending = _PendingQuestion(
                question=QuestionPoint(self.config.kinds[0], (point,)),
                kind_index=0,
                entropy=None,
                level=0,
                cost=0.0,
                is_seed=True,
                step=self._step,
            )
            self._step += 1
            return
        # seed phase complete: build the first model, report, start the loop
        if not self._train():
            return
        self._report_metrics(None)
        self._next_budgeted_question(last=None)

    def _train(self) -> bool:
        self._status = TRAINING
        try:
            train_model(self.model, self.kb, self.config.training)
        except TrainingDivergedError as exc:
            self.metrics.status = "training_diverged"
            self.metrics.error = str(exc)
            self._finish(emit_final_retrain=False)
            return False
        self._status = AWAITING_ANSWER
        self._model_version += 1
        self._unretrained_records = 0
        self._emit(
            {
                "event": "retrain",
                "budget": self.ledger.spent,
                "records": len(self.kb),
                "epochs": len(getattr(self.model, "training_history_", [])),
            }
        )
        return True

    def _retrain_and_report(self, last: Optional[_PendingQuestion]) -> bool:
        if not self._train():
            return False
        self._report_metrics(last)
        return True

    def _report_metrics(self, last: Optional[_PendingQuestion]) -> None:
        if self.holdout is not None:
            accuracy, sum_ce = evaluate(self.model, *self.holdout)
        else:
            accuracy, sum_ce = float("nan"), float("nan")
        row = MetricsRow(
            budget=self.ledger.spent,
            accuracy=accuracy,
            sum_cross_entropy=sum_ce,
            kind_index=last.kind_index if last is not None else None,
            entropy=last.entropy if last is not None else None,
            level=last.level if last is not None else 0,
        )
        self.metrics.rows.append(row)
        self._emit(
            {
                "event": "metrics",
                "budget": row.budget,
                "accuracy": row.accuracy,
                "sum_cross_entropy": row.sum_cross_entropy,
                "kind": row.kind_index,
                "entropy": row.entropy,
                "level_s": row.level,
            }
        )

    def _in_warmup(self) -> bool:
        return self.ledger.spent < self.config.warmup_budget - 1e-12

    def _usable_kinds(self) -> List[QuestionKind]:
        if self.config.strategy in ("entropy", "random") or self._in_warmup():
            return self.config.kinds[:1]
        return self.config.kinds

    def _candidates(self, frame_on: bool) -> Tuple[np.ndarray, int]:
        touched = self.kb.touched_points
        if not frame_on:
            untouched = np.setdiff1d(
                np.arange(len(self.pool)),
                np.fromiter(touched, dtype=int, count=len(touched)),
            )
            return untouched, 0
        if self._schedule is None or self._schedule_version != self._model_version:
            self._schedule = build_schedule(
                self.model,
                self.pool,
                levels=self.config.schedule_levels,
                rho=self.config.rho,
                metric=self.config.metric,
                rng=self.rng,
            )
            self._schedule_version = self._model_version
        return candidate_set(
            self.model, self.pool, self.kb, self._schedule, metric=self.config.metric
        )

    def _next_budgeted_question(self, last: Optional[_PendingQuestion]) -> None:
        cfg = self.config
        kinds = self._usable_kinds()
        remaining = cfg.budget - self.ledger.spent
        min_cost = min(k.cost for k in kinds)
        if remaining + 1e-12 < min_cost:
            self._finish()
            return
        frame_on = cfg.use_exploration_frame and not self._in_warmup()
        cands, level = self._candidates(frame_on)
        if cands.size == 0:
            self._finish()
            return
        strategy = "entropy" if self._in_warmup() else cfg.strategy
        try:
            if strategy == "random":
                pos = int(self.rng.integers(cands.size))
                q = QuestionPoint(kinds[0], (int(cands[pos]),))
                ent = answer_entropy(self.model, self.pool, q)
                chosen = (q, 0, ent)
            elif strategy == "entropy":
                q, ent = optimize_question_point(
                    self.model, self.pool, kinds[0], cands, cfg.acquisition, rng=self.rng
                )
                chosen = (q, 0, ent)
            else:
                use_self = isinstance(self.true_model, str) and self.true_model == "self"
                true_model = self.model if use_self else self.true_model
                result = select_question(
                    self.model,
                    self.pool,
                    kinds,
                    cands,
                    remaining,
                    cfg.acquisition,
                    rng=self.rng,
                    true_model=true_model if strategy == "ideal" else None,
                )
                chosen = (result.question, result.kind_index, result.entropy)
        except NoFeasibleQuestionError:
            self._finish()
            return
        question, kind_index, entropy = chosen
        self._pending = _PendingQuestion(
            question=question,
            kind_index=kind_index,
            entropy=entropy,
            level=level,
            cost=kinds[kind_index].cost,
            is_seed=False,
            step=self._step,
        )
        self._step += 1

    def _finish(self, emit_final_retrain: bool = True) -> None:
        if self._status == BUDGET_EXHAUSTED:
            return
        if emit_final_retrain and self._unretrained_records > 0:
            last = self.metrics.queries[-1] if self.metrics.queries else None
            pending_like = None
            if last is not None:
                pending_like = _PendingQuestion(
                    question=QuestionPoint(
                        self.config.kinds[last.kind_index],
                        last.members,
                        last.target_class,
                    ),
                    kind_index=last.kind_index,
                    entropy=last.entropy,
                    level=last.level,
                    cost=last.cost,
                    is_seed=False,
                    step=last.step,
                )
            if self._train():
                self._report_metrics(pending_like)
            if self._status == BUDGET_EXHAUSTED:
                # a diverging final retrain already closed the run
                return
        self._pending = None
        self._status = BUDGET_EXHAUSTED
        self.metrics.final_parameters = self.model.parameters
        self._emit(
            {
                "event": "final",
                "status": self.metrics.status,
                "budget": self.ledger.spent,
                "queries": len(self.metrics.queries),
                "parameters": [float(v) for v in self.model.parameters],
            }
        )


def run_active_learning(
    pool_X: np.ndarray,
    pool_y: np.ndarray,
    holdout: Optional[Tuple[np.ndarray, np.ndarray]],
    config: EngineConfig,
    true_model=None,
    log: Optional[Callable[[dict], None]] = None,
) -> RunMetrics:
    """Run one simulated session to completion against hidden labels."""
    pool_y = np.asarray(pool_y, dtype=int)
    n_classes = int(max(pool_y.max(), holdout[1].max() if holdout is not None else 0))
    oracle = SimulatedOracle(pool_y)
    session = LearningSession(
        pool_X,
        config,
        holdout=holdout,
        n_classes=n_classes,
        true_model=true_model,
        log=log,
    )
    while session.status == AWAITING_ANSWER:
        session.submit_answer(oracle.answer(session.pending_question))
    return session.metrics


def run_ideal_baseline(
    pool_X: np.ndarray,
    pool_y: np.ndarray,
    holdout: Optional[Tuple[np.ndarray, np.ndarray]],
    true_model,
    config: EngineConfig,
    log: Optional[Callable[[dict], None]] = None,
) -> RunMetrics:
    """The proposed loop with true answer probabilities in the index."""
    cfg = replace(config, strategy="ideal")
    return run_active_learning(pool_X, pool_y, holdout, cfg, true_model=true_model, log=log)


def write_jsonl_log(path):
    """Return a log callback appending one JSON object per event to ``path``."""
    fh = open(path, "w")

    def _write(event: dict) -> None:
        fh.write(json.dumps(event, separators=(",", ":")) + "\n")
        fh.flush()

    _write.close = fh.close  # type: ignore[attr-defined]
    return _write
