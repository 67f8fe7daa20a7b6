"""Offline teach-then-evaluate protocol and relevance-threshold calibration.

The protocol teaches one seeded-random exemplar per category, category by
category in a seeded-random order, and after every new category re-asks every
record belonging to the categories taught so far. Optionally the latest
category's misclassified records are corrected afterwards; the reported
accuracy for a round is always measured before that round's corrections, so
corrections only influence later rounds (a flag flips this to post-correction
reporting).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .embeddings import EmbeddingRecord, EmbeddingSet
from .engine import Named, NamingConfig, NamingEngine, NoIdea
from .vocab import normalize_name

CORRECTION_MODES = ("off", "last", "saturate")


@dataclass(frozen=True)
class EvalConfig:
    corrections: str = "off"
    seed: int = 0
    angle_step: float = 0.2
    temperature: float | None = None  # None → sqrt(dim)
    relevance_threshold: float | None = None
    normalize_similarities: bool = False
    report_post_correction: bool = False
    saturate_passes: int = 10

    def __post_init__(self) -> None:
        if self.corrections not in CORRECTION_MODES:
            raise ValueError(
                f"corrections must be one of {CORRECTION_MODES}, got "
                f"{self.corrections!r}"
            )
        if self.saturate_passes < 1:
            raise ValueError("saturate_passes must be positive")


@dataclass(frozen=True)
class CurveRow:
    m: int
    category: str
    evaluated: int
    correct: int
    accuracy: float
    corrections_added: int


@dataclass(frozen=True)
class RecordOutcome:
    m: int
    record_id: str
    label: str
    predicted: str | None  # None → no idea
    reason: str | None  # set when predicted is None
    relevance: float | None
    correct: bool


@dataclass
class EvalResult:
    categories: list[str]
    rows: list[CurveRow]
    outcomes: list[RecordOutcome]
    teach_events: list[tuple[int, str]]  # (m, record id)
    correction_events: list[tuple[int, str]]
    config: EvalConfig


def _classify(engine: NamingEngine, record: EmbeddingRecord, m: int) -> RecordOutcome:
    outcome = engine.ask(record.vector)
    if isinstance(outcome, Named):
        return RecordOutcome(
            m=m,
            record_id=record.id,
            label=record.label,
            predicted=outcome.name,
            reason=None,
            relevance=outcome.relevance,
            correct=outcome.name == normalize_name(record.label),
        )
    assert isinstance(outcome, NoIdea)
    return RecordOutcome(
        m=m,
        record_id=record.id,
        label=record.label,
        predicted=None,
        reason=outcome.reason.value,
        relevance=outcome.relevance,
        correct=False,
    )


def eval_protocol(embeddings: EmbeddingSet, config: EvalConfig | None = None) -> EvalResult:
    """Run the incremental one-exemplar-per-category evaluation."""
    config = config or EvalConfig()
    embeddings.require_labels()
    categories = sorted({record.label for record in embeddings.records})
    if not categories:
        raise ValueError("embedding set has no labeled records")
    rng = np.random.default_rng(config.seed)
    order = list(categories)
    rng.shuffle(order)

    by_category: dict[str, list[EmbeddingRecord]] = {c: [] for c in order}
    for record in embeddings.records:
        by_category[record.label].append(record)

    engine = NamingEngine(
        NamingConfig(
            dim=embeddings.dim,
            angle_step=config.angle_step,
            temperature=config.temperature,
            relevance_threshold=config.relevance_threshold,
            normalize_similarities=config.normalize_similarities,
        )
    )

    result = EvalResult(
        categories=order, rows=[], outcomes=[], teach_events=[],
        correction_events=[], config=config,
    )
    taught: set[str] = set()
    for m, category in enumerate(order, start=1):
        members = by_category[category]
        exemplar = members[int(rng.integers(len(members)))]
        engine.teach(category, exemplar.vector)
        result.teach_events.append((m, exemplar.id))
        taught.add(category)

        eligible = [r for r in embeddings.records if r.label in taught]
        outcomes = [_classify(engine, record, m) for record in eligible]
        corrections_added = 0
        if config.corrections == "last":
            wrong = {o.record_id for o in outcomes if not o.correct}
            for record in members:
                if record.id in wrong:
                    engine.correct(category, record.vector)
                    result.correction_events.append((m, record.id))
                    corrections_added += 1
        elif config.corrections == "saturate":
            for _ in range(config.saturate_passes):
                changed = 0
                for record in eligible:
                    if not _classify(engine, record, m).correct:
                        engine.correct(record.label, record.vector)
                        result.correction_events.append((m, record.id))
                        changed += 1
                corrections_added += changed
                if changed == 0:
                    break
        if config.report_post_correction and corrections_added:
            outcomes = [_classify(engine, record, m) for record in eligible]
        result.outcomes.extend(outcomes)

        correct = sum(1 for o in outcomes if o.correct)
        result.rows.append(
            CurveRow(
                m=m,
                category=category,
                evaluated=len(outcomes),
                correct=correct,
                accuracy=correct / len(outcomes),
                corrections_added=corrections_added,
            )
        )
    return result


# -- CSV emission ----------------------------------------------------------------

CURVE_FIELDS = ["m", "category", "evaluated", "correct", "accuracy",
                "corrections_added"]
RECORD_FIELDS = ["m", "record_id", "label", "predicted", "reason", "relevance",
                 "correct"]


def write_curve_csv(rows: Iterable[CurveRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_FIELDS)
        for row in rows:
            writer.writerow(
                [row.m, row.category, row.evaluated, row.correct,
                 repr(row.accuracy), row.corrections_added]
            )


def read_curve_csv(path) -> list[CurveRow]:
    rows: list[CurveRow] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.DictReader(fh):
            rows.append(
                CurveRow(
                    m=int(record["m"]),
                    category=record["category"],
                    evaluated=int(record["evaluated"]),
                    correct=int(record["correct"]),
                    accuracy=float(record["accuracy"]),
                    corrections_added=int(record["corrections_added"]),
                )
            )
    return rows


def write_records_csv(outcomes: Iterable[RecordOutcome], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for o in outcomes:
            writer.writerow(
                [
                    o.m,
                    o.record_id,
                    o.label,
                    o.predicted if o.predicted is not None else "",
                    o.reason if o.reason is not None else "",
                    repr(o.relevance) if o.relevance is not None else "",
                    int(o.correct),
                ]
            )


def read_records_csv(path) -> list[RecordOutcome]:
    outcomes: list[RecordOutcome] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.DictReader(fh):
            outcomes.append(
                RecordOutcome(
                    m=int(record["m"]),
                    record_id=record["record_id"],
                    label=record["label"],
                    predicted=record["predicted"] or None,
                    reason=record["reason"] or None,
                    relevance=float(record["relevance"]) if record["relevance"] else None,
                    correct=bool(int(record["correct"])),
                )
            )
    return outcomes


def recount_curve(outcomes: Iterable[RecordOutcome]) -> list[tuple[int, int, int]]:
    """Recount (m, evaluated, correct) from a per-record log; the curve must
    agree with this exactly."""
    per_m: dict[int, tuple[int, int]] = {}
    for o in outcomes:
        evaluated, correct = per_m.get(o.m, (0, 0))
        per_m[o.m] = (evaluated + 1, correct + (1 if o.correct else 0))
    return [(m, e, c) for m, (e, c) in sorted(per_m.items())]


# -- threshold calibration ---------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    known_accept_rate: float
    unknown_reject_rate: float
    balanced_accuracy: float


@dataclass
class CalibrationResult:
    recommended: float
    best_balanced_accuracy: float
    sweep: list[SweepPoint]
    known_relevances: dict[str, float]
    unknown_relevances: dict[str, float]
    teach_events: list[str]  # record ids taught, in teaching order


def calibrate_threshold(
    embeddings: EmbeddingSet,
    unknown_labels: Iterable[str],
    *,
    seed: int = 0,
    sweep_points: int = 201,
) -> CalibrationResult:
    """Recommend a relevance threshold separating known from unknown objects.

    One exemplar per known category is taught; every record's relevance (its
    maximum cosine to the taught keys) is measured, and thresholds are swept
    over ``sweep_points`` even steps across [-1, 1]. The recommendation is
    the largest threshold attaining the best balanced accuracy of accepting
    knowns and rejecting unknowns — the most conservative optimum, rejecting
    unknowns with the widest margin.
    """
    embeddings.require_labels()
    unknown = set(unknown_labels)
    all_labels = set(embeddings.labels())
    stray = unknown - all_labels
    if stray:
        raise ValueError(f"unknown categories not present in the set: {sorted(stray)}")
    known = sorted(all_labels - unknown)
    if not known:
        raise ValueError("no known categories left after holding out the unknowns")
    if not unknown:
        raise ValueError("no unknown categories to calibrate against")

    rng = np.random.default_rng(seed)
    order = list(known)
    rng.shuffle(order)
    by_category: dict[str, list[EmbeddingRecord]] = {c: [] for c in order}
    for record in embeddings.records:
        if record.label in by_category:
            by_category[record.label].append(record)

    engine = NamingEngine(NamingConfig(dim=embeddings.dim))
    teach_events: list[str] = []
    for category in order:
        members = by_category[category]
        exemplar = members[int(rng.integers(len(members)))]
        engine.teach(category, exemplar.vector)
        teach_events.append(exemplar.id)

    from .assoc import relevance as store_relevance

    known_rel: dict[str, float] = {}
    unknown_rel: dict[str, float] = {}
    for record in embeddings.records:
        rel = store_relevance(record.vector, engine.store)
        if record.label in unknown:
            unknown_rel[record.id] = rel
        else:
            known_rel[record.id] = rel

    known_values = np.array(list(known_rel.values()))
    unknown_values = np.array(list(unknown_rel.values()))
    sweep: list[SweepPoint] = []
    best = -1.0
    recommended = -1.0
    for tau in np.linspace(-1.0, 1.0, sweep_points):
        accept = float(np.mean(known_values >= tau))
        reject = float(np.mean(unknown_values < tau))
        balanced = (accept + reject) / 2.0
        sweep.append(SweepPoint(float(tau), accept, reject, balanced))
        if balanced >= best:  # >= keeps the largest tau among ties
            best = balanced
            recommended = float(tau)
    return CalibrationResult(
        recommended=recommended,
        best_balanced_accuracy=best,
        sweep=sweep,
        known_relevances=known_rel,
        unknown_relevances=unknown_rel,
        teach_events=teach_events,
    )


SWEEP_FIELDS = ["tau", "known_accept_rate", "unknown_reject_rate",
                "balanced_accuracy"]


def write_sweep_csv(result: CalibrationResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_FIELDS)
        for point in result.sweep:
            writer.writerow(
                [repr(point.tau), repr(point.known_accept_rate),
                 repr(point.unknown_reject_rate), repr(point.balanced_accuracy)]
            )
