"""Experiment grid, iteration discipline, summary statistics and cost model.

Each (tier, kind) cell runs ``iterations`` trials. Before every trial the
relation (and for the delta method its running totals) is rebuilt from the
tier's seeded dataset, so no trial inherits state from the previous one.
Wall time is recorded, but the counters are what the comparisons rest on:
they are deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import os
import statistics
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import engine
from .errors import DeltaSumError, EmptyInput, ZeroRows
from .model import COUNTER_FIELDS, CounterSet, Predicate, Relation
from .workload import Order, WorkloadSpec, gen_dataset, gen_fresh_batch

DEFAULT_PREDICATE_CLASS = "E"
INSERT_FRACTION = 0.01


class Method(str, enum.Enum):
    CONTROL = "control"
    DELTA = "delta"


class Action(str, enum.Enum):
    SELECT_WITH_PREDICATE = "select_with_predicate"
    SELECT_WITHOUT_PREDICATE = "select_without_predicate"
    INSERTION = "insertion"


_ACTION_CODES = {
    Action.SELECT_WITH_PREDICATE: "WP",
    Action.SELECT_WITHOUT_PREDICATE: "WOP",
    Action.INSERTION: "I",
}


@dataclass(frozen=True)
class TestKind:
    """One of the six method/action combinations, e.g. ``CWP`` or ``DI``."""

    __test__ = False  # not a pytest class

    method: Method
    action: Action

    @property
    def code(self) -> str:
        return ("C" if self.method is Method.CONTROL else "D") + _ACTION_CODES[self.action]

    @property
    def is_selection(self) -> bool:
        return self.action is not Action.INSERTION

    @classmethod
    def parse(cls, code: str) -> "TestKind":
        for kind in ALL_KINDS:
            if kind.code == code.upper():
                return kind
        raise ValueError(f"unknown test kind {code!r}")

    def __str__(self) -> str:
        return self.code


ALL_KINDS = tuple(
    TestKind(m, a)
    for m in (Method.CONTROL, Method.DELTA)
    for a in (Action.SELECT_WITH_PREDICATE, Action.SELECT_WITHOUT_PREDICATE, Action.INSERTION)
)


@dataclass(frozen=True)
class CostModelParams:
    seq_page_cost: float = 1.0
    cpu_tuple_cost: float = 0.01

    def __post_init__(self):
        if not (self.seq_page_cost > 0 and self.cpu_tuple_cost > 0):
            raise ValueError("cost parameters must be > 0")


def estimate_cost(pages_read: int, rows_scanned: int, params: CostModelParams = CostModelParams()) -> float:
    """Planner-style cost: pages * seq_page_cost + rows * cpu_tuple_cost."""
    if pages_read < 0 or rows_scanned < 0:
        raise ValueError("counts must be >= 0")
    return pages_read * params.seq_page_cost + rows_scanned * params.cpu_tuple_cost


def derive_cpu_tuple_cost(query_cost: float, pages_read: int, rows_scanned: int, seq_page_cost: float = 1.0) -> float:
    """Solve :func:`estimate_cost` for cpu_tuple_cost.

    Evaluated in exact rationals and rounded once, so the only error left in
    a round trip is the rounding inside :func:`estimate_cost` itself.
    """
    if rows_scanned <= 0:
        raise ZeroRows("rows_scanned must be > 0 to derive a per-tuple cost")
    io_cost = Fraction(pages_read) * Fraction(seq_page_cost)
    return float((Fraction(query_cost) - io_cost) / rows_scanned)


@dataclass(frozen=True)
class StatsSummary:
    range: float
    sd: float
    mean: float
    median: float
    sd_pct_of_mean: float | None
    sd_pct_of_median: float | None


def summarize_stats(samples: Iterable[float]) -> StatsSummary:
    """Range, population SD, mean, median and SD as a percentage of each.

    The percentages are ``None`` when their denominator is zero.
    """
    xs = list(samples)
    if not xs:
        raise EmptyInput("summarize_stats needs at least one sample")
    mean = statistics.mean(xs)
    median = statistics.median(xs)
    sd = statistics.pstdev(xs)
    return StatsSummary(
        range=max(xs) - min(xs),
        sd=sd,
        mean=mean,
        median=median,
        sd_pct_of_mean=100 * sd / mean if mean else None,
        sd_pct_of_median=100 * sd / median if median else None,
    )


@dataclass
class MetricSample:
    iteration: int
    elapsed_us: int
    counters: CounterSet
    est_cost: float


@dataclass
class Cell:
    tier: int
    kind: TestKind
    samples: list[MetricSample] = field(default_factory=list)
    summaries: dict[str, StatsSummary] = field(default_factory=dict)
    error: str | None = None


@dataclass
class ExperimentReport:
    seed: int
    iterations: int
    literal_rescan: bool
    predicate_class: str
    order: str
    cost_params: CostModelParams
    cells: list[Cell] = field(default_factory=list)

    def cell(self, tier: int, kind: TestKind | str) -> Cell:
        code = kind if isinstance(kind, str) else kind.code
        for c in self.cells:
            if c.tier == tier and c.kind.code == code:
                return c
        raise KeyError((tier, code))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "literal_rescan": self.literal_rescan,
            "predicate_class": self.predicate_class,
            "order": self.order,
            "cost_params": asdict(self.cost_params),
            "cells": [
                {
                    "tier": c.tier,
                    "kind": c.kind.code,
                    "error": c.error,
                    "samples": [
                        {
                            "iteration": s.iteration,
                            "elapsed_us": s.elapsed_us,
                            "counters": s.counters.as_dict(),
                            "est_cost": s.est_cost,
                        }
                        for s in c.samples
                    ],
                    "summaries": {k: asdict(v) for k, v in c.summaries.items()},
                }
                for c in self.cells
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        cells = []
        for c in data["cells"]:
            samples = [
                MetricSample(s["iteration"], s["elapsed_us"], CounterSet(**s["counters"]), s["est_cost"])
                for s in c["samples"]
            ]
            summaries = {k: StatsSummary(**v) for k, v in c["summaries"].items()}
            cells.append(Cell(c["tier"], TestKind.parse(c["kind"]), samples, summaries, c["error"]))
        return cls(
            data["seed"],
            data["iterations"],
            data["literal_rescan"],
            data["predicate_class"],
            data["order"],
            CostModelParams(**data["cost_params"]),
            cells,
        )


class _Prepared:
    """Seeded base data for one tier, generated once and copied per trial."""

    def __init__(self, spec: WorkloadSpec, order: Order):
        self.spec = spec
        self.base = gen_dataset(spec, order)
        size = max(1, int(spec.cardinality * INSERT_FRACTION))
        self.batch = engine.InsertBatch.of(gen_fresh_batch(spec, size))

    def fresh_absolute(self) -> Relation:
        b = self.base
        return Relation(b.mode, b.manifest, b.pk.copy(), b.codes.copy(), b.values.copy())

    def fresh_delta(self) -> tuple[Relation, engine.DeltaState]:
        return engine.convert_absolute_to_delta(self.fresh_absolute())


def _run_trial(kind: TestKind, prep: _Prepared, pred: Predicate, literal_rescan: bool,
               counters: CounterSet, timer: Callable[[], int]) -> int:
    """Rebuild state, run one measured operation, return elapsed nanoseconds."""
    if kind.method is Method.CONTROL:
        rel = prep.fresh_absolute()
        if kind.is_selection:
            t0 = timer()
            engine.select_latest_absolute(rel, pred, counters)
            return timer() - t0
        t0 = timer()
        engine.insert_absolute(rel, prep.batch, counters)
        return timer() - t0

    rel, state = prep.fresh_delta()
    if kind.is_selection:
        t0 = timer()
        engine.select_latest_delta(rel, pred, counters)
        return timer() - t0
    if literal_rescan:
        t0 = timer()
        engine.insert_delta_rescan(rel, prep.batch, counters=counters)
        return timer() - t0
    t0 = timer()
    engine.insert_delta(rel, state, prep.batch, counters=counters)
    return timer() - t0


def run_experiment(
    tiers: Sequence[int],
    kinds: Sequence[TestKind] = ALL_KINDS,
    iterations: int = 10,
    seed: int = 0,
    literal_rescan: bool = False,
    *,
    params: CostModelParams = CostModelParams(),
    predicate_class: str = DEFAULT_PREDICATE_CLASS,
    order: Order | str = Order.SORTED,
    timer: Callable[[], int] = time.perf_counter_ns,
    progress: Callable[[Cell], None] | None = None,
) -> ExperimentReport:
    """Run every (tier, kind) cell for ``iterations`` trials.

    Selections run against the tier's dataset; insertions append a fresh
    batch of 1% of the tier size whose values lie after the dataset window.
    A trial that raises aborts its cell; the reason is stored on the cell
    and the remaining cells still run.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not tiers:
        raise ValueError("at least one cardinality tier is required")
    order = Order(order)
    report = ExperimentReport(seed, iterations, literal_rescan, predicate_class, order.value, params)
    with_pred = Predicate.of(predicate_class)
    for tier in tiers:
        prep = _Prepared(WorkloadSpec(seed, tier), order)
        for kind in kinds:
            cell = Cell(tier, kind)
            pred = with_pred if kind.action is Action.SELECT_WITH_PREDICATE else Predicate()
            for i in range(1, iterations + 1):
                counters = CounterSet()
                try:
                    elapsed_ns = _run_trial(kind, prep, pred, literal_rescan, counters, timer)
                except (DeltaSumError, ValueError, KeyError) as exc:
                    cell.error = f"iteration {i}: {type(exc).__name__}: {exc}"
                    break
                cost = estimate_cost(counters.pages_read, counters.rows_scanned, params)
                cell.samples.append(MetricSample(i, elapsed_ns // 1000, counters.snapshot(), cost))
            if cell.samples:
                cell.summaries = {
                    "elapsed_us": summarize_stats(s.elapsed_us for s in cell.samples),
                    "est_cost": summarize_stats(s.est_cost for s in cell.samples),
                }
            report.cells.append(cell)
            if progress is not None:
                progress(cell)
    return report


CSV_COLUMNS = ("tier", "kind", "iteration", "elapsed_us", *COUNTER_FIELDS, "est_cost")


def _num(x) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def report_csv(report: ExperimentReport) -> str:
    """Sample rows then one ``summary`` row (column means) per cell."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for cell in report.cells:
        for s in cell.samples:
            w.writerow([cell.tier, cell.kind.code, s.iteration, s.elapsed_us,
                        *(getattr(s.counters, f) for f in COUNTER_FIELDS), _num(s.est_cost)])
        if cell.samples:
            means = [
                statistics.mean(getattr(s.counters, f) for s in cell.samples) for f in COUNTER_FIELDS
            ]
            w.writerow([cell.tier, cell.kind.code, "summary",
                        _num(cell.summaries["elapsed_us"].mean),
                        *(_num(m) for m in means), _num(cell.summaries["est_cost"].mean)])
        else:
            w.writerow([cell.tier, cell.kind.code, "summary"] + [""] * (len(CSV_COLUMNS) - 3))
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_report(report: ExperimentReport, fmt: str, path: str | os.PathLike) -> None:
    text = {"csv": report_csv, "json": report_json}[fmt.lower()](report)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def load_report_json(path: str | os.PathLike) -> ExperimentReport:
    with open(path, encoding="utf-8") as f:
        return ExperimentReport.from_dict(json.load(f))


def work_total(counters: CounterSet) -> int:
    return counters.comparisons + counters.hash_probes + counters.additions


def lower_bound_comparisons(rel: Relation, pred: Predicate) -> int:
    """Sum over surviving classes of (bucket size - 1)."""
    mask = pred.mask(rel.alphabet)
    sizes = np.bincount(rel.codes, minlength=len(rel.alphabet))
    return int(sum(n - 1 for c, n in enumerate(sizes.tolist()) if mask[c] and n > 0))
