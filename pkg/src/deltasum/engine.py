"""Insertion and latest-value selection for absolute and delta storage.

Absolute storage keeps each interval verbatim and answers "latest value per
class" by hashing rows into class buckets, sorting every bucket and taking the
top. Delta storage keeps each interval as the difference from the class's
previous value, so the per-class SUM of stored values telescopes to the latest
value and the query becomes one additive scan with no sort.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import CapacityExceeded, ModeMismatch, NegativeDecodedValue, OutOfOrderInsert
from .model import (
    MAX_PK,
    NO_PREDICATE,
    CounterSet,
    LatestValue,
    Mode,
    Predicate,
    Relation,
)


class TieBreak(str, enum.Enum):
    HIGHEST_PK = "highest_pk"


@dataclass(frozen=True)
class EngineConfig:
    enforce_monotonic: bool = True
    tie_break: TieBreak = TieBreak.HIGHEST_PK

    def __post_init__(self):
        if TieBreak(self.tie_break) is not TieBreak.HIGHEST_PK:
            raise ValueError("only highest-pk tie breaking is supported")


DEFAULT_CONFIG = EngineConfig()


@dataclass
class DeltaState:
    """Per-class running totals of stored deltas.

    By telescoping, ``accumulators[k]`` is the most recent absolute value
    inserted for class ``k``. Classes without rows are absent.
    """

    accumulators: dict[str, int] = field(default_factory=dict)

    def copy(self) -> "DeltaState":
        return DeltaState(dict(self.accumulators))


@dataclass(frozen=True)
class InsertBatch:
    """Ordered (class, absolute value) entries to append."""

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        entries = tuple((str(k), int(v)) for k, v in self.entries)
        if not entries:
            raise ValueError("insert batch must not be empty")
        for k, v in entries:
            if v < 0:
                raise ValueError(f"absolute value for class {k!r} is negative: {v}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, entries: Iterable[tuple[str, int]]) -> "InsertBatch":
        return cls(tuple(entries))

    def __len__(self) -> int:
        return len(self.entries)


def _require_mode(rel: Relation, mode: Mode) -> None:
    if rel.mode is not mode:
        raise ModeMismatch(mode.value, rel.mode.value)


def _new_pks(rel: Relation, count: int) -> np.ndarray:
    first = rel.max_pk + 1
    if first + count - 1 > MAX_PK:
        raise CapacityExceeded("pk would overflow 64 bits")
    return np.arange(first, first + count, dtype=np.uint64)


def _codes_for(rel: Relation, batch: InsertBatch) -> list[int]:
    index = {label: i for i, label in enumerate(rel.alphabet)}
    try:
        return [index[k] for k, _ in batch.entries]
    except KeyError as exc:
        raise KeyError(f"class {exc.args[0]!r} not in alphabet {rel.alphabet}") from None


def insert_absolute(rel: Relation, batch: InsertBatch, counters: CounterSet | None = None) -> Relation:
    """Append every entry verbatim. No scan and no arithmetic on the interval."""
    _require_mode(rel, Mode.ABSOLUTE)
    counters = counters if counters is not None else CounterSet()
    counters.reset()
    codes = _codes_for(rel, batch)
    out = rel.appended(_new_pks(rel, len(batch)), codes, [v for _, v in batch.entries])
    counters.finish_scan()
    return out


def insert_delta(
    rel: Relation,
    state: DeltaState,
    batch: InsertBatch,
    cfg: EngineConfig = DEFAULT_CONFIG,
    counters: CounterSet | None = None,
) -> tuple[Relation, DeltaState]:
    """Append each entry as its difference from the class's running total.

    A class seen for the first time stores the value verbatim. Otherwise the
    stored delta is ``value - accumulators[class]`` and the accumulator moves
    to ``value``. The accumulator stands in for re-summing the class on every
    insert; see :func:`insert_delta_rescan` for the literal variant.

    Raises:
        OutOfOrderInsert: enforcement is on and a value is below its class's
            current latest. Nothing is appended in that case.
    """
    _require_mode(rel, Mode.DELTA)
    counters = counters if counters is not None else CounterSet()
    counters.reset()
    codes = _codes_for(rel, batch)
    acc = dict(state.accumulators)
    deltas = []
    additions = 0
    for label, value in batch.entries:
        current = acc.get(label)
        if current is None:
            deltas.append(value)
        else:
            if cfg.enforce_monotonic and value < current:
                raise OutOfOrderInsert(label, value, current)
            deltas.append(value - current)
            additions += 1
        acc[label] = value
    out = rel.appended(_new_pks(rel, len(batch)), codes, deltas)
    counters.additions = additions
    counters.finish_scan()
    return out, DeltaState(acc)


def insert_delta_rescan(
    rel: Relation,
    batch: InsertBatch,
    cfg: EngineConfig = DEFAULT_CONFIG,
    counters: CounterSet | None = None,
) -> Relation:
    """Delta insert that re-derives each class total by scanning the relation.

    Same stored values as :func:`insert_delta`, but every entry pays a full
    scan of the relation (plus the rows already appended by this batch) to
    find its class's current sum, as a query rewrite without cached state
    would. Used by the benchmark to show what the running accumulator saves.
    """
    _require_mode(rel, Mode.DELTA)
    counters = counters if counters is not None else CounterSet()
    counters.reset()
    codes = _codes_for(rel, batch)
    pending_codes = np.empty(len(batch), dtype=np.int32)
    deltas = np.empty(len(batch), dtype=np.int64)
    for k, (code, (label, value)) in enumerate(zip(codes, batch.entries)):
        total, matches = _kernels.class_sum(rel.codes, rel.values, code)
        pend_total, pend_matches = _kernels.class_sum(pending_codes[:k], deltas[:k], code)
        total = int(total) + int(pend_total)
        matches = int(matches) + int(pend_matches)
        counters.rows_scanned += len(rel) + k
        counters.additions += matches
        if matches == 0:
            delta = value
        else:
            if cfg.enforce_monotonic and value < total:
                raise OutOfOrderInsert(label, value, total)
            delta = value - total
            counters.additions += 1
        pending_codes[k] = code
        deltas[k] = delta
    out = rel.appended(_new_pks(rel, len(batch)), codes, deltas)
    counters.finish_scan()
    return out


def _results(rel: Relation, present, values, witnesses=None) -> list[LatestValue]:
    out = []
    for code in sorted(range(len(rel.alphabet)), key=lambda c: rel.alphabet[c]):
        if present[code]:
            witness = int(witnesses[code]) if witnesses is not None else None
            out.append(LatestValue(rel.alphabet[code], int(values[code]), witness))
    return out


def select_latest_absolute(
    rel: Relation, pred: Predicate = NO_PREDICATE, counters: CounterSet | None = None
) -> list[LatestValue]:
    """Latest value per class via scan, hash into buckets, sort, take the max.

    Ties on the interval go to the highest pk. ``counters.comparisons`` is the
    exact number of key comparisons the bucket sort performed.
    """
    _require_mode(rel, Mode.ABSOLUTE)
    counters = counters if counters is not None else CounterSet()
    counters.reset()
    mask = pred.mask(rel.alphabet)
    present, best_v, best_p, scanned, probes, comparisons, bucketed = _kernels.absolute_select(
        rel.codes, rel.values, rel.pk, mask, len(rel.alphabet)
    )
    counters.rows_scanned = int(scanned)
    counters.hash_probes = int(probes)
    counters.comparisons = int(comparisons)
    counters.mem_units = int(bucketed)
    counters.finish_scan()
    return _results(rel, present, best_v, best_p)


def select_latest_delta(
    rel: Relation, pred: Predicate = NO_PREDICATE, counters: CounterSet | None = None
) -> list[LatestValue]:
    """Latest value per class as the SUM of its stored deltas. One pass, no sort."""
    _require_mode(rel, Mode.DELTA)
    counters = counters if counters is not None else CounterSet()
    counters.reset()
    mask = pred.mask(rel.alphabet)
    present, sums, scanned, additions = _kernels.delta_select(
        rel.codes, rel.values, mask, len(rel.alphabet)
    )
    counters.rows_scanned = int(scanned)
    counters.additions = int(additions)
    counters.comparisons = 0
    counters.mem_units = int(present.sum())
    counters.finish_scan()
    return _results(rel, present, sums)


def convert_absolute_to_delta(rel: Relation) -> tuple[Relation, DeltaState]:
    """Rewrite every interval as its difference from the previous row of its class.

    Rows are visited in pk order. Per-class monotonicity is not required: a
    decrease becomes a negative delta and the class total is then the
    last-by-pk value.
    """
    _require_mode(rel, Mode.ABSOLUTE)
    deltas, last, seen = _kernels.per_class_deltas(rel.codes, rel.values, len(rel.alphabet))
    state = DeltaState({rel.alphabet[c]: int(last[c]) for c in range(len(rel.alphabet)) if seen[c]})
    return rel.with_values(Mode.DELTA, deltas), state


def convert_delta_to_absolute(rel: Relation) -> Relation:
    """Inverse of :func:`convert_absolute_to_delta` via per-class prefix sums."""
    _require_mode(rel, Mode.DELTA)
    absolutes, bad = _kernels.per_class_prefix_sums(rel.codes, rel.values, len(rel.alphabet))
    if bad >= 0:
        raise NegativeDecodedValue(int(rel.pk[bad]), int(absolutes[bad]))
    return rel.with_values(Mode.ABSOLUTE, absolutes)


def delta_state_of(rel: Relation) -> DeltaState:
    """Rebuild the accumulator map of a delta relation with one scan."""
    _require_mode(rel, Mode.DELTA)
    present, sums, _, _ = _kernels.delta_select(
        rel.codes, rel.values, np.ones(len(rel.alphabet), dtype=np.bool_), len(rel.alphabet)
    )
    return DeltaState({rel.alphabet[c]: int(sums[c]) for c in range(len(rel.alphabet)) if present[c]})


def build_from_stream(
    stream: Sequence[tuple[str, int]] | InsertBatch,
    mode: Mode,
    manifest=None,
    cfg: EngineConfig = DEFAULT_CONFIG,
) -> tuple[Relation, DeltaState | None]:
    """Insert a whole (class, absolute value) stream into an empty relation."""
    batch = stream if isinstance(stream, InsertBatch) else InsertBatch.of(stream)
    empty = Relation(mode, manifest) if manifest is not None else Relation(mode)
    if mode is Mode.ABSOLUTE:
        return insert_absolute(empty, batch), None
    return insert_delta(empty, DeltaState(), batch, cfg)
