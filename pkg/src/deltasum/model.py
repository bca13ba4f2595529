"""Relational data model shared by the engine, workload and bench layers.

A relation holds (pk, class, interval) rows in columnar numpy arrays. Class
labels are stored as small integer codes into the manifest's alphabet so the
scan kernels never touch Python strings.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import string
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import InvalidPredicate

PAGE_SIZE_BYTES = 8192
# 8-byte pk + 8-byte class hash slot + 8-byte interval
DEFAULT_ROW_WIDTH_BYTES = 24

MAX_PK = 2**64 - 1


class Mode(str, enum.Enum):
    ABSOLUTE = "absolute"
    DELTA = "delta"


def class_alphabet(count: int = 10) -> tuple[str, ...]:
    """Return ``count`` class labels: "A", "B", ... up to 26, then "C0026" style."""
    if count < 1:
        raise ValueError("class count must be >= 1")
    if count <= 26:
        return tuple(string.ascii_uppercase[:count])
    return tuple(f"C{i:04d}" for i in range(count))


DEFAULT_ALPHABET = class_alphabet(10)


class RowTuple(NamedTuple):
    pk: int
    cls: str
    value: int


@dataclass(frozen=True)
class Manifest:
    class_alphabet: tuple[str, ...] = DEFAULT_ALPHABET
    seed: int | None = None
    cardinality: int = 0
    order: str | None = None

    def __post_init__(self):
        if not self.class_alphabet or any(not c for c in self.class_alphabet):
            raise ValueError("class alphabet must be non-empty labels")
        if len(set(self.class_alphabet)) != len(self.class_alphabet):
            raise ValueError("class alphabet has duplicate labels")


def _empty(dtype) -> np.ndarray:
    return np.empty(0, dtype=dtype)


@dataclass(frozen=True, eq=False)
class Relation:
    """An append-only relation in one storage mode.

    ``pk`` is uint64 and strictly increasing, ``codes`` index into
    ``manifest.class_alphabet`` and ``values`` are int64 microseconds
    (absolute epoch offsets or per-class deltas depending on ``mode``).
    The arrays are made read-only on construction.
    """

    mode: Mode
    manifest: Manifest = field(default_factory=Manifest)
    pk: np.ndarray = field(default_factory=lambda: _empty(np.uint64))
    codes: np.ndarray = field(default_factory=lambda: _empty(np.int32))
    values: np.ndarray = field(default_factory=lambda: _empty(np.int64))

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        pk = np.ascontiguousarray(self.pk, dtype=np.uint64)
        codes = np.ascontiguousarray(self.codes, dtype=np.int32)
        values = np.ascontiguousarray(self.values, dtype=np.int64)
        if not (len(pk) == len(codes) == len(values)):
            raise ValueError("column lengths differ")
        if len(pk) > 1 and not np.all(pk[1:] > pk[:-1]):
            raise ValueError("pk must be strictly increasing")
        if len(codes) and (codes.min() < 0 or codes.max() >= len(self.manifest.class_alphabet)):
            raise ValueError("class code outside the manifest alphabet")
        if self.mode is Mode.ABSOLUTE and len(values) and values.min() < 0:
            raise ValueError("absolute intervals must be >= 0")
        for arr in (pk, codes, values):
            arr.flags.writeable = False
        object.__setattr__(self, "pk", pk)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "values", values)
        if self.manifest.cardinality != len(pk):
            object.__setattr__(
                self, "manifest", dataclasses.replace(self.manifest, cardinality=len(pk))
            )

    @classmethod
    def from_rows(
        cls,
        rows: Iterable[tuple[int, str, int]],
        mode: Mode = Mode.ABSOLUTE,
        manifest: Manifest | None = None,
    ) -> "Relation":
        manifest = manifest or Manifest()
        index = {label: i for i, label in enumerate(manifest.class_alphabet)}
        pks, codes, values = [], [], []
        for pk, label, value in rows:
            if label not in index:
                raise ValueError(f"class {label!r} not in alphabet")
            pks.append(pk)
            codes.append(index[label])
            values.append(value)
        return cls(mode, manifest, np.array(pks, dtype=np.uint64),
                   np.array(codes, dtype=np.int32), np.array(values, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.pk)

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return (
            self.mode is other.mode
            and self.manifest == other.manifest
            and np.array_equal(self.pk, other.pk)
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.manifest.class_alphabet

    @property
    def max_pk(self) -> int:
        return int(self.pk[-1]) if len(self.pk) else 0

    def code_of(self, label: str) -> int:
        try:
            return self.alphabet.index(label)
        except ValueError:
            raise KeyError(f"class {label!r} not in alphabet {self.alphabet}") from None

    def rows(self) -> Iterator[RowTuple]:
        alphabet = self.alphabet
        for pk, code, value in zip(self.pk.tolist(), self.codes.tolist(), self.values.tolist()):
            yield RowTuple(pk, alphabet[code], value)

    def appended(self, pks, codes, values) -> "Relation":
        """Return a new relation with the given rows added at the end."""
        return Relation(
            self.mode,
            self.manifest,
            np.concatenate([self.pk, np.asarray(pks, dtype=np.uint64)]),
            np.concatenate([self.codes, np.asarray(codes, dtype=np.int32)]),
            np.concatenate([self.values, np.asarray(values, dtype=np.int64)]),
        )

    def with_values(self, mode: Mode, values: np.ndarray) -> "Relation":
        return Relation(mode, self.manifest, self.pk, self.codes, values)


@dataclass(frozen=True)
class Predicate:
    """Optional filter on the class column. ``None`` means no predicate."""

    allowed_classes: frozenset[str] | None = None

    def __post_init__(self):
        if self.allowed_classes is not None:
            allowed = frozenset(self.allowed_classes)
            if not allowed:
                raise InvalidPredicate("an empty class set is not a valid predicate")
            object.__setattr__(self, "allowed_classes", allowed)

    @classmethod
    def of(cls, *labels: str) -> "Predicate":
        return cls(frozenset(labels) if labels else None)

    def mask(self, alphabet: tuple[str, ...]) -> np.ndarray:
        """Boolean vector over class codes; True where the class survives."""
        if self.allowed_classes is None:
            return np.ones(len(alphabet), dtype=np.bool_)
        unknown = self.allowed_classes.difference(alphabet)
        if unknown:
            raise InvalidPredicate(f"classes {sorted(unknown)} not in alphabet")
        return np.array([c in self.allowed_classes for c in alphabet], dtype=np.bool_)


NO_PREDICATE = Predicate()


COUNTER_FIELDS = (
    "rows_scanned", "additions", "comparisons", "hash_probes", "pages_read", "mem_units",
)


@dataclass
class CounterSet:
    """Deterministic work counters for one measured operation.

    Engine operations call :meth:`reset` on entry, so a counter set only ever
    describes the most recent operation it was handed to.
    """

    rows_scanned: int = 0
    additions: int = 0
    comparisons: int = 0
    hash_probes: int = 0
    pages_read: int = 0
    mem_units: int = 0
    row_width_bytes: int = DEFAULT_ROW_WIDTH_BYTES

    def reset(self) -> None:
        for name in COUNTER_FIELDS:
            setattr(self, name, 0)

    def finish_scan(self) -> None:
        self.pages_read = math.ceil(self.rows_scanned * self.row_width_bytes / PAGE_SIZE_BYTES)

    def snapshot(self) -> "CounterSet":
        return dataclasses.replace(self)

    def as_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in COUNTER_FIELDS}

    def format_line(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.as_dict().items())


@dataclass(frozen=True)
class LatestValue:
    cls: str
    value: int
    witness_pk: int | None = None
