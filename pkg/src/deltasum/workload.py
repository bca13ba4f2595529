"""Seeded dataset generation and the CSV + manifest relation file format."""

from __future__ import annotations

import csv
import enum
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidSpec, ModeMismatch
from .model import Manifest, Mode, Relation, class_alphabet
from .prng import XorShift64Star

MICROS_PER_DAY = 86_400 * 1_000_000
# 2021-01-01T00:00:00Z
DEFAULT_RANGE_START = 1_609_459_200 * 1_000_000

CSV_HEADER = ("pk", "class", "value_us")

DEFAULT_TIERS = (10_000, 100_000, 1_000_000)
LARGE_TIER = 10_000_000


class Order(str, enum.Enum):
    SHUFFLED = "shuffled"
    SORTED = "sorted"  # per-class nondecreasing


@dataclass(frozen=True)
class WorkloadSpec:
    seed: int
    cardinality: int
    class_count: int = 10
    range_start: int = DEFAULT_RANGE_START
    range_days: int = 365

    def __post_init__(self):
        if self.cardinality < 1:
            raise InvalidSpec("cardinality must be >= 1")
        if self.class_count < 1:
            raise InvalidSpec("class_count must be >= 1")
        if self.range_days < 1:
            raise InvalidSpec("range_days must be >= 1")
        if self.range_start < 0:
            raise InvalidSpec("range_start must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must fit in 64 unsigned bits")

    @property
    def range_width(self) -> int:
        return self.range_days * MICROS_PER_DAY

    @property
    def range_end(self) -> int:
        return self.range_start + self.range_width


def _sort_within_classes(codes: np.ndarray, values: np.ndarray) -> np.ndarray:
    # the k-th row of a class receives that class's k-th smallest value
    slots = np.argsort(codes, kind="stable")
    ranked = np.lexsort((values, codes))
    out = values.copy()
    out[slots] = values[ranked]
    return out


def gen_dataset(spec: WorkloadSpec, order: Order | str = Order.SHUFFLED) -> Relation:
    """Generate ``spec.cardinality`` absolute rows with pks 1..n.

    Draw layout from one xorshift64* stream: n class draws, then n offset
    draws in ``[0, range_days * 86400e6)``. With ``Order.SORTED`` each class's
    values are sorted ascending in place, keeping the class interleaving.
    """
    order = Order(order)
    rng = XorShift64Star(spec.seed)
    codes = rng.draw_below(spec.class_count, spec.cardinality).astype(np.int32)
    values = rng.draw_below(spec.range_width, spec.cardinality).astype(np.int64) + spec.range_start
    if order is Order.SORTED:
        values = _sort_within_classes(codes, values)
    manifest = Manifest(class_alphabet(spec.class_count), spec.seed, spec.cardinality, order.value)
    pks = np.arange(1, spec.cardinality + 1, dtype=np.uint64)
    return Relation(Mode.ABSOLUTE, manifest, pks, codes, values)


def gen_fresh_batch(spec: WorkloadSpec, count: int, stream: int = 1) -> list[tuple[str, int]]:
    """Entries lying after the generation window, sorted per class.

    Every value is >= ``spec.range_end`` so the batch never lowers a class's
    latest value, whatever order the base dataset was generated in.
    ``stream`` picks an independent seed so batches differ from the base data.
    """
    if count < 1:
        raise InvalidSpec("batch size must be >= 1")
    rng = XorShift64Star((spec.seed + stream * 0x9E3779B97F4A7C15) % 2**64)
    codes = rng.draw_below(spec.class_count, count).astype(np.int32)
    values = rng.draw_below(MICROS_PER_DAY, count).astype(np.int64) + spec.range_end
    values = _sort_within_classes(codes, values)
    labels = class_alphabet(spec.class_count)
    return [(labels[c], v) for c, v in zip(codes.tolist(), values.tolist())]


def manifest_path(path: str | os.PathLike) -> Path:
    path = Path(path)
    stem = path.name[: -len(path.suffix)] if path.suffix else path.name
    return path.with_name(stem + ".manifest.json")


def manifest_dict(rel: Relation) -> dict:
    m = rel.manifest
    return {
        "mode": rel.mode.value,
        "seed": m.seed,
        "class_alphabet": list(m.class_alphabet),
        "cardinality": len(rel),
        "order": m.order,
    }


def save_relation(rel: Relation, path: str | os.PathLike) -> dict:
    """Write ``rel`` as CSV plus a sidecar manifest; return the manifest dict."""
    path = Path(path)
    alphabet = rel.alphabet
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(CSV_HEADER) + "\n")
        lines = (
            f"{pk},{alphabet[c]},{v}\n"
            for pk, c, v in zip(rel.pk.tolist(), rel.codes.tolist(), rel.values.tolist())
        )
        f.writelines(lines)
    manifest = manifest_dict(rel)
    with open(manifest_path(path), "w", encoding="utf-8", newline="") as f:
        f.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _read_manifest(path: Path) -> tuple[Manifest, Mode]:
    mpath = manifest_path(path)
    try:
        raw = json.loads(mpath.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FormatError(f"missing manifest {mpath}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest {mpath} is not valid JSON: {exc}") from None
    try:
        mode = Mode(raw["mode"])
        manifest = Manifest(
            tuple(raw["class_alphabet"]), raw.get("seed"), int(raw["cardinality"]), raw.get("order")
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"manifest {mpath} is malformed: {exc}") from None
    return manifest, mode


def load_relation(path: str | os.PathLike, expect_mode: Mode | str | None = None) -> Relation:
    """Read a relation written by :func:`save_relation`.

    Raises:
        FormatError: malformed CSV or manifest; ``line`` is the 1-based line.
        ModeMismatch: the manifest mode differs from ``expect_mode``.
    """
    path = Path(path)
    manifest, mode = _read_manifest(path)
    if expect_mode is not None and Mode(expect_mode) is not mode:
        raise ModeMismatch(Mode(expect_mode).value, mode.value)
    index = {label: i for i, label in enumerate(manifest.class_alphabet)}
    pks: list[int] = []
    codes: list[int] = []
    values: list[int] = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise FormatError(f"header must be {','.join(CSV_HEADER)}", line=1)
        last_pk = -1
        for row in reader:
            line = reader.line_num
            if len(row) != 3:
                raise FormatError(f"expected 3 columns, found {len(row)}", line=line)
            try:
                pk = int(row[0])
                value = int(row[2])
            except ValueError:
                raise FormatError("pk and value_us must be decimal integers", line=line) from None
            if row[1] not in index:
                raise FormatError(f"class {row[1]!r} not in manifest alphabet", line=line)
            if pk <= last_pk or pk >= 2**64:
                raise FormatError("pk must be strictly increasing and fit in 64 bits", line=line)
            if mode is Mode.ABSOLUTE and value < 0:
                raise FormatError("absolute value_us must be >= 0", line=line)
            if not -(2**63) <= value < 2**63:
                raise FormatError("value_us out of 64-bit range", line=line)
            last_pk = pk
            pks.append(pk)
            codes.append(index[row[1]])
            values.append(value)
    if len(pks) != manifest.cardinality:
        raise FormatError(
            f"manifest declares {manifest.cardinality} rows but the file has {len(pks)}"
        )
    return Relation(
        mode,
        manifest,
        np.array(pks, dtype=np.uint64),
        np.array(codes, dtype=np.int32),
        np.array(values, dtype=np.int64),
    )
