import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltasum.model import (
    DEFAULT_ALPHABET,
    CounterSet,
    Manifest,
    Mode,
    Predicate,
    Relation,
    class_alphabet,
)


def test_default_alphabet():
    assert DEFAULT_ALPHABET == tuple("ABCDEFGHIJ")
    assert len(class_alphabet(40)) == 40
    assert len(set(class_alphabet(40))) == 40


def test_relation_rejects_non_increasing_pk():
    with pytest.raises(ValueError):
        Relation.from_rows([(2, "A", 1), (2, "A", 2)])
    with pytest.raises(ValueError):
        Relation.from_rows([(3, "A", 1), (1, "A", 2)])


def test_relation_rejects_negative_absolute_but_not_delta():
    with pytest.raises(ValueError):
        Relation.from_rows([(1, "A", -1)], Mode.ABSOLUTE)
    assert len(Relation.from_rows([(1, "A", -1)], Mode.DELTA)) == 1


def test_relation_rejects_foreign_class():
    with pytest.raises(ValueError):
        Relation.from_rows([(1, "Z", 1)])


def test_relation_is_read_only():
    rel = Relation.from_rows([(1, "A", 1)])
    with pytest.raises(ValueError):
        rel.values[0] = 5


def test_relation_equality_includes_mode_and_manifest():
    a = Relation.from_rows([(1, "A", 1)], Mode.ABSOLUTE)
    assert a == Relation.from_rows([(1, "A", 1)], Mode.ABSOLUTE)
    assert a != Relation.from_rows([(1, "A", 1)], Mode.DELTA)
    assert a != Relation.from_rows([(1, "A", 1)], Mode.ABSOLUTE, Manifest(seed=4))


def test_manifest_cardinality_tracks_rows():
    rel = Relation.from_rows([(1, "A", 1), (5, "B", 2)])
    assert rel.manifest.cardinality == 2


def test_predicate_mask():
    assert Predicate.of("B", "D").mask(tuple("ABCD")).tolist() == [False, True, False, True]
    assert Predicate().mask(tuple("AB")).tolist() == [True, True]


@given(st.integers(min_value=0, max_value=10**9), st.integers(min_value=1, max_value=512))
def test_pages_read_is_ceiling(rows, width):
    c = CounterSet(rows_scanned=rows, row_width_bytes=width)
    c.finish_scan()
    assert c.pages_read == math.ceil(rows * width / 8192)
    assert c.pages_read == -(-rows * width // 8192)


def test_counter_line_order():
    c = CounterSet(1, 2, 3, 4, 5, 6)
    assert c.format_line() == (
        "rows_scanned=1 additions=2 comparisons=3 hash_probes=4 pages_read=5 mem_units=6"
    )
    c.reset()
    assert c.format_line().count("=0") == 6
