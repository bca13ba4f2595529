import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import abs_rel, brute_max, build_both, delta_rel, last_write
from deltasum.engine import (
    DeltaState,
    EngineConfig,
    InsertBatch,
    convert_absolute_to_delta,
    convert_delta_to_absolute,
    delta_state_of,
    insert_absolute,
    insert_delta,
    insert_delta_rescan,
    select_latest_absolute,
    select_latest_delta,
)
from deltasum.errors import ModeMismatch, NegativeDecodedValue, OutOfOrderInsert
from deltasum.model import CounterSet, LatestValue, Mode, Predicate, Relation

LABELS = "ABCDEFGHIJ"


def pairs(results):
    return [(lv.cls, lv.value) for lv in results]


# -- insert_absolute ---------------------------------------------------------

def test_insert_absolute_first_row(empty_abs):
    c = CounterSet()
    rel = insert_absolute(empty_abs, InsertBatch.of([("A", 1000)]), c)
    assert list(rel.rows()) == [(1, "A", 1000)]
    assert c.additions == 0 and c.rows_scanned == 0


def test_insert_absolute_appends_with_next_pk():
    rel = insert_absolute(abs_rel((1, "A", 1000)), InsertBatch.of([("A", 1500), ("B", 7)]))
    assert list(rel.rows()) == [(1, "A", 1000), (2, "A", 1500), (3, "B", 7)]


def test_insert_absolute_accepts_zero():
    rel = insert_absolute(abs_rel((1, "A", 1000)), InsertBatch.of([("A", 0)]))
    assert list(rel.rows())[-1] == (2, "A", 0)


def test_insert_absolute_leaves_input_untouched():
    before = abs_rel((1, "A", 1000))
    insert_absolute(before, InsertBatch.of([("B", 5)]))
    assert len(before) == 1


def test_insert_batch_rejects_empty_and_negative():
    with pytest.raises(ValueError):
        InsertBatch.of([])
    with pytest.raises(ValueError):
        InsertBatch.of([("A", -1)])


def test_insert_rejects_wrong_mode(empty_delta):
    with pytest.raises(ModeMismatch):
        insert_absolute(empty_delta, InsertBatch.of([("A", 1)]))


def test_insert_unknown_class(empty_abs):
    with pytest.raises(KeyError):
        insert_absolute(empty_abs, InsertBatch.of([("Z", 1)]))


# -- insert_delta ------------------------------------------------------------

def test_insert_delta_first_entry_verbatim(empty_delta):
    rel, state = insert_delta(empty_delta, DeltaState(), InsertBatch.of([("E", 1000)]))
    assert rel.values.tolist() == [1000]
    assert state.accumulators == {"E": 1000}


def test_insert_delta_stores_difference():
    rel = delta_rel((1, "E", 1000))
    c = CounterSet()
    rel, state = insert_delta(rel, DeltaState({"E": 1000}), InsertBatch.of([("E", 1500)]), counters=c)
    assert rel.values.tolist() == [1000, 500]
    assert state.accumulators == {"E": 1500}
    assert c.additions == 1 and c.rows_scanned == 0


def test_insert_delta_out_of_order_raises():
    rel = delta_rel((1, "E", 1000), (2, "E", 500))
    with pytest.raises(OutOfOrderInsert) as info:
        insert_delta(rel, DeltaState({"E": 1500}), InsertBatch.of([("E", 1400)]))
    assert (info.value.cls, info.value.attempted, info.value.current) == ("E", 1400, 1500)


def test_insert_delta_out_of_order_allowed_when_not_enforced():
    rel = delta_rel((1, "E", 1000), (2, "E", 500))
    rel, state = insert_delta(
        rel, DeltaState({"E": 1500}), InsertBatch.of([("E", 1400)]), EngineConfig(enforce_monotonic=False)
    )
    assert rel.values.tolist()[-1] == -100
    assert state.accumulators == {"E": 1400}


def test_insert_delta_does_not_mutate_state():
    state = DeltaState({"E": 1000})
    insert_delta(delta_rel((1, "E", 1000)), state, InsertBatch.of([("E", 2000)]))
    assert state.accumulators == {"E": 1000}


def test_insert_delta_failure_appends_nothing():
    rel = delta_rel((1, "E", 1000))
    with pytest.raises(OutOfOrderInsert):
        insert_delta(rel, DeltaState({"E": 1000}), InsertBatch.of([("E", 2000), ("E", 10)]))
    assert len(rel) == 1


def test_rescan_matches_accumulator_insert():
    base, state = convert_absolute_to_delta(abs_rel((1, "A", 10), (2, "B", 20), (3, "A", 15)))
    batch = InsertBatch.of([("A", 30), ("C", 5), ("A", 31), ("B", 20)])
    fast_c, slow_c = CounterSet(), CounterSet()
    fast, _ = insert_delta(base, state, batch, counters=fast_c)
    slow = insert_delta_rescan(base, batch, counters=slow_c)
    assert fast == slow
    # each entry scans the base (3 rows) plus what the batch appended so far
    assert slow_c.rows_scanned == 3 + 4 + 5 + 6
    assert fast_c.rows_scanned == 0
    assert fast_c.additions == 3


# -- select_latest_absolute --------------------------------------------------

def test_select_absolute_max():
    out = select_latest_absolute(abs_rel((1, "A", 5), (2, "A", 9), (3, "A", 7)))
    assert out == [LatestValue("A", 9, 2)]


def test_select_absolute_tie_goes_to_highest_pk():
    assert select_latest_absolute(abs_rel((1, "A", 9), (2, "A", 9))) == [LatestValue("A", 9, 2)]


def test_select_absolute_predicate_before_bucketing():
    c = CounterSet()
    out = select_latest_absolute(abs_rel((1, "A", 5), (2, "B", 8)), Predicate.of("A"), c)
    assert out == [LatestValue("A", 5, 1)]
    assert c.hash_probes == 1
    assert c.rows_scanned == 2


def test_select_absolute_empty(empty_abs):
    c = CounterSet()
    assert select_latest_absolute(empty_abs, counters=c) == []
    assert c.as_dict() == dict.fromkeys(c.as_dict(), 0)


def test_select_absolute_output_sorted_by_label():
    rel = abs_rel((1, "C", 1), (2, "A", 2), (3, "B", 3))
    assert [lv.cls for lv in select_latest_absolute(rel)] == ["A", "B", "C"]


def test_counters_reset_between_operations():
    rel = abs_rel((1, "A", 5), (2, "A", 9))
    c = CounterSet()
    select_latest_absolute(rel, counters=c)
    select_latest_absolute(rel, counters=c)
    assert c.rows_scanned == 2 and c.hash_probes == 2


# -- select_latest_delta -----------------------------------------------------

def test_select_delta_sums():
    c = CounterSet()
    out = select_latest_delta(delta_rel((1, "E", 1000), (2, "E", 500), (3, "E", 25)), counters=c)
    assert out == [LatestValue("E", 1525, None)]
    assert c.additions == 3 and c.comparisons == 0 and c.mem_units == 1


def test_select_delta_no_survivors():
    c = CounterSet()
    assert select_latest_delta(delta_rel((1, "B", 4)), Predicate.of("A"), c) == []
    assert c.comparisons == 0 and c.additions == 0 and c.rows_scanned == 1


def test_select_delta_matches_control_on_mirrored_stream():
    rel_abs, rel_delta, _ = build_both([("A", 1000), ("A", 1500), ("A", 1525)])
    assert pairs(select_latest_delta(rel_delta)) == [("A", 1525)]
    assert pairs(select_latest_delta(rel_delta)) == pairs(select_latest_absolute(rel_abs))


def test_empty_predicate_rejected():
    from deltasum.errors import InvalidPredicate

    with pytest.raises(InvalidPredicate):
        Predicate(frozenset())
    with pytest.raises(InvalidPredicate):
        select_latest_delta(delta_rel((1, "A", 1)), Predicate.of("Q"))


# -- conversions -------------------------------------------------------------

def test_convert_to_delta_pairwise_differences():
    rel, state = convert_absolute_to_delta(abs_rel((1, "A", 100), (2, "A", 150), (3, "A", 175)))
    assert rel.mode is Mode.DELTA
    assert rel.values.tolist() == [100, 50, 25]
    assert state.accumulators == {"A": 175}


def test_convert_single_row_class():
    rel, _ = convert_absolute_to_delta(abs_rel((1, "A", 100), (2, "B", 42), (3, "A", 120)))
    assert rel.values.tolist() == [100, 42, 20]


def test_convert_non_monotonic():
    rel, _ = convert_absolute_to_delta(abs_rel((1, "A", 100), (2, "A", 90)))
    assert rel.values.tolist() == [100, -10]
    assert pairs(select_latest_delta(rel)) == [("A", 90)]


def test_convert_back_prefix_sums():
    rel = convert_delta_to_absolute(delta_rel((1, "A", 100), (2, "A", 50), (3, "A", 25)))
    assert rel.mode is Mode.ABSOLUTE
    assert rel.values.tolist() == [100, 150, 175]


def test_convert_back_negative_prefix():
    with pytest.raises(NegativeDecodedValue) as info:
        convert_delta_to_absolute(delta_rel((1, "A", 100), (2, "A", -200)))
    assert info.value.pk == 2


def test_delta_state_rebuilt_from_relation():
    _, rel_delta, state = build_both([("A", 3), ("B", 5), ("A", 9)])
    assert delta_state_of(rel_delta) == state


# -- properties --------------------------------------------------------------

streams = st.lists(
    st.tuples(st.sampled_from(LABELS), st.integers(min_value=0, max_value=2**50)),
    min_size=1,
    max_size=200,
)


def _per_class_sorted(stream):
    by_class = {}
    for label, value in stream:
        by_class.setdefault(label, []).append(value)
    for vals in by_class.values():
        vals.sort(reverse=True)
    return [(label, by_class[label].pop()) for label, _ in stream]


@given(streams, st.none() | st.sets(st.sampled_from(LABELS), min_size=1))
@settings(max_examples=200, deadline=None)
def test_monotonic_equivalence(stream, allowed):
    stream = _per_class_sorted(stream)
    rel_abs, rel_delta, state = build_both(stream)
    pred = Predicate(frozenset(allowed) if allowed else None)
    ca, cd = CounterSet(), CounterSet()
    got_abs = select_latest_absolute(rel_abs, pred, ca)
    got_delta = select_latest_delta(rel_delta, pred, cd)
    assert pairs(got_abs) == pairs(got_delta)

    oracle = brute_max(rel_abs.rows())
    expected = sorted((k, v) for k, (v, _) in oracle.items() if allowed is None or k in allowed)
    assert pairs(got_abs) == expected
    assert [lv.witness_pk for lv in got_abs] == [oracle[k][1] for k, _ in expected]

    survivors = sum(1 for _, label, _ in rel_abs.rows() if allowed is None or label in allowed)
    assert cd.comparisons == 0
    assert cd.additions == survivors
    assert ca.hash_probes == survivors
    sizes = {}
    for _, label, _ in rel_abs.rows():
        if allowed is None or label in allowed:
            sizes[label] = sizes.get(label, 0) + 1
    assert ca.comparisons >= sum(n - 1 for n in sizes.values())
    assert ca.rows_scanned == cd.rows_scanned == len(stream)
    assert state.accumulators == last_write(stream)


@given(streams)
@settings(max_examples=200, deadline=None)
def test_general_stream_gives_last_write(stream):
    _, rel_delta, state = build_both(stream, EngineConfig(enforce_monotonic=False))
    assert dict(pairs(select_latest_delta(rel_delta))) == last_write(stream)
    assert state.accumulators == last_write(stream)


@given(streams)
@settings(max_examples=200, deadline=None)
def test_round_trip(stream):
    rel_abs, _, _ = build_both(stream, EngineConfig(enforce_monotonic=False))
    rel_delta, state = convert_absolute_to_delta(rel_abs)
    assert convert_delta_to_absolute(rel_delta) == rel_abs
    assert state.accumulators == last_write(stream)


@given(streams)
@settings(max_examples=100, deadline=None)
def test_insert_delta_equals_conversion(stream):
    rel_abs, rel_delta, _ = build_both(stream, EngineConfig(enforce_monotonic=False))
    converted, _ = convert_absolute_to_delta(rel_abs)
    assert converted == rel_delta


@given(streams, st.integers(min_value=1, max_value=5))
@settings(max_examples=100, deadline=None)
def test_insert_in_chunks_equals_single_batch(stream, chunks):
    cfg = EngineConfig(enforce_monotonic=False)
    _, whole, whole_state = build_both(stream, cfg)
    rel, state = Relation(Mode.DELTA), DeltaState()
    step = max(1, len(stream) // chunks)
    for i in range(0, len(stream), step):
        rel, state = insert_delta(rel, state, InsertBatch.of(stream[i:i + step]), cfg)
    assert rel == whole and state == whole_state


@given(streams)
@settings(max_examples=50, deadline=None)
def test_determinism(stream):
    a = build_both(stream, EngineConfig(enforce_monotonic=False))
    b = build_both(stream, EngineConfig(enforce_monotonic=False))
    assert a[0] == b[0] and a[1] == b[1] and a[2] == b[2]
    c1, c2 = CounterSet(), CounterSet()
    assert select_latest_absolute(a[0], counters=c1) == select_latest_absolute(b[0], counters=c2)
    assert c1 == c2


def test_insertion_asymmetry():
    stream = [("A", 1), ("A", 2), ("B", 3), ("B", 4), ("A", 5)]
    ca, cd = CounterSet(), CounterSet()
    insert_absolute(Relation(Mode.ABSOLUTE), InsertBatch.of(stream), ca)
    insert_delta(Relation(Mode.DELTA), DeltaState(), InsertBatch.of(stream), counters=cd)
    assert ca.additions == 0
    assert cd.additions == 3  # non-first entries


def test_large_values_stay_exact():
    big = 2**62
    rel_abs, rel_delta, _ = build_both([("A", big), ("A", big + 1)])
    assert pairs(select_latest_delta(rel_delta)) == [("A", big + 1)]
    assert rel_delta.values.dtype == np.int64
