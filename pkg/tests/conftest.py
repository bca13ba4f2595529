import pytest

from deltasum.engine import DeltaState, InsertBatch, insert_absolute, insert_delta
from deltasum.model import Manifest, Mode, Relation


def last_write(stream):
    latest = {}
    for label, value in stream:
        latest[label] = value
    return latest


def brute_max(rows):
    """(class -> (value, pk)) maximum with ties to the higher pk, by plain iteration."""
    best = {}
    for pk, label, value in rows:
        if label not in best or (value, pk) > best[label]:
            best[label] = (value, pk)
    return best


def abs_rel(*rows, alphabet=None):
    manifest = Manifest(tuple(alphabet)) if alphabet else Manifest()
    return Relation.from_rows(rows, Mode.ABSOLUTE, manifest)


def delta_rel(*rows, alphabet=None):
    manifest = Manifest(tuple(alphabet)) if alphabet else Manifest()
    return Relation.from_rows(rows, Mode.DELTA, manifest)


def build_both(stream, cfg=None):
    kwargs = {} if cfg is None else {"cfg": cfg}
    batch = InsertBatch.of(stream)
    rel_abs = insert_absolute(Relation(Mode.ABSOLUTE), batch)
    rel_delta, state = insert_delta(Relation(Mode.DELTA), DeltaState(), batch, **kwargs)
    return rel_abs, rel_delta, state


@pytest.fixture
def empty_abs():
    return Relation(Mode.ABSOLUTE)


@pytest.fixture
def empty_delta():
    return Relation(Mode.DELTA)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
