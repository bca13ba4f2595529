"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O or
format error (including engine and workload errors).
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
from typing import Sequence

from . import bench, engine, sqlgen
from .errors import DeltaSumError
from .model import CounterSet, Mode, Predicate
from .workload import DEFAULT_TIERS, LARGE_TIER, Order, WorkloadSpec, gen_dataset, load_relation, save_relation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY_FAILED = 2
EXIT_IO = 3

_EPOCH = dt.datetime(1970, 1, 1, tzinfo=dt.timezone.utc)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tiers(text: str) -> list[int]:
    try:
        tiers = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tier list {text!r}") from None
    if not tiers or any(t < 1 for t in tiers):
        raise argparse.ArgumentTypeError("tiers must be positive integers")
    return tiers


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="deltasum", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a seeded absolute relation")
    g.add_argument("--rows", type=_positive, required=True)
    g.add_argument("--classes", type=_positive, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--order", choices=[o.value for o in Order], default=Order.SHUFFLED.value)
    g.add_argument("--range-days", type=_positive, default=365)
    g.add_argument("--out", required=True)

    c = sub.add_parser("convert", help="convert a relation between storage modes")
    c.add_argument("--to", choices=["delta", "absolute"], required=True)
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--out", required=True)

    q = sub.add_parser("query", help="latest value per class")
    q.add_argument("--mode", choices=["control", "delta"], required=True)
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--class", dest="cls", action="append", metavar="LABEL")
    q.add_argument("--counters", action="store_true")

    v = sub.add_parser("verify", help="check delta selection against the control path and an oracle")
    v.add_argument("--rows", type=_positive, required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--classes", type=_positive, default=10)
    v.add_argument("--non-monotonic", action="store_true",
                   help="shuffled stream, enforcement off, compare against last-write")

    b = sub.add_parser("bench", help="run the experiment grid")
    b.add_argument("--tiers", type=_tiers, default=list(DEFAULT_TIERS))
    b.add_argument("--iterations", type=_positive, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--kinds", default=",".join(k.code for k in bench.ALL_KINDS),
                   help="comma-separated subset of CWP,CWOP,CI,DWP,DWOP,DI")
    b.add_argument("--literal-rescan", action="store_true")
    b.add_argument("--include-10m", action="store_true")
    b.add_argument("--order", choices=[o.value for o in Order], default=Order.SORTED.value)
    b.add_argument("--out", required=True)
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.add_argument("--quiet", action="store_true")

    e = sub.add_parser("emit-sql", help="print the SQL for one method/action")
    e.add_argument("--dialect", choices=[d.value for d in sqlgen.SqlDialect], required=True)
    e.add_argument("--method", choices=["control", "delta"], required=True)
    e.add_argument("--action", choices=["select", "insert"], required=True)
    e.add_argument("--table", required=True)
    e.add_argument("--class", dest="cls", metavar="LABEL")
    e.add_argument("--out")
    return p


def format_timestamp(micros: int) -> str:
    ts = _EPOCH + dt.timedelta(microseconds=micros)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _cmd_gen(args) -> int:
    spec = WorkloadSpec(args.seed, args.rows, args.classes, range_days=args.range_days)
    save_relation(gen_dataset(spec, args.order), args.out)
    return EXIT_OK


def _cmd_convert(args) -> int:
    if args.to == "delta":
        rel, _ = engine.convert_absolute_to_delta(load_relation(args.inp, Mode.ABSOLUTE))
    else:
        rel = engine.convert_delta_to_absolute(load_relation(args.inp, Mode.DELTA))
    save_relation(rel, args.out)
    return EXIT_OK


def _cmd_query(args) -> int:
    mode = Mode.ABSOLUTE if args.mode == "control" else Mode.DELTA
    rel = load_relation(args.inp, mode)
    pred = Predicate.of(*args.cls) if args.cls else Predicate()
    counters = CounterSet()
    select = engine.select_latest_absolute if mode is Mode.ABSOLUTE else engine.select_latest_delta
    for lv in select(rel, pred, counters):
        line = f"class={lv.cls} value_us={lv.value} timestamp={format_timestamp(lv.value)}"
        if lv.witness_pk is not None:
            line += f" witness_pk={lv.witness_pk}"
        print(line)
    if args.counters:
        print(counters.format_line())
    return EXIT_OK


def _last_write_oracle(stream) -> dict[str, int]:
    latest = {}
    for label, value in stream:
        latest[label] = value
    return latest


def _max_oracle(stream) -> dict[str, int]:
    best: dict[str, int] = {}
    for label, value in stream:
        if label not in best or value > best[label]:
            best[label] = value
    return best


def _cmd_verify(args) -> int:
    order = Order.SHUFFLED if args.non_monotonic else Order.SORTED
    cfg = engine.EngineConfig(enforce_monotonic=not args.non_monotonic)
    src = gen_dataset(WorkloadSpec(args.seed, args.rows, args.classes), order)
    stream = [(r.cls, r.value) for r in src.rows()]

    rel_abs, _ = engine.build_from_stream(stream, Mode.ABSOLUTE, src.manifest)
    rel_delta, state = engine.build_from_stream(stream, Mode.DELTA, src.manifest, cfg)
    c_abs, c_delta = CounterSet(), CounterSet()
    got_abs = {lv.cls: lv.value for lv in engine.select_latest_absolute(rel_abs, Predicate(), c_abs)}
    got_delta = {lv.cls: lv.value for lv in engine.select_latest_delta(rel_delta, Predicate(), c_delta)}

    checks = []
    if args.non_monotonic:
        checks.append(("delta == last-write oracle", got_delta == _last_write_oracle(stream)))
        checks.append(("control == max oracle", got_abs == _max_oracle(stream)))
    else:
        checks.append(("delta == control", got_delta == got_abs))
        checks.append(("control == max oracle", got_abs == _max_oracle(stream)))
    checks.append(("accumulators == latest", state.accumulators == _last_write_oracle(stream)))
    checks.append(("delta comparisons == 0", c_delta.comparisons == 0))
    checks.append(("delta additions == rows", c_delta.additions == len(stream)))
    bound = bench.lower_bound_comparisons(rel_abs, Predicate())
    checks.append(("control comparisons >= sum(n_k - 1)", c_abs.comparisons >= bound))

    for name, ok in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
    print(f"control {c_abs.format_line()}")
    print(f"delta   {c_delta.format_line()}")
    passed = all(ok for _, ok in checks)
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def _cmd_bench(args) -> int:
    tiers = list(args.tiers)
    if args.include_10m and LARGE_TIER not in tiers:
        tiers.append(LARGE_TIER)
    try:
        kinds = [bench.TestKind.parse(k) for k in args.kinds.split(",") if k.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    def progress(cell):
        if not args.quiet:
            status = cell.error or f"{len(cell.samples)} samples"
            print(f"{cell.tier:>10} {cell.kind.code:<5} {status}", file=sys.stderr)

    report = bench.run_experiment(
        tiers, kinds, args.iterations, args.seed, args.literal_rescan,
        order=args.order, progress=progress,
    )
    bench.emit_report(report, args.format, args.out)
    return EXIT_OK


def _cmd_emit_sql(args) -> int:
    text = sqlgen.emit_sql(args.dialect, args.method, args.action, args.table, args.cls)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "convert": _cmd_convert,
    "query": _cmd_query,
    "verify": _cmd_verify,
    "bench": _cmd_bench,
    "emit-sql": _cmd_emit_sql,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"deltasum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except sqlgen.InvalidIdentifier as exc:
        print(f"deltasum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DeltaSumError, OSError, KeyError, ValueError) as exc:
        print(f"deltasum: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
