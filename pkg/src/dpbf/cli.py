"""Command line interface.

Subcommands: build, query, union, intersect, bench, verify-dbf-bound.
Standard output stays machine-parseable (key=value lines, TSV or CSV);
diagnostics go to standard error.

Exit codes are stable:
  0  success
  1  malformed input line or invalid configuration
  2  element id outside the configured universe
  3  I/O failure or unreadable/corrupt filter file
  4  filter parameter mismatch on union/intersect
  5  dynamic-filter bound violated in verify-dbf-bound

Flags may also be supplied through a config file of `key = value` lines
(--config PATH); explicit flags win over file values.  The environment
variable DPBF_SEED supplies the default hash seed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .baselines import DynamicBloomFilter, fpr_lower_bound
from .bench import (SweepConfig, format_csv, generate_workload, sweep)
from .errors import (CorruptPayloadError, DpbfError, InvalidParameterError,
                     OutOfUniverseError, ParameterMismatchError)
from .tree import PartitionBloomFilter

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_OUT_OF_UNIVERSE = 2
EXIT_IO = 3
EXIT_PARAM_MISMATCH = 4
EXIT_BOUND_VIOLATED = 5


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; the CLI contract says 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_INPUT, f"{self.prog}: error: {message}\n")


def _fail(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


def _default_seed() -> int:
    raw = os.environ.get("DPBF_SEED", "0")
    try:
        return int(raw, 0)
    except ValueError:
        raise InvalidParameterError(f"DPBF_SEED is not an integer: {raw!r}")


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part]


def _name_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def read_id_file(path: str):
    """Yield (line_number, id) for each non-blank, non-comment line."""
    with open(path, "r", encoding="ascii") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            yield lineno, text


def _load_filter(path: str) -> PartitionBloomFilter:
    with open(path, "rb") as handle:
        return PartitionBloomFilter.from_bytes(handle.read())


def _apply_config_file(parser: argparse.ArgumentParser, args: list[str]) -> list[str]:
    """Fold --config file values in as parser defaults; flags win."""
    if "--config" not in args:
        return args
    idx = args.index("--config")
    if idx + 1 >= len(args):
        raise InvalidParameterError("--config needs a file path")
    path = args[idx + 1]
    remaining = args[:idx] + args[idx + 2:]
    by_dest = {}
    for action in parser._actions:
        by_dest[action.dest] = action
    overrides = {}
    with open(path, "r", encoding="ascii") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise InvalidParameterError(f"{path}:{lineno}: expected key = value")
            key, _, raw = text.partition("=")
            key = key.strip().replace("-", "_")
            raw = raw.strip()
            action = by_dest.get(key)
            if action is None:
                raise InvalidParameterError(f"{path}:{lineno}: unknown option {key!r}")
            overrides[key] = action.type(raw) if action.type else raw
    parser.set_defaults(**overrides)
    return remaining


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dpbf", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"dpbf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    build = sub.add_parser("build", help="build a partition filter from an id file")
    build.add_argument("--universe", type=int, required=True, help="universe size |U|")
    build.add_argument("--depth", type=int, required=True, help="partition tree depth")
    build.add_argument("--hashes", type=int, default=7, help="probes per element")
    build.add_argument("--fpr", type=float, default=0.01, help="target false positive rate")
    build.add_argument("--seed", type=int, default=None, help="hash seed (default: DPBF_SEED or 0)")
    build.add_argument("--input", required=True, help="one decimal id per line; # comments ok")
    build.add_argument("--out", required=True, help="output filter path")
    build.add_argument("--config", help="key = value defaults file")

    query = sub.add_parser("query", help="query ids against a stored filter")
    query.add_argument("--filter", required=True, help="filter file from build")
    query.add_argument("--keys", required=True, help="id file, same format as build input")
    query.add_argument("--config", help="key = value defaults file")

    for name, desc in (("union", "combine two filters (set union)"),
                       ("intersect", "combine two filters (set intersection)")):
        combine = sub.add_parser(name, help=desc)
        combine.add_argument("first", help="filter file A")
        combine.add_argument("second", help="filter file B")
        combine.add_argument("--out", required=True, help="output filter path")
        combine.add_argument("--config", help="key = value defaults file")

    bench = sub.add_parser("bench", help="run the comparison sweep, emit CSV")
    bench.add_argument("mode", choices=("fpr", "latency"))
    bench.add_argument("--structures", type=_name_list, default=["dpbf", "dbf", "sbf"])
    bench.add_argument("--sizes", type=_int_list, default=[100, 1000, 10_000, 100_000])
    bench.add_argument("--universe", type=int, default=1 << 24)
    bench.add_argument("--depth", type=int, default=14)
    bench.add_argument("--hashes", type=int, default=7)
    bench.add_argument("--fpr", type=float, default=0.01)
    bench.add_argument("--probes", type=int, default=1_000_000)
    bench.add_argument("--seeds", type=_int_list, default=[1, 2, 3])
    bench.add_argument("--hash-seed", type=int, default=None)
    bench.add_argument("--reps", type=int, default=1, help="timed passes per latency point")
    bench.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    bench.add_argument("--config", help="key = value defaults file")

    verify = sub.add_parser("verify-dbf-bound",
                            help="measure dynamic-filter FPR against its lower bound")
    verify.add_argument("--fpr", type=float, default=0.01)
    verify.add_argument("--alphas", type=_float_list, default=[4.0, 16.0, 64.0])
    verify.add_argument("--probes", type=int, default=1_000_000)
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--capacity", type=int, default=1024,
                        help="unit filter population target")
    verify.add_argument("--hashes", type=int, default=7)
    verify.add_argument("--universe", type=int, default=1 << 32,
                        help="id space the workload draws from")
    verify.add_argument("--config", help="key = value defaults file")
    return parser


def cmd_build(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        filt = PartitionBloomFilter(args.universe, args.depth, args.hashes,
                                    args.fpr, seed)
    except InvalidParameterError as exc:
        return _fail(EXIT_BAD_INPUT, f"invalid parameters: {exc}")
    try:
        for lineno, text in read_id_file(args.input):
            try:
                element = int(text)
            except ValueError:
                return _fail(EXIT_BAD_INPUT, f"{args.input}:{lineno}: not an id: {text!r}")
            try:
                filt.insert(element)
            except OutOfUniverseError as exc:
                return _fail(EXIT_OUT_OF_UNIVERSE, f"{args.input}:{lineno}: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.input}: {exc}")
    try:
        with open(args.out, "wb") as handle:
            handle.write(filt.to_bytes())
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
    stats = filt.stats()
    print(f"universe={filt.params.universe_size}")
    print(f"depth={filt.params.depth}")
    print(f"hashes={filt.params.hash_count}")
    print(f"target_fpr={filt.params.target_fpr!r}")
    print(f"bits_per_filter={filt.params.bits_per_filter}")
    print(f"target_population={filt.params.target_population}")
    print(f"map_units={stats.map_units}")
    print(f"tree_units={stats.tree_units}")
    print(f"total_bits={stats.total_bits}")
    print(f"max_unit_fpr={stats.max_unit_fpr!r}")
    return EXIT_OK


def cmd_query(args) -> int:
    try:
        filt = _load_filter(args.filter)
    except (OSError, CorruptPayloadError) as exc:
        return _fail(EXIT_IO, f"cannot load {args.filter}: {exc}")
    try:
        for lineno, text in read_id_file(args.keys):
            try:
                element = int(text)
            except ValueError:
                return _fail(EXIT_BAD_INPUT, f"{args.keys}:{lineno}: not an id: {text!r}")
            try:
                answer = filt.query(element)
            except OutOfUniverseError as exc:
                return _fail(EXIT_OUT_OF_UNIVERSE, f"{args.keys}:{lineno}: {exc}")
            print(f"{element}\t{'true' if answer else 'false'}")
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.keys}: {exc}")
    return EXIT_OK


def cmd_combine(args, op: str) -> int:
    try:
        first = _load_filter(args.first)
        second = _load_filter(args.second)
    except (OSError, CorruptPayloadError) as exc:
        return _fail(EXIT_IO, f"cannot load input filter: {exc}")
    try:
        combined = first.union(second) if op == "union" else first.intersection(second)
    except ParameterMismatchError as exc:
        return _fail(EXIT_PARAM_MISMATCH, f"incompatible filters: {exc}")
    try:
        with open(args.out, "wb") as handle:
            handle.write(combined.to_bytes())
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
    return EXIT_OK


def cmd_bench(args) -> int:
    hash_seed = args.hash_seed if args.hash_seed is not None else _default_seed()
    cfg = SweepConfig(
        structures=tuple(args.structures),
        sizes=tuple(args.sizes),
        universe_size=args.universe,
        depth=args.depth,
        hash_count=args.hashes,
        target_fpr=args.fpr,
        probe_count=args.probes,
        seeds=tuple(args.seeds),
        hash_seed=hash_seed,
        latency_repetitions=args.reps,
    )
    try:
        cfg.validate()
        records = sweep(cfg, mode=args.mode)
    except InvalidParameterError as exc:
        return _fail(EXIT_BAD_INPUT, f"invalid benchmark config: {exc}")
    text = format_csv(records)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w", encoding="ascii") as handle:
                handle.write(text)
        except OSError as exc:
            return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
    return EXIT_OK


def cmd_verify_dbf_bound(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.probes < 1 or args.capacity < 1:
        return _fail(EXIT_BAD_INPUT, "probes and capacity must be >= 1")
    ok = True
    for alpha in args.alphas:
        if alpha < 0:
            return _fail(EXIT_BAD_INPUT, f"alpha must be >= 0, got {alpha}")
        set_size = int(round(alpha * args.capacity))
        workload = generate_workload(seed, args.universe, set_size, args.probes)
        dbf = DynamicBloomFilter.for_unit_capacity(args.capacity, args.hashes,
                                                   args.fpr, seed)
        start = time.perf_counter_ns()
        for e in workload.member_set:
            dbf.insert(e)
        build_ms = (time.perf_counter_ns() - start) / 1e6
        false_positives = dbf.contains_batch(workload.probe_set)
        measured = false_positives / args.probes
        bound = fpr_lower_bound(set_size, dbf.target_population, args.fpr)
        theoretical = dbf.theoretical_fpr()
        point_ok = measured >= 0.7 * bound and theoretical >= bound
        ok = ok and point_ok
        print(f"alpha={alpha!r}\tset_size={set_size}\tmeasured={measured!r}\t"
              f"bound={bound!r}\ttheoretical={theoretical!r}\t"
              f"build_ms={build_ms!r}\tok={'true' if point_ok else 'false'}")
    if not ok:
        return _fail(EXIT_BOUND_VIOLATED,
                     "measured or theoretical FPR fell below the lower bound")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        # config files apply per subcommand; peek at the subparser in use
        if argv and "--config" in argv:
            sub_actions = [a for a in parser._actions
                           if isinstance(a, argparse._SubParsersAction)]
            choices = sub_actions[0].choices if sub_actions else {}
            command = argv[0] if argv and argv[0] in choices else None
            if command is not None:
                argv = [command] + _apply_config_file(choices[command], argv[1:])
        args = parser.parse_args(argv)
    except InvalidParameterError as exc:
        return _fail(EXIT_BAD_INPUT, f"invalid config: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read config file: {exc}")

    try:
        if args.command == "build":
            return cmd_build(args)
        if args.command == "query":
            return cmd_query(args)
        if args.command in ("union", "intersect"):
            return cmd_combine(args, args.command)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "verify-dbf-bound":
            return cmd_verify_dbf_bound(args)
    except InvalidParameterError as exc:
        return _fail(EXIT_BAD_INPUT, f"invalid parameters: {exc}")
    except DpbfError as exc:
        return _fail(EXIT_BAD_INPUT, str(exc))
    return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
