"""Command-line front end.

Exit codes: 0 success, 1 equivalence check failed, 2 usage or validation
error, 3 I/O error. Results are printed as ``key=value`` lines except for
the grade rows themselves.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from . import harness
from .chipsim import (
    DEFAULT_CAPACITY,
    FuzzyChip,
    build_rom,
    format_trace,
    run_inference,
    run_traced,
)
from .core import DEFAULT_ELEMENTS, infer
from .rulesetio import (
    parse_observations,
    parse_ruleset,
    rom_dump,
    rom_load,
    serialize_ruleset,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _grades(vector) -> str:
    return " ".join(map(str, vector))


def _load_rules(path: str):
    return parse_ruleset(Path(path).read_text(encoding="utf-8"))


def _load_inputs(path: str, rules):
    obs = parse_observations(Path(path).read_text(encoding="utf-8"), rules.universe_size)
    if len(obs) != rules.antecedent_count:
        raise ValueError(f"{path}: {len(obs)} observation rows, rule set has "
                         f"{rules.antecedent_count} antecedents")
    return obs


def cmd_run(args, out) -> int:
    rules = _load_rules(args.rules)
    obs = _load_inputs(args.input, rules)
    print(_grades(infer(rules, obs)), file=out)
    return EXIT_OK


def cmd_sim(args, out) -> int:
    rules = _load_rules(args.rules)
    obs = _load_inputs(args.input, rules)
    chip = FuzzyChip(build_rom(rules, args.capacity))
    if args.trace:
        result, trace = run_traced(chip, obs[0])
        Path(args.trace).write_text(format_trace(trace), encoding="utf-8")
        cycles = trace[-1].cycle
    else:
        result, cycles = run_inference(chip, obs[0])
    print(_grades(result), file=out)
    print(f"cycles={cycles}", file=out)
    return EXIT_OK


def _parse_corruption(text: str):
    module, _, index = text.partition(":")
    if module not in ("antecedent", "conclusion") or not index.isdigit():
        raise ValueError(f"corruption target must be MODULE:INDEX, got {text!r}")
    return module, int(index)


def cmd_check(args, out) -> int:
    rules = _load_rules(args.rules) if args.rules else None
    corrupt = _parse_corruption(args.corrupt_rom_bit) if args.corrupt_rom_bit else None
    report = harness.check_equivalence(
        args.trials, args.seed, rules=rules, elements=args.elements,
        rule_count=args.rule_count, capacity=args.capacity, workers=args.workers,
        corrupt=corrupt)
    for line in report.lines():
        print(line, file=out)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_bench(args, out) -> int:
    rng = harness.trial_rng(args.seed, 0)
    if args.rules:
        rules = _load_rules(args.rules)
    else:
        rules = harness.random_ruleset(rng, args.elements, args.capacity)
    if args.input:
        obs = _load_inputs(args.input, rules)[0]
    else:
        obs = harness.random_vector(rng, rules.universe_size)
    report = harness.bench(rules, obs, duration=args.duration, clock_hz=args.clock_hz,
                           capacity=args.capacity)
    for line in report.lines():
        print(line, file=out)
    return EXIT_OK


def cmd_romdump(args, out) -> int:
    image = build_rom(_load_rules(args.rules), args.capacity)
    data = rom_dump(image)
    Path(args.output).write_bytes(data)
    print(f"rules={image.rule_count}", file=out)
    print(f"elements={image.universe_size}", file=out)
    print(f"bits_per_rule={image.bits_per_rule}", file=out)
    print(f"bytes={len(data)}", file=out)
    return EXIT_OK


def cmd_romload(args, out) -> int:
    image = rom_load(Path(args.rom).read_bytes())
    text = serialize_ruleset(image.to_ruleset())
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"rules={image.rule_count}", file=out)
        print(f"elements={image.universe_size}", file=out)
    else:
        out.write(text)
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _duration(text: str) -> float:
    value = float(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"duration must be at least 1 second, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzychip",
        description="Min-max fuzzy inference golden model and bit-serial chip simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="golden-model inference")
    p.add_argument("--rules", required=True, help=".frs rule set")
    p.add_argument("--input", required=True, help="observation rows, one per antecedent")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sim", help="cycle-accurate chip simulation")
    p.add_argument("--rules", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--trace", help="write a per-cycle CSV trace here")
    p.add_argument("--capacity", type=int, default=DEFAULT_CAPACITY,
                   help="data paths on the chip (power of two, default 16)")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("check", help="golden model vs chip on seeded random trials")
    p.add_argument("--rules", help="fixed rule set; random rule sets per trial if omitted")
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--elements", type=int, default=DEFAULT_ELEMENTS)
    p.add_argument("--rule-count", type=int, default=DEFAULT_CAPACITY)
    p.add_argument("--capacity", type=int, default=DEFAULT_CAPACITY)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--corrupt-rom-bit", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="host throughput and simulated hardware FLIPS")
    p.add_argument("--rules", help="rule set; a seeded random one if omitted")
    p.add_argument("--input", help="observation; a seeded random one if omitted")
    p.add_argument("--duration", type=_duration, default=1.0,
                   help="seconds spent timing each model (>= 1)")
    p.add_argument("--clock-hz", type=_positive_int, default=harness.DEFAULT_CLOCK_HZ)
    p.add_argument("--elements", type=int, default=DEFAULT_ELEMENTS)
    p.add_argument("--capacity", type=int, default=DEFAULT_CAPACITY)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("romdump", help="pack a rule set into a FROM image")
    p.add_argument("--rules", required=True)
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--capacity", type=int, default=DEFAULT_CAPACITY)
    p.set_defaults(func=cmd_romdump)

    p = sub.add_parser("romload", help="unpack a FROM image back into .frs text")
    p.add_argument("--rom", required=True)
    p.add_argument("--output", "-o", help="write .frs here instead of stdout")
    p.set_defaults(func=cmd_romload)
    return parser


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except OSError as exc:
        print(f"fuzzychip: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"fuzzychip: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
