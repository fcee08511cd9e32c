"""``qentropy`` command line: ``sweep``, ``check`` and ``preset``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .checks import DEFAULT_SUITES, SUITES, run_checks
from .sweep import (
    FORMATS,
    PRESET_DISTRIBUTIONS,
    PRESETS,
    SpecError,
    SweepFailure,
    build_manifest,
    load_spec,
    macrospin_histograms,
    preset_spec,
    render,
    resolve_threads,
    run_sweep,
    write_output,
)
from .tfim import DEFAULT_QUAD_NODES

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _common(p: argparse.ArgumentParser, fmt_default: str | None = "csv") -> None:
    p.add_argument("--format", choices=FORMATS, default=fmt_default)
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--threads", type=_positive_int, help="worker threads (overrides QENTROPY_THREADS)")
    p.add_argument("--quad-nodes", type=_positive_int, help="Gauss-Legendre nodes for TFIM integrals")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qentropy", description="Entropy production and its splittings.")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run a sweep described by a JSON config file")
    sw.add_argument("config", type=Path)
    _common(sw, fmt_default=None)

    ck = sub.add_parser("check", help="run seeded property suites on random protocols")
    ck.add_argument(
        "--suite",
        action="append",
        choices=sorted(SUITES),
        help=f"repeatable; default: {', '.join(DEFAULT_SUITES)}",
    )
    _common(ck, fmt_default="json")

    pr = sub.add_parser("preset", help="emit a built-in dataset (fig1..fig6)")
    pr.add_argument("name", choices=sorted(PRESETS))
    _common(pr)
    return parser


def _sweep(args, spec) -> int:
    if args.quad_nodes is not None:
        spec.quad_nodes = args.quad_nodes
    if args.format is not None:
        spec.format = args.format
    spec.validate()
    threads = resolve_threads(args.threads, spec.threads)
    result = run_sweep(spec, threads=threads, seed=args.seed)
    write_output(render(result.columns, result.rows, spec.format), result.manifest, args.out)
    return EXIT_OK


def _preset(args) -> int:
    spec = preset_spec(args.name, args.format, args.quad_nodes or DEFAULT_QUAD_NODES)
    code = _sweep(args, spec)
    if args.name in PRESET_DISTRIBUTIONS:
        t0 = time.perf_counter()
        cols, rows = macrospin_histograms(PRESET_DISTRIBUTIONS[args.name])
        manifest = build_manifest(
            {"preset": args.name, "distributions": list(PRESET_DISTRIBUTIONS[args.name])},
            args.seed,
            time.perf_counter() - t0,
            1,
        )
        text = render(cols, rows, args.format)
        out = None if args.out is None else args.out.with_name(f"{args.out.stem}.distributions{args.out.suffix}")
        if out is None:
            sys.stdout.write("\n")
        write_output(text, manifest, out)
    return code


def _check(args) -> int:
    suites = tuple(args.suite) if args.suite else DEFAULT_SUITES
    t0 = time.perf_counter()
    results = run_checks(suites, seed=args.seed)
    records = [r.as_dict() for r in results]
    if args.format == "json":
        text = json.dumps({"seed": args.seed, "results": records}, indent=1) + "\n"
    else:
        cols = list(records[0])
        text = render(cols, [[str(r[c]) if not isinstance(r[c], float) else r[c] for c in cols] for r in records], "csv")
    manifest = build_manifest({"suites": list(suites)}, args.seed, time.perf_counter() - t0, 1)
    write_output(text, manifest, args.out)
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAIL {r.suite}: {r.invariant} (worst {r.worst:.3g}) {r.detail}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return _sweep(args, load_spec(args.config))
        if args.command == "preset":
            return _preset(args)
        return _check(args)
    except SpecError as e:
        print(f"qentropy: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SweepFailure as e:
        print(f"qentropy: failure: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
