"""Command-line entry point: ``upbqkd {bases,reduced,bound,session,attack}``.

JSON goes to stdout (or ``--out``); a one-line-per-check summary goes to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report


def _common(p: argparse.ArgumentParser, seeded: bool = False) -> None:
    if seeded:
        p.add_argument("--seed", type=int, default=0, help="unsigned 64-bit master seed")
    p.add_argument("--out", type=Path, help="write JSON here instead of stdout")
    p.add_argument("--strict", dest="strict", action="store_true", default=True,
                   help="exit nonzero if any check fails (default)")
    p.add_argument("--no-strict", dest="strict", action="store_false")
    p.add_argument("--json-indent", type=int, default=2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="upbqkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("bases", help="export the bases, constants and structural checks"))
    _common(sub.add_parser("reduced", help="verify the reduced-state table"))

    p = sub.add_parser("bound", help="unambiguous-discrimination bound for an ensemble")
    p.add_argument("--ensemble", choices=["ten-state", "tiles-9"], default="ten-state")
    p.add_argument("--states-file", type=Path, help="JSON ensemble file (overrides --ensemble)")
    _common(p)

    p = sub.add_parser("session", help="run a protocol session")
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--sample-fraction", type=float, default=0.2)
    p.add_argument("--adversary", choices=["none", "ir", "blinding", "memory"], default="none")
    p.add_argument("--key-encoding", choices=["symbols", "bits"], default="symbols")
    p.add_argument("--no-transcript", dest="transcript", action="store_false")
    _common(p, seeded=True)

    p = sub.add_parser("attack", help="exact and Monte Carlo evaluation of an attack")
    p.add_argument("--strategy", choices=["ir", "blinding", "memory"], required=True)
    p.add_argument("--trials", type=int, default=100_000)
    _common(p, seeded=True)
    return parser


def run(args: argparse.Namespace) -> report.ReportDocument:
    if args.command == "bases":
        return report.cmd_bases()
    if args.command == "reduced":
        return report.cmd_reduced()
    if args.command == "bound":
        return report.cmd_bound(args.ensemble, args.states_file)
    if args.command == "session":
        return report.cmd_session(
            args.rounds, args.seed, args.sample_fraction, args.adversary, args.key_encoding, args.transcript
        )
    return report.cmd_attack(args.strategy, args.trials, args.seed)


def _short(x) -> str:
    x = report._plain(x)
    return f"{x:.10g}" if isinstance(x, float) else repr(x)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = run(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    text = doc.dumps(args.json_indent if args.json_indent >= 0 else None) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    for c in doc.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: actual={_short(c.actual)}", file=sys.stderr)
    for c in doc.comparisons:
        flag = "agrees" if c.passed else "DEVIATES"
        print(f"[{flag}] {c.name}: published={_short(c.expected)} exact={_short(c.actual)}", file=sys.stderr)
    if args.strict and not doc.passed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
