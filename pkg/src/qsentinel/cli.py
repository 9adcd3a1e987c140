"""``qsentinel`` command-line interface.

Exit codes: 0 success, 1 internal error, 2 usage or input error,
3 total collapse (cascade), 4 quorum-condition violation.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import __version__, _kernels
from . import report
from .generators import KINDS, load_fixture, parse_gen_spec
from .graph import DEFAULT_DAMPING, DEFAULT_MAX_ITER, DEFAULT_TOL
from .model import NetworkSnapshot, SnapshotError, load_snapshot
from .quorums import EnumerationLimitError, check_quorum_conditions
from .resilience import DEFAULT_K_MAX, cascade, compile_network, compute_ft, scan_subsets

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_COLLAPSE, EXIT_QUORUM = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _id_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def load_input(args) -> NetworkSnapshot:
    if bool(args.input) == bool(args.gen):
        raise UsageError("give exactly one of --input PATH or --gen KIND:N")
    if args.input:
        return load_snapshot(args.input)
    if args.gen.strip() == "fixture":
        return load_fixture()
    return parse_gen_spec(args.gen)


def cmd_rank(args) -> tuple[int, str]:
    snap = load_input(args)
    pr, nr, rows = report.rank_rows(snap, args.damping, args.tol, args.max_iter, args.sort)
    return EXIT_OK, report.render_rank(pr, nr, rows, args.format, args.sort)


def cmd_cascade(args) -> tuple[int, str]:
    snap = load_input(args)
    res = cascade(snap, args.fail)
    code = EXIT_COLLAPSE if res.collapsed else EXIT_OK
    return code, report.render_cascade(snap, res, args.format)


def cmd_scan(args) -> tuple[int, str]:
    net = compile_network(load_input(args))
    rows = scan_subsets(net, args.k, args.min_failure)
    meta = {"k": args.k, "min_failure": args.min_failure, "pool_size": len(net.pool),
            "n_declaring": net.n_declaring}
    return EXIT_OK, report.render_scan(rows, args.format, meta)


def cmd_ft(args) -> tuple[int, str]:
    rep = compute_ft(load_input(args), args.k_max, args.method, args.breaking_ratio)
    return EXIT_OK, report.render_ft(rep, args.format)


def cmd_check_quorum(args) -> tuple[int, str]:
    rep = check_quorum_conditions(load_input(args), args.malicious, args.n_limit)
    return (EXIT_OK if rep.ok else EXIT_QUORUM), report.render_quorum(rep, args.format)


def cmd_gen(args) -> tuple[int, str]:
    if args.kind is not None:
        if args.gen or args.input:
            raise UsageError("give the topology either positionally or with --gen")
        if args.n is None and args.kind != "fixture":
            raise UsageError("gen needs KIND and N")
        args.gen = args.kind if args.n is None else f"{args.kind}:{args.n}"
    return EXIT_OK, load_input(args).dumps()


def cmd_reproduce(args) -> tuple[int, str]:
    from .reproduce import build_report
    return EXIT_OK, build_report(k_max=args.k_max)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", metavar="PATH", help="snapshot JSON file")
    p.add_argument("--gen", metavar="KIND:N",
                   help=f"generated topology ({', '.join(KINDS)}) or 'fixture'")
    p.add_argument("--format", choices=report.FORMATS, default="table")
    p.add_argument("--output", metavar="PATH", help="write the result here instead of stdout")
    p.add_argument("--quiet", action="store_true", help="suppress the run header line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsentinel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qsentinel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="PageRank and NodeRank per validator")
    _common(p)
    p.add_argument("--damping", type=float, default=DEFAULT_DAMPING)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--sort", choices=("nr", "pr"), default="nr")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("cascade", help="cascading failure after failing given validators")
    _common(p)
    p.add_argument("--fail", type=_id_list, default=[], metavar="ID1,ID2,...")
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("scan", help="cascade every k-subset of active validators")
    _common(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--min-failure", type=float, default=90.0)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("ft", help="(f, x) fault-tolerance number")
    _common(p)
    p.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    p.add_argument("--method", choices=("auto", "exhaustive", "analytic"), default="auto")
    p.add_argument("--breaking-ratio", type=float, default=100.0,
                   help="failure ratio (%%) that counts as a broken system")
    p.set_defaults(func=cmd_ft)

    p = sub.add_parser("check-quorum", help="quorum intersection and availability")
    _common(p)
    p.add_argument("--malicious", type=_id_list, default=[], metavar="ID1,ID2,...")
    p.add_argument("--n-limit", type=int, default=None,
                   help="cap on slice-declaring validators (default 20 or $QSENTINEL_N_LIMIT)")
    p.set_defaults(func=cmd_check_quorum)

    p = sub.add_parser("gen", help="write a generated snapshot as JSON")
    _common(p)
    p.add_argument("kind", nargs="?", help=f"{', '.join(KINDS)} or fixture")
    p.add_argument("n", nargs="?", type=int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("reproduce", help="markdown report over the fixture and generators")
    _common(p)
    p.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.quiet:
        source = args.input or args.gen or "-"
        print(f"# qsentinel {__version__} {args.command} source={source} "
              f"backend={_kernels.ACTIVE.name}", file=sys.stderr)
    try:
        code, body = args.func(args)
    except (UsageError, SnapshotError, EnumerationLimitError, KeyError, ValueError,
            OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"qsentinel: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"qsentinel: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)
        sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
