"""Command-line entry point.

Subcommands::

    embed       single-measure pipeline
    refembed    reference-measure pipeline
    select-ref  pivoted Gram-Schmidt reference selection to an index file
    check       run the quantitative validation checks

Exit codes: 0 success, 1 input error (or a failed check), 2 convergence
error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import BistochasticError, InputError
from .geometry import build_kernel_matrix, median_bandwidth
from .io import ingest_csv, write_csv, write_points
from .pipeline import demo_cloud, load_config, run_pipeline
from .refselect import pivoted_gram_schmidt

log = logging.getLogger("bistochastic")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--data", type=Path, help="CSV of data points, one per row")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="seed for demo data (overrides config)")
    p.add_argument("--demo", choices=["rectangle", "disc", "circle"],
                   help="sample demo data instead of reading --data")
    p.add_argument("--eps", type=float, help="kernel bandwidth (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bistochastic",
        description="Bi-stochastic diffusion embeddings and eigenfunction gradients.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    embed = sub.add_parser("embed", help="single-measure pipeline")
    _common(embed)

    ref = sub.add_parser("refembed", help="reference-measure pipeline")
    _common(ref)
    ref.add_argument("--reference", type=Path, help="CSV of reference points")

    sel = sub.add_parser("select-ref", help="pivoted Gram-Schmidt reference selection")
    _common(sel)
    sel.add_argument("-m", type=int, required=True, help="number of reference points")

    check = sub.add_parser("check", help="run the quantitative validation checks")
    check.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def _load(args, mode: str):
    # The subcommand decides the mode; a config file's own mode key is overridden.
    overrides = dict(mode=mode, out=args.out, seed=args.seed, demo=args.demo, eps=args.eps)
    if mode == "reference" and getattr(args, "reference", None) is not None:
        overrides["reference_source"] = "file"
    cfg = load_config(args.config, **overrides)
    data = ingest_csv(args.data) if args.data is not None else None
    return cfg, data


def cmd_embed(args) -> int:
    cfg, data = _load(args, "single")
    result = run_pipeline(cfg, data)
    print(f"wrote {len(result.files)} files to {result.out}")
    return 0


def cmd_refembed(args) -> int:
    cfg, data = _load(args, "reference")
    reference = ingest_csv(args.reference) if args.reference is not None else None
    result = run_pipeline(cfg, data, reference)
    print(f"wrote {len(result.files)} files to {result.out}")
    return 0


def cmd_select_ref(args) -> int:
    cfg = load_config(args.config, out=args.out, seed=args.seed, demo=args.demo, eps=args.eps)
    data = ingest_csv(args.data) if args.data is not None else None
    if data is None:
        if cfg.demo is None:
            raise InputError("no data given and no demo selected")
        data = demo_cloud(cfg)
    eps = cfg.eps if cfg.eps is not None else median_bandwidth(data, cfg.eps_scale)
    selection = pivoted_gram_schmidt(build_kernel_matrix(data, data, eps), args.m)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "reference_indices.csv", ["index"], selection.indices[:, None])
    write_points(out / "reference.csv", data.subset(selection.indices))
    print(f"selected {args.m} reference points into {out}")
    return 0


def cmd_check(args) -> int:
    from .checks import CHECKS, run_checks

    numbers = None
    if args.only:
        try:
            numbers = [int(s) for s in args.only.split(",")]
        except ValueError as exc:
            raise InputError(f"bad --only list {args.only!r}") from exc
        unknown = [n for n in numbers if n not in CHECKS]
        if unknown:
            raise InputError(f"unknown criteria {unknown}")
    results = run_checks(numbers)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


COMMANDS = {
    "embed": cmd_embed,
    "refembed": cmd_refembed,
    "select-ref": cmd_select_ref,
    "check": cmd_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except BistochasticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
