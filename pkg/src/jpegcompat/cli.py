"""Command line entry point: ``jpegcompat <command> [options]``.

Commands: ``verify-block``, ``incompat-rate``, ``payload-detect``, ``timing``.
Exit status 0 on success, 1 on usage errors, 2 on I/O errors and 3 when an
internal consistency check fails.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .experiments import (
    ExperimentConfig,
    InvariantError,
    SourceExhausted,
    cmd_incompat_rate,
    cmd_payload_detect,
    cmd_timing,
    cmd_verify_block,
    read_quant_file,
    rows_to_csv,
    write_rows,
)
from .feasibility import Budget
from .images import PgmError
from .transform import BlockShape

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _shape(text):
    try:
        return BlockShape.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _float_list(text):
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one number")
    return vals


def _range(text):
    vals = _float_list(text.replace(":", " "))
    if len(vals) == 1:
        return (vals[0], vals[0])
    if len(vals) == 2:
        return (vals[0], vals[1])
    raise argparse.ArgumentTypeError("expected a number or a LOW:HIGH range")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jpegcompat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed_required=True):
        sp.add_argument("--shape", type=_shape, default=BlockShape(6, 6), help="block shape NxM")
        sp.add_argument("--quant", type=Path, help="text file with n*m quantization integers")
        sp.add_argument("--seed", type=int, required=seed_required)
        sp.add_argument("--budget-nodes", type=int)
        sp.add_argument("--budget-seconds", type=float)
        sp.add_argument("--out", type=Path, help="result file (.csv or .json)")

    v = sub.add_parser("verify-block", help="decide a single block")
    common(v, seed_required=False)
    g = v.add_mutually_exclusive_group(required=True)
    g.add_argument("--pixels", type=_int_list, help="pixel values, row-major")
    g.add_argument("--coeffs", type=_int_list, help="quantized DCT coefficients, row-major")
    g.add_argument("--input", type=Path, help="file with 'pixels' or 'coeffs' then the integers")
    v.add_argument("--all", action="store_true", help="also list every antecedent (small blocks)")

    for name, help_, payload, size, samples, smooth, noise, contrast in (
        ("incompat-rate", "incompatibility rate after p random changes", 0.0, 64, 1000,
         "1.5", "3", "200"),
        ("payload-detect", "embed at a payload and count incompatible blocks", 0.01, 256, 100,
         "1:8", "0:1.5", "10:200"),
        ("timing", "unsolved-ratio feature and P_E against the budget", 0.2, 16, 50,
         "1.5", "3", "200"),
    ):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--samples", type=int, default=samples,
                        help="blocks per point (incompat-rate) or images")
        sp.add_argument("--payload", type=float, default=payload, help="bits per non-zero AC")
        sp.add_argument("--input-dir", type=Path, help="directory of P5 PGM images")
        sp.add_argument("--image-size", type=int, default=size)
        sp.add_argument("--smoothness", type=_range, default=_range(smooth),
                        help="synthetic filter width, a number or LOW:HIGH")
        sp.add_argument("--noise", type=_range, default=_range(noise),
                        help="synthetic sensor-noise std, a number or LOW:HIGH")
        sp.add_argument("--contrast", type=_range, default=_range(contrast),
                        help="synthetic gray-level span, a number or LOW:HIGH")
        if name == "incompat-rate":
            sp.add_argument("--max-changes", type=int, default=6)
        if name == "timing":
            sp.add_argument("--budgets", type=_float_list, default=[30, 300, 3000, 30000],
                            help="ascending budgets (nodes, or seconds with --seconds)")
            sp.add_argument("--seconds", action="store_true",
                            help="interpret --budgets as wall-clock seconds per block")
    return p


def _read_block_file(path: Path):
    tokens = path.read_text(encoding="utf-8").split()
    if not tokens or tokens[0] not in ("pixels", "coeffs"):
        raise UsageError(f"{path}: first token must be 'pixels' or 'coeffs'")
    try:
        return tokens[0], [int(t) for t in tokens[1:]]
    except ValueError:
        raise UsageError(f"{path}: values must be integers") from None


def _config(args) -> ExperimentConfig:
    quant = read_quant_file(args.quant, args.shape) if args.quant else None
    kw = dict(
        seed=args.seed, shape=args.shape, quant=quant, samples=args.samples,
        budget_nodes=args.budget_nodes, budget_seconds=args.budget_seconds,
        payload=args.payload, input_dir=args.input_dir, out=args.out,
        image_size=args.image_size, smoothness=args.smoothness, noise=args.noise,
        contrast=args.contrast,
    )
    if args.command == "incompat-rate":
        kw["max_changes"] = args.max_changes
    if args.command == "timing":
        b = args.budgets
        if any(y < x for x, y in zip(b, b[1:])):
            raise UsageError("--budgets must be ascending")
        if args.seconds:
            kw.update(budgets=b, timing_in_seconds=True)
        else:
            if any(x != int(x) or x < 1 for x in b):
                raise UsageError("node budgets must be positive integers")
            kw["budgets"] = [int(x) for x in b]
    return ExperimentConfig(**kw)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify-block":
            quant = read_quant_file(args.quant, args.shape) if args.quant else None
            if args.input is not None:
                kind, values = _read_block_file(args.input)
            elif args.pixels is not None:
                kind, values = "pixels", args.pixels
            else:
                kind, values = "coeffs", args.coeffs
            if len(values) != args.shape.size:
                raise UsageError(f"{len(values)} values given, shape {args.shape} needs {args.shape.size}")
            budget = None
            if args.budget_nodes is not None or args.budget_seconds is not None:
                budget = Budget(args.budget_nodes, args.budget_seconds)
            text, rows = cmd_verify_block(np.array(values), args.shape, quant, kind, budget,
                                          enumerate_all=args.all)
            sys.stdout.write(text)
        else:
            cfg = _config(args)
            driver = {"incompat-rate": cmd_incompat_rate, "payload-detect": cmd_payload_detect,
                      "timing": cmd_timing}[args.command]
            rows = driver(cfg)
            if args.out is None:
                sys.stdout.write(rows_to_csv(rows))
        if args.out is not None:
            write_rows(rows, args.out)
    except (OSError, PgmError, SourceExhausted) as exc:
        print(f"jpegcompat: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"jpegcompat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"jpegcompat: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
