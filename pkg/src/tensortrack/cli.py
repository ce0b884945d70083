"""Command line front end.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numerical
failure (non-finite values in a result).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import ConfigError, load_config
from .cten import CtenFormatError, read_cten, write_cten
from .experiment import (
    NumericalError,
    recompute_metrics,
    run_experiment,
    write_mask_csv,
    write_metrics_csv,
)
from .observation import variable_density_rows
from .synth import PhantomSpec, gen_lowrank_stream, gen_phantom

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


def _add_run_parser(sub, name, help_text):
    p = sub.add_parser(name, help=help_text)
    p.add_argument("--input", required=True, help="input CTEN tensor")
    p.add_argument("--outdir", required=True, help="artifact directory")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensortrack",
        description="Streaming tensor-subspace tracking and adaptive sampling for dynamic MRI",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic ground-truth tensor")
    p.add_argument("--kind", choices=["phantom", "lowrank"], required=True)
    p.add_argument("--out", required=True, help="output CTEN path")
    p.add_argument("--n1", type=int, default=64)
    p.add_argument("--n2", type=int, default=64)
    p.add_argument("--frames", type=int, default=120)
    p.add_argument("--rank", type=int, default=5, help="latent rank (lowrank kind)")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--row-decay", type=float, default=0.0)
    p.add_argument("--kspace", action="store_true", help="store the DFT of each frame")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("mask", help="variable-density Cartesian row masks")
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--alpha", type=float, default=-1.0)
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output mask CSV")

    _add_run_parser(sub, "track", "single-pass streaming reconstruction")
    _add_run_parser(sub, "batch", "multi-epoch batch reconstruction")
    _add_run_parser(sub, "adaptive", "score-driven adaptive acquisition")
    _add_run_parser(sub, "baseline", "differential compressed-sensing baseline")

    p = sub.add_parser("metrics", help="recompute NMSE/SSIM between two tensors")
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--out", required=True, help="output metrics CSV")
    p.add_argument("--domain", choices=["kspace", "direct"], default="kspace")

    p = sub.add_parser("report", help="render figures from a run directory")
    p.add_argument("--run-dir", required=True)
    return parser


def _cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "phantom":
        spec = PhantomSpec(n1=args.n1, n2=args.n2, frames=args.frames)
        tensor = gen_phantom(spec)
    else:
        tensor, _, _ = gen_lowrank_stream(
            (args.n1, args.n2), args.rank, args.frames, args.noise_sigma, rng,
            row_decay=args.row_decay,
        )
    if args.kspace:
        tensor = np.fft.fft2(tensor, axes=(0, 1), norm="ortho")
    write_cten(args.out, tensor)
    print(f"wrote {args.out} ({args.n1}x{args.n2}x{args.frames})")
    return EXIT_OK


def _cmd_mask(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    for t in range(args.frames):
        for i in np.sort(variable_density_rows(args.n1, args.alpha, args.fraction, rng)):
            rows.append((t, int(i)))
    write_mask_csv(args.out, rows)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_run(args, mode) -> int:
    config = load_config(args.config, overrides={"seed": args.seed})
    manifest = run_experiment(config, args.input, args.outdir, mode)
    print(f"{mode}: mean NMSE {manifest['mean_nmse']:.4g} -> {args.outdir}")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    truth = read_cten(args.truth)
    estimate = read_cten(args.estimate)
    rows = recompute_metrics(truth, estimate, domain=args.domain)
    write_metrics_csv(args.out, rows)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    from .report import render_run

    written = render_run(args.run_dir)
    for path in written:
        print(f"wrote {path}")
    if not written:
        print(f"no renderable CSVs in {args.run_dir}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "mask":
            return _cmd_mask(args)
        if args.command in ("track", "batch", "adaptive", "baseline"):
            return _cmd_run(args, args.command)
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "report":
            return _cmd_report(args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CtenFormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
