"""Command-line interface: ``snmark <command> ...``.

Exit codes: 0 success or device identified, 1 usage/I-O error,
2 valid run whose verdict is negative.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .attacks import AttackSpec
from .bench import TABLE1_ATTACKS, run_bench
from .bitplane import BIT_DEPTH, embed, extract, generate_key, load_key, save_key
from .cs import (
    DENSITIES,
    SolverParams,
    cs_sample,
    read_measurements,
    tv_reconstruct,
    write_measurements,
)
from .errors import SnmarkError
from .metrics import format_psnr, psnr
from .pgm import logo_to_image, read_image, write_image
from .registry import Registry, load_registry, verify_source
from .serial import LogoSpec, parse_serial_hex, serial_to_logo, tile_logo

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _planes(text: str) -> List[int]:
    try:
        planes = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    bad = [p for p in planes if not 0 <= p < BIT_DEPTH]
    if bad:
        raise argparse.ArgumentTypeError(f"bit plane(s) {bad} outside 0..{BIT_DEPTH - 1}")
    if len(set(planes)) != len(planes):
        raise argparse.ArgumentTypeError(f"bit planes must be distinct, got {planes}")
    return planes


def _dims(text: str):
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}")
    if rows <= 0 or cols <= 0:
        raise argparse.ArgumentTypeError(f"dimensions must be positive, got {text!r}")
    return rows, cols


def _logo(text: str) -> LogoSpec:
    try:
        return LogoSpec.from_text(text)
    except SnmarkError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _attack(text: str) -> AttackSpec:
    try:
        return AttackSpec.parse(text)
    except SnmarkError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _solver_args(p: argparse.ArgumentParser) -> None:
    d = SolverParams()
    g = p.add_argument_group("TV solver")
    g.add_argument("--mu", type=float, default=d.mu, help="data-term weight")
    g.add_argument("--lam", type=float, default=d.lam, help="TV weight")
    g.add_argument("--max-iter", type=int, default=d.max_iter)
    g.add_argument("--tol", type=float, default=d.tol, help="relative objective decrease to stop at")
    g.add_argument("--eps", type=float, default=d.eps, help="TV smoothing (intensity units)")
    g.add_argument("--penalized", action="store_true",
                   help="treat the data term as a soft penalty instead of a hard constraint")


def _solver(args) -> SolverParams:
    return SolverParams(mu=args.mu, lam=args.lam, max_iter=args.max_iter, tol=args.tol,
                        eps=args.eps, constrained=not args.penalized)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="snmark", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"snmark {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("keygen", help="write a watermark key file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--planes", type=_planes, default=None, help="e.g. 2,3,4,5 (plane 0 = LSB)")
    p.add_argument("--logo", type=_logo, default=LogoSpec(), help="BLOCKxBLOCK,GRIDxGRID, default 8x8,4x8")
    p.add_argument("--dims", type=_dims, default=(512, 512), help="image ROWSxCOLS")
    p.add_argument("--out", required=True)

    p = sub.add_parser("embed", help="embed a serial number into an image")
    p.add_argument("image")
    p.add_argument("--sn", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--logo-out", help="also write the tiled binary logo as PGM")

    p = sub.add_parser("extract", help="extract the four corner serial numbers")
    p.add_argument("image")
    p.add_argument("--key", required=True)
    p.add_argument("--sn", help="reference serial number for error counts")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--logo-dir", help="write the four extracted logos as PGM files here")

    p = sub.add_parser("verify", help="match an extraction report against a registry")
    p.add_argument("report")
    p.add_argument("--registry", required=True)
    p.add_argument("--report-format", choices=("table", "structured"), default="table")

    p = sub.add_parser("transport", help="DCT-sample an image into a measurement file")
    p.add_argument("image")
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", choices=DENSITIES, default="variable")
    p.add_argument("--binary", action="store_true", help="binary instead of text records")
    p.add_argument("--out", required=True)

    p = sub.add_parser("reconstruct", help="TV reconstruction from a measurement file")
    p.add_argument("measurements")
    p.add_argument("--out", required=True)
    p.add_argument("--reference", help="original image; prints reconstruction PSNR")
    _solver_args(p)

    p = sub.add_parser("attack", help="apply one attack, e.g. jpeg:quality=10")
    p.add_argument("image")
    p.add_argument("--attack", type=_attack, required=True)
    p.add_argument("--out", required=True)
    _solver_args(p)

    p = sub.add_parser("bench", help="embed, attack, extract and verify; print a report")
    p.add_argument("image", help="cover image")
    p.add_argument("--sn", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--registry", required=True)
    p.add_argument("--attack", type=_attack, action="append",
                   help="repeatable; defaults to the eight-attack table")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report-format", choices=("table", "structured"), default="table")
    p.add_argument("--out", help="also write the report here")
    _solver_args(p)
    return parser


def _load_key_for(path, image):
    key = load_key(path)
    if key.shape != image.shape:
        raise SnmarkError(f"key is for {key.shape[0]}x{key.shape[1]} images, "
                          f"image is {image.shape[0]}x{image.shape[1]}")
    return key


def cmd_keygen(args) -> int:
    key = generate_key(args.seed, args.layers, args.planes, args.logo, args.dims)
    key.footprints()
    save_key(key, args.out)
    print(f"wrote key: L={key.layer_count}, planes={list(key.planes)}, "
          f"thresholds={list(key.thresholds)}")
    return EXIT_OK


def cmd_embed(args) -> int:
    image = read_image(args.image)
    key = _load_key_for(args.key, image)
    sn = parse_serial_hex(args.sn)
    tiled = tile_logo(serial_to_logo(sn, key.logo_spec), *image.shape)
    marked = embed(image, tiled, key)
    write_image(marked, args.out)
    if args.logo_out:
        write_image(logo_to_image(tiled.pixels), args.logo_out)
    print(f"embedded {sn.hex} ({sn.grouped()}); PSNR {format_psnr(psnr(image, marked))} dB")
    return EXIT_OK


def cmd_extract(args) -> int:
    image = read_image(args.image)
    key = _load_key_for(args.key, image)
    ref = parse_serial_hex(args.sn) if args.sn else None
    report = extract(image, key, reference=ref)
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    if args.logo_dir:
        out = Path(args.logo_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, corner in zip(report.CORNER_NAMES, report.corners):
            write_image(logo_to_image(corner.logo), out / f"{name}.pgm")
    print(text)
    return EXIT_OK


def _read_candidates(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        raw = [c["candidate"] for c in data["corners"]]
    except (json.JSONDecodeError, KeyError, TypeError):
        raise SnmarkError(f"{path}: not an extraction report") from None
    return [parse_serial_hex(c) if c else None for c in raw]


def cmd_verify(args) -> int:
    verdict = verify_source(_read_candidates(args.report), load_registry(args.registry))
    if args.report_format == "structured":
        print(json.dumps(verdict.to_dict(), indent=2))
    else:
        state = "identified" if verdict.identified else "NOT identified"
        device = verdict.device.device_id if verdict.device else "-"
        print(f"{state} device={device} matching_corners={verdict.matching_corners}")
        print("candidates: " + " ".join(c.hex if c else "--------" for c in verdict.candidates))
    return EXIT_OK if verdict.identified else EXIT_NEGATIVE


def cmd_transport(args) -> int:
    image = read_image(args.image)
    meas = cs_sample(image.astype(np.float64), args.ratio, args.seed, args.density)
    write_measurements(meas, args.out, binary=args.binary)
    print(f"kept {meas.mask.count} of {image.size} DCT coefficients")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    meas = read_measurements(args.measurements)
    rec = tv_reconstruct(meas, _solver(args))
    out = rec.export()
    write_image(out, args.out)
    flag = "" if rec.converged else " (not converged)"
    print(f"{rec.iterations} iterations, {rec.status}{flag}; data residual {rec.residual:.3g}")
    if args.reference:
        print(f"PSNR {format_psnr(psnr(read_image(args.reference), out))} dB")
    return EXIT_OK


def cmd_attack(args) -> int:
    image = read_image(args.image)
    out = args.attack.apply(image, _solver(args))
    write_image(out, args.out)
    print(f"{args.attack}: PSNR {format_psnr(psnr(image, out))} dB")
    return EXIT_OK


def cmd_bench(args) -> int:
    image = read_image(args.image)
    key = _load_key_for(args.key, image)
    registry = load_registry(args.registry)
    report = run_bench(image, parse_serial_hex(args.sn), key, registry,
                       args.attack or TABLE1_ATTACKS, _solver(args), args.workers)
    text = report.to_json() if args.report_format == "structured" else report.to_table()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


COMMANDS = {
    "keygen": cmd_keygen,
    "embed": cmd_embed,
    "extract": cmd_extract,
    "verify": cmd_verify,
    "transport": cmd_transport,
    "reconstruct": cmd_reconstruct,
    "attack": cmd_attack,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return EXIT_ERROR if exc.code is None else int(exc.code)
    try:
        return COMMANDS[args.command](args)
    except (SnmarkError, OSError) as exc:
        print(f"snmark {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
