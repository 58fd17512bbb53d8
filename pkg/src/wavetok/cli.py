"""Command line entry point: ``wavetok <subcommand> ...``.

Exit codes: 0 success, 1 data or shape error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import color
from .analysis import cost, quality, rank
from .image_io import load_image, read_tensor, save_image, write_tensor
from .pipeline import (
    PixelSpaceEmbedding,
    TokenizerConfig,
    channel_counts,
    detokenize_planes,
    sparsity_stats,
    tokenize,
)
from .projection import (
    allocate_embedding_sizes,
    init_projection,
    load_projection,
    project,
    save_projection,
)
from .wavelet import FAMILIES


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _level(text: str) -> int:
    v = _positive_int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"level must be >= 2, got {v}")
    return v


def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"truncation must be in [0, 1), got {v}")
    return v


def _probability(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"p must be in (0, 1], got {v}")
    return v


def _non_negative(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {v}")
    return v


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _emit(doc: dict, path: str | None = None):
    text = json.dumps({k: _json_value(v) for k, v in doc.items()}, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _stats_doc(w: PixelSpaceEmbedding, cfg: TokenizerConfig, zero_tol: float, psnr_db=None) -> dict:
    density = sparsity_stats(w, zero_tol)
    return {
        "level": cfg.level,
        "family": cfg.family,
        "truncation_percent": cfg.truncation_percent,
        "tokens": w.grid * w.grid,
        "channels": w.channels,
        "per_level_density": {str(k): v for k, v in density.items()},
        "psnr_db": psnr_db,
    }


def cmd_tokenize(args) -> int:
    img = load_image(args.image)
    if img.height != img.width:
        raise ValueError(f"image must be square, got {img.height}x{img.width}")
    cfg = TokenizerConfig(args.family, args.level, args.truncation, img.height, args.detail_only)
    w = tokenize(img, cfg)
    write_tensor(w.data, args.out)
    planes = detokenize_planes(w, cfg)
    psnr_db = quality.psnr(color.from_planes(planes), img)
    _emit(_stats_doc(w, cfg, args.zero_tol, psnr_db), args.stats)
    return 0


def _embedding_from_file(path, level=None) -> PixelSpaceEmbedding:
    return PixelSpaceEmbedding.from_array(read_tensor(path), level)


def cmd_reconstruct(args) -> int:
    w = _embedding_from_file(args.tensor, args.level)
    cfg = TokenizerConfig(args.family, w.level, 0.0, w.grid * 2 ** w.level)
    planes = detokenize_planes(w, cfg)
    img = color.from_planes(planes)
    save_image(img, args.out)
    doc = {"out": args.out, "resolution": cfg.resolution, "psnr_db": None, "y_psnr_db": None}
    if args.reference:
        ref = load_image(args.reference)
        if (ref.height, ref.width) != (cfg.resolution, cfg.resolution):
            raise ValueError(
                f"reference is {ref.height}x{ref.width}, reconstruction is "
                f"{cfg.resolution}x{cfg.resolution}"
            )
        ref_y = color.rgb_to_ycbcr(ref)[0]
        doc["psnr_db"] = quality.psnr(img, ref)
        doc["y_psnr_db"] = quality.psnr(planes.y, ref_y)
    _emit(doc, args.stats)
    return 0


def cmd_project(args) -> int:
    w = _embedding_from_file(args.tensor)
    if args.manifest:
        q = load_projection(args.manifest)
        if q.level != w.level:
            raise ValueError(f"manifest is for level {q.level}, embedding is level {w.level}")
    else:
        c_k = channel_counts(w.level)
        density = sparsity_stats(w)
        p_k = [density[s.level] for s in w.segments]
        multiple = 128 if args.multiple_of_128 else None
        h_k = allocate_embedding_sizes(c_k, p_k, args.hidden, multiple_of=multiple)
        q = init_projection(h_k, c_k, args.init)
        proj_dir = args.projection_dir or os.path.dirname(os.path.abspath(args.out))
        stem = os.path.splitext(os.path.basename(args.out))[0] + "_projection"
        args.manifest = save_projection(q, proj_dir, stem)
    e = project(w, q)
    write_tensor(e.data, args.out)
    _emit({
        "out": args.out,
        "dims": list(e.data.shape),
        "level": w.level,
        "C_k": q.in_sizes,
        "H_k": q.out_sizes,
        "manifest": args.manifest,
    })
    return 0


def cmd_cost(args) -> int:
    params = None
    if args.vit:
        vit = cost.preset(args.vit)
        T = args.T or vit.tokens
        H = args.H or vit.H
        d_model = args.d_model or vit.d_model
        d_ff = args.d_ff or vit.d_ff
        params = cost.vit_param_count(vit)
    else:
        T, H, d_model, d_ff = args.T, args.H, args.d_model, args.d_ff
    report = cost.transformer_layer_flops(T, H, d_model, d_ff)
    if args.json:
        doc = report.to_dict()
        if args.vit:
            doc.update(vit=args.vit, params=params, params_m=params / 1e6)
        _emit(doc)
    else:
        print(cost.format_table(report, params))
    return 0


def cmd_verify(args) -> int:
    if args.prop == "prop1":
        res = rank.verify_prop1(args.m, args.n, args.p, args.samples, args.seed, args.trials,
                                shared_support=not args.independent)
    else:
        res = rank.verify_prop2(args.hk, args.ck, args.p, args.samples, args.seed, args.trials,
                                shared_support=not args.independent)
    doc = res.to_dict()
    doc["proposition"] = args.prop
    _emit(doc)
    return 0


def cmd_stats(args) -> int:
    w = _embedding_from_file(args.tensor, args.level)
    density = sparsity_stats(w, args.zero_tol)
    _emit({
        "level": w.level,
        "tokens": w.grid * w.grid,
        "channels": w.channels,
        "zero_tol": args.zero_tol,
        "per_level_density": {str(k): v for k, v in density.items()},
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavetok", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="image -> pixel-space embedding tensor")
    p.add_argument("image")
    p.add_argument("--out", required=True, help="output WVTK tensor")
    p.add_argument("--stats", help="also write the stats JSON here")
    p.add_argument("--family", choices=FAMILIES, default="db1")
    p.add_argument("--level", type=_level, default=4)
    p.add_argument("--truncation", type=_fraction, default=0.8)
    p.add_argument("--detail-only", action="store_true",
                   help="never zero the coarse Y/Cb/Cr channels")
    p.add_argument("--zero-tol", type=_non_negative, default=0.0)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("reconstruct", help="embedding tensor -> image")
    p.add_argument("tensor")
    p.add_argument("--out", required=True, help="output .png or .ppm")
    p.add_argument("--family", choices=FAMILIES, default="db1")
    p.add_argument("--level", type=_level, help="expected level (inferred from channels)")
    p.add_argument("--reference", help="image to compute PSNR against")
    p.add_argument("--stats", help="also write the PSNR JSON here")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("project", help="pixel-space -> semantic embedding")
    p.add_argument("tensor")
    p.add_argument("--out", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="projection manifest JSON")
    src.add_argument("--init", type=int, metavar="SEED", help="initialise a new projection")
    p.add_argument("--hidden", "-H", type=_positive_int, help="total embedding size H (with --init)")
    p.add_argument("--projection-dir", help="where --init writes the manifest and blocks")
    p.add_argument("--multiple-of-128", action="store_true", help="require H %% 128 == 0")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("cost", help="per-layer op counts, ratio r and parameter count")
    p.add_argument("T", type=_positive_int, nargs="?")
    p.add_argument("H", type=_positive_int, nargs="?")
    p.add_argument("d_model", type=_positive_int, nargs="?")
    p.add_argument("d_ff", type=_positive_int, nargs="?")
    p.add_argument("--vit", choices=sorted(cost.PRESETS), help="tokenizer/model preset")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("verify", help="Monte-Carlo rank experiments")
    p.add_argument("prop", choices=["prop1", "prop2"])
    p.add_argument("--m", type=_positive_int, default=60)
    p.add_argument("--n", type=_positive_int, default=50)
    p.add_argument("--hk", type=_positive_int, default=16)
    p.add_argument("--ck", type=_positive_int, default=100)
    p.add_argument("--p", type=_probability, default=0.4)
    p.add_argument("--samples", type=_positive_int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=_positive_int, default=10)
    p.add_argument("--independent", action="store_true",
                   help="draw a fresh support per sample instead of one shared support")
    p.add_argument("--json", action="store_true", help="accepted for symmetry; output is JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="per-level density of an embedding tensor")
    p.add_argument("tensor")
    p.add_argument("--level", type=_level)
    p.add_argument("--zero-tol", type=_non_negative, default=0.0)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "cost" and not args.vit and None in (args.T, args.H, args.d_model, args.d_ff):
        parser.error("cost needs T H d_model d_ff unless --vit is given")
    if args.command == "project" and args.init is not None and args.hidden is None:
        parser.error("project --init needs --hidden")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"wavetok {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
