"""Command-line interface exposing every pipeline stage.

One executable with subcommands: basis, analyze, synthesize, transform,
train, dehaze, evaluate, gradcheck. Identical arguments and seed reproduce
identical outputs; a JSON echo of the resolved configuration is written
beside every file a command produces.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .color import rgb_to_ycbcr
from .dataio import load_image, load_manifest, save_image
from .haze import DEPTH_KINDS, HazeScene, dcp_dehaze, make_depth, synthesize_haze
from .krawtchouk import BASIS_SIZE, KrawtchoukParams, basis_set
from .metrics import MetricReport, psnr, ssim
from .nn.gradcheck import run_standard_checks
from .nn.generator import GeneratorConfig
from .nn.losses import FeatureBank, LossWeights
from .nn.training import LOSS_CSV_HEADER, ModelState, run_training
from .pipeline import dehaze_rgb
from .transform import band_energy_stats, ikcl_exact, kcl_apply, BandStats

SEED_ENV_VAR = "KRAWTEX_SEED"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV_VAR, "0"))


def _write_config_echo(out_path: Path, args: argparse.Namespace) -> None:
    payload = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    payload = {k: (str(v) if isinstance(v, Path) else v) for k, v in payload.items()}
    payload["version"] = __version__
    echo_path = out_path.with_name(out_path.name + ".config.json")
    echo_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _parse_airlight(text: str) -> np.ndarray:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ValueError(f"airlight needs 1 or 3 comma-separated values, got {text!r}")
    return np.array(parts)


def _matched_pairs(dir_a: Path, dir_b: Path) -> list[tuple[Path, Path]]:
    exts = {".png", ".ppm", ".pgm", ".pnm"}
    names_a = {p.name for p in dir_a.iterdir() if p.suffix.lower() in exts}
    names_b = {p.name for p in dir_b.iterdir() if p.suffix.lower() in exts}
    common = sorted(names_a & names_b)
    if not common:
        raise ValueError(f"no matching image names between {dir_a} and {dir_b}")
    return [(dir_a / name, dir_b / name) for name in common]


def cmd_basis(args: argparse.Namespace) -> int:
    basis = basis_set(KrawtchoukParams(p=args.p, size=BASIS_SIZE))
    header = "index,i,j," + ",".join(f"v{r}{c}" for r in range(8) for c in range(8))
    lines = [header]
    for k, (i, j) in enumerate(basis.order):
        values = ",".join(f"{v:.17g}" for v in basis.filters[k].reshape(-1))
        lines.append(f"{k},{i},{j},{values}")
    args.out.write_text("\n".join(lines) + "\n")
    _write_config_echo(args.out, args)
    print(f"wrote {len(basis.order)} basis filters to {args.out}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    basis = basis_set(KrawtchoukParams(p=args.p, size=BASIS_SIZE))
    pairs = _matched_pairs(args.hazy_dir, args.clear_dir)
    sum_abs_hazy = np.zeros(64)
    sum_abs_clear = np.zeros(64)
    sum_diff = np.zeros(64)
    total = 0
    for hazy_path, clear_path in pairs:
        hazy_y = rgb_to_ycbcr(load_image(hazy_path)).y
        clear_y = rgb_to_ycbcr(load_image(clear_path)).y
        hazy_cube = kcl_apply(hazy_y, basis, mode=args.mode)
        clear_cube = kcl_apply(clear_y, basis, mode=args.mode)
        npix = hazy_cube.maps.shape[1] * hazy_cube.maps.shape[2]
        stats = band_energy_stats(hazy_cube, clear_cube)
        sum_abs_hazy += stats.mean_abs_hazy * npix
        sum_abs_clear += stats.mean_abs_clear * npix
        sum_diff += stats.mean_diff * npix
        total += npix
    lines = [BandStats.CSV_HEADER]
    for k, (i, j) in enumerate(basis.order):
        lines.append(
            f"{k},{i},{j},{sum_abs_hazy[k] / total:.17g},"
            f"{sum_abs_clear[k] / total:.17g},{sum_diff[k] / total:.17g}"
        )
    args.out.write_text("\n".join(lines) + "\n")
    _write_config_echo(args.out, args)
    print(f"analyzed {len(pairs)} pairs -> {args.out}")
    return 0


def cmd_synthesize(args: argparse.Namespace) -> int:
    clear = load_image(args.clear)
    if args.depth is not None:
        depth_img = load_image(args.depth)
        depth = depth_img.channels.mean(axis=0)
        if depth.shape != clear.shape:
            raise ValueError(
                f"depth shape {depth.shape} does not match clear image {clear.shape}"
            )
    else:
        depth = make_depth(clear.shape, kind=args.depth_kind, seed=args.seed)
    scene = HazeScene(
        clear=clear,
        depth=depth * args.depth_max,
        beta=args.beta,
        airlight=_parse_airlight(args.airlight),
    )
    save_image(synthesize_haze(scene), args.out)
    _write_config_echo(args.out, args)
    print(f"synthesized hazy image -> {args.out}")
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    from .transform import reflect_pad_to_multiple

    basis = basis_set(KrawtchoukParams(p=args.p, size=BASIS_SIZE))
    image = load_image(args.input)
    worst = 0.0
    parseval_worst = 0.0
    for channel in image.channels:
        cube = kcl_apply(channel, basis, mode="block")
        restored = ikcl_exact(cube, basis)
        worst = max(worst, float(np.max(np.abs(restored - channel))))
        padded = reflect_pad_to_multiple(channel, BASIS_SIZE)
        parseval_worst = max(
            parseval_worst, abs(float(np.sum(cube.maps**2) - np.sum(padded**2)))
        )
    print(f"roundtrip_max_error={worst:.3e}")
    print(f"parseval_abs_error={parseval_worst:.3e}")
    if args.roundtrip and worst >= 1e-8:
        raise RuntimeError(f"roundtrip error {worst:.3e} exceeds 1e-8")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    manifest = load_manifest(
        args.manifest,
        seed=args.seed,
        patch_size=args.patch,
        patches_per_image=args.patches_per_image,
    )
    config = GeneratorConfig(split_point=args.split_point, scale=args.scale, p=args.p)
    weights = LossWeights(
        feature=args.w_feature, smooth_l1=args.w_l1, mse=args.w_mse, gan=args.w_gan
    )
    bank = FeatureBank.load(args.feature_bank) if args.feature_bank else None
    state = ModelState.create(config, seed=args.seed, lr=args.lr, weights=weights, bank=bank)
    records = run_training(manifest, state, epochs=args.epochs, batch_size=args.batch)
    state.save(args.out)
    loss_log = args.loss_log or args.out.with_suffix(".loss.csv")
    loss_log.write_text(
        "\n".join([LOSS_CSV_HEADER] + [r.csv_row() for r in records]) + "\n"
    )
    _write_config_echo(args.out, args)
    first, last = records[0], records[-1]
    print(
        f"trained {len(records)} steps; smooth_l1 {first.loss_l1:.5f} -> {last.loss_l1:.5f}; "
        f"checkpoint {args.out}"
    )
    return 0


def cmd_dehaze(args: argparse.Namespace) -> int:
    image = load_image(args.input)
    if args.baseline == "dcp":
        result = dcp_dehaze(image, t0=args.t0, patch_size=args.patch_size)
    else:
        if args.model is None:
            raise ValueError("--model is required unless --baseline dcp is given")
        state = ModelState.load(args.model)
        result = dehaze_rgb(image, state.generator)
    save_image(result, args.out)
    _write_config_echo(args.out, args)
    print(f"dehazed {args.input} -> {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    pairs = _matched_pairs(args.pred_dir, args.gt_dir)
    names, psnrs, ssims = [], [], []
    for pred_path, gt_path in pairs:
        pred = load_image(pred_path)
        gt = load_image(gt_path)
        pred_y = rgb_to_ycbcr(pred).y if pred.num_channels == 3 else pred.channels[0]
        gt_y = rgb_to_ycbcr(gt).y if gt.num_channels == 3 else gt.channels[0]
        if args.y_only:
            psnrs.append(psnr(pred_y, gt_y))
        else:
            psnrs.append(psnr(pred.channels, gt.channels))
        ssims.append(ssim(pred_y, gt_y))
        names.append(pred_path.name)
    report = MetricReport(names=names, psnr_db=psnrs, ssim=ssims)
    args.out.write_text("\n".join([MetricReport.CSV_HEADER] + report.csv_rows()) + "\n")
    _write_config_echo(args.out, args)
    print(f"mean psnr {report.mean_psnr:.3f} dB, mean ssim {report.mean_ssim:.4f} -> {args.out}")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    results = run_standard_checks(scale=args.scale, size=args.size, seed=args.seed)
    failed = 0
    for res in results:
        status = "ok" if res.ok else "FAIL"
        print(
            f"check={res.name} max_rel_err={res.max_rel_err:.3e} "
            f"threshold={res.threshold:.0e} status={status}"
        )
        failed += not res.ok
    if failed:
        raise RuntimeError(f"{failed} gradient checks failed")
    print(f"all {len(results)} gradient checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krawtex",
        description="Krawtchouk transform-domain image dehazing toolkit",
    )
    parser.add_argument("--version", action="version", version=f"krawtex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--seed", type=int, default=_default_seed(),
            help=f"rng seed (default: ${SEED_ENV_VAR} or 0)",
        )

    p = sub.add_parser("basis", help="dump the 64 basis filters as CSV")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("analyze", help="per-band statistics over a hazy/clear directory pair")
    p.add_argument("--hazy-dir", type=Path, required=True)
    p.add_argument("--clear-dir", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--mode", choices=("block", "sliding"), default="sliding")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="render a hazy image from a clear one")
    p.add_argument("--clear", type=Path, required=True)
    p.add_argument("--depth", type=Path, default=None, help="grayscale depth image")
    p.add_argument("--depth-max", type=float, default=1.0)
    p.add_argument("--depth-kind", choices=DEPTH_KINDS, default="ramp",
                   help="synthetic depth when --depth is not given")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--airlight", type=str, required=True, help="A or A_r,A_g,A_b")
    p.add_argument("--out", type=Path, required=True)
    add_seed(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("transform", help="block transform roundtrip diagnostics")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--roundtrip", action="store_true",
                   help="fail unless max roundtrip error < 1e-8")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("train", help="train the two-branch generator")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="checkpoint path")
    p.add_argument("--loss-log", type=Path, default=None)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=15)
    p.add_argument("--patch", type=int, default=128)
    p.add_argument("--patches-per-image", type=int, default=1)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--split-point", "-T", type=int, default=60)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--w-feature", type=float, default=0.5)
    p.add_argument("--w-l1", type=float, default=1.0)
    p.add_argument("--w-mse", type=float, default=0.04)
    p.add_argument("--w-gan", type=float, default=0.05)
    p.add_argument("--feature-bank", type=Path, default=None,
                   help="optional .npz with external feature extractor weights")
    add_seed(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("dehaze", help="dehaze an image with a checkpoint or the DCP baseline")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--baseline", choices=("dcp",), default=None)
    p.add_argument("--t0", type=float, default=0.1, help="dcp transmission floor")
    p.add_argument("--patch-size", type=int, default=15, help="dcp dark-channel window")
    p.set_defaults(func=cmd_dehaze)

    p = sub.add_parser("evaluate", help="PSNR/SSIM over a prediction/ground-truth directory pair")
    p.add_argument("--pred-dir", type=Path, required=True)
    p.add_argument("--gt-dir", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--y-only", action="store_true", help="PSNR on luma instead of RGB")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="finite-difference verification of all layer kinds")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--size", type=int, default=16)
    add_seed(p)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single machine-readable error line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
