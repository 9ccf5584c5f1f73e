"""Command line front end.

Subcommands: noise, denoise, aggregate, tune, bench, dataset.  Exit codes:
0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aggregate import CobraParams, aggregate_with_bank
from .bench import (DEFAULT_CROP, ExperimentSpec, MixedNoiseLayout, build_dataset, corrupt,
                    default_noise_suite, load_split, run_autotune_demo, run_experiment)
from .config import load_config, restrict_bank_entries
from .filters import bank_from_config
from .image import ImageIOError, load_image, save_image
from .metrics import write_csv
from .noise import NOISE_KINDS, NoiseSpec
from .tune import evaluate_params, grid_search


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_common(p: _Parser) -> None:
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="output file or directory")


def build_parser() -> _Parser:
    parser = _Parser(prog="cobra-denoise",
                     description="Consensus-weighted aggregation of denoising filters")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("noise", help="corrupt an image with a seeded generator")
    p.add_argument("input")
    _add_common(p)
    p.add_argument("--kind", required=True, choices=NOISE_KINDS + ("mixed",))
    p.add_argument("--mu", type=float, help="gaussian mean, 0..255 scale")
    p.add_argument("--sigma", type=float, help="gaussian stddev, 0..255 scale")
    p.add_argument("--ratio", type=float, help="salt fraction of replaced pixels")
    p.add_argument("--amount", type=float, help="fraction of pixels replaced")
    p.add_argument("--peak", type=float, help="poisson peak photon count")
    p.add_argument("--variance", type=float, help="speckle variance")
    p.add_argument("--n-patches", type=int, help="number of suppressed patches")
    p.add_argument("--patch-w", type=int, help="suppressed patch width")
    p.add_argument("--patch-h", type=int, help="suppressed patch height")
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("denoise", help="apply one filter from the bank")
    p.add_argument("input")
    _add_common(p)
    p.add_argument("--filter", required=True, dest="filter_name",
                   help="name of the bank filter to apply")
    p.set_defaults(func=_cmd_denoise)

    p = sub.add_parser("aggregate", help="denoise by consensus aggregation of the bank")
    p.add_argument("input")
    _add_common(p)
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("tune", help="grid-search epsilon/alpha on a dataset manifest")
    p.add_argument("--manifest", required=True, help="manifest.json from the dataset command")
    _add_common(p)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("bench", help="run the benchmark experiment")
    p.add_argument("--clean", nargs="+", required=True, help="clean image file(s)")
    _add_common(p)
    p.add_argument("--known-noise", action="store_true",
                   help="restrict the bank to filters suited to the configured noise")
    p.add_argument("--full-size", action="store_true", help="skip the desk-scale center crop")
    p.add_argument("--crop", type=int, default=DEFAULT_CROP, help="center crop size")
    p.add_argument("--autotune-sizes", type=int, nargs="+",
                   help="run the median autotune demo with these window sizes instead")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("dataset", help="build noisy datasets with tune/eval copies")
    p.add_argument("--clean", nargs="+", required=True, help="clean image file(s)")
    _add_common(p)
    p.add_argument("--kinds", help="comma-separated noise kinds (default: all five)")
    p.add_argument("--full-size", action="store_true", help="skip the desk-scale center crop")
    p.add_argument("--crop", type=int, default=DEFAULT_CROP, help="center crop size")
    p.set_defaults(func=_cmd_dataset)

    return parser


def _require_out(args) -> Path:
    if not args.out:
        raise _UsageError("--out is required for this command")
    return Path(args.out)


def _noise_from_flags(args) -> NoiseSpec | MixedNoiseLayout:
    seed = args.seed if args.seed is not None else 0
    if args.kind == "mixed":
        return MixedNoiseLayout(seed=seed)
    flag_to_param = {
        "gaussian": {"mu": "mu", "sigma": "sigma"},
        "salt_pepper": {"ratio": "sp_ratio", "amount": "sp_amount"},
        "poisson": {"peak": "peak"},
        "speckle": {"variance": "variance"},
        "patch_suppression": {"n_patches": "n_patches", "patch_w": "patch_w", "patch_h": "patch_h"},
    }[args.kind]
    params = {}
    for flag, param in flag_to_param.items():
        value = getattr(args, flag)
        if value is not None:
            params[param] = value
    return NoiseSpec(kind=args.kind, params=params, seed=seed)


def _cmd_noise(args) -> int:
    out = _require_out(args)
    img = load_image(args.input)
    noise = _noise_from_flags(args)
    noisy = corrupt(img, noise, noise.seed)
    save_image(noisy, out)
    print(f"wrote {out}")
    return 0


def _cmd_denoise(args) -> int:
    out = _require_out(args)
    cfg = load_config(args.config)
    img = load_image(args.input)
    bank = bank_from_config(cfg.bank_entries, input_stem=Path(args.input).stem)
    by_name = {f.name: f for f in bank.filters}
    if args.filter_name not in by_name:
        raise ValueError(f"no filter named {args.filter_name!r} in bank {sorted(by_name)}")
    save_image(by_name[args.filter_name].apply(img), out)
    print(f"wrote {out}")
    return 0


def _cmd_aggregate(args) -> int:
    out = _require_out(args)
    cfg = load_config(args.config)
    if isinstance(cfg.cobra, str):
        raise ValueError("aggregate needs fixed cobra parameters; "
                         "run tune first and put the result in the config")
    img = load_image(args.input)
    bank = bank_from_config(cfg.bank_entries, input_stem=Path(args.input).stem)
    save_image(aggregate_with_bank(img, bank, cfg.cobra), out)
    print(f"wrote {out}")
    return 0


def _cmd_tune(args) -> int:
    cfg = load_config(args.config)
    manifest_path = Path(args.manifest)
    manifest = json.loads(manifest_path.read_text())
    root = manifest_path.parent
    kinds = []
    for entry in manifest["entries"]:
        kind = entry["noise"]["kind"]
        if kind not in kinds:
            kinds.append(kind)
    bank = bank_from_config(cfg.bank_entries)
    out_dir = Path(args.out) if args.out else None
    tuned: dict[str, dict] = {}
    grid_rows = []
    eval_rows = []
    for kind in kinds:
        split = load_split(manifest, root, noise_kind=kind)
        result = grid_search(split, bank, cfg.grid)
        tuned[kind] = result.best.to_json()
        print(f"{kind}: best {result.best.to_json()} ({result.objective} over "
              f"{len(split.tune_pairs)} tuning pairs)")
        for point in result.table:
            grid_rows.append((kind, point.epsilon, str(point.alpha), point.score))
        if split.eval_pairs:
            for row in evaluate_params(result.best, split.eval_pairs, bank):
                eval_rows.append((kind, row.pair_id, row.scores))
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "tuned_params.json").write_text(json.dumps(tuned, indent=2) + "\n")
        with open(out_dir / "grid_scores.csv", "w") as fh:
            fh.write("noise,epsilon,alpha,score\n")
            for kind, eps, alpha, score in grid_rows:
                fh.write(f"{kind},{eps!r},{alpha},{score!r}\n")
        with open(out_dir / "eval_scores.csv", "w") as fh:
            fh.write("noise,pair,mae,rmse,psnr,uqi\n")
            for kind, pair_id, s in eval_rows:
                fh.write(f"{kind},{pair_id},{s.mae!r},{s.rmse!r},{s.psnr!r},{s.uqi!r}\n")
        print(f"wrote {out_dir / 'tuned_params.json'}")
    return 0


def _cmd_bench(args) -> int:
    out = _require_out(args)
    cfg = load_config(args.config)
    master_seed = args.seed if args.seed is not None else cfg.master_seed
    crop = None if args.full_size else args.crop
    entries = cfg.bank_entries
    if args.known_noise:
        entries = restrict_bank_entries(entries, cfg.noise.kind, cfg.known_noise_banks)
    if args.autotune_sizes:
        clean_name, clean = Path(args.clean[0]).stem, load_image(args.clean[0])
        from .image import crop_center

        if crop:
            clean = crop_center(clean, crop)
        noise = cfg.noise
        if isinstance(noise, MixedNoiseLayout):
            raise ValueError("the autotune demo needs a single-generator noise spec")
        cobra = cfg.cobra if not isinstance(cfg.cobra, str) else CobraParams()
        rows = run_autotune_demo(clean, noise, list(args.autotune_sizes), cobra, output_dir=out)
        print(f"wrote autotune report for {clean_name} to {out}")
        return 0
    stem = Path(args.clean[0]).stem if len(args.clean) == 1 else None
    bank = bank_from_config(entries, input_stem=stem)
    spec = ExperimentSpec(
        clean_images=list(args.clean),
        noise=cfg.noise,
        bank=bank,
        cobra=cfg.cobra,
        repetitions=cfg.repetitions,
        output_dir=out,
        master_seed=master_seed,
        crop=crop,
        grid=cfg.grid,
    )
    result = run_experiment(spec)
    print(f"noise {result.noise_name}: cobra params {result.params.to_json()}")
    print(f"wrote {result.outputs.get('csv')} and {result.outputs.get('markdown')}")
    return 0


def _cmd_dataset(args) -> int:
    out = _require_out(args)
    cfg = load_config(args.config)
    master_seed = args.seed if args.seed is not None else cfg.master_seed
    crop = None if args.full_size else args.crop
    if args.kinds:
        kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
        specs = [NoiseSpec(kind=k) for k in kinds]
    else:
        specs = default_noise_suite()
    manifest = build_dataset(list(args.clean), specs, master_seed, out, crop=crop)
    print(f"wrote {len(manifest['entries'])} noisy images (+2 copies each) to {out}")
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    """Parse and dispatch; returns the process exit code."""
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return int(args.func(args) or 0)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, ImageIOError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
