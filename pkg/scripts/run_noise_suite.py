"""Benchmark the aggregate against the full bank on the five standard corruptions.

One experiment per noise kind: seeded corruptions of a clean scene, every
bank filter, and the consensus aggregate with grid-searched (epsilon, alpha).
Scores land in --out as scores__<kind>.csv plus a markdown report and the
first repetition's images.

    python3 scripts/run_noise_suite.py --out results/suite
    python3 scripts/run_noise_suite.py --known-noise --reps 3
"""

from __future__ import annotations

import argparse
from pathlib import Path

from cobra_denoise.bench import ExperimentSpec, run_experiment, synthetic_clean
from cobra_denoise.config import DEFAULT_BANK, restrict_bank_entries
from cobra_denoise.filters import bank_from_config
from cobra_denoise.image import crop_center, load_image
from cobra_denoise.noise import NOISE_KINDS, NoiseSpec


def parse_args() -> argparse.Namespace:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/noise_suite"))
    ap.add_argument("--clean", help="clean image file (default: built-in scene)")
    ap.add_argument("--size", type=int, default=128, help="center crop / scene size")
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1234)
    ap.add_argument("--kinds", nargs="+", default=list(NOISE_KINDS), choices=NOISE_KINDS)
    ap.add_argument("--known-noise", action="store_true",
                    help="restrict the bank to filters suited to each noise kind")
    return ap.parse_args()


def main() -> None:
    args = parse_args()
    if args.clean:
        clean = crop_center(load_image(args.clean), args.size)
        name = Path(args.clean).stem
    else:
        clean = synthetic_clean(args.size, args.size, seed=0)
        name = "scene"
    args.out.mkdir(parents=True, exist_ok=True)
    for kind in args.kinds:
        entries = [dict(e) for e in DEFAULT_BANK]
        if args.known_noise:
            entries = restrict_bank_entries(entries, kind)
        spec = ExperimentSpec(
            clean_images=[(name, clean)],
            noise=NoiseSpec(kind=kind),
            bank=bank_from_config(entries),
            cobra="tune",
            repetitions=args.reps,
            output_dir=args.out,
            master_seed=args.seed,
            crop=None,
        )
        result = run_experiment(spec)
        rmse = {r.method: r.mean for r in result.rows if r.metric == "rmse"}
        best = min(rmse, key=rmse.get)
        print(f"{kind:18s} tuned {result.params.to_json()}  "
              f"best {best} ({rmse[best]:.5f}), aggregate {rmse['cobra']:.5f}")
    print(f"reports in {args.out}")


if __name__ == "__main__":
    main()
