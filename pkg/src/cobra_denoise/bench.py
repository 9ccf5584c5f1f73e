"""Experiment harness: dataset builds, benchmark runs, report files.

Desk-scale by default: images are center-cropped to 128 x 128 unless a run
asks for full size.  Every random draw is keyed by (master seed, image index,
repetition, stage), so reruns of the same configuration are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.ndimage as ndi

from .aggregate import CobraParams, aggregate_image
from .filters import FilterBank, apply_bank, bank_from_config, gaussian_filter
from .image import Image, clamp, crop_center, load_image, save_image
from .metrics import ScoreRow, ScoreValues, rows_from_samples, score_all, to_markdown, write_csv
from .noise import NoiseSpec, add_gaussian, apply_noise, derive_seed, make_rng, suppress_patches
from .tune import DataSplit, GridSearchResult, ImagePair, TuningGrid, grid_search

DEFAULT_CROP = 128


def synthetic_clean(height: int = 128, width: int = 128, seed: int = 0) -> Image:
    """Deterministic photograph-like test scene.

    Stands in for a camera image when none is supplied: a sloped illumination
    field with slow random variation, a few hard-edged objects, fine grain
    over the whole frame and a woven band near the top.  Flat posters are a
    poor stand-in here because rank filters are unbeatable on them; grain
    keeps the comparison between smoothers honest.  The seed redraws the
    random fields, everything else is fixed geometry.
    """
    rng = make_rng(1_000_003 + seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = 0.45 + 0.25 * xx / max(width - 1, 1) - 0.1 * yy / max(height - 1, 1)
    # the package blur clamps to [0, 1], so raw noise fields go through scipy
    slow = ndi.gaussian_filter(rng.normal(0.0, 1.0, (height, width)), 16.0, mode="nearest")
    img += slow * (0.12 / max(float(slow.std()), 1e-9))
    cy, cx = 0.38 * height, 0.3 * width
    rad = 0.16 * min(height, width)
    img[(yy - cy) ** 2 + (xx - cx) ** 2 <= rad * rad] = 0.78
    img[int(0.58 * height) : int(0.82 * height), int(0.55 * width) : int(0.85 * width)] = 0.22
    cy2, cx2 = 0.72 * height, 0.28 * width
    rad2 = 0.09 * min(height, width)
    img[(yy - cy2) ** 2 + (xx - cx2) ** 2 <= rad2 * rad2] = 0.55
    grain = ndi.gaussian_filter(rng.normal(0.0, 1.0, (height, width)), 1.1, mode="nearest")
    img += grain * (0.05 / max(float(grain.std()), 1e-9))
    band = slice(int(0.06 * height), int(0.22 * height))
    img[band, :] += 0.05 * np.sin(2.0 * np.pi * xx[band, :] / 5.3) * np.sin(
        2.0 * np.pi * yy[band, :] / 11.0
    )
    # soften the edges a little so gradients exist
    return clamp(gaussian_filter(img, 0.6))


@dataclass(frozen=True)
class MixedNoiseLayout:
    """Quadrant corruption: one generator per quadrant plus white patches.

    The assignment is fixed: north-west Gaussian, north-east salt and pepper,
    south-west Poisson, south-east speckle; patch suppression then hits the
    whole frame.  A pixel (r, c) is in the north-west iff r < ceil(H/2) and
    c < ceil(W/2).
    """

    gaussian_mu: float = 127.5
    gaussian_sigma: float = 25.5
    sp_ratio: float = 0.2
    sp_amount: float = 0.1
    poisson_peak: float = 255.0
    speckle_variance: float = 0.04
    n_patches: int = 20
    patch_w: int = 4
    patch_h: int = 4
    seed: int = 0

    @property
    def kind(self) -> str:
        return "mixed"

    def with_seed(self, seed: int) -> "MixedNoiseLayout":
        return replace(self, seed=seed)

    def to_json(self) -> dict:
        out = {"kind": "mixed", "seed": self.seed, "params": {}}
        for key in ("gaussian_mu", "gaussian_sigma", "sp_ratio", "sp_amount",
                    "poisson_peak", "speckle_variance", "n_patches", "patch_w", "patch_h"):
            out["params"][key] = getattr(self, key)
        return out


def make_mixed_noise(clean: Image, layout: MixedNoiseLayout, seed: int | None = None) -> Image:
    """Corrupt each quadrant with its own generator, then drop white patches."""
    base_seed = layout.seed if seed is None else seed
    h, w = clean.shape
    rh = (h + 1) // 2
    cw = (w + 1) // 2
    out = clean.copy()
    quads = {
        "nw": (slice(0, rh), slice(0, cw)),
        "ne": (slice(0, rh), slice(cw, w)),
        "sw": (slice(rh, h), slice(0, cw)),
        "se": (slice(rh, h), slice(cw, w)),
    }
    specs = {
        "nw": NoiseSpec("gaussian", {"mu": layout.gaussian_mu, "sigma": layout.gaussian_sigma},
                        seed=derive_seed(base_seed, "nw")),
        "ne": NoiseSpec("salt_pepper", {"sp_ratio": layout.sp_ratio, "sp_amount": layout.sp_amount},
                        seed=derive_seed(base_seed, "ne")),
        "sw": NoiseSpec("poisson", {"peak": layout.poisson_peak},
                        seed=derive_seed(base_seed, "sw")),
        "se": NoiseSpec("speckle", {"variance": layout.speckle_variance},
                        seed=derive_seed(base_seed, "se")),
    }
    for tag, region in quads.items():
        sub = out[region]
        if sub.size:
            out[region] = apply_noise(sub, specs[tag])
    return suppress_patches(out, layout.n_patches, layout.patch_w, layout.patch_h,
                            make_rng(derive_seed(base_seed, "patches")))


def corrupt(clean: Image, noise: NoiseSpec | MixedNoiseLayout, seed: int) -> Image:
    """Apply either a single-generator spec or a mixed layout with the seed."""
    if isinstance(noise, MixedNoiseLayout):
        return make_mixed_noise(clean, noise, seed=seed)
    return apply_noise(clean, noise.with_seed(seed))


@dataclass
class ExperimentSpec:
    """Everything one benchmark run needs.

    clean_images entries are file paths or (name, array) tuples.  cobra may
    be fixed CobraParams or the string 'tune', in which case a grid search on
    dedicated tuning realizations picks the parameters first.
    """

    clean_images: list
    noise: NoiseSpec | MixedNoiseLayout
    bank: FilterBank
    cobra: CobraParams | str = field(default_factory=CobraParams)
    repetitions: int = 10
    output_dir: Path | None = None
    master_seed: int = 1234
    crop: int | None = DEFAULT_CROP
    grid: TuningGrid | None = None

    def __post_init__(self):
        if not self.clean_images:
            raise ValueError("need at least one clean image")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")


@dataclass
class ExperimentResult:
    rows: list[ScoreRow]
    params: CobraParams
    noise_name: str
    tuning: GridSearchResult | None = None
    outputs: dict = field(default_factory=dict)


def _load_clean(entry, crop: int | None) -> tuple[str, Image]:
    if isinstance(entry, tuple):
        name, img = entry
        img = np.asarray(img, dtype=np.float64)
    else:
        name = Path(entry).stem
        img = load_image(entry)
    if crop:
        img = crop_center(img, crop)
    return str(name), img


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run repetitions of noise -> bank -> aggregation and score everything.

    Per repetition the noise seed is derived from (master_seed, image index,
    repetition, 'noise').  COBRA and every individual filter are scored
    against the clean image; rows carry mean and std over all repetitions of
    all images.  With an output directory set, the first repetition's noisy,
    aggregated, and absolute-difference images are saved alongside the CSV
    and markdown report.
    """
    cleans = [_load_clean(e, spec.crop) for e in spec.clean_images]
    noise_name = spec.noise.kind
    bank = spec.bank

    tuning = None
    if isinstance(spec.cobra, str):
        if spec.cobra != "tune":
            raise ValueError(f"cobra must be params or 'tune', got {spec.cobra!r}")
        tune_pairs = []
        for i, (name, clean) in enumerate(cleans):
            tseed = derive_seed(spec.master_seed, i, 0, "tune")
            tune_pairs.append(ImagePair(pair_id=f"{name}-tune", noisy=corrupt(clean, spec.noise, tseed),
                                        clean=clean))
        tuning = grid_search(DataSplit(tune_pairs=tune_pairs), bank, spec.grid)
        params = tuning.best
    else:
        params = spec.cobra

    samples: dict[str, list[ScoreValues]] = {"cobra": []}
    for name in bank.names:
        samples[name] = []
    outputs: dict = {}

    for i, (name, clean) in enumerate(cleans):
        for rep in range(spec.repetitions):
            try:
                nseed = derive_seed(spec.master_seed, i, rep, "noise")
                noisy = corrupt(clean, spec.noise, nseed)
                outs = apply_bank(bank, noisy)
                agg = aggregate_image(noisy, outs, params)
            except Exception as exc:
                raise RuntimeError(f"repetition {rep} on image {name!r} failed: {exc}") from exc
            samples["cobra"].append(score_all(agg, clean))
            for fname, fout in zip(bank.names, outs):
                samples[fname].append(score_all(fout, clean))
            if i == 0 and rep == 0 and spec.output_dir is not None:
                out_dir = Path(spec.output_dir)
                out_dir.mkdir(parents=True, exist_ok=True)
                trio = {
                    "noisy": noisy,
                    "cobra": agg,
                    "diff": clamp(np.abs(clean - agg)),
                }
                for tag, img in trio.items():
                    path = out_dir / f"{name}__{noise_name}__{tag}.png"
                    save_image(img, path)
                    outputs[tag] = path

    rows: list[ScoreRow] = []
    for method in ["cobra"] + bank.names:
        rows.extend(rows_from_samples(noise_name, method, samples[method]))

    if spec.output_dir is not None:
        out_dir = Path(spec.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"scores__{noise_name}.csv"
        write_csv(rows, csv_path)
        md_path = out_dir / f"report__{noise_name}.md"
        header = [f"noise: {noise_name}", f"cobra params: {params.to_json()}"]
        if tuning is not None:
            header.append(f"tuned on held-out pairs, objective {tuning.objective}")
        md = to_markdown(rows, title="Denoising benchmark") + "\n" + "\n".join(f"- {h}" for h in header) + "\n"
        md_path.write_text(md)
        outputs["csv"] = csv_path
        outputs["markdown"] = md_path

    return ExperimentResult(rows=rows, params=params, noise_name=noise_name,
                            tuning=tuning, outputs=outputs)


def default_noise_suite(master_seed: int = 0) -> list[NoiseSpec]:
    """The five standard corruptions with default parameters."""
    return [NoiseSpec(kind=k, seed=master_seed) for k in
            ("gaussian", "salt_pepper", "poisson", "speckle", "patch_suppression")]


def build_dataset(clean_paths: list, noise_specs: list[NoiseSpec], master_seed: int,
                  out_dir, copy_sigma: float = 5.0, crop: int | None = DEFAULT_CROP) -> dict:
    """Cross clean images with noise generators; spin off tune/eval copies.

    For every (clean, noise) cell one base noisy image is produced, then two
    further independent copies of it by adding zero-mean normal noise of
    stddev copy_sigma (0..255 scale): one reserved for parameter tuning, one
    for held-out evaluation.  All images and a manifest.json land in out_dir.

    Returns the manifest dict.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for img_idx, entry in enumerate(clean_paths):
        name, clean = _load_clean(entry, crop)
        clean_file = out / f"{name}__clean.png"
        save_image(clean, clean_file)
        for noise_idx, spec in enumerate(noise_specs):
            seeds = {
                "base": derive_seed(master_seed, img_idx, noise_idx, "base"),
                "tune": derive_seed(master_seed, img_idx, noise_idx, "tune"),
                "eval": derive_seed(master_seed, img_idx, noise_idx, "eval"),
            }
            base = apply_noise(clean, spec.with_seed(seeds["base"]))
            copies = {
                role: add_gaussian(base, 127.5, copy_sigma, make_rng(seeds[role]))
                for role in ("tune", "eval")
            }
            tag = f"{name}__{spec.kind}{noise_idx}"
            files = {"base": out / f"{tag}__base.png"}
            save_image(base, files["base"])
            for role, img in copies.items():
                files[role] = out / f"{tag}__{role}.png"
                save_image(img, files[role])
            entries.append({
                "clean": clean_file.name,
                "stem": name,
                "noise": spec.with_seed(seeds["base"]).to_json(),
                "base": files["base"].name,
                "tune": files["tune"].name,
                "eval": files["eval"].name,
                "seeds": seeds,
            })
    manifest = {
        "version": 1,
        "master_seed": master_seed,
        "copy_sigma": copy_sigma,
        "crop": crop,
        "entries": entries,
    }
    import json

    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_split(manifest: dict, root, noise_kind: str | None = None) -> DataSplit:
    """Rebuild tune/eval pairs from a dataset manifest."""
    root = Path(root)
    tune_pairs = []
    eval_pairs = []
    for entry in manifest["entries"]:
        if noise_kind is not None and entry["noise"]["kind"] != noise_kind:
            continue
        clean = load_image(root / entry["clean"])
        tag = f"{entry['stem']}-{entry['noise']['kind']}"
        tune_pairs.append(ImagePair(pair_id=f"{tag}-tune",
                                    noisy=load_image(root / entry["tune"]), clean=clean))
        eval_pairs.append(ImagePair(pair_id=f"{tag}-eval",
                                    noisy=load_image(root / entry["eval"]), clean=clean))
    if not tune_pairs:
        raise ValueError(f"manifest has no entries for noise kind {noise_kind!r}")
    return DataSplit(tune_pairs=tune_pairs, eval_pairs=eval_pairs)


def run_autotune_demo(clean: Image, noise: NoiseSpec, sizes: list[int],
                      cobra: CobraParams, output_dir=None) -> list[ScoreRow]:
    """Aggregate a pool made of one median filter per window size.

    Scores the combined result against every individual size on a single
    noisy realization; demonstrates that aggregation tracks whichever window
    size suits the noise level, without being told which.
    """
    entries = [{"name": f"median{s}", "kind": "median", "params": {"size": s}} for s in sizes]
    bank = bank_from_config(entries)
    noisy = apply_noise(clean, noise)
    outs = apply_bank(bank, noisy)
    agg = aggregate_image(noisy, outs, cobra)
    rows = rows_from_samples(noise.kind, "cobra", [score_all(agg, clean)])
    for name, fout in zip(bank.names, outs):
        rows.extend(rows_from_samples(noise.kind, name, [score_all(fout, clean)]))
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(rows, out / f"autotune__{noise.kind}.csv")
        (out / f"autotune__{noise.kind}.md").write_text(to_markdown(rows, title="Median autotune"))
    return rows
