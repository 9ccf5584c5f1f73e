"""JSON experiment configuration and versioned defaults.

A config file looks like:

    {
      "bank": [{"name": "median", "params": {"size": 3}}, ...],
      "cobra": {"epsilon": 0.2, "alpha": "4/7", "window_radius": 10} | "tune",
      "noise": {"kind": "salt_pepper", "params": {...}, "seed": 7},
      "grid": {"epsilons": [...], "alphas": ["4/7", ...], "objective": "rmse"},
      "repetitions": 10,
      "master_seed": 123
    }

Every key is optional; missing pieces fall back to the defaults below, so an
empty (or absent) config yields a complete runnable experiment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .aggregate import CobraParams
from .bench import MixedNoiseLayout
from .noise import NoiseSpec
from .tune import TuningGrid

# Bump when a default parameter below changes meaning or value.
FILTER_DEFAULTS_VERSION = 1

# The full bank: smoothers plus outlier-preserving filters, so the pool
# disagrees on impulse pixels instead of voting them through.
DEFAULT_BANK = (
    {"name": "gaussian"},
    {"name": "median"},
    {"name": "bilateral"},
    {"name": "tv_chambolle"},
    {"name": "nl_means"},
    {"name": "richardson_lucy"},
    {"name": "lee"},
    {"name": "inpaint"},
)

# Bank restriction applied when the corrupting process is declared known.
KNOWN_NOISE_BANKS = {
    "gaussian": ("gaussian", "bilateral", "tv_chambolle", "nl_means"),
    "salt_pepper": ("median", "tv_chambolle", "inpaint"),
    "poisson": ("gaussian", "bilateral", "tv_chambolle", "nl_means"),
    "speckle": ("lee", "median", "tv_chambolle", "nl_means"),
    "patch_suppression": ("inpaint", "median"),
    "mixed": tuple(e["name"] for e in DEFAULT_BANK),
}

# Stddev (0..255 scale) of the extra zero-mean normal noise used to spin the
# tune/eval copies off a base noisy image in dataset builds.
DEFAULT_COPY_SIGMA = 5.0

DEFAULT_REPETITIONS = 10
DEFAULT_MASTER_SEED = 1234


@dataclass
class Config:
    """Parsed experiment configuration."""

    bank_entries: list[dict] = field(default_factory=lambda: [dict(e) for e in DEFAULT_BANK])
    cobra: CobraParams | str = field(default_factory=CobraParams)
    noise: NoiseSpec | MixedNoiseLayout = field(
        default_factory=lambda: NoiseSpec(kind="salt_pepper"))
    grid: TuningGrid | None = None
    repetitions: int = DEFAULT_REPETITIONS
    master_seed: int = DEFAULT_MASTER_SEED
    known_noise_banks: dict = field(default_factory=lambda: dict(KNOWN_NOISE_BANKS))


def parse_cobra(obj) -> CobraParams | str:
    """CobraParams from a JSON mapping, or the literal string 'tune'."""
    if obj == "tune":
        return "tune"
    if isinstance(obj, dict):
        return CobraParams.from_json(obj)
    raise ValueError(f"cobra section must be a mapping or 'tune', got {obj!r}")


def parse_noise(obj: dict) -> NoiseSpec | MixedNoiseLayout:
    """NoiseSpec from JSON; kind 'mixed' builds a quadrant layout instead."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError(f"noise section needs a kind: {obj!r}")
    if obj["kind"] == "mixed":
        params = dict(obj.get("params", {}))
        return MixedNoiseLayout(seed=int(obj.get("seed", 0)), **params)
    return NoiseSpec.from_json(obj)


def parse_grid(obj: dict) -> TuningGrid:
    kwargs = {}
    if "epsilons" in obj:
        kwargs["epsilons"] = tuple(float(e) for e in obj["epsilons"])
    if "alphas" in obj:
        kwargs["alphas"] = tuple(obj["alphas"])
    if "objective" in obj:
        kwargs["objective"] = obj["objective"]
    return TuningGrid(**kwargs)


def load_config(path=None) -> Config:
    """Load a config file; None or an empty file yields pure defaults."""
    cfg = Config()
    if path is None:
        return cfg
    obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict):
        raise ValueError("config root must be a JSON object")
    known = {"bank", "cobra", "noise", "grid", "repetitions", "master_seed", "known_noise_banks"}
    unknown = set(obj) - known
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}")
    if "bank" in obj:
        if not isinstance(obj["bank"], list) or not obj["bank"]:
            raise ValueError("bank must be a non-empty list of filter entries")
        cfg.bank_entries = [dict(e) for e in obj["bank"]]
    if "cobra" in obj:
        cfg.cobra = parse_cobra(obj["cobra"])
    if "noise" in obj:
        cfg.noise = parse_noise(obj["noise"])
    if "grid" in obj:
        cfg.grid = parse_grid(obj["grid"])
    if "repetitions" in obj:
        reps = int(obj["repetitions"])
        if reps < 1:
            raise ValueError(f"repetitions must be >= 1, got {reps}")
        cfg.repetitions = reps
    if "master_seed" in obj:
        cfg.master_seed = int(obj["master_seed"])
    if "known_noise_banks" in obj:
        table = dict(cfg.known_noise_banks)
        for kind, names in obj["known_noise_banks"].items():
            table[kind] = tuple(names)
        cfg.known_noise_banks = table
    return cfg


def restrict_bank_entries(entries: list[dict], noise_kind: str,
                          known_noise_banks: dict | None = None) -> list[dict]:
    """Keep only the filters mapped to a known noise kind.

    Falls back to the full list when the kind has no mapping or the mapping
    matches nothing (a bank can never be empty).
    """
    table = KNOWN_NOISE_BANKS if known_noise_banks is None else known_noise_banks
    allowed = table.get(noise_kind)
    if not allowed:
        return list(entries)
    kept = [e for e in entries if e.get("name") in allowed]
    return kept if kept else list(entries)
