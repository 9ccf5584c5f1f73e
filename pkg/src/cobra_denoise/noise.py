"""Seeded synthetic noise generators.

Every generator draws from an explicitly constructed PCG64 stream, so a
recorded seed reproduces the exact same corruption on any platform.  Gaussian
mean/stddev are given on the 0..255 scale to match the usual 8-bit convention;
internally everything runs on normalized [0, 1] intensities.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .image import Image, clamp

NOISE_KINDS = ("gaussian", "salt_pepper", "poisson", "speckle", "patch_suppression")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for an integer seed."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit sub-seed from a master seed and a label path.

    Hashes the decimal master seed and the stringified parts with blake2b,
    so (seed, image index, repetition, stage) always maps to the same
    sub-stream regardless of platform or process.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master_seed)).encode("ascii"))
    for part in parts:
        h.update(b"/")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


_PARAM_DEFAULTS = {
    "gaussian": {"mu": 127.5, "sigma": 25.5},
    "salt_pepper": {"sp_ratio": 0.2, "sp_amount": 0.1},
    "poisson": {"peak": 255.0},
    "speckle": {"variance": 0.04},
    "patch_suppression": {"n_patches": 20, "patch_w": 4, "patch_h": 4},
}


@dataclass(frozen=True)
class NoiseSpec:
    """A noise kind, its parameters, and the seed that fixes the draw."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        unknown = set(self.params) - set(_PARAM_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} parameters {sorted(unknown)}")

    def resolved_params(self) -> dict:
        merged = dict(_PARAM_DEFAULTS[self.kind])
        merged.update(self.params)
        return merged

    def with_seed(self, seed: int) -> "NoiseSpec":
        return replace(self, seed=seed)

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "NoiseSpec":
        return cls(kind=obj["kind"], params=dict(obj.get("params", {})), seed=int(obj.get("seed", 0)))


def add_gaussian(img: Image, mu: float, sigma: float, rng: np.random.Generator) -> Image:
    """Additive Gaussian noise, mu/sigma on the 0..255 scale.

    The offset is centered so mu = 127.5 adds zero-mean noise:
    n ~ Normal(mu/255 - 0.5, (sigma/255)^2).
    """
    if sigma < 0:
        raise ValueError(f"negative sigma {sigma}")
    noise = rng.normal(mu / 255.0 - 0.5, sigma / 255.0, size=img.shape)
    return clamp(img + noise)


def add_salt_pepper(img: Image, sp_ratio: float, sp_amount: float, rng: np.random.Generator) -> Image:
    """Replace round(sp_amount * N) distinct pixels with extremes.

    Of the replaced pixels, round(sp_ratio * count) become 1.0 (salt) and the
    rest 0.0 (pepper).  Positions are drawn without replacement; white is
    assigned to the first draws.  A replaced pixel is overwritten regardless
    of its previous value.
    """
    if not (0.0 <= sp_ratio <= 1.0):
        raise ValueError(f"sp_ratio {sp_ratio} outside [0, 1]")
    if not (0.0 <= sp_amount <= 1.0):
        raise ValueError(f"sp_amount {sp_amount} outside [0, 1]")
    n = img.size
    n_replace = int(np.rint(sp_amount * n))
    out = img.copy().ravel()
    if n_replace > 0:
        positions = rng.choice(n, size=n_replace, replace=False)
        n_white = int(np.rint(sp_ratio * n_replace))
        out[positions[:n_white]] = 1.0
        out[positions[n_white:]] = 0.0
    return out.reshape(img.shape)


def add_poisson(img: Image, peak: float, rng: np.random.Generator) -> Image:
    """Photon-count noise: clamp(Poisson(img * peak) / peak)."""
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    counts = rng.poisson(img * peak)
    return clamp(counts / peak)


def add_speckle(img: Image, variance: float, rng: np.random.Generator) -> Image:
    """Multiplicative noise: clamp(img * (1 + n)), n ~ Normal(0, variance)."""
    if variance < 0:
        raise ValueError(f"negative variance {variance}")
    n = rng.normal(0.0, np.sqrt(variance), size=img.shape)
    return clamp(img * (1.0 + n))


def suppress_patches(img: Image, n_patches: int, patch_w: int, patch_h: int,
                     rng: np.random.Generator) -> Image:
    """Set n_patches axis-aligned rectangles to white (1.0).

    Origins are uniform over valid placements, drawn one patch at a time,
    row offset first then column offset.  Patches may overlap.
    """
    h, w = img.shape
    if patch_h > h or patch_w > w:
        raise ValueError(f"patch {patch_w}x{patch_h} larger than image {w}x{h}")
    if n_patches < 0:
        raise ValueError(f"negative patch count {n_patches}")
    out = img.copy()
    for _ in range(n_patches):
        top = int(rng.integers(0, h - patch_h + 1))
        left = int(rng.integers(0, w - patch_w + 1))
        out[top : top + patch_h, left : left + patch_w] = 1.0
    return out


def apply_noise(img: Image, spec: NoiseSpec) -> Image:
    """Dispatch on spec.kind with the spec's seed and resolved parameters."""
    rng = make_rng(spec.seed)
    p = spec.resolved_params()
    if spec.kind == "gaussian":
        return add_gaussian(img, p["mu"], p["sigma"], rng)
    if spec.kind == "salt_pepper":
        return add_salt_pepper(img, p["sp_ratio"], p["sp_amount"], rng)
    if spec.kind == "poisson":
        return add_poisson(img, p["peak"], rng)
    if spec.kind == "speckle":
        return add_speckle(img, p["variance"], rng)
    if spec.kind == "patch_suppression":
        return suppress_patches(img, p["n_patches"], p["patch_w"], p["patch_h"], rng)
    raise ValueError(f"unknown noise kind {spec.kind!r}")
