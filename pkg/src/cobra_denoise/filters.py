"""Classical denoising filters and the filter bank container.

Each filter maps a [0, 1] gray-scale image to a [0, 1] image of the same
shape.  Border handling is edge replication throughout.  The implementations
follow the textbook formulations directly; scipy.ndimage supplies the sliding
window plumbing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
import scipy.ndimage as ndi

from .image import Image, clamp, load_image


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian, truncated at radius ceil(3 sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_filter(img: Image, sigma: float = 1.0) -> Image:
    """Separable Gaussian blur with edge replication."""
    w = gaussian_kernel_1d(sigma)
    tmp = ndi.correlate1d(img, w, axis=0, mode="nearest")
    return clamp(ndi.correlate1d(tmp, w, axis=1, mode="nearest"))


def median_filter(img: Image, size: int = 3) -> Image:
    """Median over a size x size window, edge replication.

    Even sizes are rounded up to the next odd size with a warning so the
    window always has a unique middle element.
    """
    if size < 1:
        raise ValueError(f"median size must be >= 1, got {size}")
    if size % 2 == 0:
        warnings.warn(f"even median size {size} rounded up to {size + 1}", stacklevel=2)
        size += 1
    if size == 1:
        return img.copy()
    return ndi.median_filter(img, size=size, mode="nearest")


def bilateral_filter(img: Image, sigma_spatial: float = 1.5, sigma_range: float = 0.1) -> Image:
    """Edge-preserving blur weighted by spatial and intensity distance.

    w(p, q) = exp(-|p - q|^2 / (2 ss^2)) * exp(-(img(p) - img(q))^2 / (2 sr^2))
    over the square window of radius ceil(3 ss), out-of-image neighbors
    replicated from the edge.
    """
    if sigma_spatial <= 0 or sigma_range <= 0:
        raise ValueError("bilateral sigmas must be positive")
    r = math.ceil(3.0 * sigma_spatial)
    h, w = img.shape
    padded = np.pad(img, r, mode="edge")
    num = np.zeros_like(img)
    den = np.zeros_like(img)
    inv_ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial)
    inv_sr = 1.0 / (2.0 * sigma_range * sigma_range)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            spatial = math.exp(-(dy * dy + dx * dx) * inv_ss)
            shifted = padded[r + dy : r + dy + h, r + dx : r + dx + w]
            weight = spatial * np.exp(-((img - shifted) ** 2) * inv_sr)
            num += weight * shifted
            den += weight
    return clamp(num / den)


def _tv_grad(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Forward differences, zero at the far edge.
    gy = np.zeros_like(u)
    gx = np.zeros_like(u)
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    return gy, gx


def _tv_div(py: np.ndarray, px: np.ndarray) -> np.ndarray:
    # Negative adjoint of _tv_grad.
    d = np.zeros_like(py)
    d[0, :] += py[0, :]
    d[1:-1, :] += py[1:-1, :] - py[:-2, :]
    d[-1, :] += -py[-2, :]
    d[:, 0] += px[:, 0]
    d[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
    d[:, -1] += -px[:, -2]
    return d


def tv_energy(u: np.ndarray, img: Image, weight: float) -> float:
    """Objective |u - img|^2 / (2 weight) + TV(u) with isotropic discrete TV."""
    gy, gx = _tv_grad(u)
    tv = float(np.sum(np.sqrt(gy * gy + gx * gx)))
    fidelity = float(np.sum((u - img) ** 2)) / (2.0 * weight)
    return fidelity + tv


def tv_iterates(img: Image, weight: float = 0.1) -> Iterator[np.ndarray]:
    """Yield successive estimates of the dual projection iteration.

    Fixed point update on the dual field p with step 0.25:
    p <- (p + tau grad(div p - img / weight)) / (1 + tau |grad(...)|),
    primal estimate u = img - weight * div p.
    """
    if weight <= 0:
        raise ValueError(f"weight must be positive, got {weight}")
    tau = 0.25
    py = np.zeros_like(img)
    px = np.zeros_like(img)
    scaled = img / weight
    while True:
        gy, gx = _tv_grad(_tv_div(py, px) - scaled)
        norm = np.sqrt(gy * gy + gx * gx)
        py = (py + tau * gy) / (1.0 + tau * norm)
        px = (px + tau * gx) / (1.0 + tau * norm)
        yield img - weight * _tv_div(py, px)


def tv_chambolle(img: Image, weight: float = 0.1, max_iter: int = 200, tol: float = 1e-4) -> Image:
    """Total-variation denoising via the dual projection iteration.

    Stops after max_iter steps or when the relative change of the estimate
    drops below tol.
    """
    u = img
    ref = max(float(np.linalg.norm(img)), 1e-12)
    for i, u_new in enumerate(tv_iterates(img, weight)):
        change = float(np.linalg.norm(u_new - u)) / ref
        u = u_new
        if i + 1 >= max_iter or (i > 0 and change < tol):
            break
    return clamp(u)


def nl_means(img: Image, patch_radius: int = 2, search_radius: int = 5, h: float = 0.7) -> Image:
    """Non-local means: average over the search window weighted by patch similarity.

    w(p, q) = exp(-|P(p) - P(q)|^2 / h^2) with P the flattened square patch
    of the given radius; q runs over the square search window around p and
    out-of-image reads are edge-replicated.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if patch_radius < 0 or search_radius < 1:
        raise ValueError("patch_radius must be >= 0 and search_radius >= 1")
    pr, sr = patch_radius, search_radius
    hh, ww = img.shape
    pad = pr + sr
    padded = np.pad(img, pad, mode="edge")
    box = 2 * pr + 1
    num = np.zeros_like(img)
    den = np.zeros_like(img)
    # Region of the padded image covering every pixel plus a patch margin.
    core = padded[pad - pr : pad + hh + pr, pad - pr : pad + ww + pr]
    inv_h2 = 1.0 / (h * h)
    for dy in range(-sr, sr + 1):
        for dx in range(-sr, sr + 1):
            shifted = padded[pad - pr + dy : pad + hh + pr + dy, pad - pr + dx : pad + ww + pr + dx]
            sq = (core - shifted) ** 2
            ssd = ndi.uniform_filter(sq, size=box, mode="constant") * float(box * box)
            d2 = ssd[pr : pr + hh, pr : pr + ww]
            weight = np.exp(-d2 * inv_h2)
            qvals = padded[pad + dy : pad + hh + dy, pad + dx : pad + ww + dx]
            num += weight * qvals
            den += weight
    return clamp(num / den)


def gaussian_psf(size: int = 5, sigma: float = 1.0) -> np.ndarray:
    """Normalized square Gaussian point spread function."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"psf size must be odd and >= 1, got {size}")
    half = size // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    k = np.outer(g, g)
    return k / k.sum()


def richardson_lucy(img: Image, psf: np.ndarray | None = None, n_iter: int = 10,
                    boundary: str = "replicate") -> Image:
    """Richardson-Lucy deconvolution with multiplicative updates.

    u <- u * correlate(img / max(convolve(u, psf), 1e-12), psf).  The psf must
    be non-negative and sum to 1.  boundary selects edge replication
    ('replicate', default) or wrap-around ('periodic'); the periodic mode
    conserves total flux exactly.
    """
    if psf is None:
        psf = gaussian_psf(5, 1.0)
    psf = np.asarray(psf, dtype=np.float64)
    if np.any(psf < 0) or abs(float(psf.sum()) - 1.0) > 1e-8:
        raise ValueError("psf must be non-negative and normalized to sum 1")
    modes = {"replicate": "nearest", "periodic": "wrap"}
    if boundary not in modes:
        raise ValueError(f"unknown boundary {boundary!r}; expected 'replicate' or 'periodic'")
    mode = modes[boundary]
    u = img.astype(np.float64).copy()
    for _ in range(n_iter):
        conv = ndi.convolve(u, psf, mode=mode)
        ratio = img / np.maximum(conv, 1e-12)
        u = u * ndi.correlate(ratio, psf, mode=mode)
    return clamp(u)


def lee_filter(img: Image, window: int = 5, noise_variance: float = 0.01) -> Image:
    """Local linear MMSE filter: out = m + k (img - m), k = var / (var + nv).

    m and var are the window mean and population variance (edge replication).
    noise_variance 0 makes the filter an identity wherever the window is not
    constant.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if noise_variance < 0:
        raise ValueError(f"negative noise variance {noise_variance}")
    m = ndi.uniform_filter(img, size=window, mode="nearest")
    m2 = ndi.uniform_filter(img * img, size=window, mode="nearest")
    var = np.maximum(m2 - m * m, 0.0)
    denom = var + noise_variance
    k = np.divide(var, denom, out=np.zeros_like(var), where=denom > 0)
    return clamp(m + k * (img - m))


def detect_white_mask(img: Image) -> np.ndarray:
    """Pixels at (or within half a level of) full white."""
    return img >= 1.0 - 1.0 / 255.0


def inpaint(img: Image, mask: np.ndarray, n_iter: int = 500) -> Image:
    """Harmonic fill-in of masked pixels by iterated 4-neighbor averaging.

    Masked pixels are repeatedly replaced by the mean of their 4 neighbors
    (edges replicated) until the largest change drops below 1e-6 or n_iter
    passes have run.  Unmasked pixels are untouched.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.shape:
        raise ValueError(f"mask shape {mask.shape} does not match image {img.shape}")
    if mask.all():
        raise ValueError("mask covers entire image; nothing to interpolate from")
    u = img.astype(np.float64).copy()
    if not mask.any():
        return u
    for _ in range(n_iter):
        p = np.pad(u, 1, mode="edge")
        avg = (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]) / 4.0
        delta = float(np.max(np.abs(avg[mask] - u[mask])))
        u[mask] = avg[mask]
        if delta < 1e-6:
            break
    return clamp(u)


def inpaint_white(img: Image, n_iter: int = 500) -> Image:
    """Inpaint whatever reads as white; identity when nothing does."""
    mask = detect_white_mask(img)
    if mask.all() or not mask.any():
        return img.copy()
    return inpaint(img, mask, n_iter=n_iter)


@dataclass(frozen=True)
class DenoiseFilter:
    """A named Image -> Image machine plus the parameters that built it."""

    name: str
    params: dict
    apply: Callable[[Image], Image]


@dataclass(frozen=True)
class FilterBank:
    """Ordered pool of filters whose outputs vote in the aggregation."""

    filters: tuple[DenoiseFilter, ...]

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        if len(self.filters) == 0:
            raise ValueError("filter bank must contain at least one filter")
        names = [f.name for f in self.filters]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate filter names in bank: {names}")

    @property
    def m(self) -> int:
        return len(self.filters)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.filters]


def apply_bank(bank: FilterBank, img: Image) -> list[Image]:
    """Run every filter on img, outputs in bank order."""
    return [f.apply(img) for f in bank.filters]


def _richardson_lucy_cfg(img: Image, n_iter: int = 10, psf_size: int = 5,
                         psf_sigma: float = 1.0, boundary: str = "replicate") -> Image:
    # Config-friendly wrapper: the psf is described by size and sigma.
    return richardson_lucy(img, psf=gaussian_psf(psf_size, psf_sigma),
                           n_iter=n_iter, boundary=boundary)


# kind -> (function, default params); 'external' is handled separately.
_FILTER_KINDS: dict[str, tuple[Callable, dict]] = {
    "gaussian": (gaussian_filter, {"sigma": 1.0}),
    "median": (median_filter, {"size": 3}),
    "bilateral": (bilateral_filter, {"sigma_spatial": 1.5, "sigma_range": 0.1}),
    "tv_chambolle": (tv_chambolle, {"weight": 0.1, "max_iter": 200, "tol": 1e-4}),
    "nl_means": (nl_means, {"patch_radius": 2, "search_radius": 5, "h": 0.7}),
    "richardson_lucy": (_richardson_lucy_cfg,
                        {"n_iter": 10, "psf_size": 5, "psf_sigma": 1.0, "boundary": "replicate"}),
    "lee": (lee_filter, {"window": 5, "noise_variance": 0.01}),
    "inpaint": (inpaint_white, {"n_iter": 500}),
}

FILTER_KIND_NAMES = tuple(_FILTER_KINDS) + ("external",)


def _external_apply(root: Path, stem: str) -> Callable[[Image], Image]:
    def apply(img: Image) -> Image:
        path = root / f"{stem}.png"
        out = load_image(path)
        if out.shape != img.shape:
            raise ValueError(f"external output {path} has shape {out.shape}, expected {img.shape}")
        return out
    return apply


def make_filter(entry: dict, input_stem: str | None = None) -> DenoiseFilter:
    """Build a DenoiseFilter from a config entry.

    The entry carries a name, an optional kind (defaults to the name), and a
    params mapping merged over the kind's defaults.  Kind 'external' reads a
    pre-rendered result from <path>/<input_stem>.png instead of computing one,
    which requires the input stem to be known.
    """
    name = entry.get("name")
    if not name:
        raise ValueError(f"filter entry missing name: {entry!r}")
    kind = entry.get("kind", name)
    params = dict(entry.get("params", {}))
    if kind == "external":
        root = entry.get("path")
        if not root:
            raise ValueError(f"external filter {name!r} needs a path")
        if input_stem is None:
            raise ValueError(f"external filter {name!r} requires a named input image")
        return DenoiseFilter(name=name, params={"path": str(root)},
                             apply=_external_apply(Path(root), input_stem))
    if kind not in _FILTER_KINDS:
        raise ValueError(f"unknown filter kind {kind!r}; expected one of {FILTER_KIND_NAMES}")
    func, defaults = _FILTER_KINDS[kind]
    merged = dict(defaults)
    unknown = set(params) - set(defaults)
    if unknown:
        raise ValueError(f"unknown {kind} parameters {sorted(unknown)}")
    merged.update(params)
    return DenoiseFilter(name=name, params=merged, apply=lambda img, _f=func, _p=merged: _f(img, **_p))


def bank_from_config(entries: list[dict], input_stem: str | None = None) -> FilterBank:
    """Build a FilterBank from a list of config entries."""
    return FilterBank(filters=tuple(make_filter(e, input_stem=input_stem) for e in entries))
