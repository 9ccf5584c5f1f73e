"""Consensus-weighted pixel aggregation.

The combined estimate at pixel p is the plain average of the noisy
intensities of every candidate pixel q the filter pool deems similar to p:

    out(p) = sum_q w(p, q) * noisy(q) / sum_q w(p, q)
    w(p, q) = 1  iff  #{k : |f_k(p) - f_k(q)| <= epsilon} >= M * alpha

where f_1 .. f_M are the filter outputs.  Candidates range over a square
window around p (or the whole image) intersected with the image; p itself is
always a candidate and trivially qualifies, so the denominator is never zero.

alpha is kept as an exact rational: the vote threshold count >= M * alpha is
evaluated in integer arithmetic, never through a float cutoff.  All candidate
iteration is row-major, and the vectorized image path accumulates in exactly
that order, so a per-pixel scan reproduces it bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .filters import FilterBank, apply_bank
from .image import Image, PixelIndex

MachineOutputs = Sequence[np.ndarray]


def _as_alpha(value) -> Fraction:
    """Exact rational vote fraction from a Fraction, string like '4/7', int or float."""
    if isinstance(value, Fraction):
        frac = value
    elif isinstance(value, str):
        frac = Fraction(value)
    elif isinstance(value, int):
        frac = Fraction(value, 1)
    elif isinstance(value, float):
        # floats are binary rationals; the conversion is exact
        frac = Fraction(value)
    else:
        raise ValueError(f"cannot interpret alpha {value!r}")
    if not (0 < frac <= 1):
        raise ValueError(f"alpha must lie in (0, 1], got {frac}")
    return frac


@dataclass(frozen=True)
class CobraParams:
    """Aggregation knobs.

    epsilon: similarity tolerance on filter outputs, > 0.
    alpha: required fraction of agreeing filters, exact rational in (0, 1].
    window_radius: candidate window radius; None (or 'full') means the
        whole image.
    patch_radius: neighborhood radius carried along for feature-based
        variants; the plain consensus rule does not consume it.
    """

    epsilon: float = 0.2
    alpha: Fraction = Fraction(4, 7)
    window_radius: int | None = 10
    patch_radius: int = 1

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "alpha", _as_alpha(self.alpha))
        wr = self.window_radius
        if isinstance(wr, str):
            if wr != "full":
                raise ValueError(f"window_radius must be an int or 'full', got {wr!r}")
            wr = None
            object.__setattr__(self, "window_radius", None)
        if wr is not None and (not isinstance(wr, int) or wr < 1):
            raise ValueError(f"window_radius must be >= 1 or full, got {wr!r}")
        if self.patch_radius < 0:
            raise ValueError(f"negative patch_radius {self.patch_radius}")

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "alpha": f"{self.alpha.numerator}/{self.alpha.denominator}",
            "window_radius": "full" if self.window_radius is None else self.window_radius,
            "patch_radius": self.patch_radius,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CobraParams":
        kw = {}
        for key in ("epsilon", "alpha", "window_radius", "patch_radius"):
            if key in obj:
                kw[key] = obj[key]
        return cls(**kw)


def vote_threshold(m: int, alpha: Fraction) -> int:
    """Smallest integer count satisfying count >= m * alpha."""
    return math.ceil(m * alpha)


def _check_outputs(noisy: Image, outs: MachineOutputs) -> None:
    if len(outs) < 1:
        raise ValueError("need at least one machine output")
    for k, f in enumerate(outs):
        if f.shape != noisy.shape:
            raise ValueError(f"machine {k} has shape {f.shape}, expected {noisy.shape}")


def consensus_count(outs: MachineOutputs, p: PixelIndex, q: PixelIndex, epsilon: float) -> int:
    """Number of machines rating p and q within epsilon of each other."""
    return sum(1 for f in outs if abs(float(f[p]) - float(f[q])) <= epsilon)


def consensus_weight(outs: MachineOutputs, p: PixelIndex, q: PixelIndex, params: CobraParams) -> int:
    """1 when at least alpha of the machines agree on (p, q), else 0."""
    thr = vote_threshold(len(outs), params.alpha)
    return 1 if consensus_count(outs, p, q, params.epsilon) >= thr else 0


def _window_bounds(p: PixelIndex, shape: tuple[int, int], radius: int | None):
    h, w = shape
    if radius is None:
        return 0, h, 0, w
    r0 = max(0, p[0] - radius)
    r1 = min(h, p[0] + radius + 1)
    c0 = max(0, p[1] - radius)
    c1 = min(w, p[1] + radius + 1)
    return r0, r1, c0, c1


def aggregate_pixel(noisy: Image, outs: MachineOutputs, p: PixelIndex, params: CobraParams) -> float:
    """Consensus average for a single pixel, candidates scanned row-major."""
    _check_outputs(noisy, outs)
    thr = vote_threshold(len(outs), params.alpha)
    eps = params.epsilon
    r0, r1, c0, c1 = _window_bounds(p, noisy.shape, params.window_radius)
    acc = 0.0
    count = 0
    pvals = [float(f[p]) for f in outs]
    for qr in range(r0, r1):
        for qc in range(c0, c1):
            votes = 0
            for k, f in enumerate(outs):
                if abs(pvals[k] - float(f[qr, qc])) <= eps:
                    votes += 1
            if votes >= thr:
                acc += float(noisy[qr, qc])
                count += 1
    return acc / count


def aggregate_image(noisy: Image, outs: MachineOutputs, params: CobraParams,
                    progress: Callable[[int, int], None] | None = None) -> Image:
    """Consensus average for every pixel, output clamped to [0, 1].

    Vectorized over window shifts: for each offset s the qualifying pixels
    p with candidate q = p + s are accumulated at once.  Scanning offsets
    row-major makes each pixel's accumulation order identical to a row-major
    scan of its candidate window, so results match aggregate_pixel exactly.

    Args:
        noisy: image whose intensities are averaged.
        outs: machine outputs, same shape as noisy.
        params: aggregation parameters.
        progress: optional callback progress(done_shifts, total_shifts).

    Returns:
        Aggregated image, same shape, clamped.
    """
    _check_outputs(noisy, outs)
    h, w = noisy.shape
    m = len(outs)
    thr = vote_threshold(m, params.alpha)
    eps = params.epsilon
    if params.window_radius is None:
        radius = max(h, w) - 1
    else:
        radius = params.window_radius
    num = np.zeros((h, w), dtype=np.float64)
    den = np.zeros((h, w), dtype=np.float64)
    shifts = 2 * radius + 1
    total = shifts * shifts
    done = 0
    for dy in range(-radius, radius + 1):
        pr0 = max(0, -dy)
        pr1 = min(h, h - dy)
        if pr0 >= pr1:
            done += shifts
            if progress is not None:
                progress(done, total)
            continue
        for dx in range(-radius, radius + 1):
            done += 1
            pc0 = max(0, -dx)
            pc1 = min(w, w - dx)
            if pc0 >= pc1:
                continue
            dst = (slice(pr0, pr1), slice(pc0, pc1))
            src = (slice(pr0 + dy, pr1 + dy), slice(pc0 + dx, pc1 + dx))
            counts = np.zeros((pr1 - pr0, pc1 - pc0), dtype=np.int64)
            for f in outs:
                counts += np.abs(f[dst] - f[src]) <= eps
            mask = counts >= thr
            num[dst] += np.where(mask, noisy[src], 0.0)
            den[dst] += mask
        if progress is not None:
            progress(done, total)
    return np.clip(num / den, 0.0, 1.0)


def aggregate_with_bank(noisy: Image, bank: FilterBank, params: CobraParams,
                        progress: Callable[[int, int], None] | None = None) -> Image:
    """Run the bank on the noisy image and aggregate its outputs."""
    outs = apply_bank(bank, noisy)
    return aggregate_image(noisy, outs, params, progress=progress)
