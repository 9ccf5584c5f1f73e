"""Quality metrics and score report serialization.

All metrics compare a denoised image against the clean original on the
normalized [0, 1] scale; MAE and RMSE are also reported times 255 for direct
comparison with 8-bit conventions.  Moments are population moments (1/N).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import Image

METRIC_NAMES = ("mae", "rmse", "psnr", "uqi")

# Whether a larger value of the metric is better.
HIGHER_IS_BETTER = {"mae": False, "rmse": False, "psnr": True, "uqi": True}


def _check_pair(denoised: Image, original: Image) -> None:
    if denoised.shape != original.shape:
        raise ValueError(f"shape mismatch {denoised.shape} vs {original.shape}")


def mae(denoised: Image, original: Image) -> float:
    """Mean absolute error."""
    _check_pair(denoised, original)
    return float(np.mean(np.abs(denoised - original)))


def rmse(denoised: Image, original: Image) -> float:
    """Root mean squared error."""
    _check_pair(denoised, original)
    return float(np.sqrt(np.mean((denoised - original) ** 2)))


def psnr(denoised: Image, original: Image, d: float = 1.0) -> float:
    """Peak signal-to-noise ratio, 10 log10(d^2 / RMSE^2) in dB.

    d is the dynamic range (1.0 for normalized images).  Identical images
    give +inf.
    """
    r = rmse(denoised, original)
    if r == 0.0:
        return math.inf
    return 10.0 * math.log10(d * d / (r * r))


def uqi(denoised: Image, original: Image) -> float:
    """Universal quality index, product of correlation, luminance and contrast.

    Population moments; needs at least 2 pixels.  Degenerate flat images:
    the correlation/contrast part is 1 when both images are the same constant
    pattern, 0 when only one of them is flat or the constants differ.
    """
    _check_pair(denoised, original)
    if original.size < 2:
        raise ValueError("uqi needs at least 2 pixels")
    o = original.astype(np.float64)
    dn = denoised.astype(np.float64)
    mu_o = float(np.mean(o))
    mu_d = float(np.mean(dn))
    var_o = float(np.mean((o - mu_o) ** 2))
    var_d = float(np.mean((dn - mu_d) ** 2))
    cov = float(np.mean((o - mu_o) * (dn - mu_d)))

    if mu_o * mu_o + mu_d * mu_d == 0.0:
        # Both all-zero constants.
        luminance = 1.0
    else:
        luminance = 2.0 * mu_o * mu_d / (mu_o * mu_o + mu_d * mu_d)

    # Flatness is decided on the raw values, not on the computed variance:
    # the float mean of a constant array can be off by an ulp, leaving a
    # spurious variance around 1e-33.
    flat_o = bool(np.all(o == o.flat[0]))
    flat_d = bool(np.all(dn == dn.flat[0]))
    if flat_o or flat_d or var_o + var_d == 0.0:
        same = flat_o and flat_d and float(o.flat[0]) == float(dn.flat[0])
        corr_contrast = 1.0 if same else 0.0
    else:
        # correlation * contrast = (cov / (s_o s_d)) * (2 s_o s_d / (var_o + var_d))
        corr_contrast = 2.0 * cov / (var_o + var_d)
    return luminance * corr_contrast


@dataclass(frozen=True)
class ScoreValues:
    """All metrics for one (denoised, original) pair."""

    mae: float
    rmse: float
    psnr: float
    uqi: float
    mae_255: float
    rmse_255: float

    def get(self, metric: str) -> float:
        return getattr(self, metric)


def score_all(denoised: Image, original: Image, d: float = 1.0) -> ScoreValues:
    """Compute every metric at once."""
    m = mae(denoised, original)
    r = rmse(denoised, original)
    return ScoreValues(
        mae=m,
        rmse=r,
        psnr=psnr(denoised, original, d=d),
        uqi=uqi(denoised, original),
        mae_255=m * 255.0,
        rmse_255=r * 255.0,
    )


@dataclass(frozen=True)
class ScoreRow:
    """One aggregated report line: a method's metric over repetitions."""

    noise: str
    method: str
    metric: str
    mean: float
    std: float
    reps: int


def _fmt(x: float) -> str:
    # repr keeps full precision and serializes infinities as 'inf'.
    return repr(float(x))


def write_csv(rows: list[ScoreRow], path) -> None:
    """Write report rows with the fixed header noise,method,metric,mean,std,reps."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["noise", "method", "metric", "mean", "std", "reps"])
        for row in rows:
            writer.writerow([row.noise, row.method, row.metric, _fmt(row.mean), _fmt(row.std), row.reps])


def rows_from_samples(noise: str, method: str, samples: list[ScoreValues]) -> list[ScoreRow]:
    """Collapse per-repetition scores into mean/std rows, one per metric."""
    if not samples:
        raise ValueError("no score samples")
    out = []
    for metric in METRIC_NAMES:
        vals = np.asarray([s.get(metric) for s in samples], dtype=np.float64)
        out.append(ScoreRow(noise=noise, method=method, metric=metric,
                            mean=float(np.mean(vals)), std=float(np.std(vals)),
                            reps=len(samples)))
    return out


def to_markdown(rows: list[ScoreRow], title: str = "") -> str:
    """Render report rows as one markdown table per noise kind.

    Methods are table rows, metrics are columns as mean +/- std, and the best
    entry per metric column is bolded and starred.
    """
    lines: list[str] = []
    if title:
        lines.append(f"# {title}")
        lines.append("")
    noises = []
    for row in rows:
        if row.noise not in noises:
            noises.append(row.noise)
    for noise in noises:
        sub = [r for r in rows if r.noise == noise]
        methods = []
        for r in sub:
            if r.method not in methods:
                methods.append(r.method)
        cell = {(r.method, r.metric): r for r in sub}
        metrics = [m for m in METRIC_NAMES if any((meth, m) in cell for meth in methods)]
        best: dict[str, str] = {}
        for metric in metrics:
            pool = [(cell[(meth, metric)].mean, meth) for meth in methods if (meth, metric) in cell]
            if HIGHER_IS_BETTER[metric]:
                best[metric] = max(pool)[1]
            else:
                best[metric] = min(pool)[1]
        lines.append(f"## {noise}")
        lines.append("")
        lines.append("| method | " + " | ".join(m.upper() for m in metrics) + " |")
        lines.append("|" + "---|" * (len(metrics) + 1))
        for meth in methods:
            cells = []
            for metric in metrics:
                r = cell.get((meth, metric))
                if r is None:
                    cells.append("")
                    continue
                text = f"{r.mean:.6g} +/- {r.std:.3g}"
                if best[metric] == meth:
                    text = f"**{text}** *"
                cells.append(text)
            lines.append(f"| {meth} | " + " | ".join(cells) + " |")
        lines.append("")
    return "\n".join(lines)
