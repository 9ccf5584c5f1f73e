"""Hold-out grid search for the aggregation parameters.

The tolerance epsilon and vote fraction alpha are picked by exhaustively
scoring every grid combination on held-out tuning pairs; evaluation pairs are
kept apart and never touched by the search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .aggregate import CobraParams, aggregate_image, _as_alpha
from .filters import FilterBank, apply_bank
from .image import Image
from .metrics import METRIC_NAMES, HIGHER_IS_BETTER, ScoreValues, score_all


def theoretical_epsilon(n_pixels: int, n_machines: int, scale_constant: float = 1.0) -> float:
    """Tolerance scale C * n^(-1 / (M + 2)) suggested by the risk bound.

    Decreases in the pixel count n and approaches C from below as the pool
    grows.
    """
    if n_pixels < 1:
        raise ValueError(f"n_pixels must be >= 1, got {n_pixels}")
    if n_machines < 1:
        raise ValueError(f"n_machines must be >= 1, got {n_machines}")
    return scale_constant * float(n_pixels) ** (-1.0 / (n_machines + 2))


@dataclass(frozen=True)
class ImagePair:
    """A noisy image with its clean reference."""

    pair_id: str
    noisy: Image
    clean: Image

    def __post_init__(self):
        if self.noisy.shape != self.clean.shape:
            raise ValueError(f"pair {self.pair_id}: noisy {self.noisy.shape} vs clean {self.clean.shape}")


@dataclass
class DataSplit:
    """Hold-out split: tuning pairs drive the search, eval pairs never do."""

    tune_pairs: list[ImagePair]
    eval_pairs: list[ImagePair] = field(default_factory=list)

    def __post_init__(self):
        if not self.tune_pairs:
            raise ValueError("need at least one tuning pair")


DEFAULT_EPSILONS = (0.05, 0.1, 0.15, 0.2, 0.3, 0.4)


@dataclass
class TuningGrid:
    """Search space: epsilons ascending, alphas as exact fractions."""

    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    alphas: tuple[Fraction, ...] = ()
    objective: str = "rmse"

    def __post_init__(self):
        self.epsilons = tuple(float(e) for e in self.epsilons)
        if not self.epsilons:
            raise ValueError("empty epsilon grid")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        if list(self.epsilons) != sorted(self.epsilons):
            raise ValueError("epsilons must be ascending")
        self.alphas = tuple(_as_alpha(a) for a in self.alphas)
        if self.objective not in METRIC_NAMES:
            raise ValueError(f"objective must be one of {METRIC_NAMES}, got {self.objective!r}")


def default_grid(n_machines: int, objective: str = "rmse") -> TuningGrid:
    """Default search space: standard epsilons and alphas k/M for k = 1..M."""
    alphas = tuple(Fraction(k, n_machines) for k in range(1, n_machines + 1))
    return TuningGrid(epsilons=DEFAULT_EPSILONS, alphas=alphas, objective=objective)


@dataclass(frozen=True)
class GridPoint:
    """One scored grid combination."""

    epsilon: float
    alpha: Fraction
    score: float


@dataclass
class GridSearchResult:
    best: CobraParams
    table: list[GridPoint]
    objective: str


def grid_search(split: DataSplit, bank: FilterBank, grid: TuningGrid | None = None,
                window_radius: int | None = 10, patch_radius: int = 1) -> GridSearchResult:
    """Exhaustive (epsilon, alpha) search on the tuning pairs.

    The bank runs once per tuning pair; every grid combination reuses those
    outputs.  The score of a combination is the objective metric averaged
    over tuning pairs.  Ties prefer the smaller epsilon, then the larger
    alpha.  Eval pairs are never touched.

    Returns:
        GridSearchResult with the winning CobraParams and the full score
        table in grid order (epsilon outer, alpha inner).
    """
    if grid is None:
        grid = default_grid(bank.m)
    if not grid.alphas:
        grid = TuningGrid(epsilons=grid.epsilons,
                          alphas=tuple(Fraction(k, bank.m) for k in range(1, bank.m + 1)),
                          objective=grid.objective)
    higher = HIGHER_IS_BETTER[grid.objective]
    outs_per_pair = [(pair, apply_bank(bank, pair.noisy)) for pair in split.tune_pairs]

    table: list[GridPoint] = []
    best_point: GridPoint | None = None
    for eps in grid.epsilons:
        for alpha in grid.alphas:
            params = CobraParams(epsilon=eps, alpha=alpha,
                                 window_radius=window_radius, patch_radius=patch_radius)
            scores = []
            for pair, outs in outs_per_pair:
                agg = aggregate_image(pair.noisy, outs, params)
                scores.append(score_all(agg, pair.clean).get(grid.objective))
            point = GridPoint(epsilon=eps, alpha=alpha, score=float(np.mean(scores)))
            table.append(point)
            if best_point is None:
                best_point = point
                continue
            better = point.score > best_point.score if higher else point.score < best_point.score
            if better:
                best_point = point
            elif point.score == best_point.score:
                # tie: smaller epsilon wins, then larger alpha
                if (point.epsilon < best_point.epsilon
                        or (point.epsilon == best_point.epsilon and point.alpha > best_point.alpha)):
                    best_point = point
    best = CobraParams(epsilon=best_point.epsilon, alpha=best_point.alpha,
                       window_radius=window_radius, patch_radius=patch_radius)
    return GridSearchResult(best=best, table=table, objective=grid.objective)


@dataclass(frozen=True)
class EvalRow:
    """Held-out score of fixed parameters on one pair."""

    pair_id: str
    params: CobraParams
    scores: ScoreValues


def evaluate_params(params: CobraParams, eval_pairs: list[ImagePair], bank: FilterBank) -> list[EvalRow]:
    """Score fixed parameters on each held-out pair."""
    if not eval_pairs:
        raise ValueError("no evaluation pairs")
    rows = []
    for pair in eval_pairs:
        outs = apply_bank(bank, pair.noisy)
        agg = aggregate_image(pair.noisy, outs, params)
        rows.append(EvalRow(pair_id=pair.pair_id, params=params, scores=score_all(agg, pair.clean)))
    return rows
