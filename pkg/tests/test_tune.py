"""Grid search behavior: ordering, tie rules, hold-out isolation."""

from fractions import Fraction

import numpy as np
import pytest

from cobra_denoise.aggregate import CobraParams, aggregate_image
from cobra_denoise.filters import DenoiseFilter, FilterBank, bank_from_config
from cobra_denoise.metrics import HIGHER_IS_BETTER, score_all
from cobra_denoise.noise import add_gaussian, make_rng
from cobra_denoise.tune import (
    DEFAULT_EPSILONS,
    DataSplit,
    ImagePair,
    TuningGrid,
    default_grid,
    evaluate_params,
    grid_search,
    theoretical_epsilon,
)


class TestTheoreticalEpsilon:
    def test_power_of_two_case(self):
        # 262144 = 2^18 and M = 7 gives exponent -1/9, so the value is 2^-2
        assert abs(theoretical_epsilon(512 * 512, 7) - 0.25) < 1e-12

    def test_scale_constant_multiplies(self):
        base = theoretical_epsilon(1000, 4)
        assert abs(theoretical_epsilon(1000, 4, 3.0) - 3.0 * base) < 1e-12

    def test_decreasing_in_pixel_count(self):
        values = [theoretical_epsilon(n, 5) for n in (64, 256, 4096, 10**6)]
        assert values == sorted(values, reverse=True)
        assert all(v > 0 for v in values)

    def test_approaches_scale_from_below_as_pool_grows(self):
        values = [theoretical_epsilon(10**4, m) for m in (1, 3, 8, 30)]
        assert values == sorted(values)
        assert all(v < 1.0 for v in values)

    def test_validation(self):
        with pytest.raises(ValueError):
            theoretical_epsilon(0, 5)
        with pytest.raises(ValueError):
            theoretical_epsilon(100, 0)


class TestGridConfig:
    def test_default_grid_alphas(self):
        grid = default_grid(4)
        assert grid.epsilons == DEFAULT_EPSILONS
        assert grid.alphas == (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))
        assert grid.objective == "rmse"

    def test_alpha_strings_parsed(self):
        grid = TuningGrid(epsilons=(0.1,), alphas=("4/7", 0.5))
        assert grid.alphas == (Fraction(4, 7), Fraction(1, 2))

    def test_validation(self):
        with pytest.raises(ValueError):
            TuningGrid(epsilons=())
        with pytest.raises(ValueError):
            TuningGrid(epsilons=(0.2, 0.1))
        with pytest.raises(ValueError):
            TuningGrid(epsilons=(-0.1, 0.2))
        with pytest.raises(ValueError):
            TuningGrid(epsilons=(0.1,), objective="speed")

    def test_pair_shape_checked(self):
        with pytest.raises(ValueError):
            ImagePair("x", np.zeros((3, 3)), np.zeros((4, 3)))
        with pytest.raises(ValueError):
            DataSplit(tune_pairs=[])


def _identity_bank(n=2):
    filters = tuple(DenoiseFilter(name=f"id{i}", params={}, apply=lambda img: img.copy())
                    for i in range(n))
    return FilterBank(filters=filters)


def _noisy_pair(seed, shape=(12, 12)):
    rng = make_rng(seed)
    clean = np.tile(np.linspace(0.2, 0.8, shape[1]), (shape[0], 1))
    noisy = add_gaussian(clean, 127.5, 20.0, rng)
    return ImagePair(pair_id=f"p{seed}", noisy=noisy, clean=clean)


class TestGridSearch:
    def test_table_in_grid_order(self):
        split = DataSplit(tune_pairs=[_noisy_pair(0)])
        grid = TuningGrid(epsilons=(0.1, 0.2), alphas=(Fraction(1, 2), Fraction(1)))
        result = grid_search(split, _identity_bank(), grid, window_radius=2)
        combos = [(p.epsilon, p.alpha) for p in result.table]
        assert combos == [(0.1, Fraction(1, 2)), (0.1, Fraction(1)),
                          (0.2, Fraction(1, 2)), (0.2, Fraction(1))]

    def test_all_tied_prefers_small_epsilon_large_alpha(self):
        # constant noisy image: every combination produces the same constant
        pair = ImagePair("const", np.full((8, 8), 0.6), np.full((8, 8), 0.5))
        grid = TuningGrid(epsilons=(0.05, 0.1, 0.3), alphas=(Fraction(1, 2), Fraction(1)))
        result = grid_search(DataSplit(tune_pairs=[pair]), _identity_bank(), grid,
                             window_radius=2)
        scores = {p.score for p in result.table}
        assert len(scores) == 1
        assert result.best.epsilon == 0.05
        assert result.best.alpha == Fraction(1)

    def _reference_best(self, table, objective):
        higher = HIGHER_IS_BETTER[objective]
        best = table[0]
        for point in table[1:]:
            if (point.score > best.score) if higher else (point.score < best.score):
                best = point
            elif point.score == best.score and (
                    point.epsilon < best.epsilon
                    or (point.epsilon == best.epsilon and point.alpha > best.alpha)):
                best = point
        return best

    @pytest.mark.parametrize("objective", ["rmse", "psnr", "uqi", "mae"])
    def test_best_is_argopt_of_table(self, objective):
        split = DataSplit(tune_pairs=[_noisy_pair(1), _noisy_pair(2)])
        grid = TuningGrid(epsilons=(0.05, 0.15, 0.3), alphas=(Fraction(1, 2), Fraction(1)),
                          objective=objective)
        result = grid_search(split, _identity_bank(), grid, window_radius=3)
        assert len(result.table) == 6
        ref = self._reference_best(result.table, objective)
        assert result.best.epsilon == ref.epsilon
        assert result.best.alpha == ref.alpha
        assert result.objective == objective

    def test_table_scores_reproducible_by_hand(self):
        pair = _noisy_pair(3, shape=(9, 9))
        bank = _identity_bank(1)
        grid = TuningGrid(epsilons=(0.1, 0.25), alphas=(Fraction(1),))
        result = grid_search(DataSplit(tune_pairs=[pair]), bank, grid, window_radius=2)
        for point in result.table:
            params = CobraParams(epsilon=point.epsilon, alpha=point.alpha, window_radius=2)
            agg = aggregate_image(pair.noisy, [pair.noisy], params)
            assert point.score == score_all(agg, pair.clean).rmse

    def test_missing_alphas_filled_from_bank_size(self):
        split = DataSplit(tune_pairs=[_noisy_pair(4, shape=(8, 8))])
        grid = TuningGrid(epsilons=(0.1,), alphas=())
        result = grid_search(split, _identity_bank(3), grid, window_radius=2)
        assert [p.alpha for p in result.table] == [Fraction(1, 3), Fraction(2, 3), Fraction(1)]

    def test_eval_pairs_never_filtered(self):
        seen = []

        def spy_apply(img):
            seen.append(img)
            return img.copy()

        bank = FilterBank(filters=(DenoiseFilter(name="spy", params={}, apply=spy_apply),))
        tune_pairs = [_noisy_pair(5), _noisy_pair(6)]
        eval_pairs = [_noisy_pair(7)]
        split = DataSplit(tune_pairs=tune_pairs, eval_pairs=eval_pairs)
        grid = TuningGrid(epsilons=(0.1, 0.2), alphas=(Fraction(1),))
        grid_search(split, bank, grid, window_radius=2)
        # the bank ran once per tuning pair and never saw the eval pair
        assert len(seen) == len(tune_pairs)
        for img in seen:
            assert any(img is p.noisy for p in tune_pairs)
            assert not any(img is p.noisy for p in eval_pairs)

    def test_default_grid_from_bank_size(self):
        split = DataSplit(tune_pairs=[_noisy_pair(8, shape=(6, 6))])
        result = grid_search(split, _identity_bank(2), None, window_radius=1)
        assert len(result.table) == len(DEFAULT_EPSILONS) * 2

    def test_window_radius_carried_into_best(self):
        split = DataSplit(tune_pairs=[_noisy_pair(9, shape=(6, 6))])
        grid = TuningGrid(epsilons=(0.1,), alphas=(Fraction(1),))
        result = grid_search(split, _identity_bank(), grid, window_radius=None)
        assert result.best.window_radius is None


class TestEvaluateParams:
    def test_rows_match_direct_pipeline(self):
        bank = bank_from_config([{"name": "median"}, {"name": "gaussian"}])
        pairs = [_noisy_pair(10, shape=(10, 10)), _noisy_pair(11, shape=(10, 10))]
        params = CobraParams(epsilon=0.15, alpha="1/2", window_radius=3)
        rows = evaluate_params(params, pairs, bank)
        assert [r.pair_id for r in rows] == ["p10", "p11"]
        from cobra_denoise.filters import apply_bank

        for row, pair in zip(rows, pairs):
            agg = aggregate_image(pair.noisy, apply_bank(bank, pair.noisy), params)
            assert row.scores == score_all(agg, pair.clean)

    def test_empty_eval_rejected(self):
        with pytest.raises(ValueError):
            evaluate_params(CobraParams(), [], _identity_bank())
