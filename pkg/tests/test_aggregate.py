"""Consensus aggregation against an independent brute-force reference.

The reference implementation below shares no code with the library: plain
Python loops, row-major candidate scan, and the vote rule evaluated in
integer arithmetic (count * denom >= num * M).  The library's vectorized
path is required to match it bit for bit.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobra_denoise.aggregate import (
    CobraParams,
    aggregate_image,
    aggregate_pixel,
    aggregate_with_bank,
    consensus_count,
    consensus_weight,
    vote_threshold,
)
from cobra_denoise.filters import apply_bank, bank_from_config
from cobra_denoise.noise import make_rng


def brute_force(noisy, outs, epsilon, alpha, window_radius):
    h, w = noisy.shape
    m = len(outs)
    result = np.zeros((h, w))
    for pr in range(h):
        for pc in range(w):
            if window_radius is None:
                r0, r1, c0, c1 = 0, h, 0, w
            else:
                r0 = max(0, pr - window_radius)
                r1 = min(h, pr + window_radius + 1)
                c0 = max(0, pc - window_radius)
                c1 = min(w, pc + window_radius + 1)
            acc = 0.0
            n = 0
            for qr in range(r0, r1):
                for qc in range(c0, c1):
                    votes = 0
                    for f in outs:
                        if abs(float(f[pr, pc]) - float(f[qr, qc])) <= epsilon:
                            votes += 1
                    if votes * alpha.denominator >= alpha.numerator * m:
                        acc += float(noisy[qr, qc])
                        n += 1
            result[pr, pc] = min(max(acc / n, 0.0), 1.0)
    return result


def _random_case(seed, shape, m):
    rng = make_rng(seed)
    noisy = rng.uniform(0, 1, size=shape)
    outs = [np.clip(noisy + rng.normal(0, 0.1, size=shape), 0, 1) for _ in range(m)]
    return noisy, outs


class TestVoteThreshold:
    def test_exact_values(self):
        assert vote_threshold(8, Fraction(4, 7)) == 5
        assert vote_threshold(7, Fraction(4, 7)) == 4
        assert vote_threshold(8, Fraction(1, 1)) == 8
        assert vote_threshold(3, Fraction(1, 3)) == 1

    def test_no_float_cutoff_artifacts(self):
        # 10 * float(0.3) rounds up past 3.0; the rational form must not
        assert vote_threshold(10, Fraction(3, 10)) == 3
        assert vote_threshold(49, Fraction(1, 7)) == 7
        assert vote_threshold(50, Fraction(1, 7)) == 8

    @given(st.integers(1, 60), st.fractions(min_value="1/100", max_value=1))
    def test_is_minimal_qualifying_count(self, m, alpha):
        thr = vote_threshold(m, alpha)
        assert thr * alpha.denominator >= alpha.numerator * m
        assert (thr - 1) * alpha.denominator < alpha.numerator * m


class TestParams:
    def test_alpha_forms(self):
        assert CobraParams(alpha="4/7").alpha == Fraction(4, 7)
        assert CobraParams(alpha=0.5).alpha == Fraction(1, 2)
        assert CobraParams(alpha=1).alpha == Fraction(1, 1)
        assert CobraParams(alpha=Fraction(2, 3)).alpha == Fraction(2, 3)

    @pytest.mark.parametrize("bad", [0, -0.5, 1.5, "7/4"])
    def test_alpha_out_of_range(self, bad):
        with pytest.raises(ValueError):
            CobraParams(alpha=bad)

    def test_window_forms(self):
        assert CobraParams(window_radius="full").window_radius is None
        assert CobraParams(window_radius=None).window_radius is None
        assert CobraParams(window_radius=3).window_radius == 3

    @pytest.mark.parametrize("bad", [0, -1, "wide"])
    def test_window_rejected(self, bad):
        with pytest.raises(ValueError):
            CobraParams(window_radius=bad)

    def test_epsilon_and_patch_radius_rejected(self):
        with pytest.raises(ValueError):
            CobraParams(epsilon=0.0)
        with pytest.raises(ValueError):
            CobraParams(patch_radius=-1)

    def test_json_round_trip(self):
        p = CobraParams(epsilon=0.15, alpha="5/8", window_radius=None, patch_radius=2)
        obj = p.to_json()
        assert obj["alpha"] == "5/8"
        assert obj["window_radius"] == "full"
        assert CobraParams.from_json(obj) == p
        q = CobraParams()
        assert CobraParams.from_json(q.to_json()) == q


class TestConsensusWeight:
    def test_count_and_weight(self):
        a = np.array([[0.1, 0.2]])
        b = np.array([[0.1, 0.9]])
        outs = [a, b]
        p, q = (0, 0), (0, 1)
        assert consensus_count(outs, p, q, epsilon=0.15) == 1
        assert consensus_weight(outs, p, q, CobraParams(epsilon=0.15, alpha="1/2")) == 1
        assert consensus_weight(outs, p, q, CobraParams(epsilon=0.15, alpha="3/4")) == 0

    def test_self_always_qualifies(self):
        outs = [np.array([[0.3]]), np.array([[0.9]])]
        assert consensus_weight(outs, (0, 0), (0, 0), CobraParams(epsilon=1e-9, alpha=1)) == 1

    def test_boundary_is_inclusive(self):
        a = np.array([[0.0, 0.25]])
        assert consensus_count([a], (0, 0), (0, 1), epsilon=0.25) == 1


class TestHandComputed:
    def test_three_pixel_row(self):
        noisy = np.array([[10.0, 12.0, 100.0]]) / 255.0
        outs = [noisy]
        params = CobraParams(epsilon=0.05, alpha=1, window_radius=5)
        out = aggregate_image(noisy, outs, params)
        expected = np.array([[(10.0 / 255.0 + 12.0 / 255.0) / 2.0,
                              (10.0 / 255.0 + 12.0 / 255.0) / 2.0,
                              100.0 / 255.0]])
        assert np.array_equal(out, expected)
        assert abs(out[0, 0] - 11.0 / 255.0) < 1e-12

    def test_constant_image_unchanged(self):
        img = np.full((6, 6), 0.42)
        out = aggregate_image(img, [img], CobraParams(epsilon=0.01, alpha=1, window_radius=2))
        assert np.max(np.abs(out - 0.42)) < 1e-15

    def test_huge_epsilon_is_window_mean(self):
        rng = make_rng(5)
        noisy = rng.uniform(0, 1, size=(5, 5))
        out = aggregate_image(noisy, [noisy], CobraParams(epsilon=10.0, alpha=1, window_radius=None))
        assert np.max(np.abs(out - noisy.mean())) < 1e-12


CASES = [
    ((6, 7), 0.1, Fraction(1, 2), 2, 3),
    ((5, 5), 0.05, Fraction(2, 3), None, 2),
    ((8, 6), 0.2, Fraction(1, 1), 3, 4),
    ((4, 9), 0.3, Fraction(1, 4), 1, 3),
    ((7, 7), 0.01, Fraction(3, 10), 10, 4),
]


class TestBruteForceEquality:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("shape,eps,alpha,radius,m", CASES)
    def test_bitwise_match(self, seed, shape, eps, alpha, radius, m):
        noisy, outs = _random_case(seed, shape, m)
        params = CobraParams(epsilon=eps, alpha=alpha, window_radius=radius)
        got = aggregate_image(noisy, outs, params)
        want = brute_force(noisy, outs, eps, alpha, radius)
        assert np.array_equal(got, want)

    def test_pixel_api_matches_image_api(self):
        noisy, outs = _random_case(11, (6, 6), 3)
        params = CobraParams(epsilon=0.12, alpha="2/3", window_radius=2)
        img = aggregate_image(noisy, outs, params)
        for pr in range(6):
            for pc in range(6):
                v = aggregate_pixel(noisy, outs, (pr, pc), params)
                assert img[pr, pc] == min(max(v, 0.0), 1.0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6),
           eps=st.sampled_from([0.02, 0.1, 0.25]),
           alpha=st.sampled_from([Fraction(1, 3), Fraction(1, 2), Fraction(4, 7), Fraction(1)]),
           radius=st.sampled_from([1, 2, None]))
    def test_bitwise_match_fuzzed(self, seed, eps, alpha, radius):
        noisy, outs = _random_case(seed, (4, 5), 2)
        params = CobraParams(epsilon=eps, alpha=alpha, window_radius=radius)
        got = aggregate_image(noisy, outs, params)
        assert np.array_equal(got, brute_force(noisy, outs, eps, alpha, radius))
        assert got.min() >= 0.0 and got.max() <= 1.0


class TestStructuralInvariances:
    def test_machine_order_irrelevant(self):
        noisy, outs = _random_case(21, (6, 6), 4)
        params = CobraParams(epsilon=0.1, alpha="2/4", window_radius=2)
        a = aggregate_image(noisy, outs, params)
        b = aggregate_image(noisy, list(reversed(outs)), params)
        assert np.array_equal(a, b)

    def test_duplicating_machines_preserves_votes(self):
        # doubling every machine doubles both count and M, so the exact
        # rational rule is unchanged
        noisy, outs = _random_case(22, (6, 6), 2)
        params = CobraParams(epsilon=0.1, alpha="1/2", window_radius=2)
        a = aggregate_image(noisy, outs, params)
        b = aggregate_image(noisy, outs + outs, params)
        assert np.array_equal(a, b)

    def test_shifting_machines_by_constant(self):
        noisy, outs = _random_case(23, (6, 6), 3)
        params = CobraParams(epsilon=0.1, alpha="2/3", window_radius=2)
        a = aggregate_image(noisy, outs, params)
        b = aggregate_image(noisy, [f - 0.25 for f in outs], params)
        assert np.array_equal(a, b)

    def test_full_window_equals_oversized_radius(self):
        noisy, outs = _random_case(24, (5, 7), 2)
        full = aggregate_image(noisy, outs, CobraParams(epsilon=0.1, alpha="1/2",
                                                        window_radius=None))
        big = aggregate_image(noisy, outs, CobraParams(epsilon=0.1, alpha="1/2",
                                                       window_radius=50))
        assert np.array_equal(full, big)


class TestPlumbing:
    def test_progress_callback(self):
        noisy, outs = _random_case(31, (4, 4), 2)
        calls = []
        aggregate_image(noisy, outs, CobraParams(epsilon=0.1, alpha=1, window_radius=2),
                        progress=lambda done, total: calls.append((done, total)))
        assert calls, "no progress reported"
        totals = {t for _, t in calls}
        assert totals == {25}
        dones = [d for d, _ in calls]
        assert dones == sorted(dones)
        assert calls[-1][0] == 25

    def test_progress_with_radius_exceeding_image(self):
        noisy, outs = _random_case(32, (2, 2), 1)
        calls = []
        aggregate_image(noisy, outs, CobraParams(epsilon=0.1, alpha=1, window_radius=3),
                        progress=lambda done, total: calls.append((done, total)))
        assert calls[-1] == (49, 49)

    def test_no_machines_rejected(self):
        with pytest.raises(ValueError):
            aggregate_image(np.zeros((3, 3)), [], CobraParams())

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            aggregate_image(np.zeros((3, 3)), [np.zeros((3, 4))], CobraParams())

    def test_with_bank_matches_manual_pipeline(self, small_image):
        bank = bank_from_config([{"name": "median"}, {"name": "gaussian"}])
        params = CobraParams(epsilon=0.1, alpha="1/2", window_radius=3)
        a = aggregate_with_bank(small_image, bank, params)
        b = aggregate_image(small_image, apply_bank(bank, small_image), params)
        assert np.array_equal(a, b)
