import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_symmetric_bits
from vegrqa.embedding import EmbeddingConfig, embed
from vegrqa.errors import DimensionError, ParameterError, SizeError
from vegrqa.recurrence import RecurrenceMatrix, ThresholdConfig, build_matrix, epsilon_for_target_rr, joint_matrix
from vegrqa.rqa import (
    disruption_profile,
    line_histograms,
    measures,
    series_measures,
    windowed_joint_measures,
    windowed_measures,
    windowed_rows,
)
from vegrqa.signal import generate

ONES4 = RecurrenceMatrix.from_bits(np.ones((4, 4), bool))
RATE10 = ThresholdConfig.rate(0.10)
RATE30 = ThresholdConfig.rate(0.30)


def regime_shift(n=460, period=23):
    u = np.sin(2 * np.pi * np.arange(n) / period)
    u[n // 2 :] *= 3.0
    return u


class TestHistograms:
    def test_all_ones(self):
        h = line_histograms(ONES4)
        assert h.diagonal == {3: 2, 2: 2, 1: 2}
        assert h.vertical == {4: 4}

    def test_identity(self):
        h = line_histograms(RecurrenceMatrix.from_bits(np.eye(4, dtype=bool)))
        assert h.diagonal == {}
        assert h.vertical == {1: 4}

    def test_checkerboard(self):
        i, j = np.indices((4, 4))
        bits = (i + j) % 2 == 0
        h = line_histograms(RecurrenceMatrix.from_bits(bits))
        ref = bits.astype(int).tolist()
        assert h.diagonal == oracles.histogram(oracles.diagonal_runs(ref)) == {2: 2}
        assert h.vertical == oracles.histogram(oracles.vertical_runs(ref)) == {1: 8}

    def test_theiler_band(self):
        h = line_histograms(ONES4, theiler=1)
        assert h.diagonal == {2: 2, 1: 2}

    def test_bad_theiler(self):
        with pytest.raises(ParameterError):
            line_histograms(ONES4, theiler=-1)

    @settings(max_examples=60)
    @given(st.integers(1, 40), st.integers(0, 3), st.integers(0, 2**32 - 1))
    def test_conservation(self, n, theiler, seed):
        bits = random_symmetric_bits(np.random.default_rng(seed), n, 0.5)
        h = line_histograms(RecurrenceMatrix.from_bits(bits), theiler)
        i, j = np.indices(bits.shape)
        band = bits[np.abs(i - j) <= theiler].sum()
        assert h.mass(h.diagonal) + band == bits.sum()
        assert h.mass(h.vertical) == bits.sum()


class TestMeasures:
    def test_all_ones(self):
        m = measures(ONES4)
        assert m.rr == 1.0
        assert m.det == pytest.approx(10 / 12)
        assert m.lam == 1.0
        assert m.lmax == 3
        assert m.div == pytest.approx(1 / 3)

    @pytest.mark.parametrize("n", [2, 5, 17])
    def test_identity(self, n):
        m = measures(RecurrenceMatrix.from_bits(np.eye(n, dtype=bool)))
        assert m.rr == pytest.approx(1 / n)
        assert m.det is None and m.div is None
        assert m.lam == 0.0 and m.lmax == 0

    def test_sine_is_deterministic(self):
        s = generate("sine", 200, period=24)
        assert series_measures(s, EmbeddingConfig(2, 6), RATE10).det >= 0.99

    def test_lmin_precondition(self):
        with pytest.raises(ParameterError):
            measures(ONES4, lmin=1)

    def test_matches_oracle(self):
        rng = np.random.default_rng(77)
        for k in range(200):
            n = int(rng.integers(1, 41))
            bits = random_symmetric_bits(rng, n, float(rng.uniform(0.1, 0.9)), loi=bool(k % 5))
            ref = bits.astype(int).tolist()
            for theiler in (0, 1):
                rm = RecurrenceMatrix.from_bits(bits)
                h = line_histograms(rm, theiler)
                assert h.diagonal == oracles.histogram(oracles.diagonal_runs(ref, theiler))
                assert h.vertical == oracles.histogram(oracles.vertical_runs(ref))
                for lmin in (2, 3):
                    got = measures(rm, lmin, lmin, theiler)
                    assert (got.rr, got.det, got.lam, got.div, got.lmax) == oracles.measures(ref, lmin, lmin, theiler)

    @settings(max_examples=60)
    @given(st.integers(2, 30), st.integers(0, 2**32 - 1))
    def test_nonincreasing_in_min_length(self, n, seed):
        rm = RecurrenceMatrix.from_bits(random_symmetric_bits(np.random.default_rng(seed), n, 0.6))
        dets = [measures(rm, l, 2).det for l in range(2, n + 2)]
        lams = [measures(rm, 2, v).lam for v in range(2, n + 2)]
        for seq in (dets, lams):
            vals = [v for v in seq if v is not None]
            assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_theiler_from_config(self):
        rm = build_matrix(np.arange(6.0), ThresholdConfig.fixed(10.0, theiler=1))
        assert measures(rm).lmax == 4
        assert measures(rm, theiler=0).lmax == 5


class TestWindowed:
    def test_full_window_is_global(self):
        s = generate("white_noise", 120, seed=5)
        cfg = EmbeddingConfig(2, 1)
        wm = windowed_measures(s, cfg, RATE30, 120)
        assert wm.starts() == [0]
        assert wm.entries[0][1] == series_measures(s, cfg, RATE30)

    def test_starts_step(self):
        wm = windowed_measures(generate("sine", 100, period=23), EmbeddingConfig(1, 1), RATE30, 46, 5)
        assert wm.starts() == list(range(0, 55, 5))

    def test_stationary_sine(self):
        wm = windowed_measures(generate("sine", 460, period=23), EmbeddingConfig(2, 6), RATE30, 46, 1)
        det = wm.column("det")
        assert None not in det
        assert max(det) - min(det) <= 0.05

    def test_regime_shift_drops_rate(self):
        u, cfg = regime_shift(), EmbeddingConfig(2, 6)
        eps = epsilon_for_target_rr(embed(u[:230], cfg), 0.10)
        wm = windowed_measures(u, cfg, ThresholdConfig.fixed(eps), 46, 1)
        rr, starts = np.array(wm.column("rr")), np.array(wm.starts())
        pre = rr[starts + 46 <= 230].mean()
        centred = rr[starts == 230 - 23][0]
        assert centred <= 0.5 * pre

    @pytest.mark.parametrize("band", [5, 23])
    def test_regime_shift_profile(self, band):
        u, cfg = regime_shift(), EmbeddingConfig(2, 6)
        eps = epsilon_for_target_rr(embed(u[:230], cfg), 0.10)
        profile = disruption_profile(build_matrix(embed(u, cfg), ThresholdConfig.fixed(eps)), band)
        assert abs(int(np.argmin(profile)) - 230) <= band

    def test_too_small(self):
        s = generate("sine", 50, period=10)
        with pytest.raises(SizeError):
            windowed_measures(s, EmbeddingConfig(3, 2), RATE30, 5)
        with pytest.raises(SizeError):
            windowed_measures(s, EmbeddingConfig(1, 1), RATE30, 51)
        with pytest.raises(ParameterError):
            windowed_measures(s, EmbeddingConfig(1, 1), RATE30, 10, 0)

    def test_rows(self):
        wm = windowed_measures(generate("sine", 60, period=12), EmbeddingConfig(1, 1), RATE30, 46, 7)
        rows = list(windowed_rows(wm, offset=100))
        assert rows[0] == ["start_index", "end_index", "rr", "det", "lam", "div", "lmax"]
        assert [r[:2] for r in rows[1:]] == [["100", "145"], ["107", "152"], ["114", "159"]]


class TestJointWindowed:
    def test_self_joint(self):
        s = generate("white_noise", 150, seed=2)
        cfg = EmbeddingConfig(1, 1)
        a = windowed_measures(s, cfg, RATE30, 46, 3)
        j = windowed_joint_measures(s, s, cfg, RATE30, 46, 3)
        assert j.entries == a.entries

    def test_independent_noise(self):
        a = generate("white_noise", 300, seed=11)
        b = generate("white_noise", 300, seed=12)
        wm = windowed_joint_measures(a, b, EmbeddingConfig(1, 1), RATE30, 300)
        assert wm.entries[0][1].rr == pytest.approx(0.09, abs=0.03)

    def test_full_window_is_global(self):
        a = generate("white_noise", 80, seed=1)
        b = generate("sine", 80, period=23)
        cfg = EmbeddingConfig(1, 1)
        ra, rb = (build_matrix(embed(s, cfg), RATE30) for s in (a, b))
        wm = windowed_joint_measures(a, b, cfg, RATE30, 80)
        assert wm.entries[0][1] == measures(joint_matrix(ra, rb))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_joint_rate_bounded(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.random(90), np.cumsum(rng.normal(size=90))
        cfg = EmbeddingConfig(1, 1)
        j = windowed_joint_measures(a, b, cfg, RATE30, 30, 10)
        ra = windowed_measures(a, cfg, RATE30, 30, 10)
        rb = windowed_measures(b, cfg, RATE30, 30, 10)
        for x, y, z in zip(j.column("rr"), ra.column("rr"), rb.column("rr")):
            assert x <= min(y, z)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            windowed_joint_measures(np.arange(50.0), np.arange(51.0), EmbeddingConfig(1, 1), RATE30, 20)


class TestDisruption:
    def test_all_ones(self):
        rm = RecurrenceMatrix.from_bits(np.ones((30, 30), bool))
        assert np.all(disruption_profile(rm, 7) == 1.0)

    def test_white_band(self, rng):
        bits = random_symmetric_bits(rng, 60, 0.5)
        bits[10:20, :] = bits[:, 10:20] = False
        np.fill_diagonal(bits, True)
        profile = disruption_profile(RecurrenceMatrix.from_bits(bits), 3)
        assert 10 <= int(np.argmin(profile)) <= 19

    def test_band_range(self):
        with pytest.raises(ParameterError):
            disruption_profile(ONES4, 0)
        with pytest.raises(ParameterError):
            disruption_profile(ONES4, 5)
