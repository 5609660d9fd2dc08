import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from vegrqa.embedding import (
    EmbeddingConfig,
    embed,
    first_local_minimum,
    fnn_fraction,
    mutual_information_curve,
    select_delay,
    select_dimension,
    sturges_bins,
)
from vegrqa.errors import DegenerateInputError, ParameterError, SizeError
from vegrqa.signal import TimeSeries, generate

U5 = TimeSeries([1.0, 2.0, 3.0, 4.0, 5.0])


@pytest.mark.parametrize(
    "m, tau, expected",
    [
        (1, 1, [[1], [2], [3], [4], [5]]),
        (3, 1, [[1, 2, 3], [2, 3, 4], [3, 4, 5]]),
        (2, 2, [[1, 3], [2, 4], [3, 5]]),
    ],
)
def test_embed_examples(m, tau, expected):
    traj = embed(U5, EmbeddingConfig(m, tau))
    assert traj.points.tolist() == expected
    assert traj.source_len == 5


def test_embed_too_short():
    with pytest.raises(SizeError):
        embed(U5, EmbeddingConfig(3, 2))
    with pytest.raises(ParameterError):
        EmbeddingConfig(0, 1)


@settings(max_examples=60)
@given(
    arrays(float, st.integers(2, 80), elements=st.floats(-1e6, 1e6, allow_nan=False)),
    st.integers(1, 5),
    st.integers(1, 5),
)
def test_embed_columns(u, m, tau):
    cfg = EmbeddingConfig(m, tau)
    if cfg.n_points(u.size) < 2:
        return
    pts = embed(u, cfg).points
    assert pts.shape == (u.size - (m - 1) * tau, m)
    for j in range(m):
        assert np.array_equal(pts[:, j], u[j * tau : j * tau + pts.shape[0]])


class TestMutualInformation:
    def test_matches_bruteforce(self):
        u = generate("white_noise", 400, seed=4).values
        curve = mutual_information_curve(u, 10, 9)
        ref = [oracles.histogram_mi_bits(list(u), k, 9) for k in range(11)]
        np.testing.assert_allclose(curve, ref, rtol=0, atol=1e-12)

    def test_lag_zero_is_entropy(self):
        u = generate("sine", 500, period=17).values
        bins = sturges_bins(u.size)
        curve = mutual_information_curve(u, 5)
        lo, hi = u.min(), u.max()
        idx = np.clip(np.floor((u - lo) / (hi - lo) * bins).astype(int), 0, bins - 1)
        p = np.bincount(idx, minlength=bins) / u.size
        p = p[p > 0]
        assert curve[0] == pytest.approx(-(p * np.log2(p)).sum(), abs=1e-12)

    def test_white_noise(self):
        tau, curve = select_delay(generate("white_noise", 2000, seed=1), 20)
        assert max(curve[1:]) < 0.1
        assert tau <= 3

    def test_sine_quarter_period(self):
        tau, _ = select_delay(generate("sine", 2000, period=24), 20)
        assert abs(tau - 6) <= 2

    def test_negation_symmetry(self):
        u = generate("white_noise", 600, seed=8).values + np.sin(np.arange(600) / 5.0)
        t1, c1 = select_delay(u, 20)
        t2, c2 = select_delay(-u, 20)
        assert t1 == t2
        np.testing.assert_allclose(c1, c2, atol=1e-12)

    def test_constant_series(self):
        with pytest.raises(DegenerateInputError):
            select_delay(np.ones(50), 5)

    def test_bad_args(self):
        u = generate("white_noise", 20, seed=0)
        with pytest.raises(ParameterError):
            select_delay(u, 10)
        with pytest.raises(ParameterError):
            select_delay(u, 3, bins=1)


@pytest.mark.parametrize(
    "curve, expected",
    [([5, 3, 4], 1), ([5, 4, 3, 2], None), ([5, 3, 3, 4, 2, 6], 4), ([1, 2, 1, 3], 2)],
)
def test_first_local_minimum(curve, expected):
    assert first_local_minimum(curve) == expected


class TestFalseNeighbours:
    @pytest.mark.parametrize(
        "series, tau",
        [
            (generate("sine", 300, period=24).values, 6),
            (generate("white_noise", 300, seed=2).values, 1),
            (generate("lorenz", 300, sample_every=5)[0].values, 4),
        ],
    )
    def test_matches_bruteforce(self, series, tau):
        for m in (1, 2, 3, 4):
            assert fnn_fraction(series, m, tau) == pytest.approx(
                oracles.fnn_fraction(list(series), m, tau), abs=1e-12
            )

    def test_sine_needs_two_dimensions(self):
        m, fractions = select_dimension(generate("sine", 1000, period=24), 6, 6)
        assert m == 2
        assert fractions[1] > 0.01

    def test_noise_never_unfolds(self):
        m, fractions = select_dimension(generate("white_noise", 1000, seed=1), 1, 5)
        assert m == 5
        assert all(f > 0.01 for f in fractions.values())

    def test_lorenz(self):
        x = generate("lorenz", 2000)[0]
        tau, _ = select_delay(x, 100)
        m, _ = select_dimension(x, tau, 6)
        assert m <= 4

    @settings(max_examples=25, deadline=None)
    @given(arrays(float, st.integers(30, 120), elements=st.floats(-10, 10, allow_nan=False)))
    def test_fractions_in_unit_interval(self, u):
        if np.std(u) == 0:
            return
        _, fractions = select_dimension(u, 1, 4)
        assert all(0.0 <= f <= 1.0 for f in fractions.values())

    def test_too_short(self):
        with pytest.raises(SizeError):
            select_dimension(np.arange(10.0), 3, 4)
