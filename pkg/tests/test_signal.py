import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glottcc import ParameterError, RangeError, SampleBuffer, WindowSpec, convolve, extract_frame, make_window
from oracles import direct_convolve

alphas = st.floats(0.7, 1.0)
lengths = st.integers(8, 1100)


class TestSampleBuffer:
    def test_duration(self):
        assert SampleBuffer(np.zeros(1600), 16000).duration == pytest.approx(0.1)

    @pytest.mark.parametrize("rate", [0, -8000, 8000.5])
    def test_bad_rate(self, rate):
        with pytest.raises(ParameterError):
            SampleBuffer(np.zeros(4), rate)

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite(self, bad):
        with pytest.raises(ParameterError):
            SampleBuffer(np.array([0.0, bad]), 8000)


class TestWindow:
    @pytest.mark.parametrize("n", [8, 9, 64, 321])
    def test_alpha_one_is_hanning(self, n):
        k = np.arange(n)
        expected = 0.5 - 0.5 * np.cos(2 * np.pi * k / (n - 1))
        np.testing.assert_allclose(make_window(WindowSpec(1.0, n)), expected, atol=1e-12)

    @given(alphas, lengths)
    def test_endpoints_exactly_zero(self, alpha, n):
        w = make_window(WindowSpec(alpha, n))
        assert w[0] == 0.0 and w[-1] == 0.0

    @given(alphas, st.integers(4, 500))
    def test_odd_midpoint_is_one(self, alpha, half):
        n = 2 * half + 1
        w = make_window(WindowSpec(alpha, n))
        assert w[half] == pytest.approx(1.0, abs=1e-12)
        assert w.max() <= 1.0 + 1e-12

    @given(alphas, lengths)
    def test_symmetric(self, alpha, n):
        w = make_window(WindowSpec(alpha, n))
        np.testing.assert_allclose(w, w[::-1], atol=1e-12)

    @given(st.floats(0.75, 1.0), lengths)
    def test_non_negative_from_three_quarters(self, alpha, n):
        assert make_window(WindowSpec(alpha, n)).min() >= -1e-12

    @given(st.floats(0.7, 0.7499), lengths)
    def test_shallow_negative_lobe_below_three_quarters(self, alpha, n):
        # as a polynomial in c = cos(phase) the window has its minimum at c = 1 / (4 (1 - alpha))
        floor = ((2 * alpha - 1) - 1 / (8 * (1 - alpha))) / 2
        assert make_window(WindowSpec(alpha, n)).min() >= floor - 1e-12

    def test_default_window_lobe_depth(self):
        w = make_window(WindowSpec(0.7, 100001))
        assert w.min() == pytest.approx(-1 / 120, abs=1e-6)

    @pytest.mark.parametrize("alpha,n", [(0.69, 16), (1.01, 16), (0.8, 7), (0.8, 10.5)])
    def test_invalid_spec(self, alpha, n):
        with pytest.raises(ParameterError):
            WindowSpec(alpha, n)

    def test_rejects_non_spec(self):
        with pytest.raises(ParameterError):
            make_window((0.8, 16))


class TestExtractFrame:
    def test_two_periods_at_100_hz(self):
        sig = SampleBuffer(np.zeros(2000), 16000)
        frame = extract_frame(sig, 1000, 160, alpha=0.7, periods=2)
        assert len(frame) == 320
        assert frame.gci_index == 159

    def test_ones_times_hanning(self):
        sig = SampleBuffer(np.ones(1000), 16000)
        frame = extract_frame(sig, 500, 100, alpha=1.0, periods=2)
        np.testing.assert_array_equal(frame.windowed_samples, make_window(WindowSpec(1.0, 200)))

    def test_gci_aligned_with_frame_centre(self, vowel_a):
        truth = vowel_a.glottal_derivative_truth
        for gci in vowel_a.gci_samples[2:6]:
            frame = extract_frame(truth, int(gci), vowel_a.period_samples, 0.7, 2.0)
            assert abs(int(np.argmin(frame.windowed_samples)) - frame.gci_index) <= 1

    @pytest.mark.parametrize("gci", [50, 1950])
    def test_out_of_bounds(self, gci):
        sig = SampleBuffer(np.ones(2000), 16000)
        with pytest.raises(RangeError):
            extract_frame(sig, gci, 160)

    @settings(max_examples=30)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_linear(self, a, b):
        rng = np.random.default_rng(1)
        x, y = rng.standard_normal(600), rng.standard_normal(600)
        f = lambda s: extract_frame(SampleBuffer(s, 16000), 300, 100, 0.8, 2.5).windowed_samples
        np.testing.assert_allclose(f(a * x + b * y), a * f(x) + b * f(y), atol=1e-9)


class TestConvolve:
    def test_delta_identity(self):
        np.testing.assert_array_equal(convolve([1, 0, 0], [3.0, 4.0]), [3, 4, 0, 0])

    def test_ones(self):
        np.testing.assert_array_equal(convolve([1, 1], [1, 1]), [1, 2, 1])

    def test_against_direct_sum(self, rng):
        a, b = rng.standard_normal(8), rng.standard_normal(8)
        np.testing.assert_allclose(convolve(a, b), direct_convolve(a, b), atol=1e-12)

    @pytest.mark.parametrize("a,b", [([], [1.0]), ([1.0], [])])
    def test_empty(self, a, b):
        with pytest.raises(ParameterError):
            convolve(a, b)
