import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import lfilter

from glottcc import NumericalError, ParameterError
from glottcc.lf import (
    GRID_AM,
    GRID_F0,
    GRID_OQ,
    LFParams,
    VOWELS,
    VocalTractModel,
    filter_source,
    formant_table,
    lf_derivative_cycle,
    lf_open_phase,
    synthesize,
    test_grid as build_grid,
    vocal_tract,
)
from oracles import direct_dtft

FS = 16000
grid_params = st.builds(
    LFParams,
    f0=st.sampled_from(GRID_F0).map(float),
    oq=st.sampled_from(GRID_OQ).map(float),
    am=st.sampled_from(GRID_AM).map(float),
)


def open_phase_peak(params, fs=FS):
    """Glottal formant of the isolated open phase, by direct DTFT on a 1 Hz grid."""
    freqs = np.arange(1.0, 1000.0, 1.0)
    mag = np.abs(direct_dtft(lf_open_phase(params, fs), freqs, fs))
    return freqs[np.argmax(mag)]


class TestParams:
    @pytest.mark.parametrize("kw", [dict(f0=0), dict(oq=1.0), dict(oq=0.0), dict(am=0.5), dict(am=1.0), dict(ee=0)])
    def test_invalid(self, kw):
        base = dict(f0=100.0, oq=0.6, am=0.7)
        base.update(kw)
        with pytest.raises(ParameterError):
            LFParams(**base)


class TestCycle:
    def test_reference_cycle_minimum(self):
        cycle = lf_derivative_cycle(LFParams(100.0, 0.6, 0.7), FS)
        assert len(cycle) == 160
        assert int(np.argmin(cycle)) == 96
        assert cycle[96] == pytest.approx(-1.0, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(grid_params)
    def test_area_balance(self, params):
        cycle = lf_derivative_cycle(params, FS)
        assert abs(np.cumsum(cycle)[-1]) / (params.ee * FS / params.f0) < 1e-3

    @settings(max_examples=60, deadline=None)
    @given(grid_params)
    def test_gci_sample_holds_minus_ee(self, params):
        cycle = lf_derivative_cycle(params, FS)
        te = int(np.floor(params.oq * len(cycle) + 0.5))
        assert cycle[te] == pytest.approx(-params.ee, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(grid_params.filter(lambda p: p.am >= 0.65))
    def test_gci_is_cycle_minimum(self, params):
        cycle = lf_derivative_cycle(params, FS)
        te = int(np.floor(params.oq * len(cycle) + 0.5))
        assert abs(int(np.argmin(cycle)) - te) <= 1

    def test_lowest_asymmetry_undershoots_before_gci(self):
        # with am = 0.6 the open-phase oscillation reaches its trough before te
        cycle = lf_derivative_cycle(LFParams(100.0, 0.9, 0.6), FS)
        assert cycle.min() < -1.0
        assert int(np.argmin(cycle)) < 144

    @pytest.mark.parametrize("f0", GRID_F0)
    def test_lower_open_quotient_raises_glottal_formant(self, f0):
        assert open_phase_peak(LFParams(f0, 0.4, 0.75)) > open_phase_peak(LFParams(f0, 0.9, 0.75))

    def test_open_phase_ends_at_gci(self):
        params = LFParams(100.0, 0.6, 0.7)
        op = lf_open_phase(params, FS)
        assert len(op) == 97 and op[-1] == pytest.approx(-1.0)

    def test_open_phase_does_not_fit(self):
        with pytest.raises(ParameterError):
            lf_derivative_cycle(LFParams(8000.0, 0.4, 0.7), FS)

    def test_return_phase_longer_than_closed_interval(self):
        # oq close to 1 leaves less closed time than the return constant
        with pytest.raises((NumericalError, ParameterError)):
            lf_derivative_cycle(LFParams(100.0, 0.999, 0.7), FS)


class TestTract:
    @pytest.mark.parametrize("vowel", VOWELS)
    def test_four_formants_stable(self, vowel):
        table = formant_table()
        assert len(table[vowel]) == 4
        tract = vocal_tract(vowel, FS)
        assert len(tract.denominator) == 9
        assert np.max(np.abs(np.roots(tract.denominator))) < 1.0

    def test_unknown_vowel(self):
        with pytest.raises(ParameterError):
            vocal_tract("x")

    def test_unstable_tract_rejected(self):
        with pytest.raises(ParameterError):
            VocalTractModel("bad", np.array([1.0, -2.5, 1.5]))

    def test_resonance_near_first_formant(self):
        tract = vocal_tract("a", FS)
        freqs = np.arange(500, 1000, 1.0)
        mag = 1 / np.abs(direct_dtft(tract.denominator, freqs, FS))
        assert abs(freqs[np.argmax(mag)] - 730) < 40


class TestSynthesize:
    def test_lengths_and_gcis(self):
        utt = synthesize(LFParams(100.0, 0.6, 0.7), vocal_tract("a"), 10, FS)
        assert len(utt.speech) == 1600 == len(utt.glottal_derivative_truth)
        assert len(utt.gci_samples) == 10
        assert np.all(np.diff(utt.gci_samples) == 160)

    def test_impulse_train_gives_repeated_impulse_response(self):
        tract = vocal_tract("i", FS)
        period, reps = 400, 3
        train = np.zeros(period * reps)
        train[::period] = 1.0
        out = filter_source(train, tract)
        h = lfilter([1.0], tract.denominator, np.r_[1.0, np.zeros(period * reps - 1)])
        expected = sum(np.r_[np.zeros(k * period), h[: period * reps - k * period]] for k in range(reps))
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_gci_matches_truth_minimum(self, vowel_a):
        truth = vowel_a.glottal_derivative_truth.samples
        p = vowel_a.period_samples
        for k, g in enumerate(vowel_a.gci_samples):
            assert abs(k * p + int(np.argmin(truth[k * p : (k + 1) * p])) - g) <= 1

    def test_linear_in_ee(self):
        tract = vocal_tract("y", FS)
        a = synthesize(LFParams(120.0, 0.5, 0.8, 1.0), tract, 4, FS)
        b = synthesize(LFParams(120.0, 0.5, 0.8, 2.0), tract, 4, FS)
        np.testing.assert_allclose(b.speech.samples, 2 * a.speech.samples, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(b.glottal_derivative_truth.samples, 2 * a.glottal_derivative_truth.samples)

    def test_finite_output(self, vowel_a):
        assert np.all(np.isfinite(vowel_a.speech.samples))

    def test_too_few_periods(self):
        with pytest.raises(ParameterError):
            synthesize(LFParams(100.0, 0.6, 0.7), vocal_tract("a"), 2, FS)


class TestGrid:
    def test_size_and_origin(self):
        grid = build_grid()
        assert len(grid) == 7 * 11 * 7 * 4 == 2156
        params, vowel = grid[0]
        assert (params.f0, params.oq, params.am, vowel) == (60.0, 0.4, 0.6, "a")

    def test_all_valid_and_distinct(self):
        grid = build_grid()
        assert all(isinstance(p, LFParams) for p, _ in grid)
        assert len({(p.f0, p.oq, p.am, v) for p, v in grid}) == 2156

    def test_every_condition_synthesises(self):
        for params, _ in build_grid()[::4 * 7]:
            lf_derivative_cycle(params, FS)
