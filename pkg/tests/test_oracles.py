"""Sanity checks on the brute-force oracles themselves, against closed forms."""

import math

import numpy as np
import pytest

from oracles import (
    direct_convolve,
    direct_dtft,
    expand_roots,
    one_pole_db,
    power_centroid,
    root_cepstrum,
    running_flow_peak,
)


def test_direct_convolve_small():
    np.testing.assert_allclose(direct_convolve([1, 2], [3, 4, 5]), [3, 10, 13, 10])


def test_expand_roots_quadratic():
    np.testing.assert_allclose(expand_roots(2.0, [1.0, 3.0]), [2, -8, 6])


def test_direct_dtft_of_impulse_is_flat():
    np.testing.assert_allclose(direct_dtft([1.0, 0.0, 0.0], [0, 100, 2000], 8000), [1, 1, 1])


def test_root_cepstrum_log_series():
    # log(1 - 0.5/z) = -0.5/z - 0.125/z^2 - ...
    assert root_cepstrum(1.0, [0.5], [], 1) == pytest.approx(-0.5)
    assert root_cepstrum(1.0, [0.5], [], 2) == pytest.approx(-0.125)
    # log(1 - z/2) = -z/2 - z^2/8 - ...
    assert root_cepstrum(1.0, [], [2.0], -1) == pytest.approx(-0.5)
    assert root_cepstrum(3.0, [], [], 0) == pytest.approx(math.log(3.0))


def test_running_flow_peak_triangle():
    d = [1.0, 1.0, -1.0, -1.0]
    assert running_flow_peak(d) == pytest.approx(2.0)


def test_power_centroid_of_dc_is_zero():
    assert power_centroid(np.ones(4), 8000, 4) == pytest.approx(0.0)


def test_one_pole_db_at_dc():
    assert one_pole_db(0.5, [0.0], 8000)[0] == pytest.approx(20 * math.log10(2.0))
