"""Brute-force reference routines used as independent oracles.

These deliberately avoid the package code paths: plain loops, direct
summations and closed forms.
"""

import cmath
import math

import mpmath
import numpy as np


def direct_convolve(a, b):
    out = [0.0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return np.array(out)


def expand_roots(gain, roots, digits=60):
    """Coefficients of ``gain * prod(x - r)``, highest power first.

    Repeated multiplication in extended precision: in doubles the expansion
    of a few hundred near-unit-circle roots loses every significant digit.
    """
    with mpmath.workdps(digits):
        coeffs = [mpmath.mpc(complex(gain))]
        for r in roots:
            r = mpmath.mpc(complex(r))
            nxt = coeffs + [mpmath.mpc(0)]
            for k in range(1, len(nxt)):
                nxt[k] -= r * coeffs[k - 1]
            coeffs = nxt
        return np.array([complex(c) for c in coeffs])


def direct_dtft(x, freqs, sample_rate):
    """``X(f) = sum x[n] exp(-j 2 pi f n / fs)`` by explicit summation."""
    out = []
    for f in freqs:
        w = 2.0 * math.pi * f / sample_rate
        out.append(sum(v * cmath.exp(-1j * w * n) for n, v in enumerate(x)))
    return np.array(out)


def root_cepstrum(gain, causal, anticausal, n):
    """Cepstrum of ``gain * prod(1 - c z^-1) * prod(1 - z / a)`` from the log series, one term at a time."""
    if n == 0:
        return math.log(abs(gain))
    total = 0j
    if n > 0:
        for c in causal:
            total += -(c**n) / n
    else:
        for a in anticausal:
            total += -((1.0 / a) ** (-n)) / (-n)
    return total.real


def running_flow_peak(derivative):
    """Peak of the flow obtained by integrating backwards from the last sample."""
    flow, best = 0.0, 0.0
    for v in reversed(list(derivative)[1:]):
        flow -= v
        best = max(best, flow)
    return best


def power_centroid(x, sample_rate, n_fft):
    spec = np.fft.rfft(np.asarray(x, dtype=float), n_fft)
    num = den = 0.0
    for k, s in enumerate(spec):
        p = abs(s) ** 2
        num += k * sample_rate / n_fft * p
        den += p
    return num / den


def one_pole_db(pole, freqs, sample_rate):
    """dB response of ``1 / (1 - pole z^-1)`` at the given frequencies."""
    out = []
    for f in freqs:
        z = cmath.exp(1j * 2.0 * math.pi * f / sample_rate)
        out.append(-20.0 * math.log10(abs(1.0 - pole / z)))
    return np.array(out)
