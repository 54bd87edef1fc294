"""Slow, independent reference implementations used as test oracles."""
import math

import numpy as np


def scalar_network(x, w_in, w_fb, theta, pulse_steps, v0, subtract=False, clamp=True):
    """Plain-Python loop over steps and neurons, no numpy vectorisation."""
    n = len(v0)
    v = list(v0)
    remaining = [0] * n
    prev = [0] * n
    out = [[0] * len(x) for _ in range(n)]
    for t, xt in enumerate(x):
        for i in range(n):
            drive = w_in[i] * xt + sum(w_fb[i][j] * prev[j] for j in range(n))
            v[i] += drive
            if v[i] >= theta:
                remaining[i] = pulse_steps
                v[i] = v[i] - theta if subtract else 0.0
            if clamp and v[i] < 0:
                v[i] = 0.0
        for i in range(n):
            high = 1 if remaining[i] > 0 else 0
            out[i][t] = high
            prev[i] = high
            if remaining[i]:
                remaining[i] -= 1
    return np.array(out, dtype=np.uint8)


def fixed_accumulator(summed, decrement=1.0, threshold=1.0):
    a, outs = 0.0, []
    for s in summed:
        a += s
        outs.append(1 if a >= threshold else 0)
        a = max(a - decrement, 0.0)
    return outs


def first_order_dsm(x):
    v, y_prev, ys = 0.0, 0.0, []
    for xt in x:
        v += xt - y_prev
        y_prev = 1.0 if v >= 0 else -1.0
        ys.append(y_prev)
    return ys


def sus_expected_counts(probabilities, n):
    return [n * p for p in probabilities]


def in_band_noise_fraction(baseband, sample_rate):
    """Share of a white process's variance that falls into ``baseband``."""
    return (baseband[1] - baseband[0]) / (sample_rate / 2)


def snr_from_powers(p_sig, p_noise):
    return 10 * math.log10(p_sig / p_noise)
