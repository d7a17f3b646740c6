"""Shared synthetic-series builders used across the test modules."""

import numpy as np
import pytest

from marketdyn.timeseries import PriceSeries


def oscillating_pair(n=1000, base_amp=0.10, jitter=True):
    """Antiphase alternating pair around constant unit supports.

    Amplitudes cycle through ~10% with a small deterministic modulation so
    consecutive pair returns are not all identical (keeps the Sharpe defined).
    """
    amps = np.array([0.10, 0.11, 0.10, 0.09]) * (base_amp / 0.10)
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    a = amps[np.arange(n) % 4] * signs if jitter else base_amp * signs
    p1 = PriceSeries.from_values(1.0 + a)
    p2 = PriceSeries.from_values(1.0 - a)
    return p1, p2


def period20_pair(n=1000, drift=0.01):
    """Drifting antiphase pair oscillating with period 20 (square + triangle mix)."""
    t = np.arange(n)
    tri = 2.0 * np.abs((t % 20) / 20.0 - 0.5) * 2 - 1
    sq = np.where((t % 20) < 10, 1.0, -1.0)
    wave = 0.07 * sq + 0.03 * tri
    trend = np.exp(drift * t)
    return (
        PriceSeries.from_values(trend * (1 + wave)),
        PriceSeries.from_values(trend * (1 - wave)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
