import numpy as np
import pytest

from neuroshape.netsim import NetworkConfig, SpikeRaster


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def raster_from_rows(rows, dt=1e-6):
    return SpikeRaster(per_neuron=np.asarray(rows, dtype=np.uint8), dt=dt)


@pytest.fixture
def make_raster():
    return raster_from_rows


@pytest.fixture
def single_neuron():
    return NetworkConfig(n_neurons=1)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
