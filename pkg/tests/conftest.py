import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo reproductions")


@pytest.fixture
def deconvolution_sections():
    # section -> key -> value, as read from an experiment file
    return {
        "experiment": {"name": "deconv_small", "n_grid": "2^6..2^10", "replications": "3", "base_seed": "11"},
        "operator": {"kind": "convolution", "q": "1"},
        "ellipsoid": {"d": "1", "s": "2", "L": "1"},
        "truth": {"generator": "fixed_trig"},
    }
