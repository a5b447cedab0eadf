import numpy as np
import pytest

from bbsm import FilterSpec, build_csy_path, simulate_stock_prices

from helpers import make_market


@pytest.fixture(scope="session")
def market():
    """One 600-step simulated index shared by the calibration tests."""
    return make_market(600, seed=7)


@pytest.fixture(scope="session")
def market_path(market):
    return build_csy_path(market, FilterSpec())


# Generator coefficients used by every parameter-recovery test; the synthetic
# stock below satisfies the fitted regression exactly (noise_std = 0).
STOCK_TRUTH = {"a": 0.015, "mu": 2e-4, "v": 0.8, "sigma": 2e-3, "gamma": 0.06}


@pytest.fixture(scope="session")
def stock(market):
    return simulate_stock_prices(market, a0=95.0, **STOCK_TRUTH)


@pytest.fixture(scope="session")
def warm_kernel():
    """Compile the tree kernel once so timed tests measure the walk, not numba."""
    from bbsm import _treecore

    _treecore.warm_up()
    return _treecore.HAVE_NUMBA
