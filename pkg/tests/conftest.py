import numpy as np
import pytest

from esterr import _pykernels, kernels

try:
    from esterr import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    monkeypatch.setattr(kernels, "_impl", BACKENDS[request.param])
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_report_header(config):
    return f"esterr kernel backend at import: {kernels.BACKEND}"
