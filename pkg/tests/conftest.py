import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from qrw import _kernels_py, kernels  # noqa: E402

settings.register_profile("qrw", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qrw")

try:
    from qrw import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = ["python"] + (["cython"] if _compiled is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available kernel implementation."""
    impl = _kernels_py if request.param == "python" else _compiled
    for name in ("theta_pairs", "coin_step", "szego_ratio"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _disk(max_abs):
    return st.builds(
        lambda r, t: complex(r * np.cos(t), r * np.sin(t)),
        st.floats(0.0, max_abs), st.floats(-np.pi, np.pi))


alphas_st = st.lists(_disk(0.5), min_size=1, max_size=24)
unit_angle = st.floats(-np.pi, np.pi)


@st.composite
def coins_st(draw, min_c11=0.1):
    """Unitary coins ``e^{i phi} [[c e^{i s}, s' e^{i u}], [-s' e^{-i u}, c e^{-i s}]]``."""
    c = draw(st.floats(min_c11, 1.0))
    s = np.sqrt(max(0.0, 1 - c * c))
    phi, p1, p2 = draw(unit_angle), draw(unit_angle), draw(unit_angle)
    m = np.array([[c * np.exp(1j * p1), s * np.exp(1j * p2)],
                  [-s * np.exp(-1j * p2), c * np.exp(-1j * p1)]])
    return np.exp(1j * phi) * m
