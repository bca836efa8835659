import numpy as np
import pytest

from tdpf.curves import TrigCurve
from tdpf.models import build_driven_chain


def driven_chain(n_sites: int, boundary: str = "open"):
    """Cosine-modulated XX chain with a cos-driven Z field in term 2; the
    standing small model used across the suite."""
    bond = TrigCurve(amp=0.3, omega=2.0, offset=1.0)
    field = TrigCurve(amp=0.8, omega=3.1)
    return build_driven_chain(n_sites, bond, field, boundary=boundary)


@pytest.fixture(scope="session")
def driven2():
    return driven_chain(2)


@pytest.fixture(scope="session")
def driven3():
    return driven_chain(3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def random_matrix(rng, dim, hermitian=False, skew=False):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    if hermitian:
        return (m + m.conj().T) / 2
    if skew:
        return (m - m.conj().T) / 2
    return m
