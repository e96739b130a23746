import warnings

import numpy as np
import pytest

from spinhall.medium import MediumModel

S0_SLAB = np.array([[1.0, 0.2, 0.1], [0.2, 1.5, 0.3], [0.1, 0.3, 0.8]])
D_SLAB = np.array([np.cos(np.pi / 6), np.sin(np.pi / 6), 0.0])


def builtin_media():
    return [
        MediumModel("homogeneous", n_left=1.2),
        MediumModel("tanh_slab", n_left=1.0, n_right=1.5, axis=(0.0, 1.0, 0.0), center=0.3, width=0.8),
        MediumModel("gaussian_lens", n_left=1.1, amplitude=0.3, sigma=1.3),
        MediumModel("exp_gradient", n_left=1.0, alpha=0.1, axis=(0.0, 1.0, 0.0)),
    ]


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def slab_medium(center=9.0):
    return MediumModel("tanh_slab", n_left=1.0, n_right=1.5, axis=(1.0, 0.0, 0.0), center=center, width=1.0)


def slab_spec(omega, s=1.0):
    from spinhall.initial_data import BeamSpec
    return BeamSpec(direction=D_SLAB, k=1.0, S0=S0_SLAB, amplitude=1.0, s=s, omega=omega)


SWEEP = (100.0, 200.0, 400.0, 800.0)


@pytest.fixture(scope="session")
def slab_pairs():
    """Oblique slab-crossing helicity pairs (slab centre 9, T = 20) for the omega sweep."""
    from spinhall.spin_hall_dynamics import spin_hall_pair
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for w in SWEEP:
            out[w] = spin_hall_pair(slab_spec(w), slab_medium(), 20.0, stride=0.1)
    return out


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


def record_criterion(number: int, passed: bool, detail: str):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
