from __future__ import annotations

import numpy as np
import pytest

from ccasim.params import HamiltonianModel, LatticeParams, QubitParams
from ccasim.presets import table1_lattice, table1_model


@pytest.fixture
def lat_nn() -> LatticeParams:
    """Measured chain without next-nearest hopping or losses."""
    return table1_lattice(with_losses=False, include_J2=False)


@pytest.fixture
def model_nn_q1(lat_nn) -> HamiltonianModel:
    q = QubitParams(omega_q=6.322, g=0.338, x_q=10, beta=-0.266, label="Q1")
    return HamiltonianModel(lattice=lat_nn, qubits=(q,), include_next_nearest=False)


@pytest.fixture
def model_extended():
    return table1_model()


def random_chain(rng: np.random.Generator, N: int | None = None) -> LatticeParams:
    """Random lossless chain with a qubit-friendly band."""
    if N is None:
        N = int(rng.integers(5, 40))
    return LatticeParams(
        N=N,
        omega_r=float(rng.uniform(4.0, 7.0)),
        J=float(rng.uniform(0.1, 0.4)),
        J2=0.0,
    )


# acceptance reporting: one line per criterion at the end of the run

_ACCEPTANCE: dict[str, str] = {}


def record_acceptance(name: str, line: str) -> None:
    _ACCEPTANCE[name] = line


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    out = yield
    rep = out.get_result()
    if rep.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    name = item.name
    if name not in _ACCEPTANCE:
        _ACCEPTANCE[name] = ""
    status = "PASS" if rep.passed else "FAIL"
    _ACCEPTANCE[name] = f"{status:4s}  {name}  {_ACCEPTANCE[name]}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[name])
