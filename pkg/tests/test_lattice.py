from __future__ import annotations

import math

import numpy as np
import pytest

from ccasim.errors import ConfigError
from ccasim.lattice import (
    LINEWIDTH_EDGE_AMPLITUDE,
    LINEWIDTH_PRINTED,
    dispersion_circuit,
    mode_frequencies,
    mode_linewidths,
)
from ccasim.params import HamiltonianModel, LatticeParams
from ccasim.presets import table1_circuit, table1_lattice
from ccasim.spectra import build_and_diag_1ex

from conftest import random_chain


def test_closed_form_matches_diagonalization():
    lat = table1_lattice(include_J2=False)
    modes = mode_frequencies(lat)
    spec = build_and_diag_1ex(HamiltonianModel(lattice=lat, qubits=()))
    assert np.allclose(np.sort(modes.omega), spec.eigenvalues, atol=1e-12)


def test_measured_chain_outer_modes():
    modes = mode_frequencies(table1_lattice(include_J2=False))
    # m = 1 is the top of the band for J > 0
    assert modes.omega[0] == pytest.approx(5.717 + 2 * 0.249 * math.cos(math.pi / 22))
    assert modes.omega[0] == pytest.approx(6.2099, abs=5e-4)
    assert modes.omega[-1] == pytest.approx(5.2241, abs=5e-4)
    assert len(modes) == 21


@pytest.mark.parametrize("seed", [3, 17])
def test_mode_profiles_orthonormal(seed):
    lat = random_chain(np.random.default_rng(seed))
    modes = mode_frequencies(lat)
    gram = modes.amplitudes @ modes.amplitudes.T
    assert np.allclose(gram, np.eye(lat.N), atol=1e-12)


def test_closed_form_rejects_next_nearest():
    with pytest.raises(ConfigError):
        mode_frequencies(table1_lattice(include_J2=True))


def test_linewidths_vanish_at_band_edges():
    lat = table1_lattice(with_losses=True, include_J2=False).replace(kappa_nr=0.0)
    kappa = mode_linewidths(lat)
    inner = kappa[np.argmin(np.abs(np.cos(mode_frequencies(lat).k)))]
    # band-edge modes have k near 0 or pi where sin^2(k) kills the decay
    assert kappa[0] < 0.05 * inner
    assert kappa[-1] < 0.05 * inner
    assert np.all(kappa >= 0)


def test_internal_loss_floors_every_mode():
    lat = table1_lattice(with_losses=True, include_J2=False)
    kappa = mode_linewidths(lat)
    assert np.all(kappa >= lat.kappa_nr)
    assert kappa[0] < 2.0 * lat.kappa_nr


def test_single_site_linewidth_is_port_sum():
    lat = LatticeParams(N=1, omega_r=5.7, J=0.1, kappa_edge=0.012, kappa_nr=0.0003)
    kappa = mode_linewidths(lat)
    assert kappa.shape == (1,)
    assert kappa[0] == pytest.approx(2 * 0.012 + 0.0003, rel=1e-12)


def test_printed_linewidth_variant_is_monotonic():
    lat = table1_lattice(with_losses=True, include_J2=False).replace(kappa_nr=0.0)
    printed = mode_linewidths(lat, convention=LINEWIDTH_PRINTED)
    # sin^2(k/2) grows with k, so the bottom-edge mode stays broad
    assert np.all(np.diff(printed) > 0)
    assert printed[-1] > 10.0 * printed[0]
    with pytest.raises(ConfigError):
        mode_linewidths(lat, convention="nonsense")


def test_dispersion_circuit_band_and_gap():
    c = table1_circuit()
    from ccasim.circuit import derive_lattice_params

    d = derive_lattice_params(c)
    inband = dispersion_circuit(c, d.omega_r)
    assert not inband.evanescent
    assert inband.v_g > 0
    assert inband.kd == pytest.approx(math.pi / 2)
    gap = dispersion_circuit(c, d.omega_r + 3.0 * d.J)
    assert gap.evanescent
    assert gap.v_g == 0.0
