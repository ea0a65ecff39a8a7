from __future__ import annotations

import numpy as np
import pytest

from ccasim.boundstate import solve_single_bs
from ccasim.errors import ConfigError, NoDiscreteStateError
from ccasim.params import HamiltonianModel, LatticeParams, QubitParams
from ccasim.presets import table1_lattice, table1_model
from ccasim.spectra import (
    DENSE_LIMIT_1EX,
    build_and_diag_1ex,
    build_and_diag_2ex,
    build_h_1ex,
    build_h_2ex,
    classification_margin,
    disorder_ensemble,
    disorder_realization,
    dressed_anharmonicity,
    edge_level_spacing,
    symmetric_pairs,
    zz_interaction,
)

from conftest import random_chain
from oracles import dense_h1, fock_h2


def _random_model(rng: np.random.Generator, n_q: int = 2, N: int | None = None):
    lat = random_chain(rng, N=N).replace(J2=float(rng.uniform(0.0, 0.05)))
    sites = rng.choice(np.arange(2, lat.N), size=n_q, replace=False)
    qubits = tuple(
        QubitParams(
            omega_q=float(rng.uniform(lat.band_top, lat.band_top + 1.0)),
            g=float(rng.uniform(0.1, 0.4)),
            x_q=int(x),
            beta=float(-rng.uniform(0.1, 0.4)),
            g2=float(rng.uniform(0.0, 0.04)),
        )
        for x in sites
    )
    disorder = tuple(rng.normal(0.0, 0.01, lat.N))
    return HamiltonianModel(lattice=lat, qubits=qubits, disorder=disorder)


@pytest.mark.parametrize("seed", range(5))
def test_single_excitation_matrix_matches_reference(seed):
    model = _random_model(np.random.default_rng(seed))
    assert np.array_equal(build_h_1ex(model), dense_h1(model))


def test_nearest_neighbor_gate_zeroes_all_j2_terms():
    lat = table1_lattice(include_J2=True)
    q = QubitParams(omega_q=6.4, g=0.3, x_q=10, g2=0.025)
    gated = HamiltonianModel(lattice=lat, qubits=(q,), include_next_nearest=False)
    plain = HamiltonianModel(
        lattice=lat.replace(J2=0.0), qubits=(q.replace(g2=0.0),)
    )
    assert np.array_equal(build_h_1ex(gated), build_h_1ex(plain))


def test_banded_solver_matches_dense():
    lat = LatticeParams(N=1500, omega_r=5.7, J=0.25)
    q = QubitParams(omega_q=6.5, g=0.3, x_q=700)
    model = HamiltonianModel(lattice=lat, qubits=(q,), include_next_nearest=False)
    assert model.dim > DENSE_LIMIT_1EX
    spec = build_and_diag_1ex(model)
    evals = np.linalg.eigvalsh(dense_h1(model))
    assert np.allclose(spec.eigenvalues, evals, atol=1e-9)
    idx = spec.discrete_above()
    assert len(idx) == 1
    bs = solve_single_bs(q, lat)
    assert spec.eigenvalues[idx[0]] == pytest.approx(bs.omega_BS, abs=1e-10)
    v = spec.eigenvectors[:, idx[0]]
    assert np.sum(v[lat.N :] ** 2) == pytest.approx(bs.cos2theta, abs=1e-10)
    # non-discrete columns are not computed in the banded path
    inside = np.flatnonzero(~spec.discrete)
    assert np.all(np.isnan(spec.eigenvectors[:, inside[0]]))


def test_classification_margin_tracks_edge_spacing():
    lat = table1_lattice(include_J2=False)
    assert classification_margin(lat) == pytest.approx(3 * edge_level_spacing(lat))
    assert 0.02 < classification_margin(lat) < 0.08


def test_shallow_state_needs_small_margin():
    lat = table1_lattice(include_J2=False)
    q = QubitParams(omega_q=6.20, g=0.05, x_q=10)
    model = HamiltonianModel(lattice=lat, qubits=(q,), include_next_nearest=False)
    assert len(build_and_diag_1ex(model).discrete_above()) == 0
    spec = build_and_diag_1ex(model, margin=1e-9)
    assert len(spec.discrete_above()) == 1
    with pytest.raises(NoDiscreteStateError):
        build_and_diag_1ex(model).top_state()


def test_spectrum_weights_are_normalized():
    model = table1_model()
    spec = build_and_diag_1ex(model)
    total = np.sum(spec.qubit_weight, axis=0) + spec.photon_weight
    assert np.allclose(total, 1.0, atol=1e-12)


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_two_excitation_matches_fock_reference(seed):
    model = _random_model(np.random.default_rng(seed), N=7)
    H2, pairs = build_h_2ex(model)
    assert pairs == symmetric_pairs(model.dim)
    ref = fock_h2(model)
    assert np.allclose(np.linalg.eigvalsh(H2), np.linalg.eigvalsh(ref), atol=1e-10)


def test_two_excitation_pair_basis_is_hermitian():
    model = _random_model(np.random.default_rng(21), N=6)
    H2, _ = build_h_2ex(model)
    assert np.allclose(H2, H2.T)
    D = model.dim * (model.dim + 1) // 2
    assert H2.shape == (D, D)


def test_two_excitation_classification_bands():
    model = table1_model(omega_q2=7.0, qubits="q2", include_next_nearest=False)
    res = build_and_diag_2ex(model)
    lat = model.lattice
    assert res.two_photon_band[0] == pytest.approx(2 * lat.band_bottom)
    assert res.two_photon_band[1] == pytest.approx(2 * lat.band_top)
    assert res.classification[-1] == "discrete"
    assert len(res.sidebands) == 1
    lo, hi = res.sidebands[0]
    assert hi - lo == pytest.approx(4 * lat.J)
    labels = set(res.classification)
    assert labels <= {"band", "sideband", "discrete"}
    assert np.sum(np.asarray(res.classification) == "discrete") == 1


def test_dressed_anharmonicity_deep_value():
    model = table1_model(
        omega_q2=8.0, qubits="q2", include_next_nearest=False, parasitic=False
    )
    beta = dressed_anharmonicity(model)
    assert beta == pytest.approx(-0.246215, abs=2e-5)
    # dressing can only reduce the magnitude below the bare anharmonicity
    assert abs(beta) < abs(model.qubits[0].beta)


def test_dressed_anharmonicity_requires_single_qubit():
    with pytest.raises(ConfigError):
        dressed_anharmonicity(table1_model())


def test_dressed_anharmonicity_vanishing_coupling():
    model = table1_model(
        omega_q2=8.0, qubits="q2", include_next_nearest=False, parasitic=False
    )
    model = model.with_qubit(0, g=1e-4)
    beta = dressed_anharmonicity(model)
    assert beta == pytest.approx(model.qubits[0].beta, abs=1e-6)


def test_zz_frozen_point():
    z = zz_interaction(table1_model(omega_q1=6.32, omega_q2=6.5285))
    assert z.zeta == pytest.approx(-0.048588, abs=2e-5)
    assert z.E_01 == pytest.approx(6.6547, abs=2e-3)
    assert z.E_10 < z.E_01  # qubit 1 sits lower in this configuration
    assert z.overlap > 0.5
    assert z.candidates[0][0] == z.E_11


def test_zz_vanishes_without_first_qubit():
    model = table1_model(omega_q1=6.32, omega_q2=6.5285)
    z = zz_interaction(model.with_qubit(0, g=0.0, g2=0.0))
    assert abs(z.zeta) < 1e-10


def test_zz_requires_two_qubits():
    with pytest.raises(ConfigError):
        zz_interaction(table1_model(qubits="q1"))


def test_disorder_realization_reproducible():
    model = table1_model(qubits="q2")
    a = disorder_realization(model, 0.025, seed=7, index=3)
    b = disorder_realization(model, 0.025, seed=7, index=3)
    c = disorder_realization(model, 0.025, seed=7, index=4)
    assert a.disorder == b.disorder
    assert a.disorder != c.disorder
    assert len(a.disorder) == model.lattice.N
    sa = build_and_diag_1ex(a)
    sb = build_and_diag_1ex(b)
    assert np.array_equal(sa.eigenvalues, sb.eigenvalues)


def test_disorder_ensemble_statistics():
    model = table1_model(omega_q2=6.606, qubits="q2", include_next_nearest=False)
    stats = disorder_ensemble(model, sigma=0.025, n_realizations=40, seed=11)
    clean = build_and_diag_1ex(model).top_state()[0]
    assert stats.omega_mean == pytest.approx(clean, abs=0.01)
    assert stats.omega_std < 0.025
    assert np.all(np.isnan(stats.U))  # single qubit has no pair splitting
    assert np.all((stats.cos2theta > 0.5) & (stats.cos2theta < 1.0))


def test_disorder_ensemble_validation():
    model = table1_model(qubits="q2")
    with pytest.raises(ConfigError):
        disorder_ensemble(model, sigma=-0.1, n_realizations=5, seed=1)
    with pytest.raises(ConfigError):
        disorder_ensemble(model, sigma=0.01, n_realizations=0, seed=1)
