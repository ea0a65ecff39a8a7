"""Exact diagonalization in the one- and two-excitation sectors.

Handles the full model including next-nearest-neighbor hopping J2 and
parasitic qubit couplings g2, which the analytic bound-state theory does
not cover. Transmons are truncated at two excitations; within the
two-excitation sector this truncation is exact for a quartic
anharmonicity, which acts only on double occupancy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, NoDiscreteStateError, NumericalError
from .params import HamiltonianModel, LatticeParams, QubitParams, site_frequencies

DENSE_LIMIT_1EX = 1200
DENSE_LIMIT_2EX = 5000


def edge_level_spacing(p: LatticeParams) -> float:
    """Spacing of the two outermost chain modes, the finite-size scale."""
    L = p.N + 1
    return 2.0 * p.J * abs(math.cos(math.pi / L) - math.cos(2.0 * math.pi / L))


def classification_margin(p: LatticeParams) -> float:
    """Default margin separating discrete levels from the band edge."""
    return 3.0 * edge_level_spacing(p)


def build_h_1ex(model: HamiltonianModel) -> np.ndarray:
    """Single-excitation Hamiltonian, sites first then qubits."""
    N = model.lattice.N
    M = model.dim
    H = np.zeros((M, M))
    freqs = site_frequencies(model)
    for i in range(N):
        H[i, i] = freqs[i]
    J = model.lattice.J
    for i in range(N - 1):
        H[i, i + 1] = H[i + 1, i] = J
    J2 = model.J2_eff
    if J2 != 0.0:
        for i in range(N - 2):
            H[i, i + 2] = H[i + 2, i] = J2
    for qi, q in enumerate(model.qubits):
        k = N + qi
        H[k, k] = q.omega_q
        xi = q.x_q - 1
        H[k, xi] = H[xi, k] = q.g
        g2 = model.g2_eff(q)
        if g2 != 0.0:
            if xi - 1 >= 0:
                H[k, xi - 1] = H[xi - 1, k] = g2
            if xi + 1 < N:
                H[k, xi + 1] = H[xi + 1, k] = g2
    return H


@dataclass(frozen=True)
class SpectrumResult:
    """Sorted one-excitation spectrum with per-state weights.

    eigenvectors holds one column per state; in the banded large-N path
    only the columns of discrete states are filled, the rest are NaN.
    qubit_weight[iq, n] is the atomic fraction of qubit iq in state n;
    discrete marks levels outside the band by more than the margin.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    qubit_weight: np.ndarray
    photon_weight: np.ndarray
    discrete: np.ndarray
    band_bottom: float
    band_top: float
    margin: float

    def discrete_above(self) -> np.ndarray:
        return np.where(self.discrete & (self.eigenvalues > self.band_top))[0]

    def top_state(self) -> tuple[float, np.ndarray]:
        """Highest discrete level and its eigenvector."""
        idx = self.discrete_above()
        if len(idx) == 0:
            raise NoDiscreteStateError("no discrete level above the band")
        i = idx[-1]
        return float(self.eigenvalues[i]), self.eigenvectors[:, i]


def _qubit_insertion_order(model: HamiltonianModel) -> np.ndarray:
    """Permutation placing each qubit right after its attachment site.

    Keeps the reordered Hamiltonian narrowly banded, so large chains can
    use the banded eigensolver.
    """
    N = model.lattice.N
    by_site: dict[int, list[int]] = {}
    for qi, q in enumerate(model.qubits):
        by_site.setdefault(q.x_q, []).append(N + qi)
    order = []
    for x in range(1, N + 1):
        order.append(x - 1)
        order.extend(by_site.get(x, []))
    return np.asarray(order, dtype=int)


def _diag_banded(model: HamiltonianModel, margin: float):
    H = build_h_1ex(model)
    order = _qubit_insertion_order(model)
    Hp = H[np.ix_(order, order)]
    M = Hp.shape[0]
    nz = np.nonzero(Hp)
    bw = int(np.max(np.abs(nz[0] - nz[1]))) if len(nz[0]) else 0
    ab = np.zeros((bw + 1, M))
    for d in range(bw + 1):
        ab[d, : M - d] = np.diagonal(Hp, offset=d)
    evals = scipy.linalg.eig_banded(
        ab, lower=True, eigvals_only=True, select="a"
    )
    lat = model.lattice
    lo, hi = lat.band_bottom - margin, lat.band_top + margin
    discrete = (evals < lo) | (evals > hi)
    vectors = np.full((M, M), np.nan)
    idx = np.where(discrete)[0]
    for i in idx:
        _, v = scipy.linalg.eig_banded(
            ab, lower=True, select="i", select_range=(int(i), int(i))
        )
        inv = np.argsort(order)
        vectors[:, i] = v[inv, 0]
    return evals, vectors, discrete


def build_and_diag_1ex(
    model: HamiltonianModel, margin: float | None = None
) -> SpectrumResult:
    """Diagonalize the one-excitation sector.

    Dense below DENSE_LIMIT_1EX dimensions; above that a banded solver
    computes all eigenvalues but fills eigenvectors only for discrete
    levels. The assembled matrix is symmetric by construction.
    """
    M = model.dim
    if M > 1e5:
        raise ConfigError(f"one-excitation dimension {M} too large")
    lat = model.lattice
    if margin is None:
        margin = classification_margin(lat)
    if M <= DENSE_LIMIT_1EX:
        H = build_h_1ex(model)
        evals, vecs = np.linalg.eigh(H)
        lo, hi = lat.band_bottom - margin, lat.band_top + margin
        discrete = (evals < lo) | (evals > hi)
    else:
        evals, vecs, discrete = _diag_banded(model, margin)
    n_q = len(model.qubits)
    N = lat.N
    qubit_weight = np.abs(vecs[N : N + n_q, :]) ** 2 if n_q else np.zeros((0, M))
    with np.errstate(invalid="ignore"):
        photon_weight = np.nansum(np.abs(vecs[:N, :]) ** 2, axis=0)
    return SpectrumResult(
        eigenvalues=evals,
        eigenvectors=vecs,
        qubit_weight=qubit_weight,
        photon_weight=photon_weight,
        discrete=discrete,
        band_bottom=lat.band_bottom,
        band_top=lat.band_top,
        margin=margin,
    )


# -- two-excitation sector ---------------------------------------------------


def symmetric_pairs(M: int) -> list[tuple[int, int]]:
    """Ordered basis (i, j) with i <= j of the symmetric two-boson space."""
    return [(i, j) for i in range(M) for j in range(i, M)]


@dataclass(frozen=True)
class TwoExcitationResult:
    """Spectrum and per-state decomposition of the two-excitation sector.

    amplitudes[a, n] is the coefficient of ordered pair a in state n.
    P_q[iq, n] sums qubit-iq single occupancy, P_qq[iq, n] its double
    occupancy, P_ph[n] the pure two-photon weight. classification is one
    of "band", "sideband", "discrete" per state.
    """

    eigenvalues: np.ndarray
    amplitudes: np.ndarray
    pairs: list[tuple[int, int]]
    P_q: np.ndarray
    P_qq: np.ndarray
    P_ph: np.ndarray
    classification: np.ndarray
    two_photon_band: tuple[float, float]
    sidebands: list[tuple[float, float]]

    def top_energy(self) -> float:
        return float(self.eigenvalues[-1])


def build_h_2ex(model: HamiltonianModel) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Two-excitation Hamiltonian in the normalized symmetric pair basis."""
    H1 = build_h_1ex(model)
    M = H1.shape[0]
    pairs = symmetric_pairs(M)
    D = len(pairs)
    if D > DENSE_LIMIT_2EX:
        raise ConfigError(f"two-excitation dimension {D} exceeds {DENSE_LIMIT_2EX}")
    # project kron(H1, 1) + kron(1, H1) onto the symmetric subspace
    S = np.zeros((D, M * M))
    for a, (i, j) in enumerate(pairs):
        if i == j:
            S[a, i * M + j] = 1.0
        else:
            S[a, i * M + j] = S[a, j * M + i] = 1.0 / math.sqrt(2.0)
    Hfull = np.kron(H1, np.eye(M)) + np.kron(np.eye(M), H1)
    H2 = S @ Hfull @ S.T
    N = model.lattice.N
    for qi, q in enumerate(model.qubits):
        a = pairs.index((N + qi, N + qi))
        H2[a, a] += q.beta
    return H2, pairs


def build_and_diag_2ex(
    model: HamiltonianModel,
    margin: float | None = None,
    spectrum_1ex: SpectrumResult | None = None,
) -> TwoExcitationResult:
    """Diagonalize the two-excitation sector and classify the states.

    The two-photon band spans twice the single-photon band; each
    single-excitation discrete level omega_BS contributes a sideband
    omega_BS + [band_bottom, band_top]; levels above all of these by more
    than the margin are discrete.
    """
    lat = model.lattice
    if margin is None:
        margin = classification_margin(lat)
    H2, pairs = build_h_2ex(model)
    evals, vecs = np.linalg.eigh(H2)
    N = lat.N
    n_q = len(model.qubits)
    D = len(pairs)
    P_q = np.zeros((n_q, D))
    P_qq = np.zeros((n_q, D))
    P_ph = np.zeros(D)
    phot = np.zeros(D, dtype=bool)
    for a, (i, j) in enumerate(pairs):
        if i < N and j < N:
            phot[a] = True
    P_ph = np.sum(np.abs(vecs[phot, :]) ** 2, axis=0)
    for qi in range(n_q):
        k = N + qi
        single = [a for a, (i, j) in enumerate(pairs) if (i == k) != (j == k)]
        P_q[qi] = np.sum(np.abs(vecs[single, :]) ** 2, axis=0)
        P_qq[qi] = np.abs(vecs[pairs.index((k, k)), :]) ** 2
    band2 = (2.0 * lat.band_bottom, 2.0 * lat.band_top)
    if spectrum_1ex is None:
        spectrum_1ex = build_and_diag_1ex(model, margin=margin)
    sidebands = []
    for i in np.where(spectrum_1ex.discrete)[0]:
        w = spectrum_1ex.eigenvalues[i]
        sidebands.append((w + lat.band_bottom, w + lat.band_top))
    classification = np.empty(D, dtype=object)
    for n, E in enumerate(evals):
        if band2[0] - margin <= E <= band2[1] + margin:
            classification[n] = "band"
            continue
        inside = any(lo - margin <= E <= hi + margin for lo, hi in sidebands)
        classification[n] = "sideband" if inside else "discrete"
    return TwoExcitationResult(
        eigenvalues=evals,
        amplitudes=vecs,
        pairs=pairs,
        P_q=P_q,
        P_qq=P_qq,
        P_ph=P_ph,
        classification=classification,
        two_photon_band=band2,
        sidebands=sidebands,
    )


def dressed_anharmonicity(
    model: HamiltonianModel, qubit_index: int = 0, margin: float | None = None
) -> float:
    """beta_dress = omega(2ex top discrete) - 2 omega(1ex top discrete).

    Requires both the one- and two-excitation bound states of the chosen
    qubit to be discrete; raises NoDiscreteStateError otherwise.
    """
    if len(model.qubits) != 1:
        raise ConfigError(
            "dressed anharmonicity is defined for a single coupled qubit; "
            "detune or drop the other qubits"
        )
    spec1 = build_and_diag_1ex(model, margin=margin)
    w1, _ = spec1.top_state()
    res2 = build_and_diag_2ex(model, margin=margin, spectrum_1ex=spec1)
    if res2.classification[-1] != "discrete":
        raise NoDiscreteStateError(
            "two-excitation bound state not separated from the sidebands"
        )
    return res2.top_energy() - 2.0 * w1


def _symmetrized_product(v1: np.ndarray, v2: np.ndarray, pairs) -> np.ndarray:
    """Normalized symmetric product of two one-excitation vectors."""
    w = np.empty(len(pairs))
    for a, (i, j) in enumerate(pairs):
        if i == j:
            w[a] = v1[i] * v2[i] * math.sqrt(2.0)
        else:
            w[a] = v1[i] * v2[j] + v1[j] * v2[i]
    n = np.linalg.norm(w)
    if n == 0:
        raise NumericalError("degenerate product state")
    return w / n


@dataclass(frozen=True)
class ZZResult:
    zeta: float
    overlap: float
    E_11: float
    E_10: float
    E_01: float
    candidates: list[tuple[float, float]]

    @property
    def ambiguous(self) -> bool:
        return len(self.candidates) > 1


def zz_interaction(model: HamiltonianModel, margin: float | None = None) -> ZZResult:
    """Conditional shift zeta = E(11) - E(10) - E(01) of two bound states.

    The doubly-excited state is identified by maximal overlap with the
    symmetrized product of the two single-excitation discrete levels;
    near avoided crossings more than one level may share the product
    weight, in which case all candidates (energy, overlap) are reported
    and the largest-overlap one defines zeta.
    """
    if len(model.qubits) != 2:
        raise ConfigError("ZZ interaction requires exactly two qubits")
    spec1 = build_and_diag_1ex(model, margin=margin)
    idx = spec1.discrete_above()
    if len(idx) < 2:
        raise NoDiscreteStateError("need two discrete one-excitation levels")
    i10, i01 = idx[-2], idx[-1]
    # label by dominant qubit so E_10 belongs to qubit 1
    if spec1.qubit_weight[0, i10] < spec1.qubit_weight[0, i01]:
        i10, i01 = i01, i10
    E10 = float(spec1.eigenvalues[i10])
    E01 = float(spec1.eigenvalues[i01])
    res2 = build_and_diag_2ex(model, margin=margin, spectrum_1ex=spec1)
    w = _symmetrized_product(
        spec1.eigenvectors[:, i10], spec1.eigenvectors[:, i01], res2.pairs
    )
    overlaps = np.abs(res2.amplitudes.T @ w)
    best = int(np.argmax(overlaps))
    E11 = float(res2.eigenvalues[best])
    candidates = [(E11, float(overlaps[best]))]
    for n in np.argsort(overlaps)[::-1][1:]:
        if overlaps[n] >= 0.5 * overlaps[best]:
            candidates.append((float(res2.eigenvalues[n]), float(overlaps[n])))
        else:
            break
    return ZZResult(
        zeta=E11 - E10 - E01,
        overlap=float(overlaps[best]),
        E_11=E11,
        E_10=E10,
        E_01=E01,
        candidates=candidates,
    )


# -- disorder ----------------------------------------------------------------


@dataclass(frozen=True)
class DisorderStats:
    """Ensemble statistics of the highest bound state under site disorder."""

    omega_BS: np.ndarray
    cos2theta: np.ndarray
    U: np.ndarray
    sigma: float
    seed: int

    @property
    def omega_mean(self) -> float:
        return float(np.mean(self.omega_BS))

    @property
    def omega_std(self) -> float:
        return float(np.std(self.omega_BS))


def disorder_realization(
    model: HamiltonianModel, sigma: float, seed: int, index: int
) -> HamiltonianModel:
    """Model with one reproducible draw of per-site frequency offsets.

    The RNG stream is keyed by (seed, index), so realizations are
    independent of evaluation order.
    """
    rng = np.random.default_rng((seed, index))
    offsets = rng.normal(0.0, sigma, model.lattice.N)
    return model.replace(disorder=tuple(offsets))


def disorder_ensemble(
    model: HamiltonianModel,
    sigma: float,
    n_realizations: int,
    seed: int,
    margin: float | None = None,
) -> DisorderStats:
    """Monte Carlo over site disorder; reports the top bound state.

    For two-qubit models U is half the splitting of the two highest
    discrete levels (NaN when fewer than two survive).
    """
    if sigma < 0 or n_realizations < 1:
        raise ConfigError("sigma must be >= 0 and n_realizations >= 1")
    omega = np.empty(n_realizations)
    cos2 = np.empty(n_realizations)
    U = np.full(n_realizations, np.nan)
    for i in range(n_realizations):
        m = disorder_realization(model, sigma, seed, i)
        spec = build_and_diag_1ex(m, margin=margin)
        idx = spec.discrete_above()
        if len(idx) == 0:
            raise NoDiscreteStateError(f"bound state lost in realization {i}")
        top = idx[-1]
        omega[i] = spec.eigenvalues[top]
        cos2[i] = float(np.sum(spec.qubit_weight[:, top]))
        if len(idx) >= 2:
            U[i] = (spec.eigenvalues[idx[-1]] - spec.eigenvalues[idx[-2]]) / 2.0
    return DisorderStats(omega_BS=omega, cos2theta=cos2, U=U, sigma=sigma, seed=seed)
