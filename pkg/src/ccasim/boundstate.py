"""Analytic atom-photon bound-state theory for the finite chain.

Works in the band-center frame: energies here are omega - omega_r in GHz
unless a returned field says otherwise. Above-band states have
omega_rel > 2J and are parametrized by omega_rel = 2J cosh(mu) with
mu = 1/lambda the inverse localization length; below-band states mirror
this with an overall sign. Root finding runs in mu-space, which is smooth
through the band edge where the frequency parametrization degenerates.

All formulas assume nearest-neighbor hopping only. Extended models with
next-nearest terms are handled by exact diagonalization in the spectra
module.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NoBoundStateError, NumericalError
from .params import LatticeParams, QubitParams

RESIDUAL_TOL = 1e-12


def _coth(z: float) -> float:
    if z > 20.0:
        return 1.0 + 2.0 * math.exp(-2.0 * z)
    return math.cosh(z) / math.sinh(z)


def _mu_of(omega_rel: float, J: float) -> float:
    a = abs(omega_rel) / (2.0 * J)
    if a <= 1.0:
        raise ConfigError(f"|omega| = {abs(omega_rel)} inside the band of half-width {2*J}")
    return math.acosh(a)


def localization_length(omega_rel: float, J: float) -> float:
    """Cloud decay length in sites, 1/arccosh(|omega|/2J)."""
    return 1.0 / _mu_of(omega_rel, J)


def _finite_green_diag(mu: float, J: float, N: int, x_q: int) -> float:
    """G(x_q, x_q) of the open chain at omega = 2J cosh(mu), without sign.

    Equal to (1/2J) (1-e^(-2 x mu))(1-e^(-2 (N+1-x) mu)) /
    [sinh(mu) (1-e^(-2(N+1) mu))]; evaluated through expm1 so the band
    edge mu -> 0 limit x(N+1-x)/(J(N+1)) is reached smoothly.
    """
    x, y, L = x_q, N + 1 - x_q, N + 1
    if mu < 1e-8:
        # quadratic limit of both factors
        return x * y / (J * L)
    num = math.expm1(-2.0 * x * mu) * math.expm1(-2.0 * y * mu)
    den = math.sinh(mu) * (-math.expm1(-2.0 * L * mu))
    return num / (2.0 * J * den)


def _finite_green_offdiag(mu: float, J: float, N: int, x1: int, x2: int) -> float:
    """G(x1, x2) of the open chain at omega = 2J cosh(mu), without sign."""
    lo, hi = min(x1, x2), max(x1, x2)
    L = N + 1
    if mu < 1e-8:
        return lo * (L - hi) / (J * L)
    # sinh(mu lo) sinh(mu (L-hi)) / (J sinh(mu) sinh(mu L)), exp-scaled
    log_mag = (
        _log_sinh(mu * lo)
        + _log_sinh(mu * (L - hi))
        - _log_sinh(mu)
        - _log_sinh(mu * L)
    )
    return math.exp(log_mag) / J


def _log_sinh(z: float) -> float:
    if z > 20.0:
        return z - math.log(2.0)
    return math.log(math.sinh(z))


def self_energy(
    omega_rel: float,
    g: float,
    J: float,
    N: int | None = None,
    x_q: int | None = None,
    mode: str = "finite",
) -> float:
    """Self-energy of one emitter at energy omega_rel (band-center frame).

    mode = "finite" evaluates the closed form for the open N-site chain,
    exact for any N. mode = "continuum" evaluates the thermodynamic limit
    g^2 sign(omega) / sqrt(omega^2 - 4 J^2). mode = "mode_sum" sums over
    the N normal modes directly; it is slower and serves as a cross-check.
    Only defined outside the band, |omega_rel| > 2J.
    """
    s = 1.0 if omega_rel >= 0 else -1.0
    if mode == "continuum":
        if abs(omega_rel) <= 2.0 * J:
            raise ConfigError("continuum self-energy requires |omega| > 2J")
        return s * g**2 / math.sqrt(omega_rel**2 - 4.0 * J**2)
    if N is None or x_q is None:
        raise ConfigError(f"mode {mode!r} requires N and x_q")
    if not 1 <= x_q <= N:
        raise ConfigError(f"x_q = {x_q} outside 1..{N}")
    if mode == "finite":
        mu = _mu_of(omega_rel, J)
        return s * g**2 * _finite_green_diag(mu, J, N, x_q)
    if mode == "mode_sum":
        k = np.arange(1, N + 1) * math.pi / (N + 1)
        amps2 = (2.0 / (N + 1)) * np.sin(k * x_q) ** 2
        return float(g**2 * np.sum(amps2 / (omega_rel - 2.0 * J * np.cos(k))))
    raise ConfigError(f"unknown self-energy mode {mode!r}")


def _zcoth(z: float) -> float:
    """z coth(z), stable through z = 0."""
    if z < 0.1:
        z2 = z * z
        return 1.0 + z2 / 3.0 - z2 * z2 / 45.0 + 2.0 * z2 * z2 * z2 / 945.0
    return z * _coth(z)


def self_energy_derivative(
    omega_rel: float, g: float, J: float, N: int, x_q: int
) -> float:
    """d Sigma / d omega of the finite-chain self-energy (dimensionless).

    Uses the logarithmic derivative of the sinh-product form; the four
    z coth(z) terms cancel pairwise at the band edge, so they are summed
    through a series-stabilized kernel. The result is finite there.
    """
    mu = _mu_of(omega_rel, J)
    x, y, L = x_q, N + 1 - x_q, N + 1
    sig = abs(self_energy(omega_rel, g, J, N, x_q, mode="finite"))
    combo = _zcoth(mu * x) + _zcoth(mu * y) - _zcoth(mu) - _zcoth(mu * L)
    if mu < 1e-12:
        return -sig * (2.0 * x * y + 1.0) / (6.0 * J)
    # d omega/d mu = s 2J sinh(mu); Sigma carries the same sign s
    return sig * combo / (mu * 2.0 * J * math.sinh(mu))


def existence_check(
    g: float, J: float, N: int, x_q: int, delta: float, branch: str = "above"
) -> bool:
    """Exact finite-N criterion for a bound state outside the band.

    Above branch: g^2 > J (N+1)(2J - delta) / (x_q (N+1-x_q)); below
    branch flips the sign of delta. The right-hand side is the band-edge
    value of omega - delta - Sigma(omega), so the criterion is sharp.
    """
    if not 1 <= x_q <= N:
        raise ConfigError(f"x_q = {x_q} outside 1..{N}")
    sgn = +1.0 if branch == "above" else -1.0
    rhs = J * (N + 1) * (2.0 * J - sgn * delta) / (x_q * (N + 1 - x_q))
    return g**2 > rhs


@dataclass(frozen=True)
class BoundStateSolution:
    """One-atom bound state.

    omega_BS is in the lab frame (GHz); delta = omega_q - omega_r; lam is
    the localization length in sites; theta the mixing angle with
    cos^2(theta) the atomic weight; s = +1 above / -1 below the band;
    cloud the N photonic amplitudes, normalized together with cos(theta).
    """

    omega_BS: float
    delta: float
    lam: float
    theta: float
    s: int
    cloud: np.ndarray
    x_q: int
    g: float
    residual: float

    @property
    def cos2theta(self) -> float:
        return math.cos(self.theta) ** 2

    @property
    def photon_weight(self) -> float:
        return float(np.sum(self.cloud**2))


def _cloud_profile(mu: float, s: int, N: int, x_q: int) -> np.ndarray:
    """Unnormalized photonic profile of the finite chain.

    sinh(mu x<) sinh(mu (N+1-x>)) with x< = min(x, x_q); below the band
    the profile alternates sign away from x_q. Scaled by its maximum to
    avoid overflow before normalization.
    """
    x = np.arange(1, N + 1)
    lo = np.minimum(x, x_q) * mu
    hi = (N + 1 - np.maximum(x, x_q)) * mu
    log_w = _np_log_sinh(lo) + _np_log_sinh(hi)
    w = np.exp(log_w - np.max(log_w))
    if s < 0:
        # below the band the cloud alternates sign away from the atom
        w = w * (-1.0) ** (np.abs(x - x_q) + 1)
    return w


def _np_log_sinh(z: np.ndarray) -> np.ndarray:
    out = np.where(z > 20.0, z - math.log(2.0), np.log(np.sinh(np.minimum(z, 20.0))))
    return out


def solve_single_bs(
    q: QubitParams, p: LatticeParams, branch: str = "above"
) -> BoundStateSolution:
    """Solve omega - delta = Sigma_N(omega) outside the band.

    Returns the bound state with its finite-chain photonic cloud; the
    atomic weight cos^2(theta) = 1/(1 - Sigma_N'(omega)) matches the
    exact eigenvector weight. Raises NoBoundStateError when the existence
    criterion fails.
    """
    if p.J2 != 0.0:
        raise ConfigError("analytic bound-state theory requires J2 = 0")
    if branch not in ("above", "below"):
        raise ConfigError(f"branch must be 'above' or 'below', got {branch!r}")
    sgn = +1 if branch == "above" else -1
    delta = q.detuning(p)
    J, N, x_q, g = p.J, p.N, q.x_q, q.g

    def f_of_mu(mu: float) -> float:
        omega = sgn * 2.0 * J * math.cosh(mu)
        return omega - delta - sgn * g**2 * _finite_green_diag(mu, J, N, x_q)

    # At the edge f has the sign opposite to the existence margin; far out
    # the linear term dominates.
    mu_lo = 0.0
    f_lo = sgn * (2.0 * J - sgn * delta) - sgn * g**2 * x_q * (N + 1 - x_q) / (
        J * (N + 1)
    )
    if sgn * f_lo >= 0.0:
        raise NoBoundStateError(
            f"no {branch}-band bound state: existence criterion fails "
            f"(g={g}, J={J}, delta={delta}, x_q={x_q}, N={N})"
        )
    omega_hi = 2.0 * J + 10.0 * max(g, abs(delta), J)
    mu_hi = math.acosh(omega_hi / (2.0 * J))
    for _ in range(60):
        if sgn * f_of_mu(mu_hi) > 0.0:
            break
        mu_hi *= 2.0
    else:
        raise NumericalError("bound-state bracket expansion failed")
    mu = brentq(f_of_mu, mu_lo, mu_hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    omega = sgn * 2.0 * J * math.cosh(mu)
    residual = omega - delta - self_energy(omega, g, J, N, x_q, mode="finite")
    if abs(residual) > RESIDUAL_TOL:
        raise NumericalError(f"bound-state residual {residual} exceeds {RESIDUAL_TOL}")
    dsig = self_energy_derivative(omega, g, J, N, x_q)
    cos2 = 1.0 / (1.0 - dsig)
    theta = math.acos(math.sqrt(cos2))
    w = _cloud_profile(mu, sgn, N, x_q)
    w = w / math.sqrt(float(np.sum(w**2)))
    cloud = math.sin(theta) * w
    return BoundStateSolution(
        omega_BS=p.omega_r + omega,
        delta=delta,
        lam=1.0 / mu,
        theta=theta,
        s=sgn,
        cloud=cloud,
        x_q=x_q,
        g=g,
        residual=residual,
    )


def mixing_angle_continuum(omega_rel: float, g: float, J: float) -> float:
    """Bulk-limit mixing angle, cos(theta) = (1 + g^2 |w| /(w^2-4J^2)^(3/2))^(-1/2)."""
    w2 = omega_rel**2 - 4.0 * J**2
    if w2 <= 0:
        raise ConfigError("mixing angle defined outside the band")
    cos_t = (1.0 + g**2 * abs(omega_rel) / w2**1.5) ** -0.5
    return math.acos(cos_t)


def drive_rate_scaling(bs: BoundStateSolution, Omega_R0: float) -> float:
    """Effective drive rate of the dressed state, Omega_R0 cos(theta)."""
    return Omega_R0 * math.cos(bs.theta)


# -- two interacting atoms ---------------------------------------------------


@dataclass(frozen=True)
class TwoAtomBoundStates:
    """Hybridized pair of bound states of two emitters in one chain.

    omega_plus/omega_minus are lab-frame frequencies; xi is the relative
    amplitude of the second atom in the even state (|xi| = 1 at the
    symmetric point); U is half the splitting, measured from the band
    edge when the odd state has melted; omega_bar is the midpoint used as
    sweep coordinate.
    """

    omega_plus: float
    omega_minus: float | None
    xi: float
    theta_plus: float
    theta_minus: float | None
    lam_plus: float
    lam_minus: float | None
    melted_minus: bool
    U: float
    omega_bar: float


def _two_atom_matrix_mu(
    mu: float,
    q1: QubitParams,
    q2: QubitParams,
    p: LatticeParams,
    mode: str,
) -> np.ndarray:
    """Effective 2x2 matrix M at omega = 2J cosh(mu) on the above branch.

    Above-band roots of det(omega - M(omega)) = 0 are the hybridized
    states. mu = 0 (the band edge) is a regular point of the finite form.
    """
    J, N = p.J, p.N
    d1, d2 = q1.detuning(p), q2.detuning(p)
    D = abs(q1.x_q - q2.x_q)
    if mode == "finite":
        s11 = q1.g**2 * _finite_green_diag(mu, J, N, q1.x_q)
        s22 = q2.g**2 * _finite_green_diag(mu, J, N, q2.x_q)
        s12 = q1.g * q2.g * _finite_green_offdiag(mu, J, N, q1.x_q, q2.x_q)
    elif mode == "continuum":
        if mu <= 0.0:
            raise ConfigError("continuum two-atom matrix diverges at the band edge")
        root = 2.0 * J * math.sinh(mu)
        s11 = q1.g**2 / root
        s22 = q2.g**2 / root
        s12 = math.sqrt(s11 * s22) * math.exp(-D * mu)
    else:
        raise ConfigError(f"unknown two-atom mode {mode!r}")
    return np.array([[d1 + s11, s12], [s12, d2 + s22]])


def melting_cond(
    q1: QubitParams, q2: QubitParams, p: LatticeParams, mode: str = "finite"
) -> bool:
    """True when the odd (anti-symmetric) above-band state has melted.

    mode = "finite" compares the band-edge eigenvalues of the effective
    two-atom matrix against the edge, which is exact for the open chain.
    mode = "continuum" evaluates the bulk criterion: the odd state exists
    iff |x1-x2| > J (2J - delta_1)/g_1^2 + J (2J - delta_2)/g_2^2.
    """
    J = p.J
    if mode == "continuum":
        D = abs(q1.x_q - q2.x_q)
        need = J * (2.0 * J - q1.detuning(p)) / q1.g**2 + J * (
            2.0 * J - q2.detuning(p)
        ) / q2.g**2
        return not D > need
    # exact: the number of above-band roots equals the number of
    # eigenvalues of M(2J) exceeding 2J
    M = _two_atom_matrix_edge(q1, q2, p)
    evals = np.linalg.eigvalsh(M)
    return not bool(evals[0] > 2.0 * J)


def _two_atom_matrix_edge(q1: QubitParams, q2: QubitParams, p: LatticeParams) -> np.ndarray:
    J, N = p.J, p.N
    L = N + 1
    s11 = q1.g**2 * q1.x_q * (L - q1.x_q) / (J * L)
    s22 = q2.g**2 * q2.x_q * (L - q2.x_q) / (J * L)
    lo, hi = min(q1.x_q, q2.x_q), max(q1.x_q, q2.x_q)
    s12 = q1.g * q2.g * lo * (L - hi) / (J * L)
    return np.array(
        [[q1.detuning(p) + s11, s12], [s12, q2.detuning(p) + s22]]
    )


def solve_two_atom_bs(
    q1: QubitParams,
    q2: QubitParams,
    p: LatticeParams,
    mode: str = "finite",
) -> TwoAtomBoundStates:
    """Above-band hybridized states of two emitters.

    Finds the roots of det(omega - M(omega)) = 0 with M the effective
    two-atom matrix (self-energies on the diagonal, cloud-mediated
    exchange off-diagonal, localization evaluated at the running omega).
    U = (omega_plus - omega_minus)/2; when the odd state has melted into
    the band, U = (omega_plus - band_top)/2 and the midpoint is taken to
    the band edge.
    """
    if p.J2 != 0.0:
        raise ConfigError("analytic two-atom theory requires J2 = 0")
    if q1.x_q == q2.x_q:
        raise ConfigError("the two atoms must couple to distinct sites")
    J = p.J

    def eig_branch(mu: float, which: int) -> float:
        omega = 2.0 * J * math.cosh(mu)
        evals = np.linalg.eigvalsh(_two_atom_matrix_mu(mu, q1, q2, p, mode))
        return omega - evals[which]

    omega_hi = 2.0 * J + 10.0 * max(q1.g, q2.g, abs(q1.detuning(p)), abs(q2.detuning(p)), J)
    mu_start = math.acosh(omega_hi / (2.0 * J))
    mu_edge = 1e-9 if mode == "continuum" else 0.0

    def bracketed_root(which: int) -> float | None:
        f = lambda mu: eig_branch(mu, which)
        if f(mu_edge) >= 0.0:
            return None
        hi = mu_start
        for _ in range(60):
            if f(hi) > 0.0:
                break
            hi *= 2.0
        else:
            raise NumericalError("two-atom bracket expansion failed")
        return brentq(f, mu_edge, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)

    mu_plus = bracketed_root(1)
    mu_minus = bracketed_root(0)
    melted = mu_minus is None
    if mu_plus is None:
        raise NoBoundStateError("both two-atom states melted into the band")

    def state_info(mu: float, which: int):
        omega = 2.0 * J * math.cosh(mu)
        M = _two_atom_matrix_mu(mu, q1, q2, p, mode)
        residual = eig_branch(mu, which)
        if abs(residual) > 1e-9:
            raise NumericalError(f"two-atom residual {residual} too large")
        evals, evecs = np.linalg.eigh(M)
        v = evecs[:, which]
        with np.errstate(divide="ignore"):
            xi = float(v[1] / v[0]) if v[0] != 0.0 else math.inf
        # atomic weight from the slope of the effective eigenvalue branch
        h = min(1e-6, mu / 4.0) if mu > 0 else 1e-9
        lam_up = np.linalg.eigvalsh(_two_atom_matrix_mu(mu + h, q1, q2, p, mode))[which]
        lam_dn = np.linalg.eigvalsh(_two_atom_matrix_mu(mu - h, q1, q2, p, mode))[which]
        domega = 2.0 * J * (math.cosh(mu + h) - math.cosh(mu - h))
        dlam = (lam_up - lam_dn) / domega if domega != 0.0 else 0.0
        cos2 = 1.0 / (1.0 - dlam)
        cos2 = min(max(cos2, 0.0), 1.0)
        return omega, xi, math.acos(math.sqrt(cos2)), 1.0 / mu

    w_plus, xi_plus, th_plus, lam_plus = state_info(mu_plus, 1)
    band_top_rel = 2.0 * J
    if melted:
        U = (w_plus - band_top_rel) / 2.0
        omega_bar = p.omega_r + band_top_rel + U
        w_minus = th_minus = lam_minus = None
    else:
        w_minus, _, th_minus, lam_minus = state_info(mu_minus, 0)
        U = (w_plus - w_minus) / 2.0
        omega_bar = p.omega_r + (w_plus + w_minus) / 2.0
    return TwoAtomBoundStates(
        omega_plus=p.omega_r + w_plus,
        omega_minus=None if melted else p.omega_r + w_minus,
        xi=xi_plus,
        theta_plus=th_plus,
        theta_minus=th_minus,
        lam_plus=lam_plus,
        lam_minus=lam_minus,
        melted_minus=melted,
        U=U,
        omega_bar=omega_bar,
    )


def effective_spin_hamiltonian(qubits, p: LatticeParams) -> np.ndarray:
    """Dispersive exchange matrix g_i g_j e^(-|x_i-x_j|/lambda) / delta_e.

    Valid for atoms tuned on resonance well above the band; delta_e is the
    detuning from the band edge and lambda the localization length at the
    common qubit frequency.
    """
    qubits = list(qubits)
    omegas = {q.omega_q for q in qubits}
    if len(omegas) != 1:
        raise ConfigError("effective spin model assumes atoms tuned on resonance")
    omega_q = qubits[0].omega_q
    delta_e = omega_q - (p.omega_r + 2.0 * p.J)
    if delta_e <= 0:
        raise ConfigError("effective spin model requires omega_q above the band")
    gmax = max(q.g for q in qubits)
    if delta_e < 3.0 * gmax:
        warnings.warn(
            f"dispersive ratio delta_e/g = {delta_e / gmax:.2f} < 3; "
            "effective spin model is marginal",
            stacklevel=2,
        )
    lam = localization_length(omega_q - p.omega_r, p.J)
    n = len(qubits)
    H = np.empty((n, n))
    for i, qi in enumerate(qubits):
        for j, qj in enumerate(qubits):
            H[i, j] = qi.g * qj.g / delta_e * math.exp(-abs(qi.x_q - qj.x_q) / lam)
    return H
