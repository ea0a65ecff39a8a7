"""Steady-state transmission, crosstalk, and Kerr power calibration.

Linear scattering treats the qubits as linear oscillators, valid at
single-photon drive ("low excitation regime"). All rates are ordinary
frequencies in GHz; angular factors appear only inside the Kerr drive
conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants
import scipy.optimize

from .errors import CalibrationError, ConfigError, NumericalError
from .params import HamiltonianModel
from .spectra import build_h_1ex


@dataclass(frozen=True)
class CrosstalkModel:
    """Direct port-to-port bypass: amplitude epsilon, phase theta (rad)."""

    epsilon: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"crosstalk epsilon {self.epsilon} outside [0, 1)")


@dataclass(frozen=True)
class TransmissionTrace:
    omega: np.ndarray
    S21: np.ndarray
    S11: np.ndarray
    meta: dict = field(default_factory=dict)


def loss_diagonal(model: HamiltonianModel, gamma_q) -> np.ndarray:
    """Per-state decay rates: edge ports, uniform internal loss, qubit decay."""
    N = model.lattice.N
    n_q = len(model.qubits)
    gam = np.broadcast_to(np.atleast_1d(np.asarray(gamma_q, dtype=float)), (n_q,))
    diag = np.full(model.dim, model.lattice.kappa_nr)
    diag[0] += model.lattice.kappa_edge
    diag[N - 1] += model.lattice.kappa_edge
    diag[N:] = gam
    return diag


def transmission_linear(
    model: HamiltonianModel, omega_grid, gamma_q=0.0
) -> TransmissionTrace:
    """Two-port scattering of the chain driven through site 1.

    Solves (H - omega - i Gamma/2) psi = -i sqrt(kappa_edge) e_1 per
    frequency; S21 = sqrt(kappa_edge) psi_N, S11 = sqrt(kappa_edge)
    psi_1 - 1. With kappa_nr = gamma_q = 0 this satisfies
    |S11|^2 + |S21|^2 = 1.
    """
    lat = model.lattice
    if lat.kappa_edge <= 0.0:
        raise ConfigError("transmission requires kappa_edge > 0 (open ports)")
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    H = build_h_1ex(model).astype(complex)
    H -= 0.5j * np.diag(loss_diagonal(model, gamma_q))
    sq = math.sqrt(lat.kappa_edge)
    b = np.zeros(model.dim, dtype=complex)
    b[0] = -1j * sq
    N = lat.N
    S21 = np.empty(len(omega_grid), dtype=complex)
    S11 = np.empty(len(omega_grid), dtype=complex)
    eye = np.eye(model.dim)
    for i, w in enumerate(omega_grid):
        psi = np.linalg.solve(H - w * eye, b)
        S21[i] = sq * psi[N - 1]
        S11[i] = sq * psi[0] - 1.0
    meta = {
        "N": N,
        "n_qubits": len(model.qubits),
        "kappa_edge_GHz": lat.kappa_edge,
        "kappa_nr_GHz": lat.kappa_nr,
        "crosstalk": False,
    }
    return TransmissionTrace(omega=omega_grid, S21=S21, S11=S11, meta=meta)


def apply_crosstalk(
    trace: TransmissionTrace, ct: CrosstalkModel, convention: str = "convex"
) -> TransmissionTrace:
    """Add the bypass path: S = (1 - eps) S21 + eps e^{i theta}.

    The convex weighting is a modeling choice; "additive" keeps S21
    unscaled. Out-of-band |S| approaches eps either way.
    """
    if convention == "convex":
        S = (1.0 - ct.epsilon) * trace.S21 + ct.epsilon * np.exp(1j * ct.theta)
    elif convention == "additive":
        S = trace.S21 + ct.epsilon * np.exp(1j * ct.theta)
    else:
        raise ConfigError(f"unknown crosstalk convention {convention!r}")
    meta = dict(trace.meta)
    meta.update(crosstalk=True, epsilon_ct=ct.epsilon, theta_ct=ct.theta)
    return TransmissionTrace(omega=trace.omega, S21=S, S11=trace.S11, meta=meta)


# -- single-mode Kerr response -------------------------------------------------


@dataclass(frozen=True)
class KerrResponse:
    """Driven Kerr mode: rates in GHz, input power in dBm at the fridge top.

    kappa is the external (per-port) coupling entering the transmission
    amplitude; kappa_tot the full linewidth (FWHM).
    """

    kappa: float
    kappa_tot: float
    K: float
    omega0: float
    P_in_dBm: float = -120.0
    attenuation_dB: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0 or self.kappa_tot <= 0:
            raise ConfigError("kappa and kappa_tot must be positive")
        if self.kappa > self.kappa_tot:
            raise ConfigError("kappa exceeds kappa_tot")
        if self.K <= 0:
            raise ConfigError("K must be positive")


def drive_strength(k: KerrResponse) -> float:
    """Dimensionless drive xi from the power reaching the mode.

    xi = photon flux * kappa_ang * K_ang / kappa_tot_ang^3 with the
    flux P/(h f) in photons per second and angular rates in rad/s.
    """
    P_watt = 10.0 ** ((k.P_in_dBm - k.attenuation_dB) / 10.0) * 1e-3
    flux = P_watt / (scipy.constants.h * k.omega0 * 1e9)
    two_pi_e9 = 2.0 * math.pi * 1e9
    return (
        flux
        * (k.kappa * two_pi_e9)
        * (k.K * two_pi_e9)
        / (k.kappa_tot * two_pi_e9) ** 3
    )


@dataclass(frozen=True)
class KerrTrace:
    delta: np.ndarray
    S21: np.ndarray
    n_tilde: np.ndarray
    n_photon: np.ndarray
    xi: float


def _kerr_roots(delta: float, xi: float, exponent: int) -> np.ndarray:
    """Real positive roots of the bistability cubic at one detuning.

    Default exponent 2: xi^2 n^3 - 2 delta xi n^2 + (delta^2 + 1/4) n = 1.
    exponent 3 keeps the cubic-term power as printed in the source
    relation; it is dimensionally inconsistent and kept only for
    comparison.
    """
    c3 = xi**exponent
    coeffs = [c3, -2.0 * delta * xi, delta**2 + 0.25, -1.0]
    if c3 == 0.0:
        if coeffs[1] == 0.0:
            return np.array([1.0 / coeffs[2]])
        roots = np.roots(coeffs[1:])
    else:
        roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < 1e-9 * (1.0 + np.abs(roots.real))].real
    pos = np.sort(real[real > 0])
    if len(pos) == 0:
        raise NumericalError(f"no positive photon-number root at delta={delta}")
    # back-substitution guard
    for r in pos:
        val = ((c3 * r - 2.0 * delta * xi) * r + delta**2 + 0.25) * r - 1.0
        if abs(val) > 1e-12 * max(1.0, abs(r) ** 3 * max(c3, 1.0)):
            raise NumericalError(f"cubic residual {val:.3e} at delta={delta}")
    return pos


def kerr_response(
    k: KerrResponse,
    delta_grid,
    branch: str = "low",
    xi_exponent: int = 2,
    xi: float | None = None,
) -> KerrTrace:
    """Nonlinear S21 over dimensionless detuning delta = (omega-omega0)/kappa_tot.

    branch "low"/"high" pick the stable small/large-amplitude solution;
    "updown" follows the root closest to the previous point in grid
    order, tracing hysteresis. Passing xi directly bypasses the power
    conversion (xi = 0 gives the exact linear limit).
    """
    if branch not in ("low", "high", "updown"):
        raise ConfigError(f"unknown branch {branch!r}")
    delta_grid = np.atleast_1d(np.asarray(delta_grid, dtype=float))
    if xi is None:
        xi = drive_strength(k)
    elif xi < 0:
        raise ConfigError("xi must be >= 0")
    n = np.empty(len(delta_grid))
    prev = None
    for i, d in enumerate(delta_grid):
        roots = _kerr_roots(d, xi, xi_exponent)
        if branch == "low":
            n[i] = roots[0]
        elif branch == "high":
            n[i] = roots[-1]
        else:
            n[i] = roots[0] if prev is None else roots[np.argmin(np.abs(roots - prev))]
            prev = n[i]
    S21 = (k.kappa / k.kappa_tot) / (0.5 + 1j * (xi * n - delta_grid))
    n_photon = xi * n * k.kappa_tot / k.K
    return KerrTrace(delta=delta_grid, S21=S21, n_tilde=n, n_photon=n_photon, xi=xi)


@dataclass(frozen=True)
class KerrFitResult:
    response: KerrResponse
    success: bool
    cost: float
    residual_rms: float
    stderr: dict
    n_points: int

    def as_dict(self) -> dict:
        r = self.response
        return {
            "kappa_GHz": r.kappa,
            "kappa_tot_GHz": r.kappa_tot,
            "K_GHz": r.K,
            "omega0_GHz": r.omega0,
            "attenuation_dB": r.attenuation_dB,
            "success": self.success,
            "cost": self.cost,
            "residual_rms": self.residual_rms,
            "stderr": self.stderr,
            "n_points": self.n_points,
        }


def fit_kerr(
    traces: list[tuple[float, np.ndarray, np.ndarray]],
    attenuation_dB: float,
    initial: KerrResponse | None = None,
    xi_exponent: int = 2,
) -> KerrFitResult:
    """Global |S21| fit over (omega0, kappa, kappa_tot, K) at all powers.

    traces: (P_in_dBm, omega GHz, |S21|) per power, at least three
    spanning the linear and shifted regimes. The line attenuation is
    held fixed: the data constrain only the product of K and the power
    reaching the sample, so floating both is exactly degenerate.
    """
    if len(traces) < 3:
        raise ConfigError("need at least 3 power traces for a Kerr fit")
    if initial is None:
        P0, w0s, m0 = min(traces, key=lambda t: t[0])
        ipk = int(np.argmax(m0))
        omega0 = float(w0s[ipk])
        half = m0 > 0.5 * m0[ipk]
        fwhm = float(w0s[half][-1] - w0s[half][0]) or (w0s[-1] - w0s[0]) / 10.0
        kappa_tot = max(fwhm, 1e-6)
        kappa = min(0.5 * m0[ipk] * kappa_tot, 0.999 * kappa_tot)
        initial = KerrResponse(
            kappa=max(kappa, 1e-7),
            kappa_tot=kappa_tot,
            K=1e-4,
            omega0=omega0,
            attenuation_dB=attenuation_dB,
        )

    mags = np.concatenate([np.asarray(m, dtype=float) for _, _, m in traces])

    def model_mags(p):
        omega0, kappa, kappa_tot, K = p
        out = []
        for P_dBm, omegas, _ in traces:
            resp = KerrResponse(
                kappa=min(kappa, kappa_tot),
                kappa_tot=kappa_tot,
                K=K,
                omega0=omega0,
                P_in_dBm=P_dBm,
                attenuation_dB=attenuation_dB,
            )
            delta = (np.asarray(omegas, dtype=float) - omega0) / kappa_tot
            out.append(np.abs(kerr_response(resp, delta, xi_exponent=xi_exponent).S21))
        return np.concatenate(out)

    def resid(p):
        try:
            return model_mags(p) - mags
        except NumericalError:
            return np.full(len(mags), 1e6)

    p0 = [initial.omega0, initial.kappa, initial.kappa_tot, initial.K]
    lo = [initial.omega0 - 1.0, 1e-9, 1e-9, 1e-9]
    hi = [initial.omega0 + 1.0, np.inf, np.inf, np.inf]
    sol = scipy.optimize.least_squares(resid, p0, bounds=(lo, hi), xtol=1e-14)
    # the fold of the low branch makes the landscape multimodal in K;
    # rescan over decades when the first descent stalls on a poor fit
    if np.sqrt(np.mean(sol.fun**2)) > 1e-3 * np.max(mags):
        for scale in (0.03, 0.1, 0.3, 3.0, 10.0, 30.0):
            p1 = list(sol.x)
            p1[3] = initial.K * scale
            trial = scipy.optimize.least_squares(
                resid, p1, bounds=(lo, hi), xtol=1e-14
            )
            if trial.cost < sol.cost:
                sol = trial
    omega0, kappa, kappa_tot, K = sol.x
    if kappa > kappa_tot:
        raise CalibrationError("fit converged to kappa > kappa_tot")
    # linearized one-sigma errors from the Jacobian
    names = ("omega0", "kappa", "kappa_tot", "K")
    dof = max(len(mags) - 4, 1)
    s2 = 2.0 * sol.cost / dof
    try:
        cov = s2 * np.linalg.inv(sol.jac.T @ sol.jac)
        stderr = {n: float(math.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(names)}
    except np.linalg.LinAlgError:
        stderr = {n: float("nan") for n in names}
    fitted = KerrResponse(
        kappa=float(kappa),
        kappa_tot=float(kappa_tot),
        K=float(K),
        omega0=float(omega0),
        attenuation_dB=attenuation_dB,
    )
    return KerrFitResult(
        response=fitted,
        success=bool(sol.success),
        cost=float(sol.cost),
        residual_rms=float(np.sqrt(np.mean(sol.fun**2))),
        stderr=stderr,
        n_points=len(mags),
    )
