"""Lumped-element circuit model of the resonator chain with attached transmons.

Derives the tight-binding parameters (band frequencies, hoppings, Kerr
coefficients) and the per-qubit parameters (frequency vs flux,
anharmonicity, couplings) from capacitances and inductances, and handles
the flux-line crosstalk calibration.

Capacitances are in fF, inductances in nH, frequencies in GHz, flux in
units of the flux quantum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as _c_light
from scipy.constants import e as _e
from scipy.constants import h as _h
from scipy.constants import hbar as _hbar

from .errors import CalibrationError, ConfigError
from .params import LatticeParams, QubitParams

_FF = 1e-15
_NH = 1e-9
_UM = 1e-6
_GHZ = 1e9


@dataclass(frozen=True)
class QubitCircuit:
    """Circuit-level description of one transmon.

    C_g couples the qubit island to its array site, C_g2 is the parasitic
    capacitance to the two neighboring sites. E_J_max is the Josephson
    energy at zero flux in GHz*h.
    """

    C_g: float
    C_q: float
    E_J_max: float
    attachment_site: int
    C_g2: float = 0.0
    label: str = ""

    @property
    def C_q_total(self) -> float:
        return self.C_q + self.C_g + self.C_g2


@dataclass(frozen=True)
class CircuitParams:
    """Fixed chain-plus-qubits circuit of the device.

    C_J couples neighboring resonators, C_J2 is the parasitic
    next-nearest-neighbor capacitance. n_junctions is the number of
    junctions forming each resonator inductor.
    """

    C_r: float
    L_r: float
    C_J: float = 0.0
    C_J2: float = 0.0
    qubits: tuple[QubitCircuit, ...] = ()
    n_junctions: int = 10
    N: int = 21
    d: float = 200.0

    def __post_init__(self):
        if isinstance(self.qubits, list):
            object.__setattr__(self, "qubits", tuple(self.qubits))
        for name in ("C_r", "L_r"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("C_J", "C_J2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        sites = [q.attachment_site for q in self.qubits]
        if len(set(sites)) != len(sites):
            raise ConfigError(f"attachment sites must be distinct, got {sites}")
        for q in self.qubits:
            if not 1 <= q.attachment_site <= self.N:
                raise ConfigError(f"attachment site {q.attachment_site} outside 1..{self.N}")
        small = {"C_J": self.C_J, "C_J2": self.C_J2}
        for q in self.qubits:
            small[f"C_g[{q.label or q.attachment_site}]"] = q.C_g
            small[f"C_g2[{q.label or q.attachment_site}]"] = q.C_g2
        for name, val in small.items():
            if val >= 0.2 * self.C_r:
                warnings.warn(
                    f"{name} = {val} fF is not small against C_r = {self.C_r} fF; "
                    "first-order parameter reduction may be inaccurate",
                    stacklevel=2,
                )

    @property
    def C_r_total(self) -> float:
        """Site capacitance loaded by the two coupling capacitors."""
        return self.C_r + 2.0 * self.C_J


@dataclass(frozen=True)
class CircuitDerivation:
    """Tight-binding parameters derived from the circuit elements.

    omega_r is the loaded site frequency (C_r + 2 C_J), omega_r_bare uses
    C_r alone. The measured pass-band center of a fabricated device need
    not coincide with either; build the lattice with an explicit omega_r
    when a fitted value is available.
    """

    omega_r: float
    omega_r_bare: float
    Z_r: float
    J: float
    J2: float
    K_r: float
    K: float
    group_velocity: float
    group_index: float

    def to_lattice(
        self,
        N: int,
        omega_r: float | None = None,
        kappa_edge: float = 0.0,
        kappa_nr: float = 0.0,
        disorder_sigma: float = 0.0,
        d: float = 200.0,
        include_J2: bool = True,
    ) -> LatticeParams:
        return LatticeParams(
            N=N,
            omega_r=self.omega_r if omega_r is None else omega_r,
            J=self.J,
            J2=self.J2 if include_J2 else 0.0,
            kappa_edge=kappa_edge,
            kappa_nr=kappa_nr,
            disorder_sigma=disorder_sigma,
            d=d,
        )

    def as_dict(self) -> dict:
        return {
            "omega_r_GHz": self.omega_r,
            "omega_r_bare_GHz": self.omega_r_bare,
            "Z_r_Ohm": self.Z_r,
            "J_GHz": self.J,
            "J2_GHz": self.J2,
            "K_r_GHz": self.K_r,
            "K_GHz": self.K,
            "group_velocity_m_s": self.group_velocity,
            "group_index": self.group_index,
        }


def _lc_freq(L_nH: float, C_fF: float) -> float:
    """Resonance frequency 1/(2 pi sqrt(LC)) in GHz."""
    return 1.0 / (2.0 * math.pi * math.sqrt(L_nH * _NH * C_fF * _FF)) / _GHZ


def derive_lattice_params(c: CircuitParams) -> CircuitDerivation:
    """Derive band parameters from the circuit elements.

    J follows J = (1/2) C_J omega_ang^2 Z_r / (2 pi), equivalent to
    omega_r C_J / (2 C_r_total); J2 is the analogous expression with
    C_J2. K_r = e^2/(2 n_junctions^2 C_r)/h is the single-resonator
    self-Kerr, diluted to K = K_r/N per array mode.
    """
    Cbar = c.C_r_total
    omega_r = _lc_freq(c.L_r, Cbar)
    omega_bare = _lc_freq(c.L_r, c.C_r)
    Z_r = 1e3 * math.sqrt(c.L_r / Cbar)
    omega_ang = 2.0 * math.pi * omega_r * _GHZ

    def hop(C_coupling_fF: float) -> float:
        return 0.5 * C_coupling_fF * _FF * omega_ang**2 * Z_r / (2.0 * math.pi) / _GHZ

    J = hop(c.C_J)
    J2 = hop(c.C_J2)
    K_r = _e**2 / (2.0 * c.n_junctions**2 * c.C_r * _FF) / _h / _GHZ
    K = K_r / c.N
    # group velocity of the recast dispersion omega_r + 2J cos(kd) at band center
    v_g = 2.0 * (2.0 * math.pi * J * _GHZ) * (c.d * _UM)
    n_g = _c_light / v_g if v_g > 0 else math.inf
    return CircuitDerivation(
        omega_r=omega_r,
        omega_r_bare=omega_bare,
        Z_r=Z_r,
        J=J,
        J2=J2,
        K_r=K_r,
        K=K,
        group_velocity=v_g,
        group_index=n_g,
    )


def invert_coupler_capacitance(J: float, omega_r: float, Z_r: float) -> float:
    """Coupling capacitance in fF reproducing hopping J at fixed omega_r, Z_r."""
    omega_ang = 2.0 * math.pi * omega_r * _GHZ
    J_ang = 2.0 * math.pi * J * _GHZ
    return 2.0 * J_ang / (omega_ang**2 * Z_r) / _FF


def transmon_total_capacitance(beta: float) -> float:
    """Total island capacitance in fF from the anharmonicity beta (GHz)."""
    if beta >= 0:
        raise ConfigError("transmon anharmonicity must be negative")
    return _e**2 / (2.0 * _h * abs(beta) * _GHZ) / _FF


def transmon_max_frequency(E_J_max: float, E_C: float) -> float:
    """omega_q at zero flux in the transmon limit, sqrt(8 E_J E_C) - E_C."""
    return math.sqrt(8.0 * E_J_max * E_C) - E_C


def omega_q_of_flux(omega_q_max: float, beta: float, flux: float) -> float:
    """Qubit frequency vs flux for a symmetric SQUID, flux in flux quanta.

    omega_q(F) = (omega_max + |beta|) sqrt(|cos(pi F)|) - |beta|; periodic
    with period 1 and even about zero. The minimum at half flux quantum is
    a regular point.
    """
    b = abs(beta)
    return (omega_q_max + b) * math.sqrt(abs(math.cos(math.pi * flux))) - b


def coupling_from_inverse_capacitance(
    inv_C: float,
    omega_q: float,
    omega_r: float,
    C_q_total: float,
    C_r_total: float,
) -> float:
    """Coupling rate in GHz from an effective inverse capacitance (1/F).

    g_ang = (1/2) inv_C sqrt(omega_q_ang omega_r_ang C_q_total C_r_total),
    the harmonic-limit charge-charge coupling.
    """
    wq = 2.0 * math.pi * omega_q * _GHZ
    wr = 2.0 * math.pi * omega_r * _GHZ
    g_ang = 0.5 * inv_C * math.sqrt(wq * wr * C_q_total * _FF * C_r_total * _FF)
    return g_ang / (2.0 * math.pi) / _GHZ


def parasitic_inverse_capacitance(
    c: CircuitParams, q: QubitCircuit, order: str = "first"
) -> float:
    """Effective inverse capacitance (1/F) of the qubit to sites x_q +- 1.

    order = "first" keeps only the term linear in the parasitic C_g2.
    order = "second" adds the two-step path through C_g and C_J.
    order = "printed" evaluates C_g2/(C_r_tot C_q) + C_r/(C_q_tot Cbar_J)
    with 1/Cbar_J = C_J/C_r_tot^2; this variant is kept for comparison
    only, it overestimates the exact matrix inverse several-fold.
    """
    Cq = q.C_q_total * _FF
    Cr = c.C_r_total * _FF
    first = q.C_g2 * _FF / (Cq * Cr)
    if order == "first":
        return first
    if order == "second":
        return first + (q.C_g * _FF) * (c.C_J * _FF) / (Cq * Cr**2)
    if order == "printed":
        inv_CJ = c.C_J * _FF / Cr**2
        return q.C_g2 * _FF / (Cr * (q.C_q * _FF)) + (c.C_r * _FF) * inv_CJ / Cq
    raise ConfigError(f"unknown parasitic order {order!r}")


def derive_qubit_params(
    c: CircuitParams,
    flux: float,
    qubit_index: int,
    parasitic_order: str = "first",
) -> QubitParams:
    """Qubit parameters at a given flux bias (flux quanta).

    beta = -E_C with E_C = e^2/(2 C_q_total h); the coupling g uses the
    harmonic-limit charge matrix element at the biased qubit frequency.
    """
    if not math.isfinite(flux):
        raise ConfigError("flux must be finite")
    q = c.qubits[qubit_index]
    deriv = derive_lattice_params(c)
    E_C = _e**2 / (2.0 * _h * q.C_q_total * _FF) / _GHZ
    beta = -E_C
    omega_max = transmon_max_frequency(q.E_J_max, E_C)
    omega_q = omega_q_of_flux(omega_max, beta, flux)
    Cq = q.C_q_total * _FF
    Cr = c.C_r_total * _FF
    g = coupling_from_inverse_capacitance(
        q.C_g * _FF / (Cq * Cr), omega_q, deriv.omega_r, q.C_q_total, c.C_r_total
    )
    inv_C2 = parasitic_inverse_capacitance(c, q, order=parasitic_order)
    g2 = coupling_from_inverse_capacitance(
        inv_C2, omega_q, deriv.omega_r, q.C_q_total, c.C_r_total
    )
    return QubitParams(
        omega_q=omega_q,
        beta=beta,
        g=g,
        g2=g2,
        x_q=q.attachment_site,
        label=q.label,
    )


def invert_coupling_capacitance(
    g_target: float, omega_q: float, omega_r: float, C_q_total: float, C_r_total: float
) -> float:
    """C_g in fF reproducing a target coupling at fixed total capacitances."""
    wq = 2.0 * math.pi * omega_q * _GHZ
    wr = 2.0 * math.pi * omega_r * _GHZ
    g_ang = 2.0 * math.pi * g_target * _GHZ
    inv_C = 2.0 * g_ang / math.sqrt(wq * wr * C_q_total * _FF * C_r_total * _FF)
    return inv_C * (C_q_total * _FF) * (C_r_total * _FF) / _FF


@dataclass(frozen=True)
class FluxCalibration:
    """Linear map from line voltages to SQUID fluxes.

    flux = L_mat @ V + Phi_off, with L_mat in flux quanta per volt and
    Phi_off in flux quanta.
    """

    L_mat: tuple[tuple[float, float], tuple[float, float]]
    Phi_off: tuple[float, float] = (0.0, 0.0)

    def matrix(self) -> np.ndarray:
        return np.asarray(self.L_mat, dtype=float)

    def __post_init__(self):
        if abs(np.linalg.det(self.matrix())) <= 0:
            raise CalibrationError("flux calibration matrix is singular")


def flux_forward(cal: FluxCalibration, voltages) -> np.ndarray:
    """Fluxes produced by a voltage pair."""
    return cal.matrix() @ np.asarray(voltages, dtype=float) + np.asarray(cal.Phi_off)


def flux_compensation(cal: FluxCalibration, target_flux) -> np.ndarray:
    """Voltages realizing a target flux pair, inverting the crosstalk map."""
    mat = cal.matrix()
    if abs(np.linalg.det(mat)) == 0:
        raise CalibrationError("flux calibration matrix is singular")
    return np.linalg.solve(mat, np.asarray(target_flux, dtype=float) - np.asarray(cal.Phi_off))
