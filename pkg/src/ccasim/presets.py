"""Measured device parameter set and builders derived from it.

The numbers mirror the characterized 21-resonator device with two
flux-tunable transmons on sites 10 and 12. omega_r here is the fitted
pass-band center (5.717 GHz), which sits above the bare LC value
because of junction-array and coupler loading; lattice builders use it
directly while the circuit builder reconstructs element values from
the band observables.
"""

from __future__ import annotations

import math

from .circuit import (
    CircuitParams,
    FluxCalibration,
    QubitCircuit,
    coupling_from_inverse_capacitance,
    derive_lattice_params,
    invert_coupler_capacitance,
    invert_coupling_capacitance,
    transmon_total_capacitance,
)
from .errors import ConfigError
from .params import HamiltonianModel, LatticeParams, QubitParams

TABLE1 = {
    "N": 21,
    "C_r_fF": 91.3,
    "L_r_nH": 8.87,
    "omega_r_bare_GHz": 5.593,
    "omega_r_GHz": 5.717,
    "Z_r_Ohm": 312.0,
    "J_GHz": 0.249,
    "J2_GHz": 0.038,
    "kappa_GHz": 0.012,
    "kappa_nr_GHz": 0.0003,
    "K_r_GHz": 0.0021,
    "K_GHz": 0.0001,
    "d_um": 200.0,
    "n_junctions": 10,
    "sigma_GHz": 0.025,
    "omega_q1_max_GHz": 6.322,
    "omega_q2_max_GHz": 6.606,
    "beta_q1_GHz": -0.266,
    "beta_q2_GHz": -0.257,
    "g_q1_GHz": 0.338,
    "g_q2_GHz": 0.311,
    "x_q1": 10,
    "x_q2": 12,
    "gamma_q_GHz": 5e-5,
    "C_J2_fF": 0.52,
    "C_g2_fF": 0.73,
    # dispersive readout resonators, not part of the simulated chain
    "omega_ro1_GHz": 4.280,
    "omega_ro2_GHz": 4.412,
    "h1_GHz": 0.098,
    "h2_GHz": 0.089,
    "gamma_c_GHz": 5e-5,
}

# flux-line crosstalk: mutual ratios and static offsets in flux quanta
FLUX_CROSSTALK = {
    "L12_over_L11": 0.041,
    "L21_over_L22": 0.063,
    "Phi_off_1": 0.091,
    "Phi_off_2": 0.084,
}


def preset_table1() -> dict:
    """Config fragment with the full measured parameter set."""
    return dict(TABLE1)


def table1_lattice(
    with_losses: bool = False, include_J2: bool = True
) -> LatticeParams:
    """Chain parameters; losses off by default for spectral work."""
    t = TABLE1
    return LatticeParams(
        N=t["N"],
        omega_r=t["omega_r_GHz"],
        J=t["J_GHz"],
        J2=t["J2_GHz"] if include_J2 else 0.0,
        kappa_edge=t["kappa_GHz"] if with_losses else 0.0,
        kappa_nr=t["kappa_nr_GHz"] if with_losses else 0.0,
        disorder_sigma=t["sigma_GHz"],
        d=t["d_um"],
    )


def coupler_capacitance_self_consistent(
    J: float, C_r: float, L_r: float, iterations: int = 60
) -> float:
    """C_J reproducing J when the loading C_r + 2 C_J is fed back."""
    C_J = 0.0
    for _ in range(iterations):
        d = derive_lattice_params(CircuitParams(C_r=C_r, L_r=L_r, C_J=C_J))
        new = invert_coupler_capacitance(J, d.omega_r, d.Z_r)
        if abs(new - C_J) < 1e-12:
            return new
        C_J = new
    return C_J


def table1_parasitic_g2(beta: float, omega_q: float) -> float:
    """First-order parasitic coupling to sites x_q +- 1 in GHz.

    Uses the characterized C_g2 with the total capacitances implied by
    beta and the band parameters.
    """
    t = TABLE1
    C_J = coupler_capacitance_self_consistent(t["J_GHz"], t["C_r_fF"], t["L_r_nH"])
    C_r_tot = t["C_r_fF"] + 2.0 * C_J
    C_q_tot = transmon_total_capacitance(beta)
    _FF = 1e-15
    inv_C2 = t["C_g2_fF"] * _FF / (C_q_tot * _FF * C_r_tot * _FF)
    return coupling_from_inverse_capacitance(
        inv_C2, omega_q, t["omega_r_GHz"], C_q_tot, C_r_tot
    )


def table1_qubits(
    omega_q1: float | None = None,
    omega_q2: float | None = None,
    parasitic: bool = True,
) -> tuple[QubitParams, QubitParams]:
    """Both transmons parked at the given (default maximum) frequencies."""
    t = TABLE1
    w1 = t["omega_q1_max_GHz"] if omega_q1 is None else omega_q1
    w2 = t["omega_q2_max_GHz"] if omega_q2 is None else omega_q2
    g2_1 = table1_parasitic_g2(t["beta_q1_GHz"], w1) if parasitic else 0.0
    g2_2 = table1_parasitic_g2(t["beta_q2_GHz"], w2) if parasitic else 0.0
    q1 = QubitParams(
        omega_q=w1,
        g=t["g_q1_GHz"],
        x_q=t["x_q1"],
        beta=t["beta_q1_GHz"],
        g2=g2_1,
        label="Q1",
    )
    q2 = QubitParams(
        omega_q=w2,
        g=t["g_q2_GHz"],
        x_q=t["x_q2"],
        beta=t["beta_q2_GHz"],
        g2=g2_2,
        label="Q2",
    )
    return q1, q2


def table1_model(
    omega_q1: float | None = None,
    omega_q2: float | None = None,
    include_next_nearest: bool = True,
    parasitic: bool = True,
    with_losses: bool = False,
    qubits: str = "both",
) -> HamiltonianModel:
    """Full device model; qubits = "both" | "q1" | "q2" | "none"."""
    lat = table1_lattice(with_losses=with_losses, include_J2=include_next_nearest)
    q1, q2 = table1_qubits(omega_q1, omega_q2, parasitic=parasitic)
    pick = {"both": (q1, q2), "q1": (q1,), "q2": (q2,), "none": ()}
    if qubits not in pick:
        raise ConfigError(f"qubits must be both/q1/q2/none, got {qubits!r}")
    return HamiltonianModel(
        lattice=lat,
        qubits=pick[qubits],
        include_next_nearest=include_next_nearest,
    )


def table1_circuit() -> CircuitParams:
    """Element values reconstructed from the measured band and qubits.

    C_J and C_J2 are inverted self-consistently so that
    derive_lattice_params returns the measured hoppings exactly. The
    island capacitances come from the anharmonicities and C_g from the
    couplings evaluated at the measured band center; the loaded LC
    frequency of this simplified network sits below that fitted center,
    so frequency-dependent derived quantities close only approximately.
    """
    t = TABLE1
    C_J = coupler_capacitance_self_consistent(t["J_GHz"], t["C_r_fF"], t["L_r_nH"])
    d = derive_lattice_params(CircuitParams(C_r=t["C_r_fF"], L_r=t["L_r_nH"], C_J=C_J))
    C_J2 = invert_coupler_capacitance(t["J2_GHz"], d.omega_r, d.Z_r)
    C_r_tot = t["C_r_fF"] + 2.0 * C_J
    qubits = []
    for beta, g, wmax, site, label in (
        (t["beta_q1_GHz"], t["g_q1_GHz"], t["omega_q1_max_GHz"], t["x_q1"], "Q1"),
        (t["beta_q2_GHz"], t["g_q2_GHz"], t["omega_q2_max_GHz"], t["x_q2"], "Q2"),
    ):
        C_q_tot = transmon_total_capacitance(beta)
        C_g = invert_coupling_capacitance(
            g, wmax, t["omega_r_GHz"], C_q_tot, C_r_tot
        )
        E_C = abs(beta)
        E_J_max = (wmax + E_C) ** 2 / (8.0 * E_C)
        qubits.append(
            QubitCircuit(
                C_g=C_g,
                C_q=C_q_tot - C_g - t["C_g2_fF"],
                E_J_max=E_J_max,
                attachment_site=site,
                C_g2=t["C_g2_fF"],
                label=label,
            )
        )
    return CircuitParams(
        C_r=t["C_r_fF"],
        L_r=t["L_r_nH"],
        C_J=C_J,
        C_J2=C_J2,
        qubits=tuple(qubits),
        n_junctions=t["n_junctions"],
        N=t["N"],
        d=t["d_um"],
    )


def table1_flux_calibration(L11: float = 1.0, L22: float = 1.0) -> FluxCalibration:
    """Flux-line map with the characterized crosstalk ratios and offsets.

    The diagonal transfer factors are setup-dependent and default to 1
    flux quantum per volt; only the ratios and offsets are device facts.
    """
    fc = FLUX_CROSSTALK
    L = (
        (L11, fc["L12_over_L11"] * L11),
        (fc["L21_over_L22"] * L22, L22),
    )
    return FluxCalibration(L_mat=L, Phi_off=(fc["Phi_off_1"], fc["Phi_off_2"]))


def optimized_range_model(
    omega_q: float,
    g: float = 0.050,
    sites: tuple[int, int] = (9, 13),
    include_next_nearest: bool = False,
) -> HamiltonianModel:
    """Interaction-range study layout: wider spacing, weaker coupling.

    Equal bare frequencies on sites (9, 13) with g = 50 MHz push the
    on/off ratio of U across a 1 GHz sweep far above the stock layout.
    """
    lat = table1_lattice(include_J2=include_next_nearest)
    beta1 = TABLE1["beta_q1_GHz"]
    beta2 = TABLE1["beta_q2_GHz"]
    q1 = QubitParams(omega_q=omega_q, g=g, x_q=sites[0], beta=beta1, label="Q1")
    q2 = QubitParams(omega_q=omega_q, g=g, x_q=sites[1], beta=beta2, label="Q2")
    return HamiltonianModel(
        lattice=lat, qubits=(q1, q2), include_next_nearest=include_next_nearest
    )
