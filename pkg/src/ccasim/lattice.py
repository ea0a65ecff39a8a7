"""Normal modes of the bare finite chain and the circuit dispersion relation.

Open boundary conditions throughout. Mode m = 1..N carries quasi-momentum
k = m pi/(N+1); m = 1 sits at the top of the band for positive J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitParams, derive_lattice_params
from .errors import ConfigError
from .params import LatticeParams

LINEWIDTH_EDGE_AMPLITUDE = "sin2k"
LINEWIDTH_PRINTED = "sin2k_half"


@dataclass(frozen=True)
class ModeSet:
    """Normal modes of the bare chain.

    amplitudes[m-1, x-1] is the profile of mode m on site x; rows are
    orthonormal. Frequencies and linewidths are in GHz.
    """

    m: np.ndarray
    k: np.ndarray
    omega: np.ndarray
    kappa: np.ndarray
    amplitudes: np.ndarray

    def __len__(self) -> int:
        return len(self.m)


def mode_frequencies(p: LatticeParams) -> ModeSet:
    """Closed-form mode frequencies and profiles for the J2 = 0 chain.

    omega_m = omega_r + 2J cos(m pi/(N+1)), amplitude sqrt(2/(N+1)) sin(kx).
    With next-nearest hopping the closed form does not apply; diagonalize
    through the spectra module instead.
    """
    if p.J2 != 0.0:
        raise ConfigError("closed-form modes require J2 = 0; use spectra.build_and_diag_1ex")
    N = p.N
    m = np.arange(1, N + 1)
    k = m * math.pi / (N + 1)
    omega = p.omega_r + 2.0 * p.J * np.cos(k)
    x = np.arange(1, N + 1)
    amplitudes = np.sqrt(2.0 / (N + 1)) * np.sin(np.outer(k, x))
    kappa = _linewidths(p, k)
    return ModeSet(m=m, k=k, omega=omega, kappa=kappa, amplitudes=amplitudes)


def _linewidths(p: LatticeParams, k: np.ndarray, convention: str = LINEWIDTH_EDGE_AMPLITUDE) -> np.ndarray:
    if p.N == 1:
        # single cavity loaded by both ports
        return np.array([2.0 * p.kappa_edge + p.kappa_nr])
    if convention == LINEWIDTH_EDGE_AMPLITUDE:
        rad = (2.0 * p.kappa_edge / (p.N + 1)) * np.sin(k) ** 2
    elif convention == LINEWIDTH_PRINTED:
        rad = (2.0 * p.kappa_edge / (p.N + 1)) * np.sin(k / 2.0) ** 2
    else:
        raise ConfigError(f"unknown linewidth convention {convention!r}")
    return rad + p.kappa_nr


def mode_linewidths(p: LatticeParams, convention: str = LINEWIDTH_EDGE_AMPLITUDE) -> np.ndarray:
    """Per-mode linewidths in GHz.

    The default convention scales the radiative part with sin^2(k), the
    squared mode amplitude on the edge site, so modes narrow at both band
    edges. The monotonic sin^2(k/2) variant is available as
    ``convention="sin2k_half"`` for comparison.
    """
    N = p.N
    k = np.arange(1, N + 1) * math.pi / (N + 1)
    return _linewidths(p, k, convention)


@dataclass(frozen=True)
class DispersionPoint:
    """Circuit dispersion sample at a single frequency."""

    omega: float
    kd: complex
    evanescent: bool
    v_g: float
    Z: float


def dispersion_circuit(c: CircuitParams, omega: float) -> DispersionPoint:
    """Dispersion, group velocity and impedance of the infinite chain.

    Uses the recast tight-binding dispersion omega = omega_r + 2J cos(kd)
    with omega_r and J derived from the circuit. Out-of-band frequencies
    return an evanescent point with imaginary kd. The line impedance
    follows Z(omega) = sqrt(L_r/C_J) (1 - (omega/omega_r)^2)^(-1/2),
    divergent at omega_r.
    """
    deriv = derive_lattice_params(c)
    if deriv.J <= 0:
        raise ConfigError("dispersion requires C_J > 0")
    u = (omega - deriv.omega_r) / (2.0 * deriv.J)
    d_m = c.d * 1e-6
    if abs(u) <= 1.0:
        kd = math.acos(u)
        # v_g = |d omega_ang / dk| = 2 J_ang d sin(kd)
        v_g = 2.0 * (2.0 * math.pi * deriv.J * 1e9) * d_m * math.sin(kd)
        evanescent = False
    else:
        kd = 1j * math.acosh(abs(u)) + (0.0 if u > 0 else math.pi)
        v_g = 0.0
        evanescent = True
    ratio = 1.0 - (omega / deriv.omega_r) ** 2
    if c.C_J > 0 and ratio > 0:
        Z = 1e3 * math.sqrt(c.L_r / c.C_J) / math.sqrt(ratio)
    else:
        Z = math.inf
    return DispersionPoint(omega=omega, kd=kd, evanescent=evanescent, v_g=v_g, Z=Z)
