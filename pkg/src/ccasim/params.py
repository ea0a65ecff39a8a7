"""Core parameter containers shared by all physics modules.

Unit conventions, used consistently everywhere:

* frequencies, couplings and linewidths are ordinary (not angular)
  frequencies in GHz; the 2*pi lives inside time evolution and
  linewidth/Kerr conversions only,
* times are in ns (GHz * ns = 1),
* capacitances in fF, inductances in nH, lengths in um.

Cavity sites are indexed 1..N. Mode index m = 1..N maps to quasi-momentum
k = m*pi/(N+1), with m = 1 the top of the band.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class LatticeParams:
    """Tight-binding description of the bare resonator chain.

    omega_r is the center of the pass band in GHz. J and J2 are the
    nearest- and next-nearest-neighbor hopping rates. kappa_edge is the
    radiative rate of each edge cavity into its feed line, kappa_nr the
    internal loss per cavity, disorder_sigma the std of per-site frequency
    scatter. d is the lattice constant in um.
    """

    N: int = 21
    omega_r: float = 5.717
    J: float = 0.249
    J2: float = 0.0
    kappa_edge: float = 0.0
    kappa_nr: float = 0.0
    disorder_sigma: float = 0.0
    d: float = 200.0

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.J <= 0:
            raise ConfigError(f"J must be positive, got {self.J}")
        for name in ("kappa_edge", "kappa_nr", "disorder_sigma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @property
    def band_bottom(self) -> float:
        return self.omega_r - 2.0 * self.J

    @property
    def band_top(self) -> float:
        return self.omega_r + 2.0 * self.J

    def replace(self, **kw) -> "LatticeParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class QubitParams:
    """One emitter: frequency, anharmonicity and couplings, all in GHz.

    beta <= 0 is the transmon anharmonicity. g couples the qubit to site
    x_q, g2 to the two neighboring sites x_q +- 1.
    """

    omega_q: float
    g: float
    x_q: int
    beta: float = 0.0
    g2: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.beta > 0:
            raise ConfigError(f"beta must be <= 0, got {self.beta}")
        if self.x_q < 1:
            raise ConfigError(f"x_q must be >= 1, got {self.x_q}")

    def replace(self, **kw) -> "QubitParams":
        return replace(self, **kw)

    def detuning(self, lattice: LatticeParams) -> float:
        """omega_q - omega_r relative to the band center."""
        return self.omega_q - lattice.omega_r


@dataclass(frozen=True)
class HamiltonianModel:
    """Lattice plus attached qubits, with optional next-nearest terms.

    When include_next_nearest is False the J2 and g2 values are ignored,
    which allows A/B comparison of the two models on identical inputs.
    disorder holds per-site frequency offsets in GHz (length N or empty).

    The site diagonal is placed at omega_r - 2*J2 so that the band edges
    omega_r +- 2J are independent of J2; with next-nearest hopping only
    the interior dispersion changes.
    """

    lattice: LatticeParams
    qubits: tuple[QubitParams, ...] = ()
    include_next_nearest: bool = True
    disorder: tuple[float, ...] = ()

    def __post_init__(self):
        if isinstance(self.qubits, list):
            object.__setattr__(self, "qubits", tuple(self.qubits))
        if isinstance(self.disorder, (list, np.ndarray)):
            object.__setattr__(self, "disorder", tuple(float(v) for v in self.disorder))
        sites = [q.x_q for q in self.qubits]
        if len(set(sites)) != len(sites):
            raise ConfigError(f"qubit attachment sites must be distinct, got {sites}")
        for q in self.qubits:
            if q.x_q > self.lattice.N:
                raise ConfigError(
                    f"attachment site {q.x_q} outside 1..{self.lattice.N}"
                )
        if self.disorder and len(self.disorder) != self.lattice.N:
            raise ConfigError(
                f"disorder must have N={self.lattice.N} entries, got {len(self.disorder)}"
            )

    @property
    def J2_eff(self) -> float:
        return self.lattice.J2 if self.include_next_nearest else 0.0

    def g2_eff(self, qubit: QubitParams) -> float:
        return qubit.g2 if self.include_next_nearest else 0.0

    @property
    def dim(self) -> int:
        return self.lattice.N + len(self.qubits)

    def replace(self, **kw) -> "HamiltonianModel":
        return replace(self, **kw)

    def with_qubit(self, index: int, **kw) -> "HamiltonianModel":
        qubits = list(self.qubits)
        qubits[index] = qubits[index].replace(**kw)
        return self.replace(qubits=tuple(qubits))


def site_frequencies(model: HamiltonianModel) -> np.ndarray:
    """Diagonal site frequencies including the J2 offset and disorder."""
    lat = model.lattice
    base = lat.omega_r - 2.0 * model.J2_eff
    freqs = np.full(lat.N, base)
    if model.disorder:
        freqs = freqs + np.asarray(model.disorder)
    return freqs
