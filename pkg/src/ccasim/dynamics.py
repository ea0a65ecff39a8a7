"""Single-excitation time evolution under flux pulse schedules.

Time is in ns and all Hamiltonian entries in GHz, so phases evolve as
exp(-2 pi i omega t). Losses are anti-Hermitian diagonal terms; the
norm deficit is split into a "released" channel (edge ports) and a
"lost" channel (internal kappa_nr and qubit gamma_q), which experiments
cannot distinguish but diagnostics can.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.optimize

from .boundstate import BoundStateSolution
from .errors import ConfigError, NoDiscreteStateError, NumericalError
from .params import HamiltonianModel
from .spectra import build_and_diag_1ex, build_h_1ex
from .transport import loss_diagonal

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FluxSegment:
    """One flux move: ramp the qubit to target over t_raise, then hold.

    duration includes the leading ramp; segments of the same qubit run
    back to back starting at t = 0.
    """

    qubit: int
    target: float
    duration: float
    t_raise: float = 1.0
    shape: str = "linear"

    def __post_init__(self):
        if self.duration < 0 or self.t_raise < 0:
            raise ConfigError("segment times must be non-negative")
        if self.t_raise > self.duration:
            raise ConfigError("t_raise exceeds segment duration")
        if self.shape not in ("linear", "tanh"):
            raise ConfigError(f"unknown ramp shape {self.shape!r}")


@dataclass(frozen=True)
class PulseSchedule:
    """Per-qubit segment sequences plus initial state and sampling.

    initial_state: ("qubit", i) for a bare excitation, ("bound", i) for
    the discrete eigenstate of H(0) with the largest weight on qubit i,
    or ("vector", array) for an explicit normalized state.
    """

    segments: tuple[FluxSegment, ...] = ()
    initial_state: tuple = ("qubit", 0)
    total_time: float | None = None
    dt_sample: float = 0.05

    def __post_init__(self):
        if self.dt_sample <= 0:
            raise ConfigError("dt_sample must be positive")
        if self.total_time is not None and self.total_time < self.span():
            raise ConfigError("total_time does not cover all segments")

    def per_qubit(self) -> dict[int, list[FluxSegment]]:
        out: dict[int, list[FluxSegment]] = {}
        for s in self.segments:
            out.setdefault(s.qubit, []).append(s)
        return out

    def span(self) -> float:
        spans = [
            sum(s.duration for s in segs) for segs in self.per_qubit().values()
        ]
        return max(spans, default=0.0)

    def horizon(self) -> float:
        return self.total_time if self.total_time is not None else self.span()


def _ramp(u: float, shape: str) -> float:
    """Normalized ramp profile on u in [0, 1]."""
    if shape == "linear":
        return u
    # tanh ramp pinned to the endpoints
    a = 2.5
    t0, t1 = math.tanh(-a), math.tanh(a)
    return (math.tanh(a * (2.0 * u - 1.0)) - t0) / (t1 - t0)


class _QubitTrajectory:
    """omega_q(t) for one qubit from its segment list."""

    def __init__(self, omega0: float, segments: list[FluxSegment]):
        self.omega0 = omega0
        self.starts = []
        self.segments = segments
        t = 0.0
        for s in segments:
            self.starts.append(t)
            t += s.duration
        self.end = t

    def breakpoints(self) -> list[float]:
        pts = []
        for t0, s in zip(self.starts, self.segments):
            pts += [t0, t0 + s.t_raise, t0 + s.duration]
        return pts

    def __call__(self, t: float) -> float:
        if not self.segments or t < self.starts[0]:
            return self.omega0
        i = bisect.bisect_right(self.starts, t) - 1
        s = self.segments[i]
        prev = self.omega0 if i == 0 else self.segments[i - 1].target
        if t >= self.starts[i] + s.duration:
            return self.segments[-1].target if t >= self.end else s.target
        dt = t - self.starts[i]
        if dt >= s.t_raise or s.t_raise == 0.0:
            return s.target
        return prev + (s.target - prev) * _ramp(dt / s.t_raise, s.shape)


@dataclass(frozen=True)
class DynamicsResult:
    """Sampled populations of one schedule run.

    P_q[iq] and P_site[x-1] are populations on the sample grid; released
    integrates edge-port leakage, lost the internal decay. norm2 is the
    retained probability.
    """

    t: np.ndarray
    P_q: np.ndarray
    P_site: np.ndarray
    P_released: np.ndarray
    P_lost: np.ndarray
    norm2: np.ndarray
    omega_q: np.ndarray
    psi_final: np.ndarray

    def retained_final(self) -> float:
        """Final atomic population P1 + P2, the measured retention."""
        return float(np.sum(self.P_q[:, -1])) if len(self.P_q) else 0.0


def initial_vector(model: HamiltonianModel, spec: tuple) -> np.ndarray:
    kind = spec[0]
    M = model.dim
    N = model.lattice.N
    if kind == "qubit":
        i = int(spec[1])
        if not 0 <= i < len(model.qubits):
            raise ConfigError(f"no qubit index {i}")
        psi = np.zeros(M, dtype=complex)
        psi[N + i] = 1.0
        return psi
    if kind == "bound":
        i = int(spec[1])
        res = build_and_diag_1ex(model)
        idx = np.where(res.discrete)[0]
        if len(idx) == 0:
            raise NoDiscreteStateError("no discrete state to prepare")
        best = idx[np.argmax(res.qubit_weight[i, idx])]
        return res.eigenvectors[:, best].astype(complex)
    if kind == "vector":
        psi = np.asarray(spec[1], dtype=complex)
        if psi.shape != (M,):
            raise ConfigError(f"initial vector has shape {psi.shape}, want ({M},)")
        n = np.linalg.norm(psi)
        if n == 0:
            raise ConfigError("initial vector is zero")
        return psi / n
    raise ConfigError(f"unknown initial state kind {kind!r}")


def evolve(
    model: HamiltonianModel,
    schedule: PulseSchedule,
    gamma_q=0.0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> DynamicsResult:
    """Integrate the schedule with adaptive RK45, split at ramp corners.

    The qubit diagonal follows each trajectory; all off-diagonal terms
    are static. Released and lost probabilities are co-integrated so
    norm2 + released + lost stays at 1 within integrator tolerance.
    """
    M = model.dim
    N = model.lattice.N
    n_q = len(model.qubits)
    T = schedule.horizon()
    if T <= 0:
        raise ConfigError("schedule horizon must be positive")
    per_q = schedule.per_qubit()
    for qi in per_q:
        if not 0 <= qi < n_q:
            raise ConfigError(f"segment references qubit {qi} of {n_q}")
    trajs = [
        _QubitTrajectory(model.qubits[qi].omega_q, per_q.get(qi, []))
        for qi in range(n_q)
    ]
    # integrate in a frame rotating at the band center: the common shift
    # leaves populations and loss integrals unchanged but slows the
    # phase winding by an order of magnitude, which the adaptive stepper
    # converts directly into accuracy
    frame = model.lattice.omega_r
    H0 = build_h_1ex(model).astype(complex)
    loss = loss_diagonal(model, gamma_q)
    Heff0 = H0 - frame * np.eye(M) - 0.5j * np.diag(loss)
    edge_idx = np.array([0, N - 1])
    kap_e = model.lattice.kappa_edge
    internal = loss.copy()
    internal[edge_idx] -= kap_e

    qslice = slice(N, N + n_q)

    def rhs(t, y):
        psi = y[:M]
        Heff = Heff0.copy()
        for i in range(n_q):
            Heff[N + i, N + i] = trajs[i](t) - frame - 0.5j * loss[N + i]
        dpsi = -1j * TWO_PI * (Heff @ psi)
        p_edge = float(np.sum(np.abs(psi[edge_idx]) ** 2))
        drel = TWO_PI * kap_e * p_edge
        dlost = TWO_PI * float(internal @ (np.abs(psi) ** 2))
        return np.concatenate([dpsi, [drel, dlost]])

    psi0 = initial_vector(model, schedule.initial_state)
    y0 = np.concatenate([psi0, [0.0, 0.0]]).astype(complex)
    pts = {0.0, T}
    for tr in trajs:
        pts.update(p for p in tr.breakpoints() if 0.0 < p < T)
    knots = sorted(pts)
    n_samp = max(int(round(T / schedule.dt_sample)), 1) + 1
    t_grid = np.linspace(0.0, T, n_samp)
    ys = np.empty((len(y0), n_samp), dtype=complex)
    ys[:, 0] = y0
    y = y0
    filled = 1
    for a, b in zip(knots[:-1], knots[1:]):
        inside = t_grid[(t_grid > a) & (t_grid <= b)]
        sol = scipy.integrate.solve_ivp(
            rhs,
            (a, b),
            y,
            method="RK45",
            t_eval=inside if len(inside) else None,
            rtol=rtol,
            atol=atol,
            dense_output=False,
        )
        if not sol.success:
            raise NumericalError(f"integration failed on [{a}, {b}]: {sol.message}")
        if len(inside):
            ys[:, filled : filled + len(inside)] = sol.y
            filled += len(inside)
            y = sol.y[:, -1]
            if inside[-1] < b:
                sol2 = scipy.integrate.solve_ivp(
                    rhs, (inside[-1], b), y, method="RK45", rtol=rtol, atol=atol
                )
                if not sol2.success:
                    raise NumericalError(sol2.message)
                y = sol2.y[:, -1]
        else:
            y = sol.y[:, -1]
    if filled != n_samp:
        raise NumericalError("sampling grid not fully covered")
    # undo the frame rotation so amplitudes are lab-frame
    ys[:M] *= np.exp(-2j * math.pi * frame * t_grid)[None, :]
    psi_t = ys[:M]
    P_q = np.abs(psi_t[qslice]) ** 2
    P_site = np.abs(psi_t[:N]) ** 2
    released = ys[M].real
    lost = ys[M + 1].real
    norm2 = np.sum(np.abs(psi_t) ** 2, axis=0)
    omega_q = np.array([[tr(t) for t in t_grid] for tr in trajs])
    return DynamicsResult(
        t=t_grid,
        P_q=P_q,
        P_site=P_site,
        P_released=released,
        P_lost=lost,
        norm2=norm2,
        omega_q=omega_q,
        psi_final=psi_t[:, -1],
    )


@dataclass(frozen=True)
class ChevronResult:
    """Final populations over (flux target, hold time) grids.

    P_final[iq, a, b] is qubit iq population after the return ramp for
    target index a and hold index b; retained is the atomic sum
    P1 + P2, whose deficit measures leakage into the band plus decay.
    """

    targets: np.ndarray
    taus: np.ndarray
    P_final: np.ndarray
    retained: np.ndarray
    t_raise: float
    moving_qubit: int


def swap_chevron(
    model: HamiltonianModel,
    moving_qubit: int,
    targets,
    taus,
    t_raise: float = 1.0,
    shape: str = "linear",
    initial_state: tuple | None = None,
    gamma_q=0.0,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> ChevronResult:
    """Pulse one qubit to each target, hold tau, return, read populations.

    The excitation starts in the moving qubit's bound state by default.
    Hold time tau excludes both ramps; the full protocol lasts
    tau + 2 t_raise.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if initial_state is None:
        initial_state = ("bound", moving_qubit)
    park = model.qubits[moving_qubit].omega_q
    n_q = len(model.qubits)
    P_final = np.empty((n_q, len(targets), len(taus)))
    retained = np.empty((len(targets), len(taus)))
    psi0 = initial_vector(model, initial_state)
    for a, tgt in enumerate(targets):
        for b, tau in enumerate(taus):
            sched = PulseSchedule(
                segments=(
                    FluxSegment(moving_qubit, tgt, tau + t_raise, t_raise, shape),
                    FluxSegment(moving_qubit, park, t_raise, t_raise, shape),
                ),
                initial_state=("vector", psi0),
                dt_sample=max(tau + 2.0 * t_raise, 1e-3),
            )
            res = evolve(model, sched, gamma_q=gamma_q, rtol=rtol, atol=atol)
            P_final[:, a, b] = res.P_q[:, -1]
            retained[a, b] = float(np.sum(res.P_q[:, -1]))
    return ChevronResult(
        targets=targets,
        taus=taus,
        P_final=P_final,
        retained=retained,
        t_raise=t_raise,
        moving_qubit=moving_qubit,
    )


def _fit_sinusoid(taus: np.ndarray, P: np.ndarray):
    """Fit a cos + b sin + c at a refined frequency; None when unusable."""
    if len(taus) < 8:
        raise ConfigError("need at least 8 samples for a frequency estimate")
    taus = np.asarray(taus, dtype=float)
    dt = taus[1] - taus[0]
    y = np.asarray(P, dtype=float) - np.mean(P)
    spec = np.abs(np.fft.rfft(y))
    freqs = np.fft.rfftfreq(len(y), d=dt)
    k = int(np.argmax(spec[1:])) + 1
    f0 = float(freqs[k])

    def resid(p):
        a, b, c, f = p
        ph = TWO_PI * f * taus
        return a * np.cos(ph) + b * np.sin(ph) + c - y

    p0 = [np.max(np.abs(y)), 0.0, 0.0, f0]
    sol = scipy.optimize.least_squares(resid, p0, xtol=1e-14)
    f_fit = abs(float(sol.x[3]))
    if not sol.success or not 0.25 * f0 <= f_fit <= 4.0 * f0:
        return None, f0
    a, b, c, _ = (float(v) for v in sol.x)
    return (a, b, c, f_fit), f0


def oscillation_frequency(taus: np.ndarray, P: np.ndarray) -> float:
    """Dominant nonzero frequency (GHz) of a population trace over ns.

    An FFT peak seeds a sinusoid least-squares fit, so the estimate is
    not limited to the transform bin width.
    """
    fit, f0 = _fit_sinusoid(taus, P)
    return fit[3] if fit is not None else f0


def first_swap_time(
    taus: np.ndarray, P_target: np.ndarray, t_raise: float
) -> float:
    """Protocol duration tau + 2 t_raise at the first transfer maximum.

    Band leakage superposes ripples and a slow envelope on the exchange
    oscillation, so the maximum is read off a fitted sinusoid rather
    than the raw samples.
    """
    taus = np.asarray(taus, dtype=float)
    P = np.asarray(P_target, dtype=float)
    fit, _ = _fit_sinusoid(taus, P)
    if fit is None:
        return float(taus[int(np.argmax(P))] + 2.0 * t_raise)
    a, b, _, f = fit
    phase = math.atan2(b, a)
    if phase < 0.0:
        phase += TWO_PI
    return float(phase / (TWO_PI * f) + 2.0 * t_raise)


def released_population(result: DynamicsResult, bs: BoundStateSolution) -> dict:
    """Compare the leaked fraction against the sudden-limit bound sin^2 theta."""
    measured = float(result.P_released[-1])
    bound = math.sin(bs.theta) ** 2
    return {
        "measured": measured,
        "bound": bound,
        "violation": measured > bound + 0.05,
    }
