"""Scenario runner: parameter parsing, sweeps, seeded reproducible output.

Every scenario resolves its parameters through a single reader so the
manifest records the exact values used, defaults included. Keys carry
unit suffixes (J_GHz, tau_max_ns) to keep GHz/MHz mixups out of config
files. Exit codes: 0 ok, 2 bad configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import plotting
from .boundstate import solve_single_bs, solve_two_atom_bs
from .dynamics import (
    FluxSegment,
    PulseSchedule,
    evolve,
    first_swap_time,
    swap_chevron,
)
from .errors import ConfigError, NoBoundStateError, NoDiscreteStateError, NumericalError
from .lattice import LINEWIDTH_EDGE_AMPLITUDE, mode_frequencies, mode_linewidths
from .output import RunManifest, write_csv, write_json
from .params import HamiltonianModel, LatticeParams, QubitParams
from .presets import TABLE1, optimized_range_model, preset_table1, table1_model
from .spectra import (
    build_and_diag_1ex,
    build_and_diag_2ex,
    classification_margin,
    disorder_ensemble,
    dressed_anharmonicity,
    zz_interaction,
)
from .transport import (
    CrosstalkModel,
    KerrResponse,
    apply_crosstalk,
    fit_kerr,
    kerr_response,
    transmission_linear,
)

_REQUIRED = object()


class ParamReader:
    """Pulls typed values out of a raw mapping and tracks what was used."""

    def __init__(self, raw: dict):
        self.raw = dict(raw)
        self.resolved: dict = {}

    def take(self, key, default=_REQUIRED, cast=None):
        if key in self.raw:
            value = self.raw.pop(key)
        elif default is _REQUIRED:
            raise ConfigError(f"missing required field {key!r}")
        else:
            value = default
        if cast is not None and value is not None:
            try:
                value = cast(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"field {key!r}: {exc}") from exc
        self.resolved[key] = value
        return value

    def finish(self):
        if self.raw:
            raise ConfigError(f"unknown field(s): {', '.join(sorted(self.raw))}")


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str):
        if v.lower() in ("true", "1", "yes", "on"):
            return True
        if v.lower() in ("false", "0", "no", "off"):
            return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _floats(v) -> list[float]:
    if isinstance(v, str):
        parts = [p for p in v.replace(",", " ").split() if p]
        return [float(p) for p in parts]
    return [float(x) for x in np.atleast_1d(v)]


def _lattice_from(
    r: ParamReader, with_losses_default=False, J2_default=None
) -> LatticeParams:
    t = TABLE1
    return LatticeParams(
        N=r.take("N", t["N"], int),
        omega_r=r.take("omega_r_GHz", t["omega_r_GHz"], float),
        J=r.take("J_GHz", t["J_GHz"], float),
        J2=r.take("J2_GHz", t["J2_GHz"] if J2_default is None else J2_default, float),
        kappa_edge=r.take(
            "kappa_GHz", t["kappa_GHz"] if with_losses_default else 0.0, float
        ),
        kappa_nr=r.take(
            "kappa_nr_GHz", t["kappa_nr_GHz"] if with_losses_default else 0.0, float
        ),
        d=r.take("d_um", t["d_um"], float),
    )


def _qubits_from(r: ParamReader, lattice: LatticeParams, extended: bool):
    t = TABLE1
    out = []
    for i in (1, 2):
        omega = r.take(f"omega_q{i}_GHz", t[f"omega_q{i}_max_GHz"], float)
        g = r.take(f"g_q{i}_GHz", t[f"g_q{i}_GHz"], float)
        x = r.take(f"x_q{i}", t[f"x_q{i}"], int)
        beta = r.take(f"beta_q{i}_GHz", t[f"beta_q{i}_GHz"], float)
        g2 = r.take(f"g2_q{i}_GHz", 0.025 if extended else 0.0, float)
        out.append(
            QubitParams(omega_q=omega, g=g, x_q=x, beta=beta, g2=g2, label=f"Q{i}")
        )
    return tuple(out)


# -- scenarios ---------------------------------------------------------------


def scenario_band(r: ParamReader, ctx: dict) -> None:
    t = TABLE1
    p = LatticeParams(
        N=r.take("N", t["N"], int),
        omega_r=r.take("omega_r_GHz", t["omega_r_GHz"], float),
        J=r.take("J_GHz", t["J_GHz"], float),
        kappa_edge=r.take("kappa_GHz", t["kappa_GHz"], float),
        kappa_nr=r.take("kappa_nr_GHz", t["kappa_nr_GHz"], float),
    )
    convention = r.take("linewidth_convention", LINEWIDTH_EDGE_AMPLITUDE, str)
    r.finish()
    modes = mode_frequencies(p)
    kappa = mode_linewidths(p, convention=convention)
    _emit(
        ctx,
        "band",
        {
            "m": modes.m,
            "k_rad": modes.k,
            "omega_GHz": modes.omega,
            "kappa_GHz": kappa,
        },
    )
    if ctx["plot"]:
        path = ctx["out"] / "band.png"
        plotting.plot_band(modes.m, modes.omega, kappa, path)
        ctx["manifest"].record_output(path)


def scenario_transmission(r: ParamReader, ctx: dict) -> None:
    lat = _lattice_from(r, with_losses_default=True)
    if lat.kappa_edge <= 0:
        raise ConfigError("transmission requires kappa_GHz > 0")
    extended = r.take("model", "extended", str) == "extended"
    with_qubits = r.take("with_qubits", False, _bool)
    gamma_q = r.take("gamma_q_GHz", TABLE1["gamma_q_GHz"], float)
    qubits = _qubits_from(r, lat, extended) if with_qubits else ()
    model = HamiltonianModel(
        lattice=lat, qubits=qubits, include_next_nearest=extended
    )
    w_lo = r.take("omega_min_GHz", lat.band_bottom - 0.3, float)
    w_hi = r.take("omega_max_GHz", lat.band_top + 0.3, float)
    n = r.take("n_points", 2001, int)
    crosstalk = r.take("crosstalk", False, _bool)
    eps = r.take("epsilon_ct", 0.22, float)
    theta = r.take("theta_ct_rad", 0.34 * math.pi, float)
    powers = r.take("power_sweep_dBm", None, _floats)
    kerr = None
    if powers:
        kerr = dict(
            kappa=r.take("kerr_kappa_GHz", lat.kappa_edge, float),
            kappa_tot=r.take(
                "kerr_kappa_tot_GHz", 2.0 * lat.kappa_edge + lat.kappa_nr, float
            ),
            K=r.take("kerr_K_GHz", TABLE1["K_GHz"], float),
            omega0=r.take("kerr_omega0_GHz", lat.omega_r, float),
            attenuation_dB=r.take("attenuation_dB", 60.0, float),
        )
    r.finish()
    omega = np.linspace(w_lo, w_hi, n)
    trace = transmission_linear(model, omega, gamma_q=gamma_q)
    cols = {
        "omega_GHz": omega,
        "re_S21": trace.S21.real,
        "im_S21": trace.S21.imag,
        "abs_S21": np.abs(trace.S21),
        "arg_S21_rad": np.angle(trace.S21),
    }
    extra = {}
    if crosstalk:
        meas = apply_crosstalk(trace, CrosstalkModel(epsilon=eps, theta=theta))
        cols.update(
            {
                "re_S21_meas": meas.S21.real,
                "im_S21_meas": meas.S21.imag,
                "abs_S21_meas": np.abs(meas.S21),
            }
        )
        extra["with crosstalk"] = meas.S21
    _emit(ctx, "transmission", cols)
    if powers:
        rows = {k: [] for k in ("P_dBm", "omega_GHz", "re_S21", "im_S21", "abs_S21", "n_photon")}
        for P in powers:
            resp = KerrResponse(P_in_dBm=P, **kerr)
            delta = (omega - resp.omega0) / resp.kappa_tot
            kt = kerr_response(resp, delta)
            rows["P_dBm"].extend([P] * len(omega))
            rows["omega_GHz"].extend(omega)
            rows["re_S21"].extend(kt.S21.real)
            rows["im_S21"].extend(kt.S21.imag)
            rows["abs_S21"].extend(np.abs(kt.S21))
            rows["n_photon"].extend(kt.n_photon)
        _emit(ctx, "power_sweep", {k: np.asarray(v) for k, v in rows.items()})
    if ctx["plot"]:
        path = ctx["out"] / "transmission.png"
        plotting.plot_transmission(omega, trace.S21, path, extra=extra)
        ctx["manifest"].record_output(path)


def scenario_boundstate(r: ParamReader, ctx: dict) -> None:
    lat = _lattice_from(r, J2_default=0.0)
    if lat.J2 != 0.0:
        raise ConfigError("the analytic bound-state scenario requires J2_GHz = 0")
    t = TABLE1
    q = QubitParams(
        omega_q=r.take("omega_q_GHz", t["omega_q1_max_GHz"], float),
        g=r.take("g_GHz", t["g_q1_GHz"], float),
        x_q=r.take("x_q", t["x_q1"], int),
    )
    branch = r.take("branch", "above", str)
    r.finish()
    bs = solve_single_bs(q, lat, branch=branch)
    _emit(
        ctx,
        "boundstate",
        {"site": np.arange(1, lat.N + 1), "amplitude": bs.cloud},
    )
    summary = {
        "omega_BS_GHz": bs.omega_BS,
        "delta_GHz": bs.delta,
        "localization_sites": bs.lam,
        "theta_rad": bs.theta,
        "cos2theta": bs.cos2theta,
        "photon_weight": bs.photon_weight,
        "residual_GHz": bs.residual,
        "branch": branch,
    }
    p = write_json(ctx["out"] / "boundstate_summary.json", summary)
    ctx["manifest"].record_output(p)
    if ctx["plot"]:
        path = ctx["out"] / "boundstate.png"
        plotting.plot_cloud(np.arange(1, lat.N + 1), bs.cloud, q.x_q, path)
        ctx["manifest"].record_output(path)


def _splitting_point(model: HamiltonianModel, margin: float):
    """(omega_bar, U, w_plus, w_minus, melted) from the diagonalized model."""
    spec = build_and_diag_1ex(model, margin=margin)
    idx = spec.discrete_above()
    top = model.lattice.band_top
    if len(idx) == 0:
        raise NoBoundStateError("no discrete state above the band")
    if len(idx) == 1:
        w_plus = float(spec.eigenvalues[idx[-1]])
        U = (w_plus - top) / 2.0
        return top + U, U, w_plus, None, True
    w_plus = float(spec.eigenvalues[idx[-1]])
    w_minus = float(spec.eigenvalues[idx[-2]])
    return (w_plus + w_minus) / 2.0, (w_plus - w_minus) / 2.0, w_plus, w_minus, False


def scenario_splitting(r: ParamReader, ctx: dict) -> None:
    use_analytic = r.take("solver", "diag", str)
    extended = r.take("model", "extended", str) == "extended"
    layout = r.take("layout", "stock", str)
    lat = _lattice_from(r)
    if use_analytic == "analytic":
        # the transcendental solver covers the nearest-neighbor model only
        lat = lat.replace(J2=0.0)
    if layout == "stock":
        qubits = _qubits_from(r, lat, extended)
    elif layout == "optimized":
        g = r.take("g_GHz", 0.050, float)
        sites = (r.take("x_q1", 9, int), r.take("x_q2", 13, int))
        ref = optimized_range_model(lat.omega_r, g=g, sites=sites)
        qubits = ref.qubits
    else:
        raise ConfigError(f"layout must be stock or optimized, got {layout!r}")
    w_lo = r.take("omega_q_min_GHz", 6.25, float)
    w_hi = r.take("omega_q_max_GHz", 6.55, float)
    n = r.take("n_points", 25, int)
    r.finish()
    if use_analytic not in ("diag", "analytic"):
        raise ConfigError("solver must be diag or analytic")
    if use_analytic == "analytic" and extended:
        raise ConfigError("the analytic solver requires model = nn")
    grid = np.linspace(w_lo, w_hi, n)
    margin = classification_margin(lat)
    cols = {k: [] for k in ("omega_q_GHz", "omega_bar_GHz", "U_GHz", "omega_plus_GHz", "omega_minus_GHz", "melted")}
    for w in grid:
        q1 = qubits[0].replace(omega_q=w)
        q2 = qubits[1].replace(omega_q=w)
        if use_analytic == "analytic":
            two = solve_two_atom_bs(q1, q2, lat)
            bar, U, wp, wm, melted = (
                two.omega_bar,
                two.U,
                two.omega_plus,
                two.omega_minus,
                two.melted_minus,
            )
        else:
            model = HamiltonianModel(
                lattice=lat, qubits=(q1, q2), include_next_nearest=extended
            )
            bar, U, wp, wm, melted = _splitting_point(model, margin)
        cols["omega_q_GHz"].append(w)
        cols["omega_bar_GHz"].append(bar)
        cols["U_GHz"].append(U)
        cols["omega_plus_GHz"].append(wp)
        cols["omega_minus_GHz"].append(float("nan") if wm is None else wm)
        cols["melted"].append(melted)
    _emit(ctx, "splitting", cols)
    if ctx["plot"]:
        path = ctx["out"] / "splitting.png"
        plotting.plot_splitting(cols["omega_bar_GHz"], cols["U_GHz"], path)
        ctx["manifest"].record_output(path)


def scenario_anharmonicity(r: ParamReader, ctx: dict) -> None:
    extended = r.take("model", "extended", str) == "extended"
    lat = _lattice_from(r)
    t = TABLE1
    g = r.take("g_GHz", t["g_q2_GHz"], float)
    x_q = r.take("x_q", t["x_q2"], int)
    beta = r.take("beta_GHz", t["beta_q2_GHz"], float)
    g2 = r.take("g2_GHz", 0.025 if extended else 0.0, float)
    w_lo = r.take("omega_q_min_GHz", 6.7, float)
    w_hi = r.take("omega_q_max_GHz", 9.5, float)
    n = r.take("n_points", 15, int)
    with_reference = r.take("reference", True, _bool)
    r.finish()
    grid = np.linspace(w_lo, w_hi, n)
    cols = {
        k: []
        for k in (
            "omega_q_GHz",
            "omega_BS_GHz",
            "beta_dress_GHz",
            "beta_dress_ref_GHz",
        )
    }
    for w in grid:
        q = QubitParams(omega_q=w, g=g, x_q=x_q, beta=beta, g2=g2)
        model = HamiltonianModel(
            lattice=lat, qubits=(q,), include_next_nearest=extended
        )
        spec = build_and_diag_1ex(model)
        w1, _ = spec.top_state()
        try:
            bd = dressed_anharmonicity(model)
        except NoDiscreteStateError:
            bd = float("nan")
        ref = float("nan")
        if with_reference:
            hard = model.with_qubit(0, beta=-1e6)
            res2 = build_and_diag_2ex(hard)
            ref = res2.top_energy() - 2.0 * w1
        cols["omega_q_GHz"].append(w)
        cols["omega_BS_GHz"].append(w1)
        cols["beta_dress_GHz"].append(bd)
        cols["beta_dress_ref_GHz"].append(ref)
    _emit(ctx, "anharmonicity", cols)
    if ctx["plot"]:
        path = ctx["out"] / "anharmonicity.png"
        plotting.plot_anharmonicity(
            cols["omega_BS_GHz"],
            cols["beta_dress_GHz"],
            path,
            reference=cols["beta_dress_ref_GHz"] if with_reference else None,
        )
        ctx["manifest"].record_output(path)


def scenario_zz(r: ParamReader, ctx: dict) -> None:
    extended = r.take("model", "extended", str) == "extended"
    lat = _lattice_from(r)
    qubits = _qubits_from(r, lat, extended)
    w_lo = r.take("omega_q1_min_GHz", 6.0, float)
    w_hi = r.take("omega_q1_max_GHz", 6.42, float)
    n = r.take("n_points", 22, int)
    omega_q2 = r.take("omega_q2_fixed_GHz", None, float)
    r.finish()
    q2 = qubits[1] if omega_q2 is None else qubits[1].replace(omega_q=omega_q2)
    grid = np.linspace(w_lo, w_hi, n)
    cols = {
        k: []
        for k in (
            "omega_q1_GHz",
            "E10_GHz",
            "E01_GHz",
            "E11_GHz",
            "zeta_GHz",
            "overlap",
            "n_candidates",
        )
    }
    for w in grid:
        model = HamiltonianModel(
            lattice=lat,
            qubits=(qubits[0].replace(omega_q=w), q2),
            include_next_nearest=extended,
        )
        res = zz_interaction(model)
        cols["omega_q1_GHz"].append(w)
        cols["E10_GHz"].append(res.E_10)
        cols["E01_GHz"].append(res.E_01)
        cols["E11_GHz"].append(res.E_11)
        cols["zeta_GHz"].append(res.zeta)
        cols["overlap"].append(res.overlap)
        cols["n_candidates"].append(len(res.candidates))
    _emit(ctx, "zz", cols)
    if ctx["plot"]:
        path = ctx["out"] / "zz.png"
        plotting.plot_zz(cols["omega_q1_GHz"], cols["zeta_GHz"], path)
        ctx["manifest"].record_output(path)


def scenario_spectrum2ex(r: ParamReader, ctx: dict) -> None:
    extended = r.take("model", "extended", str) == "extended"
    lat = _lattice_from(r)
    t = TABLE1
    q = QubitParams(
        omega_q=r.take("omega_q_GHz", t["omega_q2_max_GHz"], float),
        g=r.take("g_GHz", t["g_q2_GHz"], float),
        x_q=r.take("x_q", t["x_q2"], int),
        beta=r.take("beta_GHz", t["beta_q2_GHz"], float),
        g2=r.take("g2_GHz", 0.025 if extended else 0.0, float),
    )
    r.finish()
    model = HamiltonianModel(lattice=lat, qubits=(q,), include_next_nearest=extended)
    res = build_and_diag_2ex(model)
    D = len(res.eigenvalues)
    _emit(
        ctx,
        "spectrum2ex",
        {
            "index": np.arange(D),
            "energy_GHz": res.eigenvalues,
            "classification": res.classification,
            "P_q": res.P_q[0],
            "P_qq": res.P_qq[0],
            "P_ph": res.P_ph,
        },
    )
    if ctx["plot"]:
        path = ctx["out"] / "spectrum2ex.png"
        plotting.plot_level_diagram(res.eigenvalues, res.classification, path)
        ctx["manifest"].record_output(path)


def _load_schedule(doc: dict, model: HamiltonianModel) -> PulseSchedule:
    labels = {q.label: i for i, q in enumerate(model.qubits)}

    def qubit_index(v):
        if isinstance(v, int):
            return v
        if isinstance(v, str) and v in labels:
            return labels[v]
        raise ConfigError(f"unknown qubit {v!r}")

    segments = []
    for seg in doc.get("segment", []):
        s = ParamReader(seg)
        segments.append(
            FluxSegment(
                qubit=qubit_index(s.take("qubit")),
                target=s.take("target_GHz", cast=float),
                duration=s.take("duration_ns", cast=float),
                t_raise=s.take("t_raise_ns", 1.0, float),
                shape=s.take("shape", "linear", str),
            )
        )
        s.finish()
    init = doc.get("initial", {"kind": "bound", "qubit": 0})
    i = ParamReader(init)
    kind = i.take("kind", "bound", str)
    target = qubit_index(i.take("qubit", 0))
    i.finish()
    samp = ParamReader(doc.get("sampling", {}))
    dt = samp.take("dt_ns", 0.05, float)
    total = samp.take("total_ns", None, float)
    samp.finish()
    return PulseSchedule(
        segments=tuple(segments),
        initial_state=(kind, target),
        total_time=total,
        dt_sample=dt,
    )


def scenario_swap(r: ParamReader, ctx: dict) -> None:
    extended = r.take("model", "extended", str) == "extended"
    lat = _lattice_from(r, with_losses_default=True)
    qubits = _qubits_from(r, lat, extended)
    gamma_q = r.take("gamma_q_GHz", TABLE1["gamma_q_GHz"], float)
    model = HamiltonianModel(lattice=lat, qubits=qubits, include_next_nearest=extended)
    schedule_file = r.take("schedule_file", None, str)
    chevron = r.take("chevron", False, _bool)
    moving = r.take("moving_qubit", 1, int)
    t_raise = r.take("t_raise_ns", 1.0, float)
    shape = r.take("ramp_shape", "linear", str)
    summary: dict = {"retained_final": None}
    if schedule_file is not None:
        for key in ("target_min_GHz", "target_max_GHz", "n_targets", "tau_max_ns", "n_tau", "target_GHz"):
            r.take(key, None)
        r.finish()
        with open(schedule_file, "rb") as f:
            doc = tomllib.load(f)
        sched = _load_schedule(doc, model)
        res = evolve(model, sched, gamma_q=gamma_q)
        cols = {"t_ns": res.t}
        for i in range(len(model.qubits)):
            cols[f"P_q{i + 1}"] = res.P_q[i]
        cols["P_released"] = res.P_released
        cols["P_lost"] = res.P_lost
        cols["norm2"] = res.norm2
        _emit(ctx, "swap_timeseries", cols)
        summary["retained_final"] = res.retained_final()
        if ctx["plot"]:
            path = ctx["out"] / "swap.png"
            plotting.plot_populations(res.t, res.P_q, path, released=res.P_released)
            ctx["manifest"].record_output(path)
    elif chevron:
        other = 1 - moving
        spec = build_and_diag_1ex(model.replace(qubits=(model.qubits[other],)))
        w_res, _ = spec.top_state()
        t_lo = r.take("target_min_GHz", w_res - 0.1, float)
        t_hi = r.take("target_max_GHz", w_res + 0.1, float)
        n_t = r.take("n_targets", 21, int)
        tau_max = r.take("tau_max_ns", 40.0, float)
        n_tau = r.take("n_tau", 81, int)
        r.finish()
        targets = np.linspace(t_lo, t_hi, n_t)
        taus = np.linspace(0.0, tau_max, n_tau)
        ch = swap_chevron(
            model, moving, targets, taus, t_raise=t_raise, shape=shape, gamma_q=gamma_q
        )
        tt, ww = np.meshgrid(taus, targets)
        cols = {"target_GHz": ww.ravel(), "tau_ns": tt.ravel()}
        for i in range(len(model.qubits)):
            cols[f"P_q{i + 1}"] = ch.P_final[i].ravel()
        cols["retained"] = ch.retained.ravel()
        _emit(ctx, "chevron", cols)
        a_res = int(np.argmin(np.abs(targets - w_res)))
        other_col = ch.P_final[other, a_res]
        b_swap = int(np.argmax(other_col))
        summary["swap_time_ns"] = first_swap_time(taus, other_col, t_raise)
        summary["resonance_target_GHz"] = float(targets[a_res])
        summary["retained_at_swap"] = float(ch.retained[a_res, b_swap])
        summary["retained_final"] = float(np.min(ch.retained))
        if ctx["plot"]:
            path = ctx["out"] / "chevron.png"
            plotting.plot_chevron(
                targets, taus, ch.P_final[other], path, label=f"P_q{other + 1}"
            )
            ctx["manifest"].record_output(path)
    else:
        target = r.take("target_GHz", None, float)
        tau_max = r.take("tau_max_ns", 40.0, float)
        for key in ("target_min_GHz", "target_max_GHz", "n_targets", "n_tau"):
            r.take(key, None)
        r.finish()
        if target is None:
            other = 1 - moving
            spec = build_and_diag_1ex(model.replace(qubits=(model.qubits[other],)))
            target, _ = spec.top_state()
        sched = PulseSchedule(
            segments=(
                FluxSegment(moving, float(target), tau_max + t_raise, t_raise, shape),
            ),
            initial_state=("bound", moving),
            dt_sample=0.05,
        )
        res = evolve(model, sched, gamma_q=gamma_q)
        cols = {"t_ns": res.t}
        for i in range(len(model.qubits)):
            cols[f"P_q{i + 1}"] = res.P_q[i]
        cols["P_released"] = res.P_released
        cols["P_lost"] = res.P_lost
        cols["norm2"] = res.norm2
        _emit(ctx, "swap_timeseries", cols)
        summary["retained_final"] = res.retained_final()
        if ctx["plot"]:
            path = ctx["out"] / "swap.png"
            plotting.plot_populations(res.t, res.P_q, path, released=res.P_released)
            ctx["manifest"].record_output(path)
    p = write_json(ctx["out"] / "swap_summary.json", summary)
    ctx["manifest"].record_output(p)


def scenario_disorder(r: ParamReader, ctx: dict) -> None:
    if ctx["seed"] is None:
        raise ConfigError("the disorder scenario requires --seed")
    extended = r.take("model", "extended", str) == "extended"
    lat = _lattice_from(r)
    t = TABLE1
    q = QubitParams(
        omega_q=r.take("omega_q_GHz", t["omega_q2_max_GHz"], float),
        g=r.take("g_GHz", t["g_q2_GHz"], float),
        x_q=r.take("x_q", t["x_q2"], int),
        g2=r.take("g2_GHz", 0.025 if extended else 0.0, float),
    )
    sigma = r.take("sigma_GHz", t["sigma_GHz"], float)
    n_real = r.take("n_realizations", 1000, int)
    r.finish()
    model = HamiltonianModel(lattice=lat, qubits=(q,), include_next_nearest=extended)
    stats = disorder_ensemble(model, sigma, n_real, ctx["seed"])
    _emit(
        ctx,
        "disorder",
        {
            "realization": np.arange(n_real),
            "omega_BS_GHz": stats.omega_BS,
            "cos2theta": stats.cos2theta,
        },
    )
    summary = {
        "sigma_GHz": sigma,
        "n_realizations": n_real,
        "seed": ctx["seed"],
        "omega_BS_mean_GHz": stats.omega_mean,
        "omega_BS_std_GHz": stats.omega_std,
    }
    p = write_json(ctx["out"] / "disorder_summary.json", summary)
    ctx["manifest"].record_output(p)
    if ctx["plot"]:
        path = ctx["out"] / "disorder.png"
        plotting.plot_histogram(stats.omega_BS, path, xlabel="omega_BS (GHz)")
        ctx["manifest"].record_output(path)


def _read_kerr_csv(path: str) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """Group rows of (P_dBm, omega_GHz, abs_S21 | re/im) by power."""
    groups: dict[float, list[tuple[float, float]]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise ConfigError(f"{path}: empty CSV")
        cols = set(reader.fieldnames)
        if not {"P_dBm", "omega_GHz"} <= cols:
            raise ConfigError(f"{path}: need columns P_dBm, omega_GHz")
        has_mag = "abs_S21" in cols
        if not has_mag and not {"re_S21", "im_S21"} <= cols:
            raise ConfigError(f"{path}: need abs_S21 or re_S21/im_S21 columns")
        for row in reader:
            P = float(row["P_dBm"])
            w = float(row["omega_GHz"])
            if has_mag:
                m = float(row["abs_S21"])
            else:
                m = math.hypot(float(row["re_S21"]), float(row["im_S21"]))
            groups.setdefault(P, []).append((w, m))
    traces = []
    for P in sorted(groups):
        rows = sorted(groups[P])
        traces.append(
            (P, np.array([x for x, _ in rows]), np.array([y for _, y in rows]))
        )
    return traces


def scenario_calibrate_kerr(r: ParamReader, ctx: dict) -> None:
    path = r.take("input_csv", cast=str)
    attenuation = r.take("attenuation_dB", cast=float)
    r.finish()
    if not Path(path).exists():
        raise ConfigError(f"input_csv not found: {path}")
    traces = _read_kerr_csv(path)
    fit = fit_kerr(traces, attenuation_dB=attenuation)
    p = write_json(ctx["out"] / "kerr_fit.json", fit.as_dict())
    ctx["manifest"].record_output(p)
    rows = {k: [] for k in ("P_dBm", "omega_GHz", "abs_S21_fit")}
    fits_for_plot = []
    for P, omegas, _ in traces:
        resp = KerrResponse(
            kappa=fit.response.kappa,
            kappa_tot=fit.response.kappa_tot,
            K=fit.response.K,
            omega0=fit.response.omega0,
            P_in_dBm=P,
            attenuation_dB=attenuation,
        )
        delta = (omegas - resp.omega0) / resp.kappa_tot
        mags = np.abs(kerr_response(resp, delta).S21)
        rows["P_dBm"].extend([P] * len(omegas))
        rows["omega_GHz"].extend(omegas)
        rows["abs_S21_fit"].extend(mags)
        fits_for_plot.append((omegas, mags))
    _emit(ctx, "kerr_fit_curves", {k: np.asarray(v) for k, v in rows.items()})
    if ctx["plot"]:
        path_png = ctx["out"] / "kerr_fit.png"
        plotting.plot_kerr_traces(
            [(f"{P:+.1f} dBm", w, m) for P, w, m in traces],
            path_png,
            fits=fits_for_plot,
        )
        ctx["manifest"].record_output(path_png)
    if not fit.success:
        raise NumericalError(
            f"kerr fit did not converge (residual rms {fit.residual_rms:.3e})"
        )


SCENARIOS = {
    "band": scenario_band,
    "transmission": scenario_transmission,
    "boundstate": scenario_boundstate,
    "splitting": scenario_splitting,
    "anharmonicity": scenario_anharmonicity,
    "zz": scenario_zz,
    "spectrum2ex": scenario_spectrum2ex,
    "swap": scenario_swap,
    "disorder": scenario_disorder,
    "calibrate-kerr": scenario_calibrate_kerr,
}


def _emit(ctx: dict, name: str, columns: dict) -> None:
    """Write one table in the selected format and log it in the manifest."""
    out: Path = ctx["out"]
    if ctx["format"] == "csv":
        p = write_csv(out / f"{name}.csv", columns)
    else:
        doc = {
            k: (np.asarray(v).tolist() if not isinstance(v, list) else v)
            for k, v in columns.items()
        }
        p = write_json(out / f"{name}.json", doc)
    ctx["manifest"].record_output(p)


def run_scenario(
    scenario: str,
    params: dict,
    out_dir,
    fmt: str = "csv",
    seed: int | None = None,
    plot: bool = False,
) -> Path:
    """Execute one scenario; returns the manifest path."""
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; choose from {', '.join(sorted(SCENARIOS))}"
        )
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(scenario, seed)
    ctx = {"out": out, "format": fmt, "seed": seed, "plot": plot, "manifest": manifest}
    reader = ParamReader(params)
    SCENARIOS[scenario](reader, ctx)
    manifest.record_inputs(**reader.resolved)
    return manifest.write(out)


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def run_config(path) -> Path:
    """Entry point behind the `run` subcommand."""
    doc = load_config(path)
    r = ParamReader(doc)
    scenario = r.take("scenario", cast=str)
    seed = r.take("seed", None, int)
    out = r.take("out", ".", str)
    fmt = r.take("format", "csv", str)
    plot = r.take("plot", False, _bool)
    params = r.take("params", {}, dict)
    r.finish()
    return run_scenario(scenario, params, out, fmt=fmt, seed=seed, plot=plot)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--plot", action="store_true", help="render PNG figures next to the data"
    )
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="set any scenario parameter, repeatable",
    )


def _parse_sets(pairs: list[str]) -> dict:
    params = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccasim",
        description="coupled-cavity array and qubit bound-state simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        _add_common(p)
        if name == "transmission":
            p.add_argument("--with-qubits", action="store_true")
            p.add_argument("--crosstalk", action="store_true")
            p.add_argument(
                "--power-sweep",
                default=None,
                metavar="P1,P2,...",
                help="input powers in dBm for the nonlinear single-mode response",
            )
        if name == "swap":
            p.add_argument("--schedule", default=None, help="TOML schedule file")
            p.add_argument("--chevron", action="store_true")
        if name == "disorder":
            p.add_argument("--sigma-GHz", type=float, default=None)
            p.add_argument("--n-realizations", type=int, default=None)
        if name == "calibrate-kerr":
            p.add_argument("--input", required=True, help="multi-power CSV traces")
            p.add_argument("--attenuation-dB", type=float, required=True)

    p_run = sub.add_parser("run", help="run a scenario described by a TOML config")
    p_run.add_argument("config", help="path to the config file")

    p_preset = sub.add_parser("preset", help="print the measured parameter set")
    p_preset.add_argument("--out", default=None, help="write JSON here instead")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            run_config(args.config)
            return 0
        if args.command == "preset":
            if args.out:
                write_json(args.out, preset_table1())
            else:
                print(json.dumps(preset_table1(), indent=2, sort_keys=True))
            return 0
        params = _parse_sets(args.set)
        if args.command == "transmission":
            if args.with_qubits:
                params.setdefault("with_qubits", True)
            if args.crosstalk:
                params.setdefault("crosstalk", True)
            if args.power_sweep:
                params.setdefault("power_sweep_dBm", args.power_sweep)
        if args.command == "swap":
            if args.schedule:
                params.setdefault("schedule_file", args.schedule)
            if args.chevron:
                params.setdefault("chevron", True)
        if args.command == "disorder":
            if args.sigma_GHz is not None:
                params.setdefault("sigma_GHz", args.sigma_GHz)
            if args.n_realizations is not None:
                params.setdefault("n_realizations", args.n_realizations)
        if args.command == "calibrate-kerr":
            params.setdefault("input_csv", args.input)
            params.setdefault("attenuation_dB", args.attenuation_dB)
        run_scenario(
            args.command,
            params,
            args.out,
            fmt=args.format,
            seed=args.seed,
            plot=args.plot,
        )
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
