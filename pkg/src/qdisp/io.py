"""Run persistence and analysis drivers.

A run directory holds a copy of the config, raw float64 snapshot files with
JSON sidecars, a manifest, and the CSV/SVG outputs of the analysis commands.
Snapshots are little-endian float64 sample arrays; every float printed to CSV
uses 17 significant digits so re-parsing round-trips exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bands import check_l2_bounds, check_pointwise_bounds, split
from .diagnostics import (
    boundary_mass,
    compute_record,
    fit_exponent,
    physical_window,
    region_masks,
    xtilde_norm,
)
from .evolve import FieldState, InitialDatum, SimConfig, SpongeSpec, run
from .selfsim import extract_Q, linear_profile_Q0, ode_residual_Q, rescale
from .spectral import integrate, make_grid
from .wavepacket import (
    OMEGA_FLOOR,
    cross_check_W,
    extract_W_spectrum,
    gamma,
    gamma_ode_residual,
    packet_profile,
    phase_law_fit,
    velocity_grid,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_MISSING = 4


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"config field {field!r}: {message}")
        self.field = field


def _take(raw: dict, section: str, known: dict):
    """Pop known keys with defaults; reject unknown ones naming the field."""
    out = {}
    for key, default in known.items():
        out[key] = raw.pop(key) if key in raw else default
    if raw:
        stray = sorted(raw)[0]
        name = f"{section}.{stray}" if section else stray
        raise ConfigError(name, "unknown key")
    return out


_REQUIRED = object()


def parse_config(raw: dict) -> SimConfig:
    top = _take(
        dict(raw),
        "",
        {
            "alpha": _REQUIRED,
            "beta": _REQUIRED,
            "L": _REQUIRED,
            "N": _REQUIRED,
            "t0": 0.0,
            "t_final": _REQUIRED,
            "dt": "auto",
            "dealias_rule": "auto",
            "initial": {},
            "sponge": {},
            "snapshot_times": _REQUIRED,
            "cfl": 0.5,
        },
    )
    for key, val in top.items():
        if val is _REQUIRED:
            raise ConfigError(key, "missing required key")
    init_raw = _take(
        dict(top["initial"]),
        "initial",
        {"kind": "gaussian", "amplitude": 0.05, "width": 1.0, "center": 0.0,
         "samples": None},
    )
    if init_raw["samples"] is not None:
        init_raw["samples"] = np.asarray(init_raw["samples"], dtype=float)
    sponge_raw = _take(
        dict(top["sponge"]),
        "sponge",
        {"enabled": False, "strength": 50.0, "width_fraction": 0.15},
    )
    try:
        grid = make_grid(float(top["L"]), int(top["N"]))
    except ValueError as err:
        raise ConfigError("L/N", str(err)) from err
    try:
        return SimConfig(
            alpha=float(top["alpha"]),
            beta=float(top["beta"]),
            grid=grid,
            t0=float(top["t0"]),
            t_final=float(top["t_final"]),
            dt=top["dt"] if isinstance(top["dt"], str) else float(top["dt"]),
            dealias_rule=top["dealias_rule"]
            if isinstance(top["dealias_rule"], str)
            else float(top["dealias_rule"]),
            initial=InitialDatum(**init_raw),
            sponge=SpongeSpec(**sponge_raw),
            snapshot_times=tuple(float(s) for s in top["snapshot_times"]),
            cfl=float(top["cfl"]),
        )
    except ValueError as err:
        raise ConfigError(_guess_field(str(err)), str(err)) from err


def _guess_field(message: str) -> str:
    for name in ("t_final", "t0", "dt", "dealias", "snapshot", "amplitude",
                 "width", "kind"):
        if name in message:
            return name
    return "config"


def load_config(path) -> tuple[SimConfig, bytes]:
    blob = Path(path).read_bytes()
    try:
        raw = json.loads(blob)
    except json.JSONDecodeError as err:
        raise ConfigError("json", str(err)) from err
    return parse_config(raw), blob


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, dialect="excel")  # RFC 4180 line endings
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def save_snapshot(run_dir: Path, index: int, state: FieldState, cfg: SimConfig):
    stem = f"snap_{index:06d}"
    data = np.ascontiguousarray(state.u.samples, dtype="<f8")
    (run_dir / f"{stem}.f64").write_bytes(data.tobytes())
    sidecar = {
        "t": state.t,
        "L": cfg.grid.L,
        "N": cfg.grid.N,
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "schema_version": SCHEMA_VERSION,
    }
    (run_dir / f"{stem}.json").write_text(json.dumps(sidecar, sort_keys=True))
    return [f"{stem}.f64", f"{stem}.json"]


def load_run(run_dir) -> tuple[list[FieldState], dict]:
    run_dir = Path(run_dir)
    sidecars = sorted(run_dir.glob("snap_*.json"))
    if not sidecars:
        raise FileNotFoundError(f"no snapshots (snap_*.json) in {run_dir}")
    states, meta = [], None
    for sc in sidecars:
        info = json.loads(sc.read_text())
        if info["schema_version"] != SCHEMA_VERSION:
            raise ValueError(f"unsupported snapshot schema in {sc.name}")
        raw = (run_dir / (sc.stem + ".f64")).read_bytes()
        samples = np.frombuffer(raw, dtype="<f8").copy()
        grid = make_grid(info["L"], info["N"])
        from .spectral import RealField

        states.append(FieldState.from_field(info["t"], RealField(samples, grid)))
        meta = info
    return states, meta


def _load_run_config(run_dir) -> SimConfig | None:
    path = Path(run_dir) / "config.json"
    if not path.exists():
        return None
    return parse_config(json.loads(path.read_text()))


def write_manifest(run_dir: Path, config_blob: bytes, artifacts):
    manifest = {
        "config_sha256": hashlib.sha256(config_blob).hexdigest(),
        "code_version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "artifacts": [{"path": p, "kind": k} for p, k in artifacts],
    }
    (run_dir / "run.json").write_text(json.dumps(manifest, indent=1))


def append_artifacts(run_dir: Path, artifacts):
    path = run_dir / "run.json"
    manifest = json.loads(path.read_text())
    known = {a["path"] for a in manifest["artifacts"]}
    for p, k in artifacts:
        if p not in known:
            manifest["artifacts"].append({"path": p, "kind": k})
    path.write_text(json.dumps(manifest, indent=1))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QD_THREADS", "4")))
    except ValueError:
        return 4


def _plot_backend():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(config_path, out_dir) -> int:
    try:
        cfg, blob = load_config(config_path)
    except ConfigError as err:
        print(f"error: {err}", flush=True)
        return EXIT_CONFIG
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_bytes(blob)
    artifacts = [("config.json", "config")]

    result = run(cfg)
    for i, state in enumerate(result.states):
        artifacts += [(p, "snapshot") for p in save_snapshot(run_dir, i, state, cfg)]

    mask = physical_window(cfg.grid, cfg.sponge)
    rows = []
    for state in result.states:
        rec = compute_record(state, cfg.alpha, cfg.beta, mask)
        rows.append(
            [rec.t, rec.l2, rec.hs[1], rec.hs[2], rec.hamiltonian,
             rec.corrected_energy, rec.xtilde, rec.xs_norm, rec.boundary_mass]
            + [rec.decay_constants.get(k, float("nan")) for k in range(4)]
        )
    write_csv(
        run_dir / "diagnostics.csv",
        ["t", "l2", "h1", "h2", "hamiltonian", "corrected_energy", "xtilde",
         "xs_norm", "boundary_mass", "c0", "c1", "c2", "c3"],
        rows,
    )
    artifacts.append(("diagnostics.csv", "table"))

    if result.warnings:
        (run_dir / "warnings.txt").write_text("\n".join(result.warnings) + "\n")
        artifacts.append(("warnings.txt", "log"))
    if result.blowup is not None:
        (run_dir / "blowup.json").write_text(
            json.dumps({"t": result.blowup.t, "message": str(result.blowup)})
        )
        artifacts.append(("blowup.json", "log"))
    write_manifest(run_dir, blob, artifacts)
    if result.blowup is not None:
        print(f"blow-up at t={result.blowup.t:.6g}; partial outputs kept")
        return EXIT_BLOWUP
    print(f"wrote {len(result.states)} snapshots to {run_dir}")
    return EXIT_OK


def cmd_analyze(run_dir, band_delta: float = 0.25, eps_reg: float = 0.05,
                fit_t_min: float = 10.0) -> int:
    run_dir = Path(run_dir)
    try:
        states, _ = load_run(run_dir)
    except FileNotFoundError as err:
        print(f"error: {err}")
        return EXIT_MISSING
    cfg = _load_run_config(run_dir)
    mask = physical_window(states[0].u.grid, cfg.sponge if cfg else None)
    artifacts = []

    late = [s for s in states if s.t >= 1.0]
    ratio_rows, ratio_keys = [], None
    for state in late:
        s = split(state, delta=band_delta)
        xt = xtilde_norm(state, mask)
        ratios = check_l2_bounds(s, xt)
        for k in range(4):
            hyp, ell = check_pointwise_bounds(s, xt, k)
            ratios[f"pw_hyp{k}"] = hyp
            ratios[f"pw_ell{k}"] = ell
        if ratio_keys is None:
            ratio_keys = sorted(ratios)
        ratio_rows.append([state.t] + [ratios[k] for k in ratio_keys])
    if ratio_rows:
        write_csv(run_dir / "bound_ratios.csv", ["t"] + ratio_keys, ratio_rows)
        artifacts.append(("bound_ratios.csv", "table"))

    fit_states = [s for s in late if s.t >= fit_t_min]
    fits = []
    if len(fit_states) >= 4:
        sup_series = [(s.t, float(np.max(np.abs(s.u.samples)))) for s in fit_states]
        fits.append(("sup_u", fit_exponent(sup_series)))
        from .diagnostics import decay_constant

        for k in range(4):
            series = [(s.t, decay_constant(s, k)) for s in fit_states]
            fits.append((f"decay_const_k{k}", fit_exponent(series)))
        t_sel = [s.t for s in fit_states]
        sel = [i for i, s in enumerate(late) if s.t in t_sel]
        for j, key in enumerate(ratio_keys):
            series = [(ratio_rows[i][0], ratio_rows[i][j + 1]) for i in sel]
            if all(v > 0 for _, v in series):
                fits.append((f"ratio_{key}", fit_exponent(series)))
    if fits:
        write_csv(
            run_dir / "decay_fits.csv",
            ["quantity", "slope", "intercept", "residual_rms", "residual_max"],
            [[name, f.slope, f.intercept, f.residual_rms, f.residual_max]
             for name, f in fits],
        )
        artifacts.append(("decay_fits.csv", "table"))

    plt = _plot_backend()
    fig, ax = plt.subplots(figsize=(6, 4))
    ts = [s.t for s in late]
    ax.loglog(ts, [np.max(np.abs(s.u.samples)) for s in late], "o-", label="sup |u|")
    ax.loglog(ts, [np.sqrt(s.u.grid.dx * np.sum(s.u.samples**2)) for s in late],
              "s-", label="L2")
    ax.loglog(ts, [ts_i**-0.2 * np.max(np.abs(late[0].u.samples))
                   * late[0].t**0.2 for ts_i in ts], "--", label="t^(-1/5)")
    ax.set_xlabel("t")
    ax.legend()
    fig.savefig(run_dir / "norm_decay.svg")
    plt.close(fig)
    artifacts.append(("norm_decay.svg", "plot"))

    final = late[-1]
    masks = region_masks(final.u.grid, final.t, eps_reg)
    fig, ax = plt.subplots(figsize=(7, 4))
    x = final.u.grid.x
    ax.plot(x, final.u.samples, lw=0.6, color="k")
    span = np.max(np.abs(final.u.samples))
    for sel_mask, color, label in (
        (masks.oscillatory, "tab:blue", "oscillatory"),
        (masks.selfsimilar, "tab:orange", "self-similar"),
        (masks.decaying, "tab:green", "decaying"),
    ):
        ax.fill_between(x, -span, span, where=sel_mask, alpha=0.15,
                        color=color, label=label)
    ax.set_xlim(-8 * masks.threshold, 8 * masks.threshold)
    ax.set_xlabel("x")
    ax.legend(loc="upper right", fontsize=7)
    fig.savefig(run_dir / "regions.svg")
    plt.close(fig)
    artifacts.append(("regions.svg", "plot"))

    append_artifacts(run_dir, artifacts)
    print(f"analysis tables and plots written to {run_dir}")
    return EXIT_OK


def _default_velocity_range(states):
    t_first = max(1.0, states[0].t)
    t_last = states[-1].t
    grid = states[0].u.grid
    xi_hi = (0.8 * grid.L / t_last) ** 0.25
    xi_lo = max(0.6, 1.3 * (OMEGA_FLOOR * t_first ** (-4 / 5)) ** 0.25)
    if xi_lo >= xi_hi:
        raise ValueError(
            f"no resolvable velocity window (xi range [{xi_lo:.3g}, {xi_hi:.3g}])"
        )
    return xi_lo**4, xi_hi**4


def cmd_packet(run_dir, vmin=None, vmax=None, nv: int = 9) -> int:
    run_dir = Path(run_dir)
    try:
        states, meta = load_run(run_dir)
    except FileNotFoundError as err:
        print(f"error: {err}")
        return EXIT_MISSING
    alpha = meta["alpha"]
    usable = [s for s in states if s.t >= 1.0]
    if len(usable) < 6 or usable[-1].t < 10.0 * usable[0].t:
        print("error: need >= 6 snapshots spanning a decade in t (t >= 1)")
        return EXIT_MISSING

    if vmin is None or vmax is None:
        lo, hi = _default_velocity_range(usable)
        vmin = vmin if vmin is not None else lo
        vmax = vmax if vmax is not None else hi
    velocities = velocity_grid(abs(vmin) ** 0.25, abs(vmax) ** 0.25, nv)

    def samples_for(v):
        return [gamma(s, v) for s in usable]

    with ThreadPoolExecutor(max_workers=min(_threads(), len(velocities))) as pool:
        table = list(pool.map(samples_for, velocities))

    rows = [
        [s.t, s.v, s.xi_v, s.lam, s.gamma.real, s.gamma.imag]
        for per_v in table
        for s in per_v
    ]
    write_csv(
        run_dir / "packet_samples.csv",
        ["t", "v", "xi_v", "lambda", "re_gamma", "im_gamma"],
        rows,
    )

    fit_rows = []
    for v, per_v in zip(velocities, table):
        fit = phase_law_fit(per_v, alpha)
        rel = (
            abs(fit.slope - fit.prediction) / abs(fit.prediction)
            if fit.prediction != 0.0
            else float("nan")
        )
        fit_rows.append(
            [v, abs(v) ** 0.25, fit.slope, fit.prediction, fit.gamma_mean_mod,
             rel, str(fit.unwrap_ok)]
        )
    write_csv(
        run_dir / "phase_law.csv",
        ["v", "xi_v", "fitted_slope", "predicted_slope", "gamma_mean_mod",
         "rel_error", "unwrap_ok"],
        fit_rows,
    )

    resid_rows = []
    for v, per_v in zip(velocities, table):
        for t, r in gamma_ode_residual(per_v, alpha):
            resid_rows.append([v, t, r])
    write_csv(run_dir / "ode_residual.csv", ["v", "t", "weighted_residual"],
              resid_rows)

    final = usable[-1]
    pp = packet_profile(final, velocities, alpha)
    sp = extract_W_spectrum(final, alpha)
    sym = np.abs(sp.W[1:] - np.conj(sp.W[1:][::-1]))
    w_rows = [
        ["packet", final.t, xi, w.real, w.imag, abs(w), 0.0]
        for xi, w in zip(pp.xi, pp.W)
    ]
    keep = np.abs(sp.xi) <= 4.0 * np.max(pp.xi)
    sym_full = np.concatenate([[0.0], sym])
    w_rows += [
        ["spectrum", final.t, xi, w.real, w.imag, abs(w), d]
        for xi, w, d, k in zip(sp.xi, sp.W, sym_full, keep)
        if k
    ]
    write_csv(
        run_dir / "w_profiles.csv",
        ["source", "t", "xi", "re_w", "im_w", "abs_w", "symmetry_defect"],
        w_rows,
    )

    report = cross_check_W(pp, sp)
    write_csv(
        run_dir / "w_cross_check.csv",
        ["band_lo", "band_hi", "n_points", "max_rel_modulus", "weighted_sup",
         "weighted_l2"],
        [[report["band"][0], report["band"][1], report["n_points"],
          report["max_rel_modulus"], report["weighted_sup"],
          report["weighted_l2"]]],
    )

    plt = _plot_backend()
    fig, ax = plt.subplots(figsize=(6, 4))
    sel = (sp.xi > 0) & keep
    ax.plot(sp.xi[sel], np.abs(sp.W[sel]), "-", label="spectrum route")
    ax.plot(pp.xi, np.abs(pp.W), "o", label="packet route")
    ax.set_xlabel("xi")
    ax.set_ylabel("|W|")
    ax.legend()
    fig.savefig(run_dir / "w_profiles.svg")
    plt.close(fig)

    append_artifacts(
        run_dir,
        [("packet_samples.csv", "table"), ("phase_law.csv", "table"),
         ("ode_residual.csv", "table"), ("w_profiles.csv", "table"),
         ("w_cross_check.csv", "table"), ("w_profiles.svg", "plot")],
    )
    print(f"packet analysis written to {run_dir}")
    return EXIT_OK


def cmd_selfsim(run_dir, ymax: float = 8.0, ny: int = 513) -> int:
    run_dir = Path(run_dir)
    try:
        states, meta = load_run(run_dir)
    except FileNotFoundError as err:
        print(f"error: {err}")
        return EXIT_MISSING
    usable = [s for s in states if s.t >= 1.0]
    if len(usable) < 3:
        print("error: need >= 3 snapshots with t >= 1")
        return EXIT_MISSING
    alpha, beta = meta["alpha"], meta["beta"]
    y = np.linspace(-ymax, ymax, ny)

    tail = usable[-3:]
    prof = extract_Q(tail, y)
    resid_rows = [
        [s.t, ode_residual_Q(rescale(s, y), alpha, beta)] for s in tail
    ]
    cert_rows = [[t, gap] for t, gap in prof.certificate]

    header = ["y", "Q"]
    cols = [y, prof.values]
    if alpha == 0.0 and beta == 0.0:
        cfg = _load_run_config(run_dir)
        if cfg is not None:
            mass = integrate(cfg.initial.build(cfg.grid))
        else:
            mass = float(np.trapezoid(usable[0].u.samples, usable[0].u.grid.x))
        q0 = linear_profile_Q0(y)
        header += ["Q0_scaled", "abs_diff"]
        cols += [mass * q0.values, np.abs(prof.values - mass * q0.values)]
    write_csv(run_dir / "q_profile.csv", header, np.column_stack(cols))
    write_csv(run_dir / "q_certificate.csv", ["t", "sup_gap"], cert_rows)
    write_csv(run_dir / "q_residual.csv", ["t", "ode_residual_l2"], resid_rows)
    if not prof.converged:
        print("warning: profile certificate is not decreasing (not converged)")

    plt = _plot_backend()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(y, prof.values, label=f"U at t={prof.t_source:g}")
    if len(header) > 2:
        ax.plot(y, cols[2], "--", label="(int u0) Q0")
    ax.set_xlabel("y")
    ax.legend()
    fig.savefig(run_dir / "q_profile.svg")
    plt.close(fig)

    append_artifacts(
        run_dir,
        [("q_profile.csv", "table"), ("q_certificate.csv", "table"),
         ("q_residual.csv", "table"), ("q_profile.svg", "plot")],
    )
    print(f"self-similar profile written to {run_dir}")
    return EXIT_OK
