"""Command-line front end.

Configs are JSON (see ``config_schema.json``) with every frequency in Hz;
this module is the only place that converts between Hz and rad/s.  Sweeps
are written as CSV (``name [unit]`` headers), JSON or Touchstone, with
run metadata in a separate ``*.meta.json`` so the data files are
byte-for-byte reproducible.
"""
from __future__ import annotations

import argparse
import copy
import datetime as dt
import io
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from ._backend import BACKEND
from .coupled_mode import (
    READOUT_RESONATOR,
    attach_mode,
    build_filter_network,
    fit_exponential_decay,
    golden_rule_rate,
    ldos_all,
    s_parameters,
    STABILITY_LIMIT,
    time_evolve,
)
from .errors import DomainError, PurcellFilterError
from .prototype import FilterSpec, coupling_rates
from .purcell import ReadoutChain, bare_purcell_t1, combine_intrinsic, fit_power_law, scaling_study, t1_sweep
from .tline import abcd_sparams, realize, tap_immittance

TWO_PI = 2.0 * math.pi
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3

DEFAULTS = {
    "filter": {
        "order": 6,
        "insertion_loss_db": 20.0,
        "center_frequency_hz": 6.0e9,
        "bandwidth_hz": 600e6,
    },
    "chain": {
        "resonator_frequency_hz": 6.0e9,
        "resonator_stage": None,
        "kappa_r_hz": 15e6,
        "resonator_coupling_hz": None,
        "qubit_frequency_hz": 5.0e9,
        "qubit_coupling_hz": 100e6,
        "model": "full",
        "intrinsic_t1_s": None,
    },
    "realization": {"z0_ohm": 50.0, "tap_stage": 2, "tap_fraction": 0.5},
    "decay": {
        "stage": 1,
        "resonator_frequency_hz": None,
        "coupling_hz": 20e6,
        "horizon_s": 2e-6,
        "records": 401,
    },
    "scaling": {
        "orders": [1, 2, 3, 4, 5, 6],
        "insertion_losses_db": [0.0, 50.0],
        "window_hz": [0.4e9, 1.0e9],
        "side": -1,
    },
    "sweeps": {},
}


class ConfigError(Exception):
    """Invalid or unusable configuration (exit status 2)."""


@dataclass
class Table:
    """Equal-length named columns, each with a unit."""

    name: str
    columns: list = field(default_factory=list)  # (name, unit, values)
    summary: dict = field(default_factory=dict)

    def add(self, name, unit, values):
        values = list(values)
        if self.columns and len(values) != len(self.columns[0][2]):
            raise ValueError(f"column {name!r} has the wrong length")
        self.columns.append((name, unit, values))

    def headers(self):
        return [f"{n} [{u}]" for n, u, _ in self.columns]

    def rows(self):
        return zip(*(c[2] for c in self.columns)) if self.columns else iter(())


# --- configuration -------------------------------------------------------


def _schema():
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None) -> dict:
    """Defaults overlaid with the user's JSON file, validated against the schema."""
    user = {}
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(user, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    return _merge(DEFAULTS, user)


def _grid_hz(spec) -> np.ndarray:
    n = spec["points"]
    if spec.get("spacing", "linear") == "log":
        if spec["start"] <= 0 or spec["stop"] <= 0:
            raise ConfigError("log grids need positive endpoints")
        return np.geomspace(spec["start"], spec["stop"], n)
    return np.linspace(spec["start"], spec["stop"], n)


def _filter_spec(cfg) -> FilterSpec:
    f = cfg["filter"]
    return FilterSpec(
        f["order"], float(f["insertion_loss_db"]), TWO_PI * f["center_frequency_hz"], TWO_PI * f["bandwidth_hz"]
    )


def _frequency_grid(cfg, spec: FilterSpec) -> np.ndarray:
    """Angular grid from ``sweeps.frequency`` or the default +-2 bandwidths."""
    g = cfg["sweeps"].get("frequency")
    if g is None:
        return np.linspace(spec.center_frequency - 2 * spec.bandwidth, spec.center_frequency + 2 * spec.bandwidth, 2001)
    return TWO_PI * _grid_hz(g)


def _filter_network(spec: FilterSpec):
    return build_filter_network(spec.prototype(), spec.center_frequency, spec.bandwidth)


def _chain(cfg, model):
    c = cfg["chain"]
    spec = _filter_spec(cfg)
    kappa = c.get("kappa_r_hz")
    coupling = c.get("resonator_coupling_hz")
    if coupling is not None:
        kappa = None
    return ReadoutChain(
        filter=_filter_network(spec),
        resonator_frequency=TWO_PI * c["resonator_frequency_hz"],
        qubit_frequency=TWO_PI * c["qubit_frequency_hz"],
        qubit_coupling=TWO_PI * c["qubit_coupling_hz"],
        resonator_stage=c.get("resonator_stage"),
        resonator_coupling=None if coupling is None else TWO_PI * coupling,
        kappa_r=None if kappa is None else TWO_PI * kappa,
        model=model,
    )


def _db(x):
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(x))


# --- subcommands ---------------------------------------------------------


def cmd_synth(cfg, args) -> Table:
    f = cfg["filter"]
    order = f["order"] if args.order is None else args.order
    il = f["insertion_loss_db"] if args.insertion_loss is None else args.insertion_loss
    spec = FilterSpec(order, float(il), TWO_PI * f["center_frequency_hz"], TWO_PI * f["bandwidth_hz"])
    proto = spec.prototype()
    couplings, k_in, k_out = coupling_rates(proto, spec.bandwidth)
    rates = [k_in] + list(couplings) + [k_out]
    names = ["kappa_in"] + [f"c_{k}{k + 1}" for k in range(1, order)] + ["kappa_out"]
    t = Table("synth", summary={"order": order, "insertion_loss_db": float(il)})
    t.add("k", "1", range(order + 1))
    t.add("product", "g_k*g_k+1", proto.products)
    t.add("rate_name", "label", names)
    t.add("rate", "Hz", np.asarray(rates) / TWO_PI)
    return t


def _sparams_table(name, grid, s, flags=None) -> Table:
    t = Table(name)
    t.add("frequency", "Hz", grid / TWO_PI)
    t.add("|S21|", "dB", _db(s[:, 1, 0]))
    t.add("arg S21", "rad", np.angle(s[:, 1, 0]))
    t.add("|S11|", "dB", _db(s[:, 0, 0]))
    if flags is not None:
        t.add("singular_stub", "bool", [int(v) for v in flags])
    t.s_matrix = s
    t.grid = grid
    return t


def _realization(cfg, spec):
    return realize(spec.prototype(), spec.center_frequency, spec.bandwidth, cfg["realization"]["z0_ohm"])


def cmd_sparams(cfg, args) -> Table:
    spec = _filter_spec(cfg)
    grid = _frequency_grid(cfg, spec)
    if args.source == "tline":
        sp = abcd_sparams(_realization(cfg, spec), grid)
        return _sparams_table("sparams", grid, sp.values, sp.flags)
    net = _filter_network(spec)
    sp = s_parameters(net, grid)
    i, o = net.port_index("input"), net.port_index("output")
    s = sp.values[:, [i, o]][:, :, [i, o]]
    return _sparams_table("sparams", grid, s)


def cmd_ldos(cfg, args) -> Table:
    spec = _filter_spec(cfg)
    grid = _frequency_grid(cfg, spec)
    rho = ldos_all(_filter_network(spec), grid).values
    t = Table("ldos")
    t.add("frequency", "Hz", grid / TWO_PI)
    # per-Hz density so the column integrates to 1 over the Hz axis
    for j in range(rho.shape[1]):
        t.add(f"rho_{j + 1}", "1/Hz", TWO_PI * rho[:, j])
    return t


def cmd_decay(cfg, args) -> Table:
    d = cfg["decay"]
    spec = _filter_spec(cfg)
    filt = _filter_network(spec)
    stage = d["stage"]
    if not 1 <= stage <= filt.n_modes:
        raise ConfigError(f"decay.stage must lie in 1..{filt.n_modes}")
    wr = spec.center_frequency if d["resonator_frequency_hz"] is None else TWO_PI * d["resonator_frequency_hz"]
    c = TWO_PI * d["coupling_hz"]
    net = attach_mode(filt, wr, stage - 1, c, READOUT_RESONATOR)
    res = net.n_modes - 1
    records = d["records"]
    spacing = d["horizon_s"] / (records - 1)
    h = net.effective_hamiltonian() - float(np.mean(net.mode_frequencies)) * np.eye(net.n_modes)
    fastest = float(np.max(np.abs(np.linalg.eigvals(h))))
    sub = max(1, math.ceil(spacing * fastest / (0.5 * STABILITY_LIMIT)))
    rec = time_evolve(net, res, d["horizon_s"], spacing / sub)
    keep = slice(None, None, sub)
    t = Table("decay")
    t.add("time", "s", rec.times[keep])
    for j in range(filt.n_modes):
        t.add(f"energy_stage_{j + 1}", "1", rec.mode_energy[keep, j])
    t.add("energy_resonator", "1", rec.mode_energy[keep, res])
    for label in rec.port_labels:
        t.add(f"emitted_{label}", "1", rec.emission(label)[keep])
    total = rec.total()[keep]
    t.add("total", "1", total)
    emitted = rec.port_emission[-1]
    shares = emitted / emitted.sum() if emitted.sum() > 0 else np.zeros_like(emitted)
    t.summary = {
        "stage": stage,
        "conservation_error": float(np.max(np.abs(rec.total() - 1.0))),
        "golden_rule_rate_hz": golden_rule_rate(filt, stage - 1, wr, c) / TWO_PI,
        **{f"emitted_share_{lab}": float(s) for lab, s in zip(rec.port_labels, shares)},
    }
    try:
        fit = fit_exponential_decay(rec, res)
        t.summary["fitted_rate_hz"] = fit.rate / TWO_PI
    except PurcellFilterError as exc:
        t.summary["fitted_rate_hz"] = None
        t.summary["fit_note"] = str(exc)
    return t


def cmd_t1(cfg, args) -> Table:
    chain = _chain(cfg, args.model or cfg["chain"]["model"])
    wr = chain.resonator_frequency
    sweep = cfg["sweeps"].get("detuning")
    if sweep is None:
        detunings = -TWO_PI * np.geomspace(0.4e9, 1.0e9, 60)[::-1]
    else:
        detunings = TWO_PI * _grid_hz(sweep)
    qf = wr + detunings
    if np.any(qf <= 0):
        raise ConfigError("detuning sweep reaches non-positive qubit frequencies")
    order = np.argsort(qf)
    curve = t1_sweep(chain, qf[order]) if qf.size else None
    t1 = np.full(qf.size, np.nan)
    gaps = np.zeros(qf.size, dtype=bool)
    if curve is not None:
        t1[order] = curve.t1
        gaps[order] = curve.gaps
    kappa_r = chain.kappa_r
    if kappa_r is None:
        kappa_r = golden_rule_rate(chain.filter, chain.stage - 1, wr, chain.resonator_coupling)
    bare = [bare_purcell_t1(d, kappa_r, chain.qubit_coupling) if d != 0 else math.nan for d in detunings]
    t = Table("t1", summary={"model": chain.model, "resonator_stage": chain.stage, "kappa_r_hz": kappa_r / TWO_PI})
    t.add("qubit_frequency", "Hz", qf / TWO_PI)
    t.add("detuning", "Hz", detunings / TWO_PI)
    t.add("T1", "s", t1)
    t.add("T1_bare", "s", bare)
    intrinsic = cfg["chain"].get("intrinsic_t1_s")
    if intrinsic is not None:
        t.add("T1_with_intrinsic", "s", [combine_intrinsic(v, intrinsic) if v > 0 else math.nan for v in t1])
    t.add("gap", "bool", [int(g) for g in gaps])
    window = cfg["sweeps"].get("fit_window_hz")
    if window is not None and qf.size:
        try:
            fit = fit_power_law(detunings, t1, (TWO_PI * window[0], TWO_PI * window[1]))
            t.summary.update(fit_exponent=fit.exponent, fit_residual=fit.residual)
        except PurcellFilterError as exc:
            t.summary["fit_note"] = str(exc)
    return t


def cmd_scaling(cfg, args) -> Table:
    s = cfg["scaling"]
    f = cfg["filter"]
    c = cfg["chain"]
    window = (TWO_PI * s["window_hz"][0], TWO_PI * s["window_hz"][1])
    mags = np.geomspace(window[0], window[1], 60)
    t = Table("scaling")
    rows = []
    for il in s["insertion_losses_db"]:
        for n in s["orders"]:
            study = scaling_study(
                n,
                float(il),
                center=TWO_PI * f["center_frequency_hz"],
                bandwidth=TWO_PI * f["bandwidth_hz"],
                resonator_frequency=TWO_PI * c["resonator_frequency_hz"],
                kappa_r=TWO_PI * (c["kappa_r_hz"] or DEFAULTS["chain"]["kappa_r_hz"]),
                qubit_coupling=TWO_PI * c["qubit_coupling_hz"],
                detunings=mags,
                side=s["side"],
                model=args.model or c["model"],
                window=window,
            )
            b = study.fit.exponent
            rows.append((n, il, b, study.fit.prefactor * TWO_PI**b, study.fit.residual))
    cols = list(zip(*rows)) if rows else [[]] * 5
    t.add("order", "1", cols[0])
    t.add("insertion_loss", "dB", cols[1])
    t.add("exponent", "1", cols[2])
    t.add("prefactor", "s/Hz^b", cols[3])
    t.add("log_residual", "1", cols[4])
    t.add("reference_1.83N+1.72", "1", [round(1.83 * n + 1.72, 10) for n in cols[0]])
    return t


def cmd_tline(cfg, args):
    spec = _filter_spec(cfg)
    real = _realization(cfg, spec)
    n = real.order
    t = Table("tline", summary={"z0_ohm": real.z0, "theta_residual": real.theta_residual()})
    t.add("n", "1", range(1, n + 2))
    t.add("Z0J", "1", real.inverter_values)
    t.add("phi", "rad", real.stub_lengths)
    t.add("theta", "rad", list(real.section_lengths) + [math.nan])
    tables = [t]
    if "frequency" in cfg["sweeps"] or args.format == "touchstone":
        grid = _frequency_grid(cfg, spec)
        sp = abcd_sparams(real, grid)
        tables.append(_sparams_table("tline_sparams", grid, sp.values, sp.flags))
        r = cfg["realization"]
        tap = tap_immittance(real, r["tap_stage"], r["tap_fraction"], grid)
        ti = Table("tline_tap")
        ti.add("frequency", "Hz", grid / TWO_PI)
        ti.add("Re Z_e", "ohm", tap.values[:, 0].real)
        ti.add("Im Z_e", "ohm", tap.values[:, 0].imag)
        ti.add("Re Y_e", "S", tap.values[:, 1].real)
        ti.add("Im Y_e", "S", tap.values[:, 1].imag)
        tables.append(ti)
    return tables


COMMANDS = {
    "synth": cmd_synth,
    "sparams": cmd_sparams,
    "ldos": cmd_ldos,
    "decay": cmd_decay,
    "t1": cmd_t1,
    "scaling": cmd_scaling,
    "tline": cmd_tline,
}


# --- output --------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def render_csv(t: Table) -> str:
    out = io.StringIO()
    out.write(",".join(t.headers()) + "\n")
    for row in t.rows():
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def _jsonable(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    f = float(v)
    return f if math.isfinite(f) else str(f)


def render_json(t: Table) -> str:
    data = {
        "columns": [{"name": n, "unit": u, "values": [_jsonable(v) for v in vals]} for n, u, vals in t.columns],
        "summary": t.summary,
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def render_touchstone(t: Table, z0: float) -> str:
    s = getattr(t, "s_matrix", None)
    if s is None:
        raise ConfigError("touchstone output is only available for S-parameter sweeps")
    lines = ["! purcell-bpf S-parameters", f"# HZ S RI R {z0:g}"]
    for f, m in zip(t.grid / TWO_PI, s):
        vals = [m[0, 0], m[1, 0], m[0, 1], m[1, 1]]
        lines.append(" ".join([repr(float(f))] + [f"{repr(float(v.real))} {repr(float(v.imag))}" for v in vals]))
    return "\n".join(lines) + "\n"


def _render(t: Table, fmt: str, z0: float):
    if fmt == "touchstone":
        return render_touchstone(t, z0), ".s2p"
    if fmt == "json":
        return render_json(t), ".json"
    return render_csv(t), ".csv"


def _summary_text(t: Table) -> str:
    return "".join(f"{t.name}: {k} = {v}\n" for k, v in t.summary.items())


def _emit(tables, args, cfg):
    z0 = cfg["realization"]["z0_ohm"]
    fmt = args.format
    if fmt == "touchstone":
        tables = [t for t in tables if getattr(t, "s_matrix", None) is not None] or tables
    if args.out is None:
        for i, t in enumerate(tables):
            text, _ = _render(t, fmt, z0)
            if i:
                sys.stdout.write("\n")
            sys.stdout.write(text)
            if fmt != "json":
                sys.stderr.write(_summary_text(t))
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for t in tables:
        text, ext = _render(t, fmt, z0)
        path = out / f"{t.name}{ext}"
        path.write_text(text)
        meta = {
            "command": args.command,
            "config": cfg,
            "toolkit_version": __version__,
            "backend": BACKEND,
            "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
            "columns": [{"name": n, "unit": u} for n, u, _ in t.columns],
            "summary": t.summary,
        }
        (out / f"{t.name}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
        sys.stdout.write(f"wrote {path}\n")
        sys.stdout.write(_summary_text(t))


# --- entry point ---------------------------------------------------------


def _add_global_flags(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d, help="JSON design config (frequencies in Hz)")
    p.add_argument("--out", metavar="DIR", default=d, help="write files here instead of stdout")
    p.add_argument(
        "--format", choices=("csv", "json", "touchstone"), default=argparse.SUPPRESS if suppress else "csv"
    )
    p.add_argument(
        "--source",
        choices=("coupled-mode", "tline"),
        default=argparse.SUPPRESS if suppress else "coupled-mode",
        help="S-parameter model for sparams",
    )
    p.add_argument("--model", choices=("rwa", "full"), default=d, help="qubit model (default from config: full)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="purcell-bpf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "prototype g products and coupling rates",
        "sparams": "filter S-parameter sweep",
        "ldos": "per-stage local density of states",
        "decay": "time-domain decay of a resonator attached to one stage",
        "t1": "qubit T1 versus detuning",
        "scaling": "power-law exponents of T1 versus detuning",
        "tline": "transmission-line realization table",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _add_global_flags(p, suppress=True)
        if name == "synth":
            p.add_argument("--order", type=int, default=None)
            p.add_argument("--insertion-loss", type=float, default=None, metavar="DB")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.format == "touchstone" and args.command not in ("sparams", "tline"):
            raise ConfigError("touchstone output is only available for sparams and tline")
        result = COMMANDS[args.command](cfg, args)
        tables = result if isinstance(result, list) else [result]
        _emit(tables, args, cfg)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PurcellFilterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK
