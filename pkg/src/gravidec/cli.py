"""Scenario runner: config parsing, sweeps, reports and tabulations.

Config files are line-oriented ``key = value`` text grouped in ``[section]``
blocks (``section.key = value`` also works anywhere).  ``#`` starts a
comment.  Units at this boundary: frequencies in Hz, times in s, angles in
rad, masses in kg, S_h in Hz^-1.  Frequencies are converted to angular
frequency (rad/s, ω = 2πf) on the way in; CSV columns say which they hold.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .constants import CONSTANTS
from .decoherence import (ConvergenceError, DetectionFilter, IntegratorOptions, f_filtered_integral,
                          flat_atomic_variance, flat_photonic_variance, min_integral, variance_integral,
                          visibility, y_of_x)
from .geometry import PRESETS, GeometryError, hyper_instrument, make_raman, make_rhomb
from .gw_background import BackgroundError, BackgroundKind, GwBackground, evaluate_sh
from .kinematics import AngularQuadrature
from .mc_oracle import McOptions, run_monte_carlo
from .response import atomic_apparatus, combined_apparatus, f_osc, photonic_apparatus, write_response_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

RUN_MODES = ("closed_form", "spectral", "monte_carlo", "all")
RESPONSES = ("combined", "atomic", "photonic", "combined_exact")
TABLES = ("response", "y_curve", "f_identities", "spectrum")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class Key:
    kind: str                  # float | int | str | bool | pair | choice
    default: object = None
    choices: tuple = ()


F, I, S, B = Key("float"), Key("int"), Key("str"), Key("bool")

SCHEMA = {
    "background": {"flat": F, "powerlaw": S, "table": S, "band_hz": Key("pair")},
    "geometry": {"preset": S, "alpha": F, "sin2alpha": F, "v_at": F, "tau_ab": F, "mass": F},
    "optics": {"enabled": Key("bool", True), "omega_phot": F, "tau_mb": F, "tau_lm": F},
    "filter": {"tau_av": F},
    "run": {"name": Key("str", "scenario"), "mode": Key("choice", "closed_form", RUN_MODES),
            "response": Key("choice", "combined", RESPONSES), "seed": I},
    "sweep": {"parameter": S, "start": F, "stop": F, "count": I,
              "spacing": Key("choice", "linear", ("linear", "log"))},
    "output": {"dir": Key("str", "."), "report": Key("str", "report.csv")},
    "integrator": {"tol": Key("float", 1e-6), "abs_tol": Key("float", 0.0),
                   "max_panels": Key("int", 400_000)},
    "quadrature": {"n_theta": Key("int", 64), "n_phi": Key("int", 128)},
    "mc": {"n_omega": Key("int", 48), "n_dir": Key("int", 12), "realizations": Key("int", 200),
           "dt": F, "amplitude_scale": Key("float", 1.0),
           "spacing": Key("choice", "linear", ("linear", "log"))},
    "tabulate": {"f_min_hz": Key("float", 1e-7), "f_max_hz": Key("float", 1e2),
                 "points": Key("int", 200), "spacing": Key("choice", "log", ("linear", "log")),
                 "n_random": Key("int", 20)},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, default-filled configuration.

    ``values`` maps ``(section, key)`` to typed values.  Line numbers are
    kept for error messages only and do not take part in equality.
    """

    values: dict
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def get(self, section, key, default=None):
        return self.values.get((section, key), default)

    def has(self, section, key):
        return (section, key) in self.values

    def line_of(self, section, key=None):
        return self.lines.get((section, key)) or self.lines.get((section, None))

    def with_value(self, section, key, value):
        v = dict(self.values)
        v[(section, key)] = value
        return ScenarioConfig(v, self.lines)

    def without_section(self, section):
        return ScenarioConfig({k: v for k, v in self.values.items() if k[0] != section}, self.lines)


# ---------------------------------------------------------------- parsing

def _convert(spec: Key, raw, line):
    try:
        if spec.kind == "float":
            return float(raw)
        if spec.kind == "int":
            if not raw.lstrip("+-").isdigit():
                raise ValueError
            return int(raw)
        if spec.kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if spec.kind == "pair":
            parts = [float(p) for p in raw.split(",")]
            if len(parts) != 2:
                raise ValueError
            return tuple(parts)
        if spec.kind == "choice":
            if raw not in spec.choices:
                raise ConfigError(f"{raw!r} is not one of {', '.join(spec.choices)}", line)
            return raw
        return raw
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"cannot read {raw!r} as {spec.kind}", line) from None


def parse_config(text, seed=None) -> ScenarioConfig:
    """Parse and validate config text; ``seed`` overrides ``run.seed``."""
    values, lines = {}, {}
    section = None
    for no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", no)
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", no)
            lines.setdefault((section, None), no)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", no)
        key, raw = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        sec = section
        if "." in key:
            sec, key = key.split(".", 1)
            if sec not in SCHEMA:
                raise ConfigError(f"unknown section {sec!r} in key", no)
        if sec is None:
            raise ConfigError(f"key {key!r} outside any section", no)
        if key not in SCHEMA[sec]:
            raise ConfigError(f"unknown key {key!r} in [{sec}]", no)
        if (sec, key) in values:
            raise ConfigError(f"duplicate key {sec}.{key}", no)
        values[(sec, key)] = _convert(SCHEMA[sec][key], raw, no)
        lines[(sec, key)] = no
        lines.setdefault((sec, None), no)
    if seed is not None:
        values[("run", "seed")] = int(seed)
    for sec, keys in SCHEMA.items():
        for key, spec in keys.items():
            if spec.default is not None and (sec, key) not in values:
                values[(sec, key)] = spec.default
    cfg = ScenarioConfig(values, lines)
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig):
    bgs = [k for k in ("flat", "powerlaw", "table") if cfg.has("background", k)]
    if len(bgs) != 1:
        raise ConfigError("exactly one of background.flat / powerlaw / table is required",
                          cfg.line_of("background") or 0)
    if not cfg.has("geometry", "preset"):
        missing = [k for k in ("v_at", "tau_ab", "mass") if not cfg.has("geometry", k)]
        if not (cfg.has("geometry", "alpha") or cfg.has("geometry", "sin2alpha")):
            missing.append("alpha|sin2alpha")
        if missing:
            raise ConfigError(f"missing geometry keys: {', '.join(missing)}", cfg.line_of("geometry") or 0)
        if cfg.get("optics", "enabled"):
            miss = [k for k in ("omega_phot", "tau_mb", "tau_lm") if not cfg.has("optics", k)]
            if miss:
                raise ConfigError(f"missing optics keys: {', '.join(miss)}", cfg.line_of("optics") or 0)
    elif cfg.get("geometry", "preset") not in PRESETS:
        raise ConfigError(f"unknown preset {cfg.get('geometry', 'preset')!r}",
                          cfg.line_of("geometry", "preset"))
    if cfg.get("run", "mode") in ("monte_carlo", "all") and not cfg.has("run", "seed"):
        raise ConfigError("run mode needs run.seed (or --seed)", cfg.line_of("run", "mode"))
    if any(k[0] == "sweep" for k in cfg.values if k[1] != "spacing"):
        for k in ("parameter", "start", "stop", "count"):
            if not cfg.has("sweep", k):
                raise ConfigError(f"missing sweep.{k}", cfg.line_of("sweep") or 0)
        par = cfg.get("sweep", "parameter").lower()
        sec, _, key = par.partition(".")
        if sec not in SCHEMA or key not in SCHEMA[sec] or SCHEMA[sec][key].kind not in ("float", "int"):
            raise ConfigError(f"sweep parameter {par!r} does not name a scalar field",
                              cfg.line_of("sweep", "parameter"))
        if cfg.get("sweep", "count") < 1:
            raise ConfigError("sweep.count must be >= 1", cfg.line_of("sweep", "count"))
        if cfg.get("sweep", "spacing") == "log" and not (cfg.get("sweep", "start") > 0 and cfg.get("sweep", "stop") > 0):
            raise ConfigError("log sweeps need positive bounds", cfg.line_of("sweep"))


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(p)) for p in v)
    return str(v)


def serialize(cfg: ScenarioConfig) -> str:
    """Canonical text form; ``parse_config(serialize(c)) == c``."""
    out = []
    for sec, keys in SCHEMA.items():
        rows = [f"{k} = {_format(cfg.values[(sec, k)])}" for k in keys if (sec, k) in cfg.values]
        if rows:
            out.append(f"[{sec}]")
            out.extend(rows)
            out.append("")
    return "\n".join(out)


def expand_sweep(cfg: ScenarioConfig):
    """List of (sweep value or None, scenario config)."""
    if not cfg.has("sweep", "parameter"):
        return [(None, cfg)]
    sec, _, key = cfg.get("sweep", "parameter").lower().partition(".")
    a, b, n = cfg.get("sweep", "start"), cfg.get("sweep", "stop"), cfg.get("sweep", "count")
    pts = np.geomspace(a, b, n) if cfg.get("sweep", "spacing") == "log" else np.linspace(a, b, n)
    base = cfg.without_section("sweep")
    cast = int if SCHEMA[sec][key].kind == "int" else float
    return [(float(p), base.with_value(sec, key, cast(p))) for p in pts]


# ---------------------------------------------------------------- building

def build_background(cfg: ScenarioConfig) -> GwBackground:
    band_hz = cfg.get("background", "band_hz")
    preset = PRESETS.get(cfg.get("geometry", "preset"))
    if band_hz is None and preset is not None:
        band_hz = preset["band_hz"]
    band = None if band_hz is None else (2 * math.pi * band_hz[0], 2 * math.pi * band_hz[1])
    if cfg.has("background", "flat"):
        if band is None:
            raise ConfigError("flat background needs background.band_hz", cfg.line_of("background"))
        return GwBackground.flat(cfg.get("background", "flat"), band)
    if cfg.has("background", "powerlaw"):
        if band is None:
            raise ConfigError("power-law background needs background.band_hz", cfg.line_of("background"))
        segs = []
        for item in cfg.get("background", "powerlaw").split(","):
            try:
                f_b, lvl, ex = (float(p) for p in item.split(":"))
            except ValueError:
                raise ConfigError(f"power-law segment {item.strip()!r} is not f_hz:level:exponent",
                                  cfg.line_of("background", "powerlaw")) from None
            segs.append((2 * math.pi * f_b, lvl, ex))
        return GwBackground.power_law(segs, band)
    return GwBackground.from_file(cfg.get("background", "table"), band_hz)


def build_instrument(cfg: ScenarioConfig):
    """(RhombGeometry, RamanOptics or None) from preset plus overrides."""
    p = dict(PRESETS.get(cfg.get("geometry", "preset"), {}))
    for k in ("v_at", "tau_ab", "mass", "sin2alpha"):
        if cfg.has("geometry", k):
            p[k] = cfg.get("geometry", k)
    for k in ("omega_phot", "tau_mb", "tau_lm"):
        if cfg.has("optics", k):
            p[k] = cfg.get("optics", k)
    overridden = any(cfg.has("geometry", k) for k in ("v_at", "mass", "sin2alpha", "alpha")) \
        or cfg.has("optics", "omega_phot")
    if cfg.has("geometry", "preset") and not overridden:
        g, o = hyper_instrument(p["mass"], p["v_at"], p["tau_ab"], p["sin2alpha"],
                                p["omega_phot"], p["tau_mb"], p["tau_lm"])
    else:
        alpha = cfg.get("geometry", "alpha")
        if alpha is None:
            alpha = 0.5 * math.asin(p["sin2alpha"])
        g = make_rhomb(alpha, p["v_at"], p["tau_ab"], p["mass"])
        o = make_raman(p["omega_phot"], p["tau_mb"], p["tau_lm"], p["mass"]) if "omega_phot" in p else None
    if not cfg.get("optics", "enabled"):
        o = None
    return g, o


def build_filter(cfg: ScenarioConfig):
    tau = cfg.get("filter", "tau_av")
    return None if tau is None else DetectionFilter.from_tau_av(tau)


# ---------------------------------------------------------------- running

REPORT_COLUMNS = (
    "scenario", "name", "sweep_parameter", "sweep_value", "mode", "response",
    "closed_atomic", "closed_photonic", "closed_total", "visibility_closed",
    "spectral_atomic", "spectral_photonic", "spectral_cross", "spectral_total", "spectral_error",
    "visibility_spectral",
    "mc_variance", "mc_stderr", "mc_calibration", "mc_calibration_stderr", "mc_calibration_target",
    "visibility_mc", "visibility_mc_direct",
    "dev_spectral_vs_closed", "dev_mc_vs_spectral", "dev_mc_vs_closed",
)


def _rel(a, b):
    if a is None or b is None:
        return None
    if b == 0:
        return 0.0 if a == 0 else math.inf
    return (a - b) / b


def run_scenario(cfg: ScenarioConfig, index=0, sweep_value=None, jobs=1):
    """Evaluate one scenario; returns a report row (dict over REPORT_COLUMNS)."""
    bg = build_background(cfg)
    g, o = build_instrument(cfg)
    flt = build_filter(cfg)
    mode = cfg.get("run", "mode")
    resp = cfg.get("run", "response")
    use_at = resp != "photonic"
    use_ph = resp != "atomic" and o is not None
    row = dict.fromkeys(REPORT_COLUMNS)
    row.update(scenario=index, name=cfg.get("run", "name"), mode=mode, response=resp,
               sweep_parameter=None if sweep_value is None else "swept", sweep_value=sweep_value)
    if mode in ("closed_form", "all") and bg.kind is BackgroundKind.FLAT:
        s = bg.flat_level
        at = flat_atomic_variance(g, s, 0.0 if flt is None else flt.gamma) if use_at else 0.0
        ph = flat_photonic_variance(g, o, s) if use_ph else 0.0
        row.update(closed_atomic=at, closed_photonic=ph, closed_total=at + ph,
                   visibility_closed=visibility(at + ph))
    if mode in ("spectral", "all"):
        q = AngularQuadrature(n_theta=cfg.get("quadrature", "n_theta"), n_phi=cfg.get("quadrature", "n_phi"))
        if use_at and use_ph:
            A = combined_apparatus(g, o, q, exact=resp == "combined_exact")
        elif use_ph:
            A = photonic_apparatus(g, o, q)
        else:
            A = atomic_apparatus(g)
        opts = IntegratorOptions(tol=cfg.get("integrator", "tol"), abs_tol=cfg.get("integrator", "abs_tol"),
                                 max_panels=cfg.get("integrator", "max_panels"))
        r = variance_integral(bg, A, flt, opts)
        row.update(spectral_atomic=r.breakdown.get("atomic"), spectral_photonic=r.breakdown.get("photonic"),
                   spectral_cross=r.breakdown.get("cross"), spectral_total=r.variance,
                   spectral_error=r.diagnostics.get("error"), visibility_spectral=r.visibility)
    if mode in ("monte_carlo", "all"):
        if flt is None:
            raise ConfigError("monte_carlo mode needs filter.tau_av", cfg.line_of("filter") or 0)
        if not use_at:
            raise ConfigError("monte_carlo mode simulates the atomic arms; response=photonic is not supported",
                              cfg.line_of("run", "response"))
        mo = McOptions(n_omega=cfg.get("mc", "n_omega"), n_dir=cfg.get("mc", "n_dir"),
                       n_realizations=cfg.get("mc", "realizations"), seed=cfg.get("run", "seed"),
                       dt=cfg.get("mc", "dt"), amplitude_scale=cfg.get("mc", "amplitude_scale"),
                       spacing=cfg.get("mc", "spacing"), include_photonic=use_ph, jobs=jobs)
        m = run_monte_carlo(bg, g, o if use_ph else None, flt.gamma, mo)
        row.update(mc_variance=m.estimate.variance, mc_stderr=m.estimate.stderr,
                   mc_calibration=m.calibration, mc_calibration_stderr=m.calibration_stderr,
                   mc_calibration_target=m.calibration_target, visibility_mc=m.estimate.visibility,
                   visibility_mc_direct=m.estimate.visibility_direct)
    scale = cfg.get("mc", "amplitude_scale") ** 2
    closed_scaled = None if row["closed_total"] is None else row["closed_total"] * scale
    spec_scaled = None if row["spectral_total"] is None else row["spectral_total"] * scale
    row.update(dev_spectral_vs_closed=_rel(row["spectral_total"], row["closed_total"]),
               dev_mc_vs_spectral=_rel(row["mc_variance"], spec_scaled),
               dev_mc_vs_closed=_rel(row["mc_variance"], closed_scaled))
    return row


def _run_task(args):
    cfg, index, value, jobs = args
    t0 = time.perf_counter()
    try:
        return run_scenario(cfg, index, value, jobs), None, time.perf_counter() - t0
    except ConfigError as exc:
        return None, (EXIT_CONFIG, f"config error: {exc}"), 0.0
    except (GeometryError, BackgroundError) as exc:
        return None, (EXIT_CONFIG, f"invalid parameter: {exc}"), 0.0
    except ConvergenceError as exc:
        return None, (EXIT_NUMERIC, f"no convergence: {exc} (estimate {exc.estimate:g})"), 0.0
    except OSError as exc:
        return None, (EXIT_IO, f"I/O error: {exc}"), 0.0
    except ValueError as exc:
        return None, (EXIT_CONFIG, f"invalid input: {exc}"), 0.0


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_cell(v) for v in r])
    return buf.getvalue()


def run(cfg: ScenarioConfig, out_dir=None, jobs=1, stream=None):
    """Run every scenario of a config; returns (exit code, report rows)."""
    stream = stream or sys.stdout
    out_dir = out_dir or cfg.get("output", "dir")
    os.makedirs(out_dir, exist_ok=True)
    par = cfg.get("sweep", "parameter")
    scenarios = expand_sweep(cfg)
    inner = jobs if len(scenarios) == 1 else 1
    tasks = [(c, i, v, inner) for i, (v, c) in enumerate(scenarios)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    code, rows = EXIT_OK, []
    print(f"gravidec {__version__}; constants: "
          + ", ".join(f"{k}={v!r}" for k, v in CONSTANTS.items()), file=stream)
    for (c, i, v, _), (row, err, dt) in zip(tasks, results):
        label = f"scenario {i}" + ("" if v is None else f" ({par}={v:g})")
        if err is not None:
            code = max(code, err[0])
            print(f"{label}: FAILED: {err[1]}", file=stream)
            continue
        if par is not None:
            row["sweep_parameter"] = par
        rows.append(row)
        try:
            _atomic_write(os.path.join(out_dir, f"scenario_{i:03d}.csv"),
                          _csv_text(("field", "value"), [(k, row[k]) for k in REPORT_COLUMNS]))
        except OSError as exc:
            print(f"{label}: I/O error: {exc}", file=stream)
            code = max(code, EXIT_IO)
        print(_summary(label, row, dt), file=stream)
    try:
        _atomic_write(os.path.join(out_dir, cfg.get("output", "report")),
                      _csv_text(REPORT_COLUMNS, [[r[k] for k in REPORT_COLUMNS] for r in rows]))
        _atomic_write(os.path.join(out_dir, "config_echo.ini"),
                      "# constants: " + ", ".join(f"{k}={v!r}" for k, v in CONSTANTS.items())
                      + "\n" + serialize(cfg))
    except OSError as exc:
        print(f"I/O error writing report: {exc}", file=stream)
        code = max(code, EXIT_IO)
    return code, rows


def _summary(label, row, dt):
    parts = []
    for key, title in (("closed_total", "closed"), ("spectral_total", "spectral"), ("mc_variance", "mc")):
        if row[key] is not None:
            parts.append(f"{title} dPhi^2={row[key]:.6g}")
    if row["closed_total"] is not None:
        parts.append(f"(atomic/2={row['closed_atomic'] / 2:.4g}, photonic/2={row['closed_photonic'] / 2:.4g})")
    if row["mc_stderr"] is not None:
        parts.append(f"mc stderr={row['mc_stderr']:.3g}")
    for key in ("dev_spectral_vs_closed", "dev_mc_vs_spectral", "dev_mc_vs_closed"):
        if row[key] is not None:
            parts.append(f"{key}={row[key]:+.3g}")
    return f"{label}: " + "; ".join(parts) + f"  [{dt:.3f} s]"


# ---------------------------------------------------------------- tabulate

def tabulate(cfg: ScenarioConfig, what, out_dir=None):
    """Write one deterministic CSV table; returns its path."""
    if what not in TABLES:
        raise ConfigError(f"unknown table {what!r}")
    out_dir = out_dir or cfg.get("output", "dir")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{what}.csv")
    n = cfg.get("tabulate", "points")
    lo, hi = cfg.get("tabulate", "f_min_hz"), cfg.get("tabulate", "f_max_hz")
    f_hz = np.geomspace(lo, hi, n) if cfg.get("tabulate", "spacing") == "log" else np.linspace(lo, hi, n)
    if what == "y_curve":
        x = np.geomspace(0.1, 20.0, 200)
        _atomic_write(path, _csv_text(("x", "y"), [(float(a), y_of_x(a)) for a in x]))
    elif what == "spectrum":
        bg = build_background(cfg)
        w = 2 * math.pi * f_hz
        s = evaluate_sh(bg, w)
        _atomic_write(path, _csv_text(("frequency_hz", "omega_rad_s", "S_h"),
                                      [(float(a), float(b), float(c)) for a, b, c in zip(f_hz, w, s)]))
    elif what == "response":
        g, o = build_instrument(cfg)
        q = AngularQuadrature(n_theta=cfg.get("quadrature", "n_theta"), n_phi=cfg.get("quadrature", "n_phi"))
        d = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
        os.close(fd)
        try:
            write_response_csv(tmp, g, o, 2 * math.pi * f_hz, q)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
    else:
        _atomic_write(path, _csv_text(("identity", "p1", "p2", "closed", "numeric", "rel_err"),
                                      f_identity_rows(cfg.get("tabulate", "n_random"), cfg.get("run", "seed", 0))))
    return path


def f_identity_rows(n, seed=0):
    """Random checks of the f-algebra and the f-integral identities."""
    rng = np.random.default_rng(seed)
    rows = []

    def add(name, p1, p2, closed, numeric):
        err = abs(numeric - closed) / abs(closed) if closed != 0 else abs(numeric)
        rows.append((name, float(p1), float(p2), float(closed), float(numeric), float(err)))

    for _ in range(n):
        x, y = rng.uniform(-20, 20, 2)
        add("f_product", x, y, 2 * f_osc(x) + 2 * f_osc(y) - f_osc(x + y) - f_osc(x - y), f_osc(x) * f_osc(y))
    for _ in range(n):
        x = rng.uniform(-20, 20)
        add("f_square", x, 0.0, 4 * f_osc(x) - f_osc(2 * x), f_osc(x) ** 2)
    for _ in range(n):
        tau, gam = rng.uniform(0.1, 3.0), 10 ** rng.uniform(-2, 1)
        add("f_filtered", tau, gam, -math.expm1(-gam * tau) / gam, f_filtered_integral(tau, gam))
    for _ in range(n):
        tau = rng.uniform(0.1, 3.0)
        add("f_unfiltered", tau, 0.0, tau, f_filtered_integral(tau, 0.0))
    for _ in range(n):
        eta, tau = rng.uniform(0.1, 3.0, 2)
        add("f_min", eta, tau, min(eta, tau), min_integral(eta, tau))
    return rows


# ---------------------------------------------------------------- entry point

def _default_jobs():
    try:
        return max(1, int(os.environ.get("GRAVIDEC_JOBS", "1")))
    except ValueError:
        return 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="gravidec",
        description="Dephasing variance and fringe visibility of atom interferometers in a "
                    "stochastic gravitational-wave background.",
        epilog="Config units: frequencies in Hz (converted internally to rad/s, omega = 2*pi*f), "
               "times in s, angles in rad, masses in kg, S_h in 1/Hz. "
               "Exit codes: 0 ok, 1 config error, 2 no convergence, 3 I/O error.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario config file")
    common.add_argument("--jobs", type=int, default=_default_jobs(),
                        help="parallel workers (default: $GRAVIDEC_JOBS or 1)")
    common.add_argument("--seed", type=int, default=None, help="override run.seed")
    common.add_argument("--tol", type=float, default=None, help="override integrator.tol")
    common.add_argument("--out-dir", default=None, help="override output.dir")
    sub.add_parser("run", parents=[common], help="evaluate the scenario(s)")
    t = sub.add_parser("tabulate", parents=[common], help="write a CSV table")
    t.add_argument("--what", choices=TABLES, default="y_curve")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text, seed=args.seed)
        if args.tol is not None:
            if not args.tol > 0:
                raise ConfigError("--tol must be > 0")
            cfg = cfg.with_value("integrator", "tol", float(args.tol))
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "run":
            code, _ = run(cfg, args.out_dir, max(1, args.jobs))
            return code
        print(tabulate(cfg, args.what, args.out_dir))
        return EXIT_OK
    except (ConfigError, GeometryError, BackgroundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
