"""Command-line driver: parameter sweeps, single evolutions, method comparisons, oracle checks.

Configuration files are flat ``key = value`` text (``#`` starts a comment).
Recognised keys::

    name         output basename (default: sweep)
    system       electron-barrier | photon-stack
    height       barrier height V0            (electron-barrier)
    length       barrier length L             (electron-barrier)
    n1 n2 d1 d2  indices and thicknesses      (photon-stack)
    N            period parameter, N - 1 layers (photon-stack)
    center       packet centre p0 or k0
    sweep        comma-separated widths, or
    sweep_min, sweep_max, points, spacing (log | linear)
    methods      comma-separated: presence, second-order, evolution,
                 momentum-average, narrow-limit
    panels       Simpson panels of the energy grid (default 20000)
    jobs         worker processes (default: available cores)
    tol          relative tolerance for compare/validate
    out          output directory

Command-line flags override file values.
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import datetime
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, kernels
from .evolution import ProtocolParams, incident_crossing, simulated_tunneling_time, simulated_uncertainty
from .presence_time import (
    fingerprint,
    momentum_average_time,
    narrow_limit_time,
    transmission_channel,
    tunneling_time,
    tunneling_time_second_order,
    tunneling_uncertainty,
)
from .scattering import LayeredStack, RectangularBarrier
from .spectral import HBAR, gaussian_weight

CSV_HEADER = ["sweep_value", "method", "tau", "delta_tau", "imag_residual", "status"]
METHOD_NAMES = ("presence", "second-order", "evolution", "momentum-average", "narrow-limit")
PLOT_LABELS = {"evolution": "numerical"}
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    system: str
    center: float
    sweep: list
    methods: list
    name: str = "sweep"
    height: float = 5.0
    length: float = 20.0
    n1: float = 2.0
    n2: float = 1.0
    d1: float = 0.6
    d2: float = 1.2
    N: int = 20
    panels: int = 20000
    jobs: int = 0
    tol: float = 0.02
    out: str = "."
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.system not in ("electron-barrier", "photon-stack"):
            raise ConfigError(f"system must be electron-barrier or photon-stack, not {self.system!r}")
        if not self.methods:
            raise ConfigError("no methods selected")
        bad = [m for m in self.methods if m not in METHOD_NAMES]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; choose from {list(METHOD_NAMES)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods listed twice")
        positive = [self.center, self.height, self.length, self.d1, self.d2, self.tol]
        if not all(x > 0 for x in positive) or self.panels < 10:
            raise ConfigError("physical parameters, tolerance and panels must be positive")
        if self.n1 < 1 or self.n2 < 1:
            raise ConfigError("refractive indices must be >= 1")
        s = np.asarray(self.sweep, dtype=float)
        if s.size and (np.any(s <= 0) or np.any(np.diff(s) <= 0)):
            raise ConfigError("sweep values must be positive and strictly increasing")
        try:
            self.scatterer()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    @property
    def dispersion(self):
        return "electron" if self.system == "electron-barrier" else "photon"

    def scatterer(self):
        if self.system == "electron-barrier":
            return RectangularBarrier(self.height, self.length)
        return LayeredStack(self.n1, self.n2, self.d1, self.d2, int(self.N))

    def as_dict(self):
        d = asdict(self)
        d.pop("extra")
        return d


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _sweep_values(raw: dict, points_override=None):
    if "sweep" in raw and points_override is None:
        return [float(x) for x in raw["sweep"].split(",") if x.strip()]
    try:
        lo, hi = float(raw["sweep_min"]), float(raw["sweep_max"])
    except KeyError as exc:
        raise ConfigError("give either sweep = v1,v2,... or sweep_min/sweep_max") from exc
    n = int(points_override if points_override is not None else raw.get("points", 10))
    if n < 0:
        raise ConfigError("points must be non-negative")
    if n == 1:
        return [lo]
    spacing = raw.get("spacing", "log")
    if spacing == "log":
        vals = np.geomspace(lo, hi, n)
    elif spacing == "linear":
        vals = np.linspace(lo, hi, n)
    else:
        raise ConfigError(f"spacing must be log or linear, not {spacing!r}")
    return [float(v) for v in vals]


def build_config(raw: dict, args=None) -> ExperimentConfig:
    raw = dict(raw)
    flags = vars(args) if args is not None else {}
    if flags.get("method"):
        raw["methods"] = ",".join(flags["method"])
    for key in ("out", "tol", "jobs"):
        if flags.get(key) is not None:
            raw[key] = str(flags[key])
    try:
        cfg = ExperimentConfig(
            system=raw.get("system", ""),
            center=float(raw["center"]),
            sweep=_sweep_values(raw, flags.get("points")),
            methods=[m.strip() for m in raw.get("methods", "").split(",") if m.strip()],
            name=raw.get("name", "sweep"),
            height=float(raw.get("height", 5.0)),
            length=float(raw.get("length", 20.0)),
            n1=float(raw.get("n1", 2.0)),
            n2=float(raw.get("n2", 1.0)),
            d1=float(raw.get("d1", 0.6)),
            d2=float(raw.get("d2", 1.2)),
            N=int(raw.get("N", 20)),
            panels=int(raw.get("panels", 20000)),
            jobs=int(raw.get("jobs", 0)),
            tol=float(raw.get("tol", 0.02)),
            out=raw.get("out", "."),
        )
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path, args=None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return build_config(parse_config_text(text), args)


# --------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class Row:
    sweep_value: float
    method: str
    tau: float
    delta_tau: float
    imag_residual: float
    status: str


def _closed_form_spread(weight):
    # hbar / (sqrt(2) dE) for the transmitted packet plus dy / v0 for the incident one
    return HBAR / (math.sqrt(2) * weight.energy_width) + weight.spatial_width() / weight.group_velocity


def _method_estimate(method, cfg, weight, scatterer, channel):
    """(tau, delta_tau, imag_residual, status) for one cell."""
    E0 = weight.energy_center
    if method == "presence":
        est = tunneling_time(weight, channel)
        return est.tau, _guard(lambda: tunneling_uncertainty(weight, channel)[1]), est.imag_residual
    if method == "momentum-average":
        est = momentum_average_time(weight, channel)
        return est.tau, _guard(lambda: tunneling_uncertainty(weight, channel)[1]), est.imag_residual
    if method == "second-order":
        est = tunneling_time_second_order(E0, weight.energy_width, scatterer)
        return est.tau, (_closed_form_spread(weight), None), 0.0
    if method == "narrow-limit":
        return narrow_limit_time(E0, scatterer).tau, (_closed_form_spread(weight), None), 0.0
    if method == "evolution":
        est = simulated_tunneling_time(weight, scatterer, channel=channel)
        return est.tau, _guard(lambda: simulated_uncertainty(weight, scatterer, channel=channel)[2]), 0.0
    raise ConfigError(f"unknown method {method!r}")


def _guard(fn):
    try:
        return fn(), None
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        return math.nan, type(exc).__name__


def evaluate_point(cfg: ExperimentConfig, value: float) -> list[Row]:
    """All requested methods at one sweep value; failures are recorded per row."""
    rows = []
    try:
        scatterer = cfg.scatterer()
        weight = gaussian_weight(cfg.center, value, cfg.dispersion)
        channel = transmission_channel(weight, scatterer, panels=cfg.panels)
    except Exception as exc:  # noqa: BLE001 - recorded in-row
        return [Row(value, m, math.nan, math.nan, math.nan, f"error:{type(exc).__name__}") for m in cfg.methods]
    for m in cfg.methods:
        try:
            tau, (dtau, derr), imag = _method_estimate(m, cfg, weight, scatterer, channel)
            status = "ok" if derr is None else f"no-uncertainty:{derr}"
            rows.append(Row(value, m, float(tau), float(dtau), float(imag), status))
        except Exception as exc:  # noqa: BLE001 - recorded in-row
            rows.append(Row(value, m, math.nan, math.nan, math.nan, f"error:{type(exc).__name__}"))
    return rows


def run_sweep(cfg: ExperimentConfig) -> list[Row]:
    """Every method at every sweep value, merged in sweep order."""
    jobs = cfg.jobs or os.cpu_count() or 1
    if jobs <= 1 or len(cfg.sweep) <= 1:
        parts = [evaluate_point(cfg, v) for v in cfg.sweep]
    else:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(evaluate_point, [cfg] * len(cfg.sweep), cfg.sweep))
    return [r for part in parts for r in part]


def _fmt(x):
    return "nan" if not math.isfinite(x) else f"{x:.15e}"


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r.sweep_value), r.method, _fmt(r.tau), _fmt(r.delta_tau), _fmt(r.imag_residual), r.status])
    return buf.getvalue()


PLOT_TEMPLATE = '''"""Plot {name}.csv (generated by tunneltime)."""
import csv
import math
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
LABELS = {labels!r}
VACUUM_TIME = {vacuum!r}

series = {{}}
with open(os.path.join(HERE, "{name}.csv"), newline="") as fh:
    for row in csv.DictReader(fh):
        s = series.setdefault(row["method"], ([], [], []))
        s[0].append(float(row["sweep_value"]))
        s[1].append(float(row["tau"]))
        s[2].append(float(row["delta_tau"]))

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for method, (x, tau, dtau) in series.items():
    label = LABELS.get(method, method)
    axes[0].plot(x, tau, "o-" if method == "evolution" else "-", label=label)
    if any(math.isfinite(d) for d in dtau):
        axes[1].plot(x, dtau, "o-" if method == "evolution" else "-", label=label)
if VACUUM_TIME is not None:
    axes[0].axhline(VACUUM_TIME, color="k", lw=0.8, ls=":", label="L/c")
for ax, ylab in zip(axes, ("tunneling time", "uncertainty")):
    ax.set_xlabel("{xlabel}")
    ax.set_ylabel(ylab)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{name}.png"), dpi=150)
'''


def emit_outputs(rows, cfg: ExperimentConfig, out_dir=None):
    out_dir = out_dir or cfg.out
    try:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{cfg.name}.csv")
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(rows))
        photon = cfg.system == "photon-stack"
        script = PLOT_TEMPLATE.format(
            name=cfg.name,
            labels=PLOT_LABELS,
            vacuum=round(cfg.scatterer().length, 12) if photon else None,
            xlabel="delta k" if photon else "delta p",
        )
        plot_path = os.path.join(out_dir, f"{cfg.name}_plot.py")
        with open(plot_path, "w", encoding="utf-8") as fh:
            fh.write(script)
        meta = {
            "config": cfg.as_dict(),
            "fingerprint": fingerprint(sorted(cfg.as_dict().items())),
            "version": __version__,
            "backend": kernels.BACKEND,
            "rows": len(rows),
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        meta_path = os.path.join(out_dir, f"{cfg.name}.json")
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise ConfigError(f"cannot write outputs: {exc}") from exc
    return csv_path, plot_path, meta_path


# --------------------------------------------------------------------------
# subcommands


def cmd_sweep(args):
    cfg = load_config(args.config, args)
    rows = run_sweep(cfg)
    paths = emit_outputs(rows, cfg)
    failed = [r for r in rows if r.status.startswith("error")]
    print(f"{len(rows)} rows, {len(failed)} failed -> {paths[0]}")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_evolve(args):
    cfg = load_config(args.config, args)
    width = args.width if args.width is not None else (cfg.sweep[0] if cfg.sweep else None)
    if width is None:
        raise ConfigError("evolve needs --width or a sweep value")
    scatterer = cfg.scatterer()
    weight = gaussian_weight(cfg.center, width, cfg.dispersion)
    channel = transmission_channel(weight, scatterer, panels=cfg.panels)
    est = simulated_tunneling_time(weight, scatterer, channel=channel)
    d = est.diagnostics
    _, inc, _ = incident_crossing(weight, d["launch_distance"], ProtocolParams())
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, f"{cfg.name}_track.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component", "t", "centroid"])
        for t, y in zip(inc.times, inc.positions):
            w.writerow(["incident", _fmt(t), _fmt(y)])
        for t, y in zip(d["track_times"], d["track_positions"]):
            w.writerow(["transmitted", _fmt(t), _fmt(y)])
    print(f"tau = {est.tau:.12g}  t1 = {d['t1']:.12g}  t2 = {d['t2']:.12g}  mode = {d['mode']}  -> {path}")
    return EXIT_OK


def cmd_compare(args):
    if not args.method or len(args.method) != 2:
        raise ConfigError("compare needs exactly two --method flags")
    cfg = load_config(args.config, args)
    rows = run_sweep(cfg)
    a, b = cfg.methods
    by = {(r.sweep_value, r.method): r for r in rows}
    lines = ["sweep_value,tau_" + a + ",tau_" + b + ",rel_diff"]
    worst = 0.0
    for v in cfg.sweep:
        ta, tb = by[(v, a)].tau, by[(v, b)].tau
        rel = abs(ta - tb) / abs(tb) if tb else math.inf
        worst = max(worst, rel) if math.isfinite(rel) else math.inf
        lines.append(",".join([_fmt(v), _fmt(ta), _fmt(tb), _fmt(rel)]))
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, f"{cfg.name}_compare.csv"), "w", encoding="utf-8") as fh:
        fh.write(table)
    print(f"max relative difference {worst:.3e} (tol {cfg.tol:g})")
    return EXIT_OK if worst <= cfg.tol else EXIT_NUMERIC


def cmd_validate(args):
    from .validation import run_checks

    tol = args.tol if args.tol is not None else 1e-10
    ok = True
    for name, passed, detail in run_checks(tol):
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if ok else EXIT_NUMERIC


def make_parser():
    p = argparse.ArgumentParser(prog="tunneltime", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="flat key = value config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--points", type=int, help="number of sweep points")
        sp.add_argument("--method", action="append", help="method name (repeatable)")
        sp.add_argument("--tol", type=float, help="relative tolerance")
        sp.add_argument("--jobs", type=int, help="worker processes")

    common(sub.add_parser("sweep", help="run a parameter sweep"))
    ev = sub.add_parser("evolve", help="single evolution run with centroid track output")
    common(ev)
    ev.add_argument("--width", type=float, help="packet width (dp or dk)")
    common(sub.add_parser("compare", help="difference table between two methods"))
    va = sub.add_parser("validate", help="run the oracle-equivalence checks")
    va.add_argument("--tol", type=float, help="amplitude oracle tolerance (default 1e-10)")
    return p


COMMANDS = {"sweep": cmd_sweep, "evolve": cmd_evolve, "compare": cmd_compare, "validate": cmd_validate}


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
