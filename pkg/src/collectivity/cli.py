"""Command line front end: ``collectivity-sim single|ensemble|spectrum|sweep``.

Configuration is one JSON document; every field is optional. Frequencies are
linear (MHz) and times in microseconds in every user-facing file; they are
multiplied by 2*pi exactly once, when the run objects are built.
Precedence is command-line flag > config file > built-in default.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import (
    AtomParams,
    NumericalError,
    PulseShape,
    integrate_two_level,
    mhz,
    rabi_at,
    time_grid,
    to_mhz,
)
from .ensemble import EnsembleResult, GridSettings, SpectralDistribution, run_ensemble
from .svg import PALETTE, Series, line_plot

log = logging.getLogger("collectivity")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
UNITS_NOTE = ("units: time in us, frequencies in MHz (linear); "
              "converted once to angular 2*pi*MHz rad/us for integration")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str, line: Optional[int] = None):
        self.field_name = field_name
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"config field '{field_name}'{where}: {message}")


def _default_pulse():
    return {"kind": "gaussian", "peak_rabi": 1.0, "center": 0.2, "fwhm": 0.1}


@dataclass
class RunConfig:
    pulse: dict = field(default_factory=_default_pulse)
    sigma_fwhm: float = 500.0
    delta0_list: list = field(default_factory=lambda: [0.0, 500.0, 750.0, 1000.0, 1250.0])
    gamma_list: list = field(default_factory=lambda: [0.0, 5.0])
    t_end: float = 0.5
    dt: float = 1e-5
    n_nodes: int = 401
    span_sigmas: float = 6.0
    quadrature: str = "graded"
    refine_ratio: float = 0.1
    refine_width: float = 100.0
    t0_spectrum: float = 0.2
    output_stride: int = 1
    output_dir: str = "out"
    workers: int = 1

    # fields that change how a run executes, never what it computes
    EXECUTION_FIELDS = ("output_dir", "workers")

    def physics_dict(self) -> dict:
        d = asdict(self)
        for k in self.EXECUTION_FIELDS:
            d.pop(k)
        return d

    def pulse_shape(self) -> PulseShape:
        p = self.pulse
        if p.get("kind", "gaussian") == "constant":
            return PulseShape.constant(mhz(p["peak_rabi"]))
        return PulseShape.gaussian(mhz(p["peak_rabi"]), p["center"], p["fwhm"])

    def distribution(self, delta0_mhz: float) -> SpectralDistribution:
        return SpectralDistribution(mhz(self.sigma_fwhm), mhz(delta0_mhz))

    def grid_settings(self) -> GridSettings:
        return GridSettings(self.n_nodes, self.span_sigmas, self.quadrature,
                            self.refine_ratio, mhz(self.refine_width))

    def validate(self, lines: Optional[dict] = None) -> "RunConfig":
        lines = lines or {}

        def fail(name, msg):
            raise ConfigError(name, msg, lines.get(name))

        def number(name, value, positive=False, nonneg=False):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                fail(name, f"expected a finite number, got {value!r}")
            if positive and not value > 0:
                fail(name, f"must be > 0, got {value}")
            if nonneg and not value >= 0:
                fail(name, f"must be >= 0, got {value}")

        if not isinstance(self.pulse, dict):
            fail("pulse", "expected an object")
        unknown = set(self.pulse) - {"kind", "peak_rabi", "center", "fwhm"}
        if unknown:
            fail("pulse", f"unknown keys {sorted(unknown)}")
        self.pulse = {**_default_pulse(), **self.pulse}
        if self.pulse["kind"] not in ("gaussian", "constant"):
            fail("kind", f"must be 'gaussian' or 'constant', got {self.pulse['kind']!r}")
        number("peak_rabi", self.pulse["peak_rabi"], nonneg=True)
        number("center", self.pulse["center"])
        number("fwhm", self.pulse["fwhm"], positive=True)
        number("sigma_fwhm", self.sigma_fwhm, nonneg=True)
        for name in ("delta0_list", "gamma_list"):
            values = getattr(self, name)
            if not isinstance(values, list) or not values:
                fail(name, "expected a non-empty list of numbers")
            for v in values:
                number(name, v, nonneg=(name == "gamma_list"))
        number("t_end", self.t_end, positive=True)
        number("dt", self.dt, positive=True)
        try:
            time_grid(self.t_end, self.dt)
        except ValueError as exc:
            fail("dt", str(exc))
        for name in ("n_nodes", "output_stride", "workers"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                fail(name, f"expected a positive integer, got {v!r}")
        if self.n_nodes % 2 == 0:
            fail("n_nodes", f"must be odd, got {self.n_nodes}")
        if self.sigma_fwhm == 0 and self.n_nodes != 1:
            fail("n_nodes", "must be 1 when sigma_fwhm is 0")
        number("span_sigmas", self.span_sigmas, positive=True)
        if self.quadrature not in ("graded", "uniform"):
            fail("quadrature", f"must be 'graded' or 'uniform', got {self.quadrature!r}")
        number("refine_ratio", self.refine_ratio, positive=True)
        if self.refine_ratio > 1:
            fail("refine_ratio", "must be <= 1")
        number("refine_width", self.refine_width, positive=True)
        number("t0_spectrum", self.t0_spectrum)
        if not 0 <= self.t0_spectrum <= self.t_end:
            fail("t0_spectrum", f"must lie in [0, t_end={self.t_end}]")
        if not isinstance(self.output_dir, str) or not self.output_dir:
            fail("output_dir", "expected a path string")
        return self


def _field_lines(text: str) -> dict:
    lines = {}
    for i, line in enumerate(text.splitlines(), start=1):
        for key in re.findall(r'"([A-Za-z0-9_]+)"\s*:', line):
            lines.setdefault(key, i)
    return lines


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Defaults, then the JSON file at ``path``, then ``overrides``; validated."""
    data, lines = {}, {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON: {exc.msg}", exc.lineno) from exc
        if not isinstance(data, dict):
            raise ConfigError("--config", "top level must be a JSON object", 1)
        lines = _field_lines(text)
    known = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown field", lines.get(key))
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**data).validate(lines)


# ---------------------------------------------------------------- output


def fmt(x: float) -> str:
    """12 significant digits, scientific notation, 'nan' for undefined."""
    return "nan" if math.isnan(x) else "%.11e" % x


def _label(v: float) -> str:
    return f"{v:g}"


def header_comment(config: RunConfig, command: str) -> str:
    cfg = json.dumps(config.physics_dict(), sort_keys=True, separators=(",", ":"))
    return f"# collectivity-sim {command}; {UNITS_NOTE}; config={cfg}"


def write_csv(path: Path, comment: str, columns: list, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(comment + "\n")
        fh.write(",".join(columns) + "\n")
        fh.writelines(",".join(r) + "\n" for r in rows)
    log.info("wrote %s", path)
    return path


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def single_rows(times, alpha, beta, stride):
    for k in range(0, times.size, stride):
        re_b, im_b = fmt(beta[k].real), fmt(beta[k].imag)
        abs_b = fmt(math.hypot(float(re_b), float(im_b)))
        yield (fmt(times[k]), abs_b, re_b, im_b, fmt(alpha[k].real), fmt(alpha[k].imag))


def ensemble_rows(res: EnsembleResult, stride):
    for k in range(0, res.times.size, stride):
        c = res.collectivity[k]
        yield (fmt(res.times[k]), fmt(res.p_e[k]), fmt(c), "1" if res.defined[k] else "0")


# ---------------------------------------------------------------- commands


def cmd_single(config: RunConfig, svg: bool = False) -> list:
    out = _out_dir(config)
    pulse = config.pulse_shape()
    decay = mhz(config.gamma_list[0])
    comment = header_comment(config, "single")
    written, curves = [], []
    for d in config.delta0_list:
        traj = integrate_two_level(pulse, AtomParams(mhz(d), decay), config.t_end, config.dt)
        written.append(write_csv(out / f"single_{_label(d)}.csv", comment,
                                 ["t_us", "abs_beta", "re_beta", "im_beta", "re_alpha", "im_alpha"],
                                 single_rows(traj.times, traj.alpha, traj.beta, config.output_stride)))
        curves.append((d, traj))
    if svg:
        series = [Series(t.times, np.abs(t.beta), f"Delta = {_label(d)} MHz", PALETTE[i % len(PALETTE)])
                  for i, (d, t) in enumerate(curves)]
        times = curves[0][1].times
        top = max(float(np.abs(t.beta).max()) for _, t in curves) or 1.0
        omega = np.asarray(rabi_at(pulse, times), dtype=float)
        if omega.max() > 0:
            series.append(Series(times, omega / omega.max() * top, "Omega(t) (scaled)",
                                 "#1f77b4", width=0.8))
        path = out / "single.svg"
        path.write_text(line_plot(series, "Single atom |beta(t)|", "t (us)", "|beta|", logy=True,
                                  comment=comment), encoding="utf-8")
        written.append(path)
    return written


def compute_cells(config: RunConfig) -> dict:
    """EnsembleResult per (delta0, gamma) in MHz, computed on ``config.workers`` threads."""
    pulse = config.pulse_shape()
    settings = config.grid_settings()
    cells = [(d, g) for d in config.delta0_list for g in config.gamma_list]

    def one(cell):
        d, g = cell
        return run_ensemble(pulse, config.distribution(d), mhz(g), config.t_end, config.dt,
                            t0=config.t0_spectrum, grid_settings=settings)

    if config.workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(one, cells))
    else:
        results = [one(c) for c in cells]
    return dict(zip(cells, results))


def _cell_name(prefix, d, g):
    return f"{prefix}_d{_label(d)}_g{_label(g)}.csv"


def _write_ensemble_files(config, results, out, comment):
    return [write_csv(out / _cell_name("ensemble", d, g), comment,
                      ["t_us", "p_e", "collectivity", "defined_flag"],
                      ensemble_rows(res, config.output_stride))
            for (d, g), res in results.items()]


def _write_spectrum_files(config, results, out, comment):
    written = []
    for (d, g), res in results.items():
        nodes, values = res.spectrum
        rows = ((fmt(to_mhz(x)), fmt(v)) for x, v in zip(nodes, values))
        written.append(write_csv(out / _cell_name("spectrum", d, g), comment,
                                 ["delta_MHz", "n_times_beta2"], rows))
    return written


def _styled(config, results, getter, xgetter=None):
    series = []
    for (d, g), res in results.items():
        i = config.delta0_list.index(d)
        y = getter(res)
        x = xgetter(res) if xgetter else res.times
        series.append(Series(x, y, f"D0={_label(d)} MHz, G={_label(g)} MHz",
                             PALETTE[i % len(PALETTE)], dashed=(g != config.gamma_list[0])))
    return series


def _ensemble_svgs(config, results, out, comment):
    pulse = config.pulse_shape()
    times = next(iter(results.values())).times
    omega2 = np.asarray(rabi_at(pulse, times), dtype=float) ** 2
    pe = _styled(config, results, lambda r: r.p_e)
    top = max(float(r.p_e.max()) for r in results.values()) or 1.0
    if omega2.max() > 0:
        pe.append(Series(times, omega2 / omega2.max() * top, "Omega^2 (scaled)", "#1f77b4", width=0.8))
    c = _styled(config, results, lambda r: r.collectivity)
    if omega2.max() > 0:
        c.append(Series(times, omega2 / omega2.max(), "Omega^2 (scaled)", "#1f77b4", width=0.8))
    paths = [out / "ensemble_pe.svg", out / "ensemble_collectivity.svg"]
    paths[0].write_text(line_plot(pe, "Average excited population p_e(t)", "t (us)", "p_e",
                                  logy=True, comment=comment), encoding="utf-8")
    paths[1].write_text(line_plot(c, "Collectivity C(t_S)", "t_S (us)", "C", comment=comment),
                        encoding="utf-8")
    return paths


def _spectrum_svg(config, results, out, comment):
    s = _styled(config, results, lambda r: r.spectrum[1], lambda r: to_mhz(r.spectrum[0]))
    path = out / "spectrum.svg"
    path.write_text(line_plot(s, f"n(Delta)|beta(t0={_label(config.t0_spectrum)} us)|^2",
                              "Delta (MHz)", "n |beta|^2", logy=True, comment=comment),
                    encoding="utf-8")
    return path


def cmd_ensemble(config: RunConfig, svg: bool = False) -> list:
    out = _out_dir(config)
    results = compute_cells(config)
    comment = header_comment(config, "ensemble")
    written = _write_ensemble_files(config, results, out, comment)
    if svg:
        written += _ensemble_svgs(config, results, out, comment)
    return written


def cmd_spectrum(config: RunConfig, svg: bool = False) -> list:
    out = _out_dir(config)
    results = compute_cells(config)
    comment = header_comment(config, "spectrum")
    written = _write_spectrum_files(config, results, out, comment)
    if svg:
        written.append(_spectrum_svg(config, results, out, comment))
    return written


def summary_rows(config: RunConfig, results: dict):
    for (d, g), res in results.items():
        k = res.index_of(config.pulse.get("center", 0.0))
        c = res.collectivity[k] if 0 <= k < res.times.size else float("nan")
        yield (fmt(d), fmt(g), fmt(c), fmt(float(res.p_e.max())))


def cmd_sweep(config: RunConfig, svg: bool = False) -> list:
    out = _out_dir(config)
    results = compute_cells(config)
    comment = header_comment(config, "sweep")
    written = _write_ensemble_files(config, results, out, comment)
    written += _write_spectrum_files(config, results, out, comment)
    written.append(write_csv(out / "summary.csv", comment,
                             ["delta0_MHz", "gamma_MHz", "C_at_pulse_center", "p_e_max"],
                             summary_rows(config, results)))
    if svg:
        written += _ensemble_svgs(config, results, out, comment)
        written.append(_spectrum_svg(config, results, out, comment))
    return written


COMMANDS = {"single": cmd_single, "ensemble": cmd_ensemble, "spectrum": cmd_spectrum,
            "sweep": cmd_sweep}


def _mhz_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated MHz values, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collectivity-sim",
        description="Collectivity of Raman-heralded excitations in inhomogeneously broadened ensembles.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--delta0", type=_mhz_list, help="comma-separated detunings in MHz")
    parser.add_argument("--gamma", type=_mhz_list, help="comma-separated decay rates in MHz")
    parser.add_argument("--nodes", type=int, help="quadrature nodes (odd)")
    parser.add_argument("--dt", type=float, help="time step in us")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="threads for (delta0, gamma) cells")
    parser.add_argument("--svg", action="store_true", help="also write SVG plots")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {"delta0_list": args.delta0, "gamma_list": args.gamma, "n_nodes": args.nodes,
                 "dt": args.dt, "output_dir": args.out, "workers": args.workers}
    try:
        config = load_config(args.config, overrides)
        COMMANDS[args.command](config, svg=args.svg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
