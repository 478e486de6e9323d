"""Command-line interface.

    hybridqnd coeffs   [--lossy] [--phi PHI]
    hybridqnd snr      --n-b N
    hybridqnd qnd      [--method exact|linearized] [--lossy]
    hybridqnd sweep    [--grid N] [--optimize] [--output sweep.csv]
    hybridqnd optimize [--g2-lo LO --g2-hi HI]
    hybridqnd contour  [--level 0.6] [--input sweep.csv] [--field C|C_opt]
    hybridqnd oracle   [--signal-n N] [--cutoff C]

Parameters come from ``--config FILE`` (key = value lines, or a JSON object
such as the ``--json`` output of a previous run) and are overridden by flags.
Angles accept ``pi`` shorthands (``pi/2``, ``3pi/4``, ``-0.5*pi``).

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import fock, interferometer, metrics, network, sweep
from .interferometer import InterferometerParams

PARAM_KEYS = [f.name for f in fields(InterferometerParams)]
PRESETS = {
    "none": {},
    "reference": {"d1": 0.9, "d2": 0.9},
}
# run settings beyond the physical parameters, with defaults
SETTINGS = {
    "n_beta": interferometer.REFERENCE_N_BETA,
    "n_b": 1e4,
    "phi": None,
    "method": "exact",
    "lossy": False,
    "grid": 101,
    "optimize": False,
    "g2_lo": None,
    "g2_hi": None,
    "level": 0.6,
    "field": "C",
    "signal_n": 0,
    "cutoff": 18,
}
INT_KEYS = {"grid", "signal_n", "cutoff"}
BOOL_KEYS = {"lossy", "optimize"}
STR_KEYS = {"method", "field"}

_PI = re.compile(r"^([+-]?)(\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*pi(?:\s*/\s*(\d*\.?\d+(?:[eE][+-]?\d+)?))?$")


class ConfigError(ValueError):
    pass


def parse_number(text) -> float:
    """Float from a number or a rational multiple of pi."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    s = str(text).strip().lower()
    m = _PI.match(s)
    if m:
        sign, coef, den = m.groups()
        value = (float(coef) if coef else 1.0) * math.pi / (float(den) if den else 1.0)
        return -value if sign == "-" else value
    return float(s)


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in BOOL_KEYS:
            return _parse_bool(value)
        if key in STR_KEYS:
            return str(value)
        if key in INT_KEYS:
            number = parse_number(value)
            if number != int(number):
                raise ValueError(f"not an integer: {value!r}")
            return int(number)
        return parse_number(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} ({exc})") from None


def load_config(path: str) -> dict:
    """Read a key = value file or a JSON object (a ``config`` member is used
    when present, so ``--json`` outputs can be fed back)."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    if isinstance(data, dict):
        data = data.get("config", data)
        source = dict(data)
    else:
        source = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            source[key] = value
    out = {}
    for key, value in source.items():
        if key not in PARAM_KEYS and key not in SETTINGS and key != "preset":
            raise ConfigError(f"config.{key}: unknown key")
        out[key] = value
    return out


class RunConfig:
    """Validated parameters and run settings."""

    def __init__(self, params: InterferometerParams, settings: dict):
        self.params = params
        self.settings = settings

    def __getattr__(self, name):
        try:
            return self.__dict__["settings"][name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def phi(self) -> float:
        phi = self.settings["phi"]
        return self.params.phi0 if phi is None else phi

    def as_dict(self) -> dict:
        d = {k: float(v) for k, v in self.params.as_dict().items()}
        d.update(self.settings)
        return d

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "RunConfig":
        raw: dict = {}
        if args.config:
            raw.update(load_config(args.config))
        for key in PARAM_KEYS + list(SETTINGS) + ["preset"]:
            value = getattr(args, key, None)
            if value is not None:
                raw[key] = value
        preset = raw.pop("preset", "none")
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values = dict(PRESETS[preset])
        values.update(raw)
        kwargs = {k: _coerce(k, values[k]) for k in PARAM_KEYS if k in values}
        settings = {k: _coerce(k, values.get(k, d)) if values.get(k) is not None else d for k, d in SETTINGS.items()}
        try:
            params = InterferometerParams(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if settings["method"] not in metrics.METHODS:
            raise ConfigError(f"method: must be one of {metrics.METHODS}")
        for key in ("n_beta", "n_b"):
            if settings[key] < 0:
                raise ConfigError(f"{key} must be ≥ 0")
        if settings["grid"] < 2:
            raise ConfigError("grid must be ≥ 2")
        return cls(params, settings)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _emit(obj: dict, as_json: bool, out=None) -> None:
    out = out or sys.stdout
    if as_json:
        json.dump(obj, out, indent=2)
        out.write("\n")
        return
    for key, value in obj.items():
        if key == "config":
            continue
        if isinstance(value, dict):
            out.write(f"{key}:\n")
            for k, v in value.items():
                out.write(f"  {k:<8} {v}\n")
        else:
            out.write(f"{key}: {value}\n")


def _complex_entry(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def cmd_coeffs(cfg: RunConfig, as_json: bool) -> dict:
    if _lossy(cfg):
        c = interferometer.lossy_coefficients(cfg.params, cfg.phi)
    else:
        c = interferometer.lossless_coefficients(cfg.params, cfg.phi)
    names = [f.name for f in fields(c)]
    result = {
        "lossy": _lossy(cfg),
        "phi": cfg.phi,
        "coefficients": {n: _complex_entry(getattr(c, n)) for n in names},
        "config": cfg.as_dict(),
    }
    if as_json:
        _emit(result, True)
    else:
        print(f"{'coef':<5} {'real':>24} {'imag':>24}")
        for n in names:
            z = complex(getattr(c, n))
            print(f"{n:<5} {_fmt(z.real):>24} {_fmt(z.imag):>24}")
    return result


def _lossy(cfg: RunConfig) -> bool:
    """The lossy pipeline is used when asked for or when any loss is present."""
    return bool(cfg.lossy) or not cfg.params.is_lossless


def cmd_snr(cfg: RunConfig, as_json: bool) -> dict:
    R, mean, var = metrics.fock_snr(cfg.params, cfg.n_b, _lossy(cfg))
    result = {"R": float(R), "mean_X": float(mean), "var_X": float(var), "config": cfg.as_dict()}
    _emit(result, as_json)
    return result


def cmd_qnd(cfg: RunConfig, as_json: bool) -> dict:
    try:
        moments = metrics.coherent_moments(cfg.params, cfg.n_beta, cfg.method, _lossy(cfg))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    c2, c = metrics.correlation_from_moments(moments)
    result = {
        "C2": float(c2),
        "C": float(c),
        "moments": moments.as_dict(),
        "config": cfg.as_dict(),
    }
    _emit(result, as_json)
    return result


def _axis(cfg: RunConfig) -> np.ndarray:
    return np.linspace(0.0, 1.0, cfg.grid)


def _bounds(cfg: RunConfig):
    if cfg.g2_lo is None and cfg.g2_hi is None:
        return None
    lo, hi = sweep.default_g2_bounds(cfg.params.g1)
    return (cfg.g2_lo if cfg.g2_lo is not None else lo, cfg.g2_hi if cfg.g2_hi is not None else hi)


def _compute_grid(cfg: RunConfig) -> sweep.SweepGrid:
    ax = _axis(cfg)
    try:
        if cfg.optimize:
            return sweep.optimized_ratio_grid(cfg.params, cfg.n_beta, ax, ax, _bounds(cfg), cfg.method)
        return sweep.sweep_c(cfg.params, cfg.n_beta, ax, ax, cfg.method)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def write_grid_csv(grid: sweep.SweepGrid, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    header = ["eta1", "eta2", "C"]
    optimized = grid.g2_opt is not None
    if optimized:
        header += ["g2_opt", "C_opt"]
    writer.writerow(header)
    for i, e1 in enumerate(grid.eta1_axis):
        for j, e2 in enumerate(grid.eta2_axis):
            row = [e1, e2, grid.values[i, j]]
            if optimized:
                row += [grid.g2_opt[i, j], grid.c_opt[i, j]]
            writer.writerow([_fmt(x) for x in row])


def read_grid_csv(path: str, g1: float) -> sweep.SweepGrid:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: no grid rows")
    e1 = np.array([float(r["eta1"]) for r in rows])
    e2 = np.array([float(r["eta2"]) for r in rows])
    a1, a2 = np.unique(e1), np.unique(e2)
    if len(rows) != len(a1) * len(a2):
        raise ConfigError(f"{path}: rows do not form a rectangular grid")
    i, j = np.searchsorted(a1, e1), np.searchsorted(a2, e2)

    def column(name):
        if name not in rows[0]:
            return None
        out = np.empty((len(a1), len(a2)))
        out[i, j] = [float(r[name]) for r in rows]
        return out

    return sweep.SweepGrid(a1, a2, column("C"), g1, column("g2_opt"), column("C_opt"))


def _open_output(path: str | None):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", newline="")


def cmd_sweep(cfg: RunConfig, as_json: bool, output: str | None) -> dict:
    grid = _compute_grid(cfg)
    fh = _open_output(output)
    try:
        if as_json:
            obj = {
                "eta1_axis": grid.eta1_axis.tolist(),
                "eta2_axis": grid.eta2_axis.tolist(),
                "C": grid.values.tolist(),
            }
            if grid.g2_opt is not None:
                obj["g2_opt"] = grid.g2_opt.tolist()
                obj["C_opt"] = grid.c_opt.tolist()
            obj["config"] = cfg.as_dict()
            json.dump(obj, fh)
            fh.write("\n")
        else:
            write_grid_csv(grid, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return {"rows": grid.values.size}


def cmd_optimize(cfg: RunConfig, as_json: bool) -> dict:
    bounds = _bounds(cfg)
    lossy = _lossy(cfg)
    try:
        res = sweep.optimize_g2(cfg.params, cfg.n_beta, bounds, cfg.method, lossy)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _, c_sym = metrics.qnd_correlation(replace(cfg.params, g2=cfg.params.g1), cfg.n_beta, cfg.method, lossy)
    result = {
        "g2_star": res.g2_star,
        "C_star": res.C_star,
        "ratio": res.g2_star / cfg.params.g1 if cfg.params.g1 else math.inf,
        "C_at_g1": float(c_sym),
        "at_boundary": res.at_boundary,
        "config": cfg.as_dict(),
    }
    _emit(result, as_json)
    return result


def _polylines_json(contours: sweep.ContourSet, field: str) -> dict:
    return {
        "level": contours.level,
        "field": field,
        "polylines": [line.tolist() for line in contours.polylines],
    }


def cmd_contour(cfg: RunConfig, as_json: bool, output: str | None, source: str | None) -> dict:
    grid = read_grid_csv(source, cfg.params.g1) if source else _compute_grid(cfg)
    try:
        contours = sweep.extract_contour(grid, cfg.level, cfg.field)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc).strip("'\"")) from None
    obj = _polylines_json(contours, cfg.field)
    fh = _open_output(output)
    try:
        json.dump(obj, fh)
        fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return obj


def cmd_oracle(cfg: RunConfig, as_json: bool) -> dict:
    p = cfg.params
    try:
        mean, var = fock.oracle_simulate(p, cfg.signal_n, cfg.cutoff)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    net = interferometer.build_lossy_network(p, p.phi0 + p.kappa * cfg.signal_n)
    e_mean, e_var = network.quadrature_moments(net, interferometer.A_S)
    result = {
        "oracle": {"mean_X": mean, "var_X": var},
        "engine": {"mean_X": e_mean, "var_X": e_var},
        "max_abs_diff": max(abs(mean - e_mean), abs(var - e_var)),
        "config": cfg.as_dict(),
    }
    _emit(result, as_json)
    return result


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value or JSON file")
    common.add_argument("--preset", choices=sorted(PRESETS), help="reference sets d1 = d2 = 0.9")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    for key in PARAM_KEYS:
        common.add_argument("--" + key.replace("_", "-").lower(), dest=key, metavar="X")
    common.add_argument("--n-beta", dest="n_beta", metavar="X", help="coherent signal photon number")
    common.add_argument("--method", choices=metrics.METHODS)
    common.add_argument("--lossy", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--g2-lo", dest="g2_lo", metavar="X")
    common.add_argument("--g2-hi", dest="g2_hi", metavar="X")

    parser = argparse.ArgumentParser(prog="hybridqnd", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", parents=[common], help="input-output coefficients")
    p.add_argument("--phi", metavar="X", help="interferometer phase (default phi0)")
    p = sub.add_parser("snr", parents=[common], help="SNR for a Fock signal")
    p.add_argument("--n-b", dest="n_b", metavar="N")
    sub.add_parser("qnd", parents=[common], help="QND correlation for a coherent signal")
    for name, text in (("sweep", "C over the (eta1, eta2) grid"), ("contour", "level set of a sweep")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--grid", metavar="N", help="points per axis")
        p.add_argument("--optimize", action=argparse.BooleanOptionalAction, default=None)
        p.add_argument("--output", "-o", help="output path (default stdout)")
        if name == "contour":
            p.add_argument("--level", metavar="X")
            p.add_argument("--field", choices=["C", "C_opt", "g2_opt", "ratio"])
            p.add_argument("--input", help="sweep CSV to contour instead of recomputing")
    sub.add_parser("optimize", parents=[common], help="optimise the readout gain g2")
    p = sub.add_parser("oracle", parents=[common], help="truncated-Fock spot check")
    p.add_argument("--signal-n", dest="signal_n", metavar="N")
    p.add_argument("--cutoff", metavar="N")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.resolve(args)
        if args.command == "coeffs":
            cmd_coeffs(cfg, args.json)
        elif args.command == "snr":
            cmd_snr(cfg, args.json)
        elif args.command == "qnd":
            cmd_qnd(cfg, args.json)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.json, args.output)
        elif args.command == "optimize":
            cmd_optimize(cfg, args.json)
        elif args.command == "contour":
            cmd_contour(cfg, args.json, args.output, args.input)
        elif args.command == "oracle":
            cmd_oracle(cfg, args.json)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, fock.TruncationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
