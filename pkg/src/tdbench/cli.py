"""Command-line front end: benchmark tables, first-collision source terms and
Monte Carlo verification reports.

Exit codes: 0 ok, 2 bad configuration, 3 quadrature failure, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import InvalidParameter, ProblemKind, ProblemSpec, support_bound
from .montecarlo import McConfig, UnsupportedGeometry, bin_averages, compare, geometry_for, run
from .quadrature import QuadratureFailure, QuadSpec
from .solutions import evaluate, uncollided

EXIT_OK, EXIT_CONFIG, EXIT_QUADRATURE, EXIT_VERIFY = 0, 2, 3, 4

DEFAULTS = {
    "problem": "plane_pulse",
    "c": 1.0,
    "x0": 0.5,
    "sigma": 0.5,
    "t0": 5.0,
    "times": (1.0, 5.0, 10.0),
    "format": "csv",
    "histories": 1_000_000,
    "seed": 42,
}

CSV_HEADER = "coord,t,phi_u,phi_c,phi_total,err_u,err_c"
MIN_VERIFY_HISTORIES = 10_000
PASS_FRACTION = 0.005


class ConfigError(ValueError):
    pass


def fmt(v: float) -> str:
    """17 significant digits, scientific notation."""
    return f"{float(v):.16e}"


@dataclass
class RunConfig:
    problem: str
    c: float
    x0: float
    sigma: float
    t0: float
    times: tuple
    grid: Optional[tuple] = None
    points: Optional[tuple] = None
    tol: Optional[float] = None
    format: str = "csv"
    out: Optional[str] = None
    histories: int = DEFAULTS["histories"]
    seed: int = DEFAULTS["seed"]
    spec: ProblemSpec = field(init=False, repr=False)

    def __post_init__(self):
        name = self.problem.strip().lower().replace("-", "_")
        try:
            kind = ProblemKind(name)
        except ValueError:
            choices = ", ".join(k.value for k in ProblemKind)
            raise ConfigError(f"unknown problem {self.problem!r} (choose from {choices})") from None
        self.problem = kind.value
        kw = {}
        for key in ("x0", "sigma", "t0"):
            if key in kind.required:
                kw[key] = getattr(self, key)
        try:
            self.spec = ProblemSpec(kind, c=self.c, **kw)
        except InvalidParameter as exc:
            raise ConfigError(str(exc)) from None
        if not self.times:
            raise ConfigError("times must be non-empty")
        if any(not (t > 0 and np.isfinite(t)) for t in self.times):
            raise ConfigError("times must be positive and finite")
        if self.grid is not None and self.points is not None:
            raise ConfigError("give either --grid or --points, not both")
        if self.grid is not None:
            lo, hi, n = self.grid
            if n < 2:
                raise ConfigError("grid needs at least 2 points")
            if not hi > lo:
                raise ConfigError("grid max must exceed grid min")
        if self.points is not None and len(self.points) == 0:
            raise ConfigError("points list is empty")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.histories < 1:
            raise ConfigError("histories must be >= 1")

    def quad(self) -> Optional[QuadSpec]:
        if self.tol is None:
            return None
        return QuadSpec(abs_tol=self.tol * 1e-2, rel_tol=self.tol)

    def coords(self) -> np.ndarray:
        if self.points is not None:
            return np.asarray(self.points, dtype=float)
        if self.grid is not None:
            lo, hi, n = self.grid
            return np.linspace(lo, hi, n)
        bound, _ = support_bound(self.spec, max(self.times))
        if self.spec.kind.cylindrical:
            return np.linspace(0.0, bound, 121)
        return np.linspace(-bound, bound, 241)

    def resolved(self) -> dict:
        # the output location is not part of the computation
        d = {k: v for k, v in asdict(self).items() if k not in ("spec", "out")}
        for key in ("x0", "sigma", "t0"):
            if key not in self.spec.kind.required:
                d.pop(key)
        d["times"] = list(self.times)
        d["coords"] = [float(v) for v in self.coords()]
        d["grid"] = list(self.grid) if self.grid is not None else None
        d["points"] = list(self.points) if self.points is not None else None
        return d


# ----------------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------------

def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text: str) -> tuple:
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like min:max:n, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None


_CONVERT = {
    "problem": str,
    "c": float,
    "x0": float,
    "sigma": float,
    "t0": float,
    "times": _floats,
    "grid": _grid,
    "points": _floats,
    "tol": float,
    "format": str,
    "out": str,
    "histories": lambda v: int(float(v)),
    "seed": int,
}


def _convert(key, value):
    try:
        return _CONVERT[key](value)
    except ConfigError:
        raise
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    out = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _CONVERT:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdbench", description=__doc__.split("\n\n")[0].replace("\n", " "))
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("evaluate", "tabulate uncollided, collided and total flux"),
                        ("source-term", "tabulate the first-collision source (c/2) phi_u"),
                        ("verify", "compare against an analog Monte Carlo simulation")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--problem", help="one of: " + ", ".join(k.value for k in ProblemKind))
        p.add_argument("--c", type=str)
        p.add_argument("--x0", type=str)
        p.add_argument("--sigma", type=str)
        p.add_argument("--t0", type=str)
        p.add_argument("--times", type=str, help="comma-separated snapshot times")
        p.add_argument("--grid", type=str, help="min:max:n (bins for verify, points otherwise)")
        p.add_argument("--points", type=str, help="comma-separated coordinates")
        p.add_argument("--tol", type=str, help="relative quadrature tolerance")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--out", type=str)
        p.add_argument("--histories", type=str)
        p.add_argument("--seed", type=str)
        p.add_argument("--config", type=str, help="flat key = value file")
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and command-line flags (flags win)."""
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in _CONVERT:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = _convert(key, value)
    merged["times"] = tuple(merged["times"])
    return RunConfig(**merged)


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def _emit(cfg: RunConfig, text: str) -> None:
    """Write atomically to ``cfg.out`` (or stdout)."""
    if cfg.out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(cfg.out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tdbench-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, cfg.out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(cfg: RunConfig, columns, rows) -> str:
    if cfg.format == "csv":
        lines = [",".join(columns)]
        lines += [",".join(fmt(v) for v in row) for row in rows]
        return "\n".join(lines) + "\n"
    payload = {"config": cfg.resolved(), "columns": list(columns),
               "rows": [[fmt(v) for v in row] for row in rows]}
    return json.dumps(payload, indent=1) + "\n"


def cmd_evaluate(cfg: RunConfig) -> str:
    coords = cfg.coords()
    rows = []
    for t in cfg.times:
        res = evaluate(cfg.spec, coords, t, cfg.quad())
        for i, x in enumerate(coords):
            rows.append((x, t, res.phi_u[i], res.phi_c[i], res.phi_total[i], res.err_u[i], res.err_c[i]))
    return _table(cfg, CSV_HEADER.split(","), rows)


def cmd_source_term(cfg: RunConfig) -> str:
    coords = cfg.coords()
    rows = []
    for t in cfg.times:
        phi_u, err_u = uncollided(cfg.spec, coords, t, cfg.quad())
        s = 0.5 * cfg.spec.c * np.asarray(phi_u, dtype=float)
        e = 0.5 * cfg.spec.c * np.asarray(err_u, dtype=float)
        rows.extend((x, t, s[i], e[i]) for i, x in enumerate(coords))
    return _table(cfg, ("coord", "t", "source", "err"), rows)


def _verify_edges(cfg: RunConfig) -> np.ndarray:
    if cfg.grid is not None:
        lo, hi, n = cfg.grid
        return np.linspace(lo, hi, n + 1)
    if cfg.points is not None:
        edges = np.asarray(cfg.points, dtype=float)
        if edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ConfigError("verify points are bin edges and must be strictly increasing")
        return edges
    bound, _ = support_bound(cfg.spec, max(cfg.times))
    if cfg.spec.kind.cylindrical:
        return np.linspace(0.0, bound, 21)
    return np.linspace(-bound, bound, 41)


def cmd_verify(cfg: RunConfig, analytic_scale: float = 1.0) -> tuple:
    """Run the Monte Carlo oracle and compare total flux per bin.

    Returns ``(report_text, passed, report)``. ``analytic_scale`` multiplies the
    analytic values and exists to exercise the failure path.
    """
    if cfg.histories < MIN_VERIFY_HISTORIES:
        raise ConfigError(f"verify needs at least {MIN_VERIFY_HISTORIES} histories")
    edges = _verify_edges(cfg)
    if cfg.spec.kind.cylindrical and edges[0] < 0:
        raise ConfigError("radial bins must start at r >= 0")
    times = tuple(sorted(cfg.times))
    mc_cfg = McConfig(histories=cfg.histories, edges=edges, tally_times=times, seed=cfg.seed,
                      geometry=geometry_for(cfg.spec.kind))
    tally = run(cfg.spec, mc_cfg)
    analytic = np.array([bin_averages(cfg.spec, edges, t, cfg.quad(), parts=("phi_total",))["phi_total"]
                         for t in times]) * analytic_scale
    report = compare(tally, analytic, "total")
    passed = report.frac_beyond_3 <= PASS_FRACTION
    z = report.z
    rows = []
    for j, t in enumerate(times):
        for i in range(edges.size - 1):
            rows.append((edges[i], edges[i + 1], t, tally.total[j, i], np.sqrt(tally.var_total[j, i]),
                         analytic[j, i], z[j, i]))
    columns = ("bin_lo", "bin_hi", "t", "mc", "mc_sd", "analytic", "z")
    if cfg.format == "csv":
        text = _table(cfg, columns, rows)
    else:
        payload = {"config": cfg.resolved(), "passed": passed,
                   "summary": {k: v for k, v in report.as_dict().items() if k != "z"},
                   "columns": list(columns), "rows": [[fmt(v) for v in row] for row in rows]}
        text = json.dumps(payload, indent=1) + "\n"
    return text, passed, report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        if args.command == "evaluate":
            _emit(cfg, cmd_evaluate(cfg))
        elif args.command == "source-term":
            _emit(cfg, cmd_source_term(cfg))
        else:
            text, passed, report = cmd_verify(cfg)
            _emit(cfg, text)
            print(f"max |z| = {report.max_abs_z:.3f}, fraction |z| > 3 = {report.frac_beyond_3:.4f}: "
                  f"{'PASS' if passed else 'FAIL'}", file=sys.stderr)
            if not passed:
                return EXIT_VERIFY
    except (ConfigError, InvalidParameter, UnsupportedGeometry) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureFailure as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
