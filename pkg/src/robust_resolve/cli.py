"""Command-line front end: ``robust-resolve <command> [options]``.

Commands
--------
resolution  worst-case resolution curve ``delta, r, c_prime`` (or, with
            ``--lf-delta``, the least-favorable densities on the grid)
radius      worst-case (or, with ``--almost-sure``, almost-sure) radius
confset     KL-TV confidence region of an observed distribution
phase       ``(r, alpha)`` phase diagram
estimate    phi-estimate of a data file
simulate    Monte-Carlo coverage report

Options may also come from a JSON recipe passed with ``--config``; flags given
on the command line win. A recipe may name its command under ``"command"``.

Exit codes: 0 success, 2 bad configuration or input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .almost_sure import almost_sure_radius, almost_sure_resolution, default_as_grid
from .divergences import DiscreteDistribution
from .dro_set import SCHEMA_VERSION, confidence_region, mixture_p_hat
from .estimators import EmpiricalSample, InfluenceFunction, estimate, huber_from_alpha
from .exceptions import (DegenerateSample, DomainError, ExtrapolationError, GridMismatch, RobustResolveError)
from .families import LocationFamily
from .least_favorable import OVERLAP, build_pair, solve_c_prime
from .numerics import Grid
from .phase import phase_diagram, write_phase_csv
from .radius import median_regime_radius, worst_case_radius
from .simulate import (CorruptionModel, DroRegion, HuberInterval, MeanInterval, MedianInterval,
                       coverage_experiment, fit_slope, write_reports_csv)

EXIT_CONFIG = 2
EXIT_SOLVER = 3
COMMANDS = ("resolution", "radius", "confset", "phase", "estimate", "simulate")
CONFIG_ERRORS = (DomainError, ExtrapolationError, GridMismatch, DegenerateSample)


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Options shared by every command, validated before dispatch."""

    family: str = "normal"
    sigma: float = 1.0
    table: str | None = None
    grid_n: int = 4001
    grid_span: float | None = None
    tol: float = 1e-6
    format: str = "csv"
    out: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.grid_n < 3:
            raise ConfigError("grid-n must be at least 3")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.grid_span is not None and not self.grid_span > 0:
            raise ConfigError("grid-span must be positive")

    @classmethod
    def from_namespace(cls, ns) -> "RunConfig":
        keys = cls.__dataclass_fields__
        return cls(**{k: getattr(ns, k) for k in keys if getattr(ns, k, None) is not None})

    def build_family(self) -> LocationFamily:
        if self.table:
            return LocationFamily.from_csv(self.table)
        try:
            return LocationFamily.from_name(self.family, self.sigma)
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def grid(self, family, delta_max=0.0) -> Grid:
        return family.default_grid(delta_max, n=self.grid_n, span=self.grid_span)


# ---------------------------------------------------------------------------
# output


def _num(x):
    if x is None:
        return ""
    x = float(x)
    return "inf" if math.isinf(x) else f"{x:.10g}"


def _json_num(x):
    return None if x is None or not math.isfinite(float(x)) else float(x)


def _write(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_text(cfg, columns, rows, meta=None):
    """Rows of raw values as CSV (``inf`` literal) or JSON (``null`` plus flag)."""
    if cfg.format == "json":
        out = []
        for row in rows:
            d = {}
            for k in columns:
                v = row[k]
                if isinstance(v, (float, int, np.floating)) and not isinstance(v, bool):
                    d[k] = _json_num(v)
                    if math.isinf(float(v)):
                        d[f"{k}_infinite"] = True
                else:
                    d[k] = v
            out.append(d)
        return json.dumps({"schema_version": SCHEMA_VERSION, **(meta or {}), "rows": out}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(row[k]) if isinstance(row[k], (float, int, np.floating)) and not isinstance(row[k], bool)
                    else row[k] for k in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def _linspace_spec(text, name):
    """``lo:hi:n`` -> array, or a comma list of values."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return np.linspace(float(lo), float(hi), int(n))
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"{name}: expected lo:hi:n or a comma list, got {text!r}") from None


def _as_solution(cfg, ns, family):
    grid = default_as_grid(family, ns.lf_delta, ns.as_grid_n)
    return almost_sure_resolution(family, ns.lf_delta, ns.alpha, grid)


def _pair_table(cfg, ns, family):
    if ns.almost_sure:
        sol = _as_solution(cfg, ns, family)
        h = sol.p_hat.grid.step
        rows = [{"xi": float(x), "q_minus": float(a / h), "q_plus": float(b / h), "p_hat": float(c / h)}
                for x, a, b, c in zip(sol.p_hat.grid.nodes, sol.q_minus.weights, sol.q_plus.weights,
                                      sol.p_hat.weights)]
        meta = {"family": family.to_dict(), "alpha": ns.alpha, "delta": ns.lf_delta,
                "resolution": sol.r_prime, "theta_witness": sol.theta_witness, "gap": sol.gap}
        return _rows_text(cfg, ["xi", "q_minus", "q_plus", "p_hat"], rows, meta)
    grid = cfg.grid(family, ns.lf_delta)
    pair = build_pair(family, ns.lf_delta, ns.alpha, grid)
    h = grid.step
    rows = [{"xi": float(x), "q_minus": float(a / h), "q_plus": float(b / h), "p_hat_star": float(c / h)}
            for x, a, b, c in zip(grid.nodes, pair.q_minus.weights, pair.q_plus.weights, pair.p_hat_star.weights)]
    meta = {"family": family.to_dict(), "alpha": ns.alpha, "delta": ns.lf_delta,
            "resolution": pair.resolution, "c_prime": pair.c_prime}
    return _rows_text(cfg, ["xi", "q_minus", "q_plus", "p_hat_star"], rows, meta)


def cmd_resolution(cfg, ns):
    family = cfg.build_family()
    delta_max = 4.0 * family.scale if ns.delta_max is None else ns.delta_max
    if ns.alpha is None:
        raise ConfigError("resolution needs --alpha")
    if ns.lf_delta is not None:
        return _pair_table(cfg, ns, family)
    grid = cfg.grid(family, delta_max)
    rows = []
    for d in np.linspace(0.0, delta_max, ns.delta_n):
        pair = build_pair(family, float(d), ns.alpha, grid)
        c = solve_c_prime(family, float(d), ns.alpha, grid)
        rows.append({"delta": float(d), "r": pair.resolution,
                     "c_prime": "overlap" if c is OVERLAP else float(c)})
    return _rows_text(cfg, ["delta", "r", "c_prime"], rows,
                      {"family": family.to_dict(), "alpha": ns.alpha})


def cmd_radius(cfg, ns):
    family = cfg.build_family()
    if ns.r is None or ns.alpha is None:
        raise ConfigError("radius needs --r and --alpha")
    if ns.almost_sure:
        rad = almost_sure_radius(family, ns.r, ns.alpha, grid_n=ns.as_grid_n, delta_max=ns.delta_max,
                                 tol=max(cfg.tol, 1e-3))
        kind = "almost_sure"
    else:
        rad = worst_case_radius(family, ns.r, ns.alpha, delta_max=ns.delta_max, tol=cfg.tol)
        kind = "worst_case"
    row = {"kind": kind, "r": ns.r, "alpha": ns.alpha, "radius": rad.value,
           "witness": rad.achieved_at if rad.achieved_at is not None else math.nan,
           "median_radius": median_regime_radius(family, ns.alpha)}
    return _rows_text(cfg, ["kind", "r", "alpha", "radius", "witness", "median_radius"], [row])


def _observed(cfg, ns, family):
    """Observed distribution from ``--data``, ``--mixture`` or ``--lf-delta``."""
    sources = [ns.data is not None, ns.mixture is not None, ns.lf_delta is not None]
    if sum(sources) != 1:
        raise ConfigError("confset needs exactly one of --data, --mixture, --lf-delta")
    if ns.lf_delta is not None and ns.almost_sure:
        return _as_solution(cfg, ns, family).p_hat
    if ns.lf_delta is not None:
        grid = cfg.grid(family, ns.lf_delta)
        return build_pair(family, ns.lf_delta, ns.alpha, grid).p_hat_star
    if ns.mixture is not None:
        try:
            parts = [tuple(float(v) for v in item.split("@")) for item in ns.mixture.split(",")]
        except ValueError:
            raise ConfigError("--mixture expects weight@location pairs, e.g. 0.7@0,0.3@5") from None
        if any(len(p) != 2 for p in parts):
            raise ConfigError("--mixture expects weight@location pairs, e.g. 0.7@0,0.3@5")
        w, loc = zip(*parts)
        reach = max(abs(v) for v in loc)
        return mixture_p_hat(family, cfg.grid(family, reach), w, loc)
    sample = EmpiricalSample.from_csv(ns.data)
    reach = float(np.abs(sample.points).max())
    return DiscreteDistribution.from_sample(sample.points, cfg.grid(family, reach), sample.weights)


def cmd_confset(cfg, ns):
    family = cfg.build_family()
    if ns.r is None or ns.alpha is None:
        raise ConfigError("confset needs --r and --alpha")
    p_hat = _observed(cfg, ns, family)
    lo, hi = (ns.theta_lo, ns.theta_hi)
    if lo is None or hi is None:
        half = 0.5 * (p_hat.grid.hi - p_hat.grid.lo)
        mid = 0.5 * (p_hat.grid.hi + p_hat.grid.lo)
        reach = half - 6.0 * family.scale
        lo = mid - reach if lo is None else lo
        hi = mid + reach if hi is None else hi
    region = confidence_region(p_hat, family, ns.r, ns.alpha, Grid(lo, hi, ns.theta_grid_n))
    if cfg.format == "json":
        d = region.to_dict()
        d["family"] = family.to_dict()
        return json.dumps(d, indent=2) + "\n"
    rows = [{"lo": a, "hi": b} for a, b in region.intervals]
    return _rows_text(cfg, ["lo", "hi"], rows)


def cmd_phase(cfg, ns):
    family = cfg.build_family()
    rs = _linspace_spec(ns.r_grid, "--r-grid")
    alphas = _linspace_spec(ns.alpha_grid, "--alpha-grid")
    points = phase_diagram(family, rs, alphas, grid_n=ns.as_grid_n, delta_max=ns.delta_max)
    if cfg.format == "json":
        rows = [{"r": p.r, "alpha": p.alpha, "kappa": p.kappa.value, "kappa_prime": p.kappa_prime.value,
                 "regime": p.regime.value} for p in points]
        return _rows_text(cfg, ["r", "alpha", "kappa", "kappa_prime", "regime"], rows,
                          {"family": family.to_dict()})
    buf = io.StringIO()
    write_phase_csv(points, buf)
    return buf.getvalue()


def _phi(ns, family):
    kind = ns.estimator
    if kind == "mean":
        return InfluenceFunction.mean()
    if kind == "median":
        return InfluenceFunction.sign()
    if ns.delta is None:
        raise ConfigError(f"{kind} needs --delta")
    if kind == "generalized-mean":
        return InfluenceFunction.generalized_mean(family, ns.delta)
    if kind == "huber":
        if ns.k is not None:
            return InfluenceFunction.huber(family, ns.delta, ns.k)
        if ns.alpha is None:
            raise ConfigError("huber needs --k or --alpha")
        return huber_from_alpha(family, ns.delta, ns.alpha)
    raise ConfigError(f"unknown estimator {kind!r}")


def cmd_estimate(cfg, ns):
    family = cfg.build_family()
    if ns.data is None:
        raise ConfigError("estimate needs --data")
    sample = EmpiricalSample.from_csv(ns.data)
    phi = _phi(ns, family)
    row = {"estimator": ns.estimator, "n": sample.n, "estimate": estimate(phi, sample)}
    return _rows_text(cfg, ["estimator", "n", "estimate"], [row])


def _adversary(ns, family):
    if ns.alpha is None:
        raise ConfigError("simulate needs --alpha")
    if ns.adversary == "least-favorable":
        if ns.lf_delta is None and ns.delta is None:
            raise ConfigError("least-favorable adversary needs --lf-delta (or --delta)")
        return CorruptionModel.least_favorable_minus(family, ns.lf_delta if ns.lf_delta is not None else ns.delta,
                                                     ns.alpha)
    if ns.adversary == "outlier":
        return CorruptionModel.mixture_outlier(family, ns.alpha, ns.offset)
    if ns.adversary == "tail-shift":
        return CorruptionModel.tail_shift(family, ns.alpha)
    raise ConfigError(f"unknown adversary {ns.adversary!r}")


def _set_estimator(cfg, ns, family):
    kind = ns.estimator
    if kind == "dro":
        if ns.r is None:
            raise ConfigError("dro estimator needs --r")
        return DroRegion(ns.r, ns.alpha, cfg.grid(family, abs(ns.offset)))
    if ns.delta is None:
        raise ConfigError(f"{kind} interval needs --delta")
    if kind == "huber":
        return HuberInterval(ns.delta, ns.alpha)
    if kind == "median":
        return MedianInterval(ns.delta)
    if kind == "mean":
        return MeanInterval(ns.delta)
    raise ConfigError(f"unknown set estimator {kind!r}")


def cmd_simulate(cfg, ns):
    family = cfg.build_family()
    model = _adversary(ns, family)
    est = _set_estimator(cfg, ns, family)
    n_list = [int(v) for v in _linspace_spec(ns.n_list, "--n-list")]
    importance = {"auto": None, "on": True, "off": False}[ns.importance]
    reports = coverage_experiment(model, est, n_list, ns.trials, cfg.seed, importance)
    if cfg.format == "json":
        slope = fit_slope(reports)
        rows = [asdict(r) for r in reports]
        return json.dumps({"schema_version": SCHEMA_VERSION, "slope": slope, "rows": rows}, indent=2) + "\n"
    buf = io.StringIO()
    write_reports_csv(reports, buf)
    return buf.getvalue()


HANDLERS = {
    "resolution": cmd_resolution,
    "radius": cmd_radius,
    "confset": cmd_confset,
    "phase": cmd_phase,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
}


# ---------------------------------------------------------------------------
# parsing


def _common(p):
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="JSON recipe supplying defaults for any option")
    g.add_argument("--family", choices=["normal", "logistic", "laplace"], help="generator (default normal)")
    g.add_argument("--table", help="CSV xi,log_density for a tabulated generator (overrides --family)")
    g.add_argument("--sigma", type=float, help="scale (default 1)")
    g.add_argument("--alpha", type=float, help="corruption level in [0, 1/2]")
    g.add_argument("--r", type=float, help="statistical resolution (decay rate)")
    g.add_argument("--delta-max", type=float, help="largest separation searched")
    g.add_argument("--grid-n", type=int, help="working grid nodes (default 4001)")
    g.add_argument("--grid-span", type=float, help="grid half-width beyond the largest shift")
    g.add_argument("--theta-grid-n", type=int, default=121, help="nodes of the location grid (confset)")
    g.add_argument("--almost-sure", action="store_true", help="almost-sure instead of worst-case quantities")
    g.add_argument("--as-grid-n", type=int, default=201, help="grid nodes for almost-sure solves")
    g.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    g.add_argument("--out", help="output file (default stdout)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--tol", type=float, help="radius bisection tolerance (default 1e-6)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-resolve", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resolution", help="resolution curve r^alpha(delta)")
    _common(p)
    p.add_argument("--delta-n", type=int, default=41, help="number of separations from 0 to --delta-max")
    p.add_argument("--lf-delta", type=float, help="instead print the least-favorable densities at this separation"
                   " (with --almost-sure, the almost-sure minimizers)")

    p = sub.add_parser("radius", help="worst-case or almost-sure radius")
    _common(p)

    p = sub.add_parser("confset", help="confidence region of an observed distribution")
    _common(p)
    p.add_argument("--data", help="CSV of observations (optional weight column)")
    p.add_argument("--mixture", help="weight@location list, e.g. 0.7@0,0.3@5")
    p.add_argument("--lf-delta", type=float, help="use the least-favorable midpoint at this separation"
                   " (with --almost-sure, the almost-sure minimizer)")
    p.add_argument("--theta-lo", type=float)
    p.add_argument("--theta-hi", type=float)

    p = sub.add_parser("phase", help="(r, alpha) phase diagram")
    _common(p)
    p.add_argument("--r-grid", default="0:2:20", help="lo:hi:n or comma list")
    p.add_argument("--alpha-grid", default="0:0.45:20", help="lo:hi:n or comma list")

    p = sub.add_parser("estimate", help="phi-estimate of a data file")
    _common(p)
    p.add_argument("--data", help="CSV of observations (optional weight column)")
    p.add_argument("--estimator", default="median", choices=["mean", "median", "generalized-mean", "huber"])
    p.add_argument("--delta", type=float, help="separation for generalized-mean and huber")
    p.add_argument("--k", type=float, help="explicit Huber clipping level")

    p = sub.add_parser("simulate", help="Monte-Carlo coverage report")
    _common(p)
    p.add_argument("--estimator", default="huber", choices=["huber", "median", "mean", "dro"])
    p.add_argument("--delta", type=float, help="interval half-width")
    p.add_argument("--adversary", default="least-favorable", choices=["least-favorable", "outlier", "tail-shift"])
    p.add_argument("--lf-delta", type=float, help="separation of the least-favorable adversary")
    p.add_argument("--offset", type=float, default=1e4, help="outlier location relative to theta*")
    p.add_argument("--n-list", default="50,100,200,400")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--importance", default="auto", choices=["auto", "on", "off"])
    return parser


def _load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items() if k not in ("description",)}


def parse(argv):
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    config = _load_config(known.config) if known.config else {}
    command = config.pop("command", None)
    if command is not None and not any(a in COMMANDS for a in argv):
        argv = [command] + argv
    parser = build_parser()
    if config:
        chosen = next((a for a in argv if a in COMMANDS), None)
        if chosen is None:
            raise ConfigError("no command given")
        subparser = parser._subparsers._group_actions[0].choices[chosen]
        dests = {a.dest for a in subparser._actions}
        unknown = sorted(set(config) - dests)
        if unknown:
            raise ConfigError(f"unknown config keys for {chosen}: {', '.join(unknown)}")
        subparser.set_defaults(**config)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        ns = parse(argv)
        cfg = RunConfig.from_namespace(ns)
        text = HANDLERS[ns.command](cfg, ns)
        _write(cfg, text)
    except SystemExit as e:
        # argparse reports usage errors with exit status 2
        return int(e.code or 0)
    except (ConfigError, OSError) + CONFIG_ERRORS as e:
        print(f"robust-resolve: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RobustResolveError as e:
        print(f"robust-resolve: solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as e:
        print(f"robust-resolve: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
