"""Command-line experiments.

Every subcommand writes one result file (CSV or JSON, ``--out -`` for
stdout) that echoes the full effective configuration.  Exit codes: 0 on
success, 1 on runtime failure or a violated ``--max-*``/``--*-tol``
threshold, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .model import GravParams, new_state, simulate_path, zero_noise_path
from .seeding import derive_seed
from .mc import (
    EnsembleConfig,
    cycle_extreme_tails,
    fluctuation_scaling,
    hitting_time_oracle_test,
    pooled_cycles,
    run_ensemble,
    stationary_histogram,
    stationary_marginal_test,
    strong_law_estimate,
)

EXPERIMENTS = ("stationary", "strong-law", "fluctuations", "cycles", "hitting", "zero-noise", "trace")
ENSEMBLE_EXPERIMENTS = ("stationary", "strong-law", "fluctuations", "cycles", "trace")

_HELP = {
    "stationary": "Check that (V, S-X) settles to the product law N(-g, 1/2) x Exp(2g): "
                  "KS distances of both marginals and the first moments.",
    "strong-law": "Check that X_t/t and S_t/t tend to -g, and the exact residual identity "
                  "X_t - (B_t - g t) = X_0 + V_0 - V_t.",
    "fluctuations": "Check that running maxima grow like sqrt(log t) for V and like "
                    "log(t)/(2g) for the gap S-X.",
    "cycles": "Split paths at renewals (V = -g with S = X after an excursion of |V+g|) and "
              "fit the decay rates of per-cycle extremes: exp(-a^2) for V, exp(-2 g r) for the gap.",
    "hitting": "Check first passages of B_t + m t to level a against the closed-form density "
               "and the hitting probability exp(m a - |m a|).",
    "zero-noise": "Compare the noiseless simulation with the closed form V_t = -g + (V_0+g) e^{-t} "
                  "after landing.",
    "trace": "Dump one raw trajectory (t, x, s, v, l, b).",
}

# defaults reproduce the acceptance protocols, thresholds included
_DEFAULT_HORIZON = {"trace": 1.0, "zero-noise": 10.0, "hitting": 200.0}
_DEFAULT_PATHS = {"trace": 1, "strong-law": 1}


@dataclass
class ExperimentSpec:
    name: str
    config: Optional[EnsembleConfig]
    options: Dict[str, Any]
    output_path: str = "-"
    output_format: str = "csv"
    thresholds: Dict[str, float] = field(default_factory=dict)
    workers: int = 1

    def echo(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"experiment": self.name}
        if self.config is not None:
            out.update(self.config.to_dict())
        out.update(self.options)
        out.update(self.thresholds)
        out["workers"] = self.workers
        out["format"] = self.output_format
        return out


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p: argparse.ArgumentParser, name: str) -> None:
    p.add_argument("--g", type=float, default=1.0, help="gravitational acceleration (> 0)")
    p.add_argument("--dt", type=float, default=1e-3, help="time step")
    p.add_argument("--horizon", type=float, default=_DEFAULT_HORIZON.get(name, 1e4))
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--stride", type=float, default=0.1 if name == "trace" else 1.0,
                   help="time between recorded samples (whole number of steps)")
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    if name in ENSEMBLE_EXPERIMENTS:
        p.add_argument("--paths", type=int, default=_DEFAULT_PATHS.get(name, 64))
        p.add_argument("--burn-in", type=float, default=None,
                       help="default 100 * max(1/g, 1)")
        p.add_argument("--gap-tol", type=float, default=None, help="default 10 * sqrt(dt)")
        p.add_argument("--a0", type=float, default=None, help="renewal parameter, > g; default g + 1")
        p.add_argument("--excursion", type=float, default=None,
                       help="|V+g| amplitude arming a renewal; default a0 + 2")
        p.add_argument("--scheme", choices=("bridge", "projection"), default="bridge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inertgrav",
        description="Inert particle under gravity pushed by reflected Brownian motion.",
    )
    sub = parser.add_subparsers(dest="experiment", metavar="EXPERIMENT", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        _common(p, name)
        if name == "stationary":
            p.add_argument("--max-ks", type=float, default=0.02,
                           help="fail unless both KS distances are below this")
            p.add_argument("--mean-tol", type=float, default=0.01,
                           help="allowed error of mean V and mean H")
            p.add_argument("--var-tol", type=float, default=0.02, help="allowed error of Var V")
            p.add_argument("--bins", type=int, default=50)
        elif name == "strong-law":
            p.add_argument("--max-ratio-dev", type=float, default=0.05,
                           help="allowed |X_T/T + g| and |S_T/T + g|")
            p.add_argument("--identity-tol", type=float, default=1e-9,
                           help="allowed absolute error of the residual identity")
        elif name == "fluctuations":
            p.add_argument("--checkpoints", type=_floats, default=None,
                           help="comma-separated times; default decades up to the horizon")
            p.add_argument("--slope-tol", type=float, default=0.2,
                           help="allowed error of the gap slope against 1/(2g)")
        elif name == "cycles":
            p.add_argument("--v-levels", type=_floats, default=_floats("2,2.25,2.5,2.75,3,3.25,3.5"))
            p.add_argument("--h-levels", type=_floats, default=_floats("1,1.25,1.5,1.75,2,2.25,2.5,2.75,3"))
            p.add_argument("--min-cycles", type=int, default=1000)
            p.add_argument("--slope-tol-v", type=float, default=0.3,
                           help="allowed error of the upper velocity slope against -1")
            p.add_argument("--slope-tol-h", type=float, default=0.4,
                           help="allowed error of the gap slope against -2g")
        elif name == "hitting":
            p.add_argument("--a", type=float, default=1.0, help="level (non-zero)")
            p.add_argument("--m", type=float, default=-1.0, help="drift")
            p.add_argument("--bins", type=int, default=30)
            p.add_argument("--bridge", action=argparse.BooleanOptionalAction, default=True)
            p.add_argument("--n", type=int, default=100000, help="number of paths")
            p.add_argument("--max-hit-dev", type=float, default=0.005,
                           help="allowed |hit fraction - exp(m a - |m a|)|")
            p.add_argument("--alpha", type=float, default=0.01,
                           help="fail when the chi-square p-value is below this")
        elif name == "zero-noise":
            p.add_argument("--v0", type=float, default=0.0)
            p.add_argument("--h0", type=float, default=0.0)
            p.add_argument("--max-error", type=float, default=None, help="default 5 * dt")
    return parser


_THRESHOLD_KEYS = ("max_ks", "mean_tol", "var_tol", "max_ratio_dev", "identity_tol", "slope_tol",
                   "slope_tol_v", "slope_tol_h", "max_hit_dev", "alpha", "max_error")


def parse_args(argv: Sequence[str]) -> ExperimentSpec:
    """Parse a command line; usage errors exit with status 2."""
    parser = build_parser()
    ns = parser.parse_args(list(argv))
    name = ns.experiment
    args = vars(ns).copy()
    args.pop("experiment")
    fail = parser.error
    if not (math.isfinite(ns.g) and ns.g > 0):
        fail("--g must be positive")
    if not (math.isfinite(ns.dt) and ns.dt > 0):
        fail("--dt must be positive")
    if not (math.isfinite(ns.horizon) and ns.horizon >= ns.dt):
        fail("--horizon must be at least --dt")
    if ns.workers < 1:
        fail("--workers must be >= 1")
    thresholds = {k: args.pop(k) for k in _THRESHOLD_KEYS if k in args}
    thresholds = {k: v for k, v in thresholds.items() if v is not None}
    if name == "zero-noise" and "max_error" not in thresholds:
        thresholds["max_error"] = 5.0 * ns.dt
    out, fmt, workers = args.pop("out"), args.pop("format"), args.pop("workers")

    config = None
    if name in ENSEMBLE_EXPERIMENTS:
        try:
            config = EnsembleConfig(
                GravParams(ns.g), dt=ns.dt, horizon=ns.horizon, n_paths=ns.paths,
                # burn-in only matters for the stationary check
                master_seed=ns.seed, burn_in=ns.burn_in if name == "stationary" else (ns.burn_in or 0.0),
                sample_stride=ns.stride, gap_tol=ns.gap_tol, a0=ns.a0, excursion=ns.excursion,
                scheme=ns.scheme,
            )
        except ValueError as exc:
            fail(str(exc))
        for k in ("g", "dt", "horizon", "paths", "seed", "burn_in", "stride", "gap_tol", "a0",
                  "excursion", "scheme"):
            args.pop(k)
    else:
        stride = ns.stride / ns.dt
        if ns.stride < ns.dt or abs(stride - round(stride)) > 1e-6 * stride:
            fail("--stride must be a whole number of steps")
    if name == "hitting":
        if ns.a == 0:
            fail("--a must be non-zero")
        if ns.n < 1 or ns.bins < 1:
            fail("--n and --bins must be positive")
    if name == "zero-noise" and ns.h0 < 0:
        fail("--h0 must be non-negative")
    if name == "fluctuations":
        cps = ns.checkpoints
        if cps is None:
            top = int(math.floor(math.log10(ns.horizon) + 1e-9))
            cps = [10.0 ** k for k in range(2 if top >= 3 else 1, top + 1)] or [1.0, ns.horizon]
        if len(cps) < 2:
            fail("--checkpoints needs at least two times")
        if any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1 or cps[-1] > ns.horizon:
            fail("--checkpoints must increase within [1, horizon]")
        args["checkpoints"] = list(cps)
    return ExperimentSpec(name, config, args, out, fmt, thresholds, workers)


_FLAG_OF = {"n_paths": "paths", "master_seed": "seed", "sample_stride": "stride"}


def config_to_argv(config: Dict[str, Any]) -> List[str]:
    """Command line reproducing an echoed configuration.

    ``config_to_argv(echo)`` parsed again gives the same spec, so re-running
    it reproduces the results bitwise.
    """
    name = config["experiment"]
    argv = [name]
    for key, val in config.items():
        if key == "experiment":
            continue
        if val is None:
            if key not in _THRESHOLD_KEYS:
                continue
            val = math.inf  # JSON has no infinity; an unset threshold is echoed as null
        if key in ("v0", "h0") and name != "zero-noise":
            continue
        flag = "--" + _FLAG_OF.get(key, key).replace("_", "-")
        if isinstance(val, bool):
            argv.append(flag if val else "--no-" + flag[2:])
        elif isinstance(val, (list, tuple)):
            argv += [flag, ",".join(repr(float(v)) for v in val)]
        elif isinstance(val, float):
            argv += [flag, repr(val)]
        else:
            argv += [flag, str(val)]
    return argv


# --------------------------------------------------------------------------- output


def _num(x) -> Any:
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if not math.isfinite(x) else x
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    if isinstance(x, (list, tuple, np.ndarray)):
        return ",".join(_cell(v) for v in x)
    return str(x)


@dataclass
class Result:
    scalars: Dict[str, Any]
    columns: List[str]
    rows: List[List[Any]]
    failures: List[str] = field(default_factory=list)


def render(spec: ExperimentSpec, result: Result) -> str:
    if spec.output_format == "json":
        results = {k: _num(v) for k, v in result.scalars.items()}
        results["table"] = {"columns": result.columns, "rows": [[_num(v) for v in r] for r in result.rows]}
        doc = {"config": {k: _num(v) for k, v in spec.echo().items()}, "results": results}
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    for k, v in spec.echo().items():
        buf.write(f"# config.{k}: {_cell(v)}\n")
    for k, v in result.scalars.items():
        buf.write(f"# result.{k}: {_cell(v)}\n")
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------- runners


def _check(failures: List[str], ok: bool, what: str) -> None:
    if not ok:
        failures.append(what)


def _run_stationary(spec: ExperimentSpec) -> Result:
    cfg = spec.config
    ens = run_ensemble(cfg, spec.workers)
    rep = stationary_marginal_test(cfg, ensemble=ens)
    hist = stationary_histogram(ens, cfg.params, cfg.burn_in, bins=spec.options["bins"])
    g = cfg.params.g
    rows = []
    ve, he = hist.v_edges, hist.h_edges
    for i in range(len(ve) - 1):
        for j in range(len(he) - 1):
            rows.append([ve[i], ve[i + 1], he[j], he[j + 1], hist.empirical[i, j], hist.analytic[i, j]])
    th = spec.thresholds
    fails: List[str] = []
    if "max_ks" in th:
        _check(fails, rep.ks_v < th["max_ks"], f"ks_v={rep.ks_v:.4g} >= {th['max_ks']}")
        _check(fails, rep.ks_h < th["max_ks"], f"ks_h={rep.ks_h:.4g} >= {th['max_ks']}")
    if "mean_tol" in th:
        _check(fails, abs(rep.mean_v + g) <= th["mean_tol"], f"mean_v={rep.mean_v:.5g}")
        _check(fails, abs(rep.mean_h - 0.5 / g) <= th["mean_tol"], f"mean_h={rep.mean_h:.5g}")
    if "var_tol" in th:
        _check(fails, abs(rep.var_v - 0.5) <= th["var_tol"], f"var_v={rep.var_v:.5g}")
    scal = dict(vars(rep))
    scal.update(target_mean_v=-g, target_var_v=0.5, target_mean_h=0.5 / g)
    return Result(scal, ["v_lo", "v_hi", "h_lo", "h_hi", "empirical_density", "analytic_density"],
                  rows, fails)


def _run_strong_law(spec: ExperimentSpec) -> Result:
    cfg = spec.config
    ens = run_ensemble(cfg, spec.workers)
    g = cfg.params.g
    rows, fails = [], []
    th = spec.thresholds
    for i, s in enumerate(ens):
        r = strong_law_estimate(s)
        rows.append([i, r.horizon, r.x_over_t, r.s_over_t, r.identity_error_x, r.identity_error_s])
        if "max_ratio_dev" in th:
            _check(fails, abs(r.x_over_t + g) < th["max_ratio_dev"], f"path {i}: X_T/T={r.x_over_t:.5g}")
            _check(fails, abs(r.s_over_t + g) < th["max_ratio_dev"], f"path {i}: S_T/T={r.s_over_t:.5g}")
        if "identity_tol" in th:
            _check(fails, r.identity_error_x <= th["identity_tol"], f"path {i}: identity {r.identity_error_x:.3g}")
    arr = np.array(rows)
    scal = {"mean_x_over_t": float(arr[:, 2].mean()), "mean_s_over_t": float(arr[:, 3].mean()),
            "max_identity_error": float(arr[:, 4:].max()), "target": -g}
    return Result(scal, ["path", "horizon", "x_over_t", "s_over_t", "identity_error_x",
                         "identity_error_s"], rows, fails)


def _run_fluctuations(spec: ExperimentSpec) -> Result:
    cfg = spec.config
    rep = fluctuation_scaling(cfg, spec.options["checkpoints"], workers=spec.workers)
    g = cfg.params.g
    fails: List[str] = []
    if "slope_tol" in spec.thresholds:
        _check(fails, abs(rep.slope_h - 0.5 / g) <= spec.thresholds["slope_tol"],
               f"gap slope {rep.slope_h:.4g} vs {0.5 / g}")
    rows = [[t, a, b, c] for t, a, b, c in
            zip(rep.checkpoints, rep.median_vmax, rep.median_hmax, rep.median_vmin)]
    scal = {"slope_v": rep.slope_v, "intercept_v": rep.intercept_v, "slope_h": rep.slope_h,
            "intercept_h": rep.intercept_h, "target_slope_v": 1.0, "target_slope_h": 0.5 / g}
    return Result(scal, ["t", "median_max_v", "median_max_h", "median_min_v"], rows, fails)


def _run_cycles(spec: ExperimentSpec) -> Result:
    cfg = spec.config
    ens = run_ensemble(cfg, spec.workers)
    cycles = pooled_cycles(ens)
    o = spec.options
    if len(cycles) < o["min_cycles"]:
        raise RuntimeError(f"only {len(cycles)} renewal cycles detected (need {o['min_cycles']}); "
                           "increase --horizon/--paths or lower --excursion")
    rep = cycle_extreme_tails(cycles, o["v_levels"], o["h_levels"], cfg.params, min_cycles=o["min_cycles"])
    g = cfg.params.g
    fails: List[str] = []
    th = spec.thresholds
    if "slope_tol_v" in th:
        _check(fails, abs(rep.slope_up + 1.0) <= th["slope_tol_v"], f"upper velocity slope {rep.slope_up:.4g}")
    if "slope_tol_h" in th:
        _check(fails, abs(rep.slope_gap + 2 * g) <= th["slope_tol_h"], f"gap slope {rep.slope_gap:.4g}")
    rows = []
    for a, n1, p1, n2, p2 in zip(rep.v_levels, rep.n_up, rep.p_up, rep.n_down, rep.p_down):
        rows.append(["v_up", a, n1, p1])
        rows.append(["v_down", a, n2, p2])
    for r, n3, p3 in zip(rep.h_levels, rep.n_gap, rep.p_gap):
        rows.append(["gap", r, n3, p3])
    durations = np.array([c.duration for c in cycles])
    scal = {"n_cycles": rep.n_cycles, "mean_duration": float(durations.mean()),
            "slope_up": rep.slope_up, "slope_down": rep.slope_down, "slope_gap": rep.slope_gap,
            "target_slope_v": -1.0, "target_slope_gap": -2.0 * g}
    return Result(scal, ["tail", "level", "count", "probability"], rows, fails)


def _run_hitting(spec: ExperimentSpec) -> Result:
    o = spec.options
    rep = hitting_time_oracle_test(o["a"], o["m"], o["dt"], o["horizon"], o["n"], o["seed"],
                                   n_bins=o["bins"], bridge=o["bridge"], workers=spec.workers)
    fails: List[str] = []
    th = spec.thresholds
    if "max_hit_dev" in th:
        _check(fails, abs(rep.hit_fraction - rep.oracle_prob_inf) <= th["max_hit_dev"],
               f"hit fraction {rep.hit_fraction:.5g} vs {rep.oracle_prob_inf:.5g}")
    if "alpha" in th:
        _check(fails, rep.p_value >= th["alpha"], f"chi2 p-value {rep.p_value:.3g}")
    e = rep.bin_edges
    rows = [[e[i], e[i + 1], rep.counts[i], rep.expected[i], rep.density_hist[i], rep.density_oracle[i]]
            for i in range(len(e) - 1)]
    scal = {k: getattr(rep, k) for k in ("hit_fraction", "hit_fraction_se", "oracle_prob",
                                         "oracle_prob_inf", "truncation_bias", "chi2", "dof",
                                         "p_value", "note")}
    scal["misses"] = int(rep.counts[-1])
    scal["expected_misses"] = float(rep.expected[-1])
    return Result(scal, ["t_lo", "t_hi", "count", "expected", "density_empirical", "density_oracle"],
                  rows, fails)


def _run_zero_noise(spec: ExperimentSpec) -> Result:
    o = spec.options
    params = GravParams(o["g"])
    init = new_state(0.0, o["h0"], o["v0"])
    sim = simulate_path(init, params, o["dt"], o["horizon"], None, 1, zero_noise=True)
    exact = zero_noise_path(init, params, sim.t)
    err_v = np.abs(sim.v - exact["v"])
    err_s = np.abs(sim.s - exact["s"])
    every = int(round(o["stride"] / o["dt"]))
    rows = [[sim.t[i], sim.v[i], exact["v"][i], err_v[i], sim.s[i], exact["s"][i], err_s[i]]
            for i in range(0, len(sim), every)]
    fails: List[str] = []
    lim = spec.thresholds["max_error"]
    _check(fails, err_v.max() < lim, f"max |dV| = {err_v.max():.4g} >= {lim:.4g}")
    scal = {"max_abs_error_v": float(err_v.max()), "max_abs_error_s": float(err_s.max())}
    return Result(scal, ["t", "v_sim", "v_exact", "abs_error_v", "s_sim", "s_exact", "abs_error_s"],
                  rows, fails)


def _run_trace(spec: ExperimentSpec) -> Result:
    cfg = spec.config
    s = simulate_path(cfg.initial, cfg.params, cfg.dt, cfg.horizon, derive_seed(cfg.master_seed, 0),
                      cfg.record_stride, scheme=cfg.scheme)
    rows = [[s.t[i], s.x[i], s.s[i], s.v[i], s.l[i], s.b[i]] for i in range(len(s))]
    return Result({"n_rows": len(rows), "path_seed": derive_seed(cfg.master_seed, 0)},
                  ["t", "x", "s", "v", "l", "b"], rows)


_RUNNERS = {
    "stationary": _run_stationary,
    "strong-law": _run_strong_law,
    "fluctuations": _run_fluctuations,
    "cycles": _run_cycles,
    "hitting": _run_hitting,
    "zero-noise": _run_zero_noise,
    "trace": _run_trace,
}


def run_experiment(spec: ExperimentSpec) -> int:
    """Run `spec`, write its result file and return the exit code."""
    try:
        result = _RUNNERS[spec.name](spec)
        text = render(spec, result)
        if spec.output_path == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            with open(spec.output_path, "w", newline="") as fh:
                fh.write(text)
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"inertgrav {spec.name}: error: {exc}", file=sys.stderr)
        return 1
    if result.failures:
        for msg in result.failures:
            print(f"inertgrav {spec.name}: threshold violated: {msg}", file=sys.stderr)
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    spec = parse_args(sys.argv[1:] if argv is None else argv)
    return run_experiment(spec)


if __name__ == "__main__":
    sys.exit(main())
