"""Command-line front end.

    disguised-qbd stability --config cfg.json
    disguised-qbd solve     --config cfg.json --out metrics.csv
    disguised-qbd simulate  --config cfg.json --out traj.csv
    disguised-qbd sweep     --config cfg.json --out sweep.csv
    disguised-qbd validate  --config cfg.json --out report.json

The config is one JSON object.  Model rates ``lambda_c``, ``mu``,
``lambda_s`` and ``mu_s`` are required (``lambda_s``/``mu_s`` may be lists of
per-level rates whose last entry repeats); everything else has a default,
see ``DEFAULTS``.  Exit codes: 0 success, 1 config error, 2 analytic solve
refused because the queue is unstable, 3 ``stability`` found it unstable.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
import io
import itertools
import json
import math
from pathlib import Path
import sys

import numpy as np

from . import metrics as _metrics
from . import oracle as _oracle
from . import reference
from .errors import ConfigError, InstabilityError, NearInstabilityError
from .model import EVENT_NAMES, ModelParams
from .qbd import solve
from .simulator import SimConfig, run, sample_on_grid
from .stability import ergodicity

EXIT_OK, EXIT_CONFIG, EXIT_REFUSED, EXIT_UNSTABLE = 0, 1, 2, 3

REQUIRED = ("lambda_c", "mu", "lambda_s", "mu_s")
DEFAULTS = {
    "K": 3,
    "r_tol": 1e-12,
    "boundary_tol": 1e-9,
    "tail_tol": 1e-12,
    "max_level": None,
    "seed": 1,
    "horizon": 1e6,
    "warmup": None,
    "grid_step": None,
    "jobs": 1,
    "sweep": None,
    "format": "csv",
    "out": None,
}
SWEEPABLE = ("lambda_c", "mu", "lambda_s", "mu_s", "K")


def load_config(path=None, overrides=None):
    """Merge the JSON file, defaults and command-line overrides; validate."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    # long-form aliases
    for alias, name in (("server_arrival", "lambda_s"), ("server_departure", "mu_s")):
        if alias in raw:
            raw.setdefault(name, raw.pop(alias))

    unknown = set(raw) - set(REQUIRED) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    cfg = {**DEFAULTS, **raw}
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value

    sweep = cfg["sweep"]
    if sweep is not None:
        if not isinstance(sweep, dict) or not sweep:
            raise ConfigError("sweep must be an object mapping a parameter name to a list of values")
        for name, values in sweep.items():
            if name not in SWEEPABLE:
                raise ConfigError(f"sweep field {name!r} is not a model parameter ({', '.join(SWEEPABLE)})")
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep values for {name!r} must be a non-empty list")

    swept = set(sweep or ())
    for name in REQUIRED:
        if name not in cfg and name not in swept:
            raise ConfigError(f"missing required field {name!r}")

    for name in ("r_tol", "boundary_tol", "tail_tol"):
        if not _positive(cfg[name]):
            raise ConfigError(f"{name} must be a positive number")
    if not _positive(cfg["horizon"]):
        raise ConfigError("horizon must be a positive number")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be 'csv' or 'json'")
    if cfg["max_level"] is not None and (not isinstance(cfg["max_level"], int) or cfg["max_level"] < 1):
        raise ConfigError("max_level must be a positive integer")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0 or cfg["seed"] >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if sweep is None:
        model_params(cfg)
    return cfg


def _positive(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) and x > 0


def model_params(cfg, **point):
    values = {**{k: cfg.get(k) for k in REQUIRED + ("K",)}, **point}
    try:
        return ModelParams(
            lambda_c=values["lambda_c"],
            mu=values["mu"],
            server_arrival=values["lambda_s"],
            server_departure=values["mu_s"],
            K=values["K"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc


def sim_config(cfg, run_index=0):
    try:
        return SimConfig(
            seed=cfg["seed"],
            horizon=float(cfg["horizon"]),
            warmup=cfg["warmup"],
            sample_grid=cfg["grid_step"],
            run_index=run_index,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ----------------------------------------------------------------- output


def fmt(value):
    """Render one CSV cell; floats use 17 significant digits so they round-trip."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return format(float(value), ".17g")
    return str(value)


def write_csv(rows, columns, path=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    _emit(buf.getvalue(), path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path=None):
    _emit(json.dumps(_jsonable(obj), indent=2) + "\n", path)


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, newline="\n")


def _sibling(path, suffix):
    p = Path(path)
    return p.with_name(p.stem + suffix)


# ---------------------------------------------------------------- commands


def cmd_stability(cfg):
    params = model_params(cfg)
    rep = ergodicity(params)
    pi = ", ".join(f"{x:.6f}" for x in rep.pi_A)
    print(f"rho_c     = {rep.rho_c:.6g}")
    print(f"rho_s     = {rep.rho_s:.6g}")
    print(f"pi_A      = ({pi})")
    print(f"threshold = {rep.threshold:.6g}")
    print("stable" if rep.stable else "unstable")
    if cfg["out"]:
        write_json(rep.as_dict(), cfg["out"])
    return EXIT_OK if rep.stable else EXIT_UNSTABLE


def solve_record(params, cfg):
    """Analytic and oracle results for one parameter set, as a flat dict."""
    ss = solve(params, r_tol=cfg["r_tol"], boundary_tol=cfg["boundary_tol"])
    m = _metrics.compute(ss, params)
    sol = _oracle.solve_truncated(params, tail_tol=cfg["tail_tol"], max_level=cfg["max_level"])
    om = _oracle.oracle_metrics(sol)
    gap = _oracle.compare(ss, sol)
    return ss, m, sol, om, gap


def cmd_solve(cfg):
    params = model_params(cfg)
    try:
        ss, m, sol, om, gap = solve_record(params, cfg)
    except InstabilityError as exc:
        print(f"analytic solve refused: {exc}", file=sys.stderr)
        write_json(exc.report.as_dict(), None)
        return EXIT_REFUSED

    rows = []
    for n, p in enumerate(ss.boundary):
        for k, x in enumerate(p):
            rows.append({"quantity": f"pi_{n}_{k}", "analytic": x, "oracle": sol.level(n)[k]})
    for i, j in itertools.product(range(ss.R.shape[0]), repeat=2):
        rows.append({"quantity": f"R_{i}_{j}", "analytic": ss.R[i, j]})
    for name, key in (
        ("E_L", "expected_total_length"),
        ("E_Ln", "expected_customers_waiting"),
        ("E_W", "expected_wait"),
        ("E_L_over_lambda_c", "total_length_per_arrival"),
        ("Pi_w", "delay_probability"),
    ):
        rows.append({"quantity": name, "analytic": getattr(m, key), "oracle": getattr(om, key)})
    rows += [
        {"quantity": "alpha", "analytic": ss.alpha},
        {"quantity": "r_iterations", "analytic": ss.r_iterations},
        {"quantity": "r_residual", "analytic": ss.r_residual},
        {"quantity": "oracle_max_level", "oracle": sol.max_level},
        {"quantity": "oracle_tail_mass", "oracle": sol.tail_mass},
        {"quantity": "oracle_residual", "oracle": sol.residual},
        {"quantity": "max_abs_pi_gap", "analytic": gap.max_diff, "oracle": gap.max_diff},
    ]
    print(
        f"E(L)={m.expected_total_length:.10g}  E(Ln)={m.expected_customers_waiting:.10g}  "
        f"E(W)={m.expected_wait:.10g}  Pi_w={m.delay_probability:.10g}  "
        f"|pi_geo - pi_oracle|max={gap.max_diff:.3g}",
        file=sys.stderr,
    )
    if cfg["format"] == "json":
        write_json({
            "params": _params_dict(params),
            "pi": [p for p in ss.boundary],
            "R": ss.R,
            "alpha": ss.alpha,
            "r_iterations": ss.r_iterations,
            "r_residual": ss.r_residual,
            "analytic": m.as_dict(),
            "oracle": {**om.as_dict(), "max_level": sol.max_level, "tail_mass": sol.tail_mass,
                       "residual": sol.residual},
            "max_abs_pi_gap": gap.max_diff,
        }, cfg["out"])
    else:
        write_csv(rows, ("quantity", "analytic", "oracle"), cfg["out"])
    return EXIT_OK


def _params_dict(params):
    return {
        "lambda_c": params.lambda_c,
        "mu": params.mu,
        "lambda_s": list(params.server_arrival) if len(params.server_arrival) > 1 else params.lambda_s,
        "mu_s": list(params.server_departure) if len(params.server_departure) > 1 else params.mu_s,
        "K": params.K,
    }


TRAJECTORY_COLUMNS = ("time", "n_customers", "k_servers", "total", "event_kind")


def trajectory_rows(traj):
    s = traj.initial_state
    yield {"time": 0.0, "n_customers": s.n, "k_servers": s.k, "total": s.n + s.k, "event_kind": "initial"}
    for t, n, k, kind in traj.events():
        yield {"time": t, "n_customers": n, "k_servers": k, "total": n + k, "event_kind": kind}


def cmd_simulate(cfg):
    params = model_params(cfg)
    scfg = sim_config(cfg)
    traj, est = run(params, scfg, record=True)
    out = cfg["out"]
    write_csv(trajectory_rows(traj), TRAJECTORY_COLUMNS, out)
    if scfg.sample_grid:
        grid = sample_on_grid(traj, scfg.sample_grid)
        rows = [dict(zip(("time", "n_customers", "k_servers", "total"), r)) for r in grid.tolist()]
        write_csv(rows, TRAJECTORY_COLUMNS[:4], _sibling(out, ".grid.csv") if out else None)
    summary = {"params": _params_dict(params), "seed": scfg.seed, "horizon": scfg.horizon,
               "warmup": scfg.warmup, "events": len(traj), **est.as_dict()}
    if out:
        write_json(summary, _sibling(out, ".estimates.json"))
    else:
        write_json(summary, None)
    return EXIT_OK


SWEEP_COLUMNS = (
    "lambda_c", "mu", "lambda_s", "mu_s", "K", "stable", "threshold",
    "E_L", "E_Ln", "E_W", "E_L_over_lambda_c", "Pi_w",
    "sim_E_L", "sim_E_L_se", "sim_E_n", "sim_E_k", "sim_E_Ln", "sim_E_Ln_se", "sim_E_W",
    "sim_Pi_w", "sim_Pi_w_se", "sim_Pi_w_physical", "seed", "run_index", "horizon",
)


def sweep_points(cfg):
    names = list(cfg["sweep"])
    for values in itertools.product(*(cfg["sweep"][n] for n in names)):
        yield dict(zip(names, values))


def _sweep_row(cfg, index, point):
    params = model_params(cfg, **point)
    rep = ergodicity(params) if params.tail_start <= params.K else None
    row = _params_dict(params)
    row["lambda_s"] = fmt(params.lambda_s) if len(params.server_arrival) == 1 else json.dumps(list(params.server_arrival))
    row["mu_s"] = fmt(params.mu_s) if len(params.server_departure) == 1 else json.dumps(list(params.server_departure))
    row.update(stable=rep.stable if rep else None, threshold=rep.threshold if rep else None)
    if rep is not None and rep.stable:
        ss = solve(params, r_tol=cfg["r_tol"], boundary_tol=cfg["boundary_tol"])
        m = _metrics.compute(ss, params)
        row.update(
            E_L=m.expected_total_length, E_Ln=m.expected_customers_waiting, E_W=m.expected_wait,
            E_L_over_lambda_c=m.total_length_per_arrival, Pi_w=m.delay_probability,
        )
    scfg = sim_config(cfg, run_index=index)
    _, est = run(params, scfg, record=False)
    row.update(
        sim_E_L=est.mean_total_length, sim_E_L_se=est.mean_total_length_se,
        sim_E_n=est.mean_customer_count, sim_E_k=est.mean_server_count,
        sim_E_Ln=est.mean_waiting_customers, sim_E_Ln_se=est.mean_waiting_customers_se,
        sim_E_W=est.mean_waiting_customers / params.lambda_c if params.lambda_c > 0 else None,
        sim_Pi_w=est.delay_fraction, sim_Pi_w_se=est.delay_fraction_se,
        sim_Pi_w_physical=est.delay_fraction_physical,
        seed=scfg.seed, run_index=index, horizon=scfg.horizon,
    )
    return row


def cmd_sweep(cfg):
    if not cfg["sweep"]:
        raise ConfigError("sweep needs a 'sweep' object, e.g. {\"mu\": [1, 2, 3]}")
    points = list(sweep_points(cfg))
    for p in points:
        model_params(cfg, **p)
    jobs = max(1, int(cfg["jobs"]))
    if jobs == 1:
        rows = [_sweep_row(cfg, i, p) for i, p in enumerate(points)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda ip: _sweep_row(cfg, *ip), enumerate(points)))
    if cfg["format"] == "json":
        write_json(rows, cfg["out"])
    else:
        write_csv(rows, SWEEP_COLUMNS, cfg["out"])
    return EXIT_OK


def validation_checks(params, cfg):
    """Solver vs oracle vs simulator agreement for one parameter set."""
    checks = []

    def check(name, ok, detail):
        checks.append({"check": name, "passed": bool(ok), "detail": detail})

    ss, m, sol, om, gap = solve_record(params, cfg)
    check("R residual <= 1e-10", ss.r_residual <= 1e-10, ss.r_residual)
    check("oracle residual <= 1e-10", sol.residual <= 1e-10, sol.residual)
    check("pi matrix-geometric vs oracle <= 1e-8", gap.max_diff <= 1e-8, gap.max_diff)
    for key in ("expected_total_length", "expected_customers_waiting", "delay_probability"):
        d = abs(getattr(m, key) - getattr(om, key))
        check(f"{key} closed form vs oracle <= 1e-8", d <= 1e-8, d)

    _, est = run(params, sim_config(cfg), record=False)
    for label, sim, se, exact in (
        ("simulated E(L)", est.mean_total_length, est.mean_total_length_se, om.expected_total_length),
        ("simulated E(Ln)", est.mean_waiting_customers, est.mean_waiting_customers_se, om.expected_customers_waiting),
        ("simulated Pi_w", est.delay_fraction, est.delay_fraction_se, om.delay_probability),
    ):
        bound = max(3 * se, 0.01 * abs(exact))
        check(f"{label} within max(3 SE, 1%)", abs(sim - exact) <= bound,
              {"simulated": sim, "se": se, "oracle": exact, "bound": bound})
    return checks


def cmd_validate(cfg):
    params = model_params(cfg)
    try:
        checks = validation_checks(params, cfg)
    except InstabilityError as exc:
        print(f"analytic solve refused: {exc}", file=sys.stderr)
        write_json(exc.report.as_dict(), None)
        return EXIT_REFUSED
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']}", file=sys.stderr)
    report = {"params": _params_dict(params), "passed": all(c["passed"] for c in checks), "checks": checks}
    if params == reference.EXAMPLE:
        dev = reference.deviation_report()
        report["reference_example"] = dev
        text = reference.render_markdown(dev)
        if cfg["out"]:
            _emit(text, _sibling(cfg["out"], ".deviations.md"))
        else:
            sys.stderr.write(text)
    write_json(report, cfg["out"])
    return EXIT_OK


COMMANDS = {
    "stability": cmd_stability,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)
    common.add_argument("--horizon", type=float)
    common.add_argument("--max-level", dest="max_level", type=int)

    parser = argparse.ArgumentParser(prog="disguised-qbd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in ("out", "format", "seed", "horizon", "max_level")}
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NearInstabilityError as exc:
        print(f"oracle failed: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
