"""Config-driven experiment runner.

Usage::

    qfsim <experiment> --config run.json [--assert] [--out DIR] [--seed N]

Exit status: 0 success, 2 configuration error, 3 numeric guard failure,
4 acceptance-metric failure (only with ``--assert``).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import davies
from . import linops as lo
from .control import (ControlError, ControlScheme, correction_generator, effective_generator,
                      ensemble_freezing_error, run_control_ensemble)
from .filtering import (FilterError, FilterSpec, NumericGuardError, ensemble_generator)
from .lindblad import (GeneratorError, GeneratorSpec, KAPPA_TOL, laser_amplitude,
                       make_decay_generator, make_rf_generator, superop_from_generator)
from .squeeze import FOCK_TOL, SqueezeError, make_squeeze
from .stats import (coincidence_rate, extract_intervals, interval_correlation, ks_distance,
                    mean_and_stderr, run_ensemble)

EXPERIMENTS = ("master", "count", "homodyne", "lo_count", "squeezed", "control",
               "davies_oracle", "stats")
OUTPUT_KINDS = ("records", "states", "ensemble", "summary")
INITIAL_STATES = ("ground", "excited", "plus_x", "plus_y")

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_ASSERT = 0, 2, 3, 4

# 3-sigma checks on martingale means are only asserted for ensembles at least
# this large; below it the sample standard error is unreliable (often zero).
STAT_MIN_TRAJ = 1000

_SQ = math.sqrt(0.5)
PHYSICS_DEFAULTS: dict[str, Any] = {
    "omega": 1.0, "kappa_f": _SQ, "kappa_s": _SQ, "n": 0.0, "c_re": None, "c_im": 0.0,
    "phi0": 0.0, "omega_lo": 0.0, "epsilon": 0.1, "initial": None, "control_mode": None,
    "coupling": None,
}
NUMERICS_DEFAULTS: dict[str, Any] = {
    "dt": 1e-3, "T": 1.0, "tau": None, "n_traj": 100, "seed": 0, "scheme": None,
    "save_every": 1, "clicks_per_run": 10,
}
OUTPUT_DEFAULTS: dict[str, Any] = {"dir": "qfsim-out", "formats": ["records", "ensemble", "summary"]}
SECTIONS = {"physics": PHYSICS_DEFAULTS, "numerics": NUMERICS_DEFAULTS, "output": OUTPUT_DEFAULTS}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    physics: dict
    numerics: dict
    output: dict
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {"experiment": self.experiment, "physics": self.physics,
                "numerics": self.numerics, "output": self.output}


# ------------------------------------------------------------------ config


def _number(section: str, key: str, value, *, integer: bool = False, positive: bool = False,
            nonnegative: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    if integer and not float(value).is_integer():
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{section}.{key} must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{section}.{key} must be positive, got {value!r}")
    if nonnegative and value < 0:
        raise ConfigError(f"{section}.{key} must be nonnegative, got {value!r}")
    return int(value) if integer else float(value)


def _validate(cfg: ExperimentConfig) -> None:
    ph, nu, out = cfg.physics, cfg.numerics, cfg.output
    for k in ("omega", "kappa_f", "kappa_s", "n", "c_im", "phi0", "omega_lo", "epsilon"):
        ph[k] = _number("physics", k, ph[k])
    if ph["c_re"] is not None:
        ph["c_re"] = _number("physics", "c_re", ph["c_re"])
    ph["n"] = _number("physics", "n", ph["n"], nonnegative=True)
    ph["epsilon"] = _number("physics", "epsilon", ph["epsilon"], positive=True)
    total = ph["kappa_f"] ** 2 + ph["kappa_s"] ** 2
    if abs(total - 1.0) > KAPPA_TOL:
        raise ConfigError(f"normalization rule kappa_f^2 + kappa_s^2 = 1 violated ({total!r})")
    n = ph["n"]
    c = complex(ph["c_re"] if ph["c_re"] is not None else math.sqrt(n * (n + 1)), ph["c_im"])
    if abs(n * (n + 1) - abs(c) ** 2) > FOCK_TOL:
        raise ConfigError(f"Fock condition n(n+1) = |c|^2 violated: n(n+1) = {n * (n + 1)!r}, "
                          f"|c|^2 = {abs(c) ** 2!r}")
    if ph["initial"] is not None and ph["initial"] not in INITIAL_STATES:
        raise ConfigError(f"physics.initial must be one of {INITIAL_STATES}")
    if ph["control_mode"] is not None and ph["control_mode"] not in (
            "essentially_commutative", "unsqueezed_decay", "squeezed"):
        raise ConfigError(f"unknown physics.control_mode {ph['control_mode']!r}")
    if ph["coupling"] is not None and ph["coupling"] not in ("lowering", "sigma_x"):
        raise ConfigError("physics.coupling must be 'lowering' or 'sigma_x'")
    if cfg.experiment != "control" and ph["omega"] != 0 and ph["kappa_f"] == 0:
        raise ConfigError("a nonzero Rabi frequency needs kappa_f != 0")

    nu["dt"] = _number("numerics", "dt", nu["dt"], positive=True)
    nu["T"] = _number("numerics", "T", nu["T"], positive=True)
    nu["n_traj"] = _number("numerics", "n_traj", nu["n_traj"], integer=True, positive=True)
    nu["seed"] = _number("numerics", "seed", nu["seed"], integer=True, nonnegative=True)
    if nu["seed"] >= 2**64:
        raise ConfigError("numerics.seed must fit in 64 bits")
    nu["save_every"] = _number("numerics", "save_every", nu["save_every"], integer=True,
                               positive=True)
    nu["clicks_per_run"] = _number("numerics", "clicks_per_run", nu["clicks_per_run"],
                                   integer=True, positive=True)
    steps = nu["T"] / nu["dt"]
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ConfigError(f"numerics.T / numerics.dt = {steps!r} must be an integer")
    if nu["tau"] is None:
        nu["tau"] = nu["dt"]
    nu["tau"] = _number("numerics", "tau", nu["tau"], positive=True)
    m = nu["tau"] / nu["dt"]
    if abs(m - round(m)) > 1e-9 * max(1.0, m) or round(m) < 1:
        raise ConfigError(f"numerics.tau must be an integer multiple of dt (tau/dt = {m!r})")
    if nu["scheme"] not in (None, "kraus", "euler", "binned"):
        raise ConfigError("numerics.scheme must be null, 'kraus', 'euler' or 'binned'")
    if cfg.experiment in ("count", "homodyne", "lo_count", "squeezed", "control", "stats") \
            and nu["n_traj"] < 2:
        raise ConfigError("numerics.n_traj must be at least 2")

    if not isinstance(out["dir"], str):
        raise ConfigError("output.dir must be a string")
    fm = out["formats"]
    if not isinstance(fm, list) or any(f not in OUTPUT_KINDS for f in fm):
        raise ConfigError(f"output.formats must be a list drawn from {OUTPUT_KINDS}")


def parse_config_text(text: str, experiment: str | None = None) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in raw:
        if key != "experiment" and key not in SECTIONS:
            raise ConfigError(f"unknown key {key!r}")
    name = raw.get("experiment", experiment)
    if experiment is not None and name != experiment:
        raise ConfigError(f"config experiment {name!r} does not match command {experiment!r}")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    sections = {}
    for sec, defaults in SECTIONS.items():
        given = raw.get(sec, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section {sec!r} must be an object")
        for key in given:
            if key not in defaults:
                raise ConfigError(f"unknown key {sec}.{key}")
        merged = json.loads(json.dumps(defaults))
        if name == "control":
            merged.update({"omega": 0.0, "kappa_f": 0.0, "kappa_s": 1.0} if sec == "physics" else {})
        merged.update(given)
        sections[sec] = merged
    cfg = ExperimentConfig(experiment=name, raw=raw, **sections)
    _validate(cfg)
    return cfg


def parse_config(path: str | Path, experiment: str | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}")
    return parse_config_text(text, experiment)


# ------------------------------------------------------------------ output


def _f(x) -> str:
    return repr(float(x))


def state_header(d: int) -> list[str]:
    if d == 2:
        labels = ["ee", "eg", "ge", "gg"]
    else:
        labels = [f"{i}{j}" for i in range(d) for j in range(d)]
    cols = ["t"]
    for lab in labels:
        cols += [f"rho_{lab}_re", f"rho_{lab}_im"]
    return cols


def state_csv(times: np.ndarray, states: np.ndarray, d: int) -> str:
    lines = [",".join(state_header(d))]
    for t, r in zip(times, states):
        flat = np.asarray(r).reshape(d * d)
        row = [_f(t)]
        for z in flat:
            row += [_f(z.real), _f(z.imag)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def record_csv(values: np.ndarray, dt: float) -> str:
    lines = ["step,t,value"]
    for k, v in enumerate(values):
        lines.append(f"{k},{_f((k + 1) * dt)},{_f(v)}")
    return "\n".join(lines) + "\n"


def table_csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(x) if isinstance(x, (int, np.integer)) and not isinstance(x, bool)
                              else _f(x) for x in row))
    return "\n".join(lines) + "\n"


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


@dataclass
class Results:
    files: dict[str, str] = field(default_factory=dict)
    metrics: dict[str, Any] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def write_outputs(results: Results, cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Write every produced file plus ``summary.json``; returns the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for rel, text in sorted(results.files.items()):
        p = out_dir / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        written.append(p)
    if "summary" in cfg.output["formats"]:
        summary = {"experiment": cfg.experiment, "seed": cfg.numerics["seed"],
                   "version": __version__, "config": cfg.echo(), "metrics": results.metrics,
                   "checks": results.checks, "passed": results.passed}
        p = out_dir / "summary.json"
        p.write_text(json.dumps(_json_clean(summary), indent=2, sort_keys=True) + "\n")
        written.append(p)
    return written


# ------------------------------------------------------------ experiments


def _initial_state(name: str) -> np.ndarray:
    kets = {"ground": [0, 1], "excited": [1, 0], "plus_x": [1, 1], "plus_y": [1, 1j]}
    psi = np.asarray(kets[name], dtype=complex)
    return lo.ket_to_dm(psi / np.linalg.norm(psi))


def _squeeze(ph: dict):
    n = ph["n"]
    c_re = ph["c_re"] if ph["c_re"] is not None else math.sqrt(n * (n + 1))
    return make_squeeze(n, complex(c_re, ph["c_im"]))


def _rf(cfg: ExperimentConfig) -> GeneratorSpec:
    ph = cfg.physics
    return make_rf_generator(ph["omega"], ph["kappa_f"], ph["kappa_s"])


def _filter_spec(cfg: ExperimentConfig) -> FilterSpec:
    ph, nu = cfg.physics, cfg.numerics
    mode = {"count": "counting", "homodyne": "homodyne", "lo_count": "lo_counting",
            "squeezed": "squeezed", "stats": "counting"}[cfg.experiment]
    return FilterSpec(mode=mode, dt=nu["dt"], T=nu["T"], eps=ph["epsilon"], phi0=ph["phi0"],
                      omega_lo=ph["omega_lo"],
                      squeeze=_squeeze(ph) if mode == "squeezed" else None, scheme=nu["scheme"])


def _checkpoints(times: np.ndarray, T: float) -> list[int]:
    idx = []
    for frac in (0.25, 0.5, 1.0):
        i = int(np.argmin(np.abs(times - frac * T)))
        if i not in idx and i > 0:
            idx.append(i)
    return idx


def _exact_path(gen: GeneratorSpec, rho0: np.ndarray, times: np.ndarray) -> np.ndarray:
    S = superop_from_generator(gen)
    return np.stack([lo.apply(lo.mat_exp(t * S), rho0) for t in times])


def run_master(cfg: ExperimentConfig) -> Results:
    gen = _rf(cfg)
    nu = cfg.numerics
    rho0 = _initial_state(cfg.physics["initial"] or "ground")
    k = np.arange(0, int(round(nu["T"] / nu["dt"])) + 1, nu["save_every"])
    times = k * nu["dt"]
    states = _exact_path(gen, rho0, times)
    res = Results()
    res.files["master.csv"] = state_csv(times, states, gen.dim)
    tr_err = float(np.max(np.abs(np.trace(states, axis1=1, axis2=2) - 1)))
    res.metrics["max_trace_error"] = tr_err
    res.checks["trace_preserved"] = tr_err <= 1e-10
    return res


def _ensemble_outputs(res: Results, cfg: ExperimentConfig, run, d: int) -> None:
    s = run.summary
    if "ensemble" in cfg.output["formats"]:
        res.files["ensemble.csv"] = state_csv(s.times, s.mean, d)
        se = s.stderr_re + 1j * s.stderr_im
        res.files["ensemble_stderr.csv"] = state_csv(s.times, se, d)


def run_filter_experiment(cfg: ExperimentConfig) -> Results:
    gen = _rf(cfg)
    spec = _filter_spec(cfg)
    nu, fm = cfg.numerics, cfg.output["formats"]
    rho0 = _initial_state(cfg.physics["initial"] or "ground")
    X = lo.SIGMA_Z
    run = run_ensemble(spec, gen, rho0, nu["n_traj"], nu["seed"], save_every=nu["save_every"],
                       keep_records="records" in fm, keep_states="states" in fm,
                       observables=[X])
    res = Results()
    _ensemble_outputs(res, cfg, run, gen.dim)
    if run.records is not None:
        for i, rec in enumerate(run.records):
            res.files[f"records/record_{i:05d}.csv"] = record_csv(rec, nu["dt"])
    if run.states is not None:
        for i in range(run.states.shape[1]):
            st = lo.unvec(run.states[:, i, :])
            res.files[f"states/traj_{i:05d}.csv"] = state_csv(run.summary.times, st, gen.dim)
    s = run.summary
    exact = _exact_path(ensemble_generator(spec, gen), rho0, s.times)
    dev = np.abs(s.mean - exact)
    slack = 3 * s.stderr + 5 * nu["dt"]
    cps = _checkpoints(s.times, nu["T"])
    res.metrics["max_abs_deviation"] = float(dev.max())
    res.metrics["checkpoints"] = {_f(s.times[i]): float(dev[i].max()) for i in cps}
    res.checks["ensemble_mean_vs_master"] = bool(all(np.all(dev[i] <= slack[i]) for i in cps))
    for name, vals in (("martingale_sigma_z", run.martingale[0]),
                       ("innovation", run.innovation_sum)):
        m, se = mean_and_stderr(vals)
        res.metrics[name] = {"mean": m, "stderr": se}
        if nu["n_traj"] >= STAT_MIN_TRAJ:
            res.checks[name] = abs(m) <= 3 * se
    return res


def _states_outputs_unsupported(cfg: ExperimentConfig) -> None:
    if "states" in cfg.output["formats"] and cfg.experiment not in (
            "count", "homodyne", "lo_count", "squeezed"):
        raise ConfigError(f"output format 'states' is not available for {cfg.experiment}")


def _control_generator(cfg: ExperimentConfig, mode: str) -> GeneratorSpec:
    ph = cfg.physics
    coupling = ph["coupling"] or ("sigma_x" if mode == "essentially_commutative" else "lowering")
    V = lo.SIGMA_X / 2 if coupling == "sigma_x" else lo.LOWERING
    gen = make_decay_generator(ph["kappa_f"], ph["kappa_s"], V=V)
    if ph["omega"] != 0:
        if ph["kappa_f"] == 0:
            raise ConfigError("a nonzero Rabi frequency needs kappa_f != 0")
        from .lindblad import laser_modified_generator
        gen = laser_modified_generator(gen, laser_amplitude(ph["omega"], ph["kappa_f"]))
    return gen


def run_control(cfg: ExperimentConfig) -> Results:
    ph, nu = cfg.physics, cfg.numerics
    mode = ph["control_mode"] or ("squeezed" if ph["n"] > 0 else "unsqueezed_decay")
    sq = _squeeze(ph) if mode == "squeezed" else None
    if sq is not None and not sq.real_c:
        raise ConfigError("squeezed control requires real c (physics.c_im = 0)")
    scheme = ControlScheme(mode=mode, tau=nu["tau"], squeeze=sq)
    gen = _control_generator(cfg, mode)
    correction_generator(scheme, gen)
    rho0 = _initial_state(ph["initial"] or "plus_y")
    run = run_control_ensemble(scheme, gen, rho0, nu["T"], nu["dt"], nu["n_traj"], nu["seed"],
                               keep_records="records" in cfg.output["formats"])
    res = Results()
    _ensemble_outputs(res, cfg, run, gen.dim)
    res.files["freezing.csv"] = table_csv(["trajectory", "freezing_error"],
                                          [(i, e) for i, e in enumerate(run.distance_mean)])
    if run.records is not None:
        for i, rec in enumerate(run.records):
            res.files[f"records/record_{i:05d}.csv"] = record_csv(rec, nu["dt"])
    s = run.summary
    exact = _exact_path(effective_generator(scheme, gen), rho0, s.times)
    dev = np.abs(s.mean - exact)
    res.metrics["control_mode"] = mode
    res.metrics["ensemble_freezing_error"] = ensemble_freezing_error(run, rho0)
    m, se = mean_and_stderr(run.distance_mean)
    res.metrics["mean_run_freezing_error"] = {"mean": m, "stderr": se}
    res.metrics["tracking_deviation_at_T"] = float(dev[-1].max())
    res.checks["tracks_effective_generator"] = bool(
        np.all(dev[-1] <= 3 * s.stderr[-1] + 5 * nu["dt"]))
    return res


def run_davies_oracle(cfg: ExperimentConfig) -> Results:
    ph, nu = cfg.physics, cfg.numerics
    p = davies.RFParams.from_rabi(ph["omega"], ph["kappa_f"], ph["kappa_s"])
    gen = _rf(cfg)
    rho0 = _initial_state(ph["initial"] or "ground")
    res = Results()
    T = nu["T"]
    probs = davies.click_number_probabilities(p, T, 8, rho0)
    res.files["click_numbers.csv"] = table_csv(["k", "probability"],
                                               [(k, q) for k, q in enumerate(probs)])
    ident = {}
    for t in (0.1, 1.0, 5.0):
        a = lo.mat_exp(t * davies.full_generator(p))
        b = lo.mat_exp(t * superop_from_generator(gen))
        ident[_f(t)] = float(np.max(np.abs(a - b)))
    res.metrics["generator_identity"] = ident
    res.checks["generator_identity"] = max(ident.values()) <= 1e-10
    total = davies.normalization_sum(p, T, 8, rho0, seed=nu["seed"])
    res.metrics["normalization_sum"] = total
    res.metrics["click_number_total"] = float(probs.sum())
    res.checks["normalization"] = 0.9999 <= total <= 1.0001
    if p.z != 0:
        xs = np.linspace(0.0, min(davies.x_max(p), 20.0), 401)
        F = davies.waiting_time_cdf(p, xs)
        F1 = davies.waiting_time_cdf(p, xs, first=True, rho0=rho0)
        res.files["waiting_cdf.csv"] = table_csv(["x", "cdf", "cdf_first"], zip(xs, F, F1))
    return res


def run_stats(cfg: ExperimentConfig) -> Results:
    ph, nu = cfg.physics, cfg.numerics
    gen = _rf(cfg)
    spec = _filter_spec(cfg)
    p = davies.RFParams.from_rabi(ph["omega"], ph["kappa_f"], ph["kappa_s"])
    rho0 = _initial_state(ph["initial"] or "ground")
    # runs continue past T until each has clicks_per_run clicks, so no interval is
    # censored by the end of the window
    run = run_ensemble(spec, gen, rho0, nu["n_traj"], nu["seed"],
                       until_clicks=nu["clicks_per_run"])
    sample = extract_intervals(run.click_times)
    res = Results()
    res.files["intervals.csv"] = table_csv(
        ["trajectory", "first", "interval"],
        [(int(j), int(f), x) for j, f, x in zip(sample.trajectory, sample.first, sample.intervals)])
    m = sample.subsequent.size
    res.metrics["subsequent_intervals"] = m
    if m >= 2 and p.z != 0:
        xs, F = davies.cdf_table(p)
        ks = ks_distance(sample, lambda x: np.interp(x, xs, F))
        zmax = float(np.max(davies.waiting_time_density(p, np.linspace(0, 10, 201))))
        bound = 1.63 / math.sqrt(m) + zmax * nu["dt"]
        res.metrics["ks_distance"] = ks
        res.metrics["ks_bound"] = bound
        res.checks["ks"] = ks < bound
        try:
            r = interval_correlation(sample)
            pairs = int(np.count_nonzero(
                (sample.trajectory[1:] == sample.trajectory[:-1]) & ~sample.first[1:]
                & ~sample.first[:-1]))
            res.metrics["interval_correlation"] = r
            res.checks["independence"] = abs(r) < 3 / math.sqrt(pairs)
        except ValueError:
            res.metrics["interval_correlation"] = None
    rates = {k: coincidence_rate(run.click_times, k * nu["dt"], nu["dt"]) for k in (2, 4)}
    res.metrics["coincidence_rate"] = {f"{k}dt": v for k, v in rates.items()}
    res.metrics["coincidence_ratio_4_to_2"] = rates[4] / rates[2] if rates[2] > 0 else None
    return res


RUNNERS: dict[str, Callable[[ExperimentConfig], Results]] = {
    "master": run_master,
    "count": run_filter_experiment,
    "homodyne": run_filter_experiment,
    "lo_count": run_filter_experiment,
    "squeezed": run_filter_experiment,
    "control": run_control,
    "davies_oracle": run_davies_oracle,
    "stats": run_stats,
}


def run_experiment(cfg: ExperimentConfig) -> Results:
    _states_outputs_unsupported(cfg)
    return RUNNERS[cfg.experiment](cfg)


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qfsim", description="Quantum filtering experiments.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--assert", dest="check", action="store_true",
                    help="exit with status 4 when an acceptance metric fails")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, help="master seed (overrides numerics.seed)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.experiment)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.numerics["seed"] = args.seed
        if args.out is not None:
            cfg.output["dir"] = args.out
        results = run_experiment(cfg)
    except (ConfigError, GeneratorError, SqueezeError, ControlError, davies.DaviesError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericGuardError as exc:
        print(f"numeric guard failure: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except FilterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(cfg.output["dir"])
    write_outputs(results, cfg, out_dir)
    for name, ok in sorted(results.checks.items()):
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    print(f"wrote {out_dir}")
    if args.check and not results.passed:
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
