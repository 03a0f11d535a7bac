"""Experiment configuration, parameter sweeps, CSV output and summaries.

Configuration files are TOML::

    seed = 7                       # base seed; sweep point k uses seed + k
    output = "eps_out_sweep.csv"   # optional
    methods = ["closed_form", "sa"]  # closed_form | sa | oracle | simulate
    sim_slots = 1000000
    policy_file = "policy.txt"     # optional; fixed policy for "simulate"
    strict = false                 # infeasible point => nonzero exit
    record_runtime = false         # wall-clock column; breaks byte-identical reruns

    [channel]
    kind = "rayleigh"              # or "diversity", with branches = d
    rate = 1.0                     # bits/s/Hz
    noise = 1.0                    # watts

    [constraints]
    gamma = 0.2
    n_max = 1
    eps_out = 0.1
    peak_dbw = 20.0                # or peak_w; omit both for no peak limit

    [sweep]
    variable = "eps_out"           # eps_out | gamma | n_max
    values = [0.05, 0.10, 0.15]    # or start / stop / step, stop inclusive

    [sa]                           # any SaConfig field except seed
    temperature_iterations = 200

    [oracle]
    resolution = 0.005
"""
from __future__ import annotations

import csv
import dataclasses
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chain import _as_eps
from .channel import ChannelModel, dbw_to_watts, watts_to_dbw
from .closedform import LossConstraints, solve_n1
from .errors import InfeasibleError, ParameterError
from .optimizer import (
    SaConfig,
    _is_active,
    check_feasibility,
    grid_search_oracle,
    locate_eps_out_star,
    sa_optimize,
)
from .simulator import simulate_policy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "ExperimentResult",
    "CSV_HEADER",
    "load_config",
    "parse_config",
    "run_experiment",
    "write_csv",
    "read_csv",
    "report",
    "read_policy_file",
    "write_policy_file",
]

METHODS = ("closed_form", "sa", "oracle", "simulate")
SWEEP_VARIABLES = ("eps_out", "gamma", "n_max")
CSV_HEADER = (
    "sweep_var",
    "value",
    "method",
    "p_avg_w",
    "p_avg_dbw",
    "gamma_r",
    "eps_n",
    "feasible",
    "eps_n_active",
    "runtime_s",
)
_SA_FIELDS = {f.name for f in dataclasses.fields(SaConfig)} - {"seed"}


class ConfigError(ParameterError):
    """Invalid experiment configuration; ``rule`` names the broken rule."""

    def __init__(self, message, rule):
        super().__init__(f"[{rule}] {message}")
        self.rule = rule


@dataclass(frozen=True)
class ExperimentConfig:
    model: ChannelModel
    constraints: LossConstraints
    sweep_variable: str | None = None
    sweep_values: tuple = ()
    methods: tuple[str, ...] = ("sa",)
    sa: SaConfig = field(default_factory=SaConfig)
    sim_slots: int = 1_000_000
    output_path: Path | None = None
    seed: int = 0
    oracle_resolution: float = 0.005
    policy_file: Path | None = None
    strict: bool = False
    record_runtime: bool = False

    def point_constraints(self, value) -> LossConstraints:
        if self.sweep_variable is None:
            return self.constraints
        return self.constraints.replace(**{self.sweep_variable: value})


@dataclass(frozen=True)
class ResultRow:
    sweep_var: str
    value: float | int
    method: str
    p_avg_w: float
    p_avg_dbw: float
    gamma_r: float
    eps_n: float
    feasible: bool
    eps_n_active: bool
    runtime_s: float | None = None

    def __eq__(self, other):
        if not isinstance(other, ResultRow):
            return NotImplemented
        return all(_same(getattr(self, f.name), getattr(other, f.name)) for f in dataclasses.fields(self))


def _same(a, b):
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return type(a) is type(b) and a == b


@dataclass(frozen=True)
class ExperimentResult:
    rows: list[ResultRow]
    exit_status: int
    csv_path: Path | None = None


# --------------------------------------------------------------------------
# configuration


def _require(cond, message, rule):
    if not cond:
        raise ConfigError(message, rule)


def _parse_channel(raw) -> ChannelModel:
    kind = raw.get("kind", "rayleigh")
    _require(kind in ("rayleigh", "diversity"), f"unknown channel kind {kind!r}", "channel.kind")
    rate = raw.get("rate", 1.0)
    noise = raw.get("noise", 1.0)
    branches = None
    if kind == "diversity":
        _require("branches" in raw, "diversity channel needs 'branches'", "channel.branches")
        branches = raw["branches"]
    try:
        return ChannelModel(rate=rate, noise=noise, branches=branches)
    except ParameterError as exc:
        raise ConfigError(str(exc), "channel") from exc


def _parse_constraints(raw) -> LossConstraints:
    for key in ("gamma", "n_max", "eps_out"):
        _require(key in raw, f"missing constraints.{key}", f"constraints.{key}")
    _require(not ("peak_dbw" in raw and "peak_w" in raw), "give peak_dbw or peak_w, not both", "constraints.peak")
    if "peak_dbw" in raw:
        peak = dbw_to_watts(float(raw["peak_dbw"]))
    else:
        peak = float(raw.get("peak_w", math.inf))
    try:
        return LossConstraints(gamma=raw["gamma"], n_max=raw["n_max"], eps_out=raw["eps_out"], p_peak=peak)
    except ParameterError as exc:
        raise ConfigError(str(exc), "constraints") from exc


def _parse_sweep(raw):
    variable = raw.get("variable")
    _require(variable in SWEEP_VARIABLES, f"sweep.variable must be one of {SWEEP_VARIABLES}", "sweep.variable")
    if "values" in raw:
        values = list(raw["values"])
    else:
        for key in ("start", "stop", "step"):
            _require(key in raw, f"sweep needs 'values' or start/stop/step (missing {key})", "sweep.values")
        start, stop, step = (raw[k] for k in ("start", "stop", "step"))
        _require(step > 0, "sweep.step must be positive", "sweep.step")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + k * step, 12) for k in range(max(count, 0))]
        if variable == "n_max":
            values = [int(v) for v in values]
    _require(len(values) > 0, "sweep grid is empty", "sweep.values.nonempty")
    if variable == "n_max":
        _require(all(float(v).is_integer() and v >= 1 for v in values), "n_max values must be integers >= 1", "sweep.values")
        values = [int(v) for v in values]
    else:
        values = [float(v) for v in values]
    return variable, tuple(values)


def parse_config(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a parsed TOML document and build an :class:`ExperimentConfig`."""
    base_dir = base_dir or Path.cwd()
    known = {"seed", "output", "methods", "sim_slots", "policy_file", "strict", "record_runtime",
             "channel", "constraints", "sweep", "sa", "oracle"}
    unknown = sorted(set(raw) - known)
    _require(not unknown, f"unknown keys {unknown}", "config.keys")
    _require("constraints" in raw, "missing [constraints] section", "constraints")

    model = _parse_channel(raw.get("channel", {}))
    constraints = _parse_constraints(raw["constraints"])
    variable, values = (None, ())
    if "sweep" in raw:
        variable, values = _parse_sweep(raw["sweep"])

    for v in values:
        try:
            constraints.replace(**{variable: v})
        except ParameterError as exc:
            raise ConfigError(f"sweep value {v!r}: {exc}", "sweep.values.range") from exc

    methods = tuple(raw.get("methods", ["sa"]))
    _require(len(methods) > 0, "at least one method is required", "methods.nonempty")
    bad = [m for m in methods if m not in METHODS]
    _require(not bad, f"unknown methods {bad}; choose from {METHODS}", "methods.known")
    n_values = list(values) if variable == "n_max" else [constraints.n_max]
    if "closed_form" in methods:
        _require(all(n == 1 for n in n_values), "closed_form needs n_max == 1", "methods.closed_form.n_max")
    if "oracle" in methods:
        _require(all(n <= 3 for n in n_values), "oracle needs n_max <= 3", "methods.oracle.n_max")

    sa_raw = dict(raw.get("sa", {}))
    unknown_sa = sorted(set(sa_raw) - _SA_FIELDS)
    _require(not unknown_sa, f"unknown [sa] keys {unknown_sa}", "sa.keys")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int) and 0 <= seed < 2**64, "seed must be an unsigned 64-bit integer", "seed")
    try:
        sa = SaConfig(seed=seed, **sa_raw)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc), "sa") from exc

    resolution = raw.get("oracle", {}).get("resolution", 0.005)
    _require(1e-3 <= resolution < 0.5, "oracle.resolution must lie in [1e-3, 0.5)", "oracle.resolution")

    sim_slots = raw.get("sim_slots", 1_000_000)
    _require(isinstance(sim_slots, int) and sim_slots >= 1, "sim_slots must be a positive integer", "sim_slots")

    policy_file = raw.get("policy_file")
    if policy_file is not None:
        policy_file = Path(policy_file)
        if not policy_file.is_absolute():
            policy_file = base_dir / policy_file
    output = raw.get("output")
    if output is not None:
        output = Path(output)
        if not output.is_absolute():
            output = base_dir / output
    if "simulate" in methods and policy_file is None:
        _require(len(methods) > 1, "simulate needs policy_file or another method to supply a policy", "methods.simulate.policy")

    return ExperimentConfig(
        model=model,
        constraints=constraints,
        sweep_variable=variable,
        sweep_values=values,
        methods=methods,
        sa=sa,
        sim_slots=sim_slots,
        output_path=output,
        seed=seed,
        oracle_resolution=float(resolution),
        policy_file=policy_file,
        strict=bool(raw.get("strict", False)),
        record_runtime=bool(raw.get("record_runtime", False)),
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate a TOML experiment file.

    Syntax errors surface as :class:`ConfigError` with the parser's line and
    column; relative paths inside the file resolve against its directory.
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", "config.syntax") from exc
    return parse_config(raw, base_dir=path.parent)


def read_policy_file(path) -> np.ndarray:
    """One outage probability per line, ``N + 1`` lines; blank lines and ``#`` comments skipped."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError as exc:
            raise ParameterError(f"{path}:{lineno}: not a number: {text!r}") from exc
    return _as_eps(values)


def write_policy_file(path, eps) -> None:
    Path(path).write_text("".join(f"{float(e)!r}\n" for e in np.ravel(eps)))


# --------------------------------------------------------------------------
# running


def _row(config, value, method, p_avg, gamma_r, eps_n, feasible, active, runtime):
    p_avg = float(p_avg)
    dbw = float(watts_to_dbw(p_avg)) if p_avg > 0 else math.nan
    return ResultRow(
        sweep_var=config.sweep_variable or "none",
        value=value,
        method=method,
        p_avg_w=p_avg,
        p_avg_dbw=dbw,
        gamma_r=float(gamma_r),
        eps_n=float(eps_n),
        feasible=bool(feasible),
        eps_n_active=bool(active),
        runtime_s=runtime if config.record_runtime else None,
    )


def _infeasible_row(config, value, method, runtime):
    nan = math.nan
    return _row(config, value, method, nan, nan, nan, False, False, runtime)


def run_point(config: ExperimentConfig, index: int, value) -> list[ResultRow]:
    """All selected methods at one sweep point, in ``config.methods`` order."""
    constraints = config.point_constraints(value)
    seed = (config.seed + index) % 2**64
    rows = []
    policy = read_policy_file(config.policy_file) if config.policy_file else None
    for method in config.methods:
        start = time.perf_counter()
        if method == "simulate":
            if policy is None:
                rows.append(_infeasible_row(config, value, method, time.perf_counter() - start))
                continue
            stats = simulate_policy(policy, config.model, config.sim_slots, seed)
            verdict = check_feasibility(policy, constraints, config.model)
            rows.append(_row(
                config, value, method, stats.empirical_p_avg, stats.empirical_gamma_r,
                stats.empirical_eps_cond, verdict.feasible,
                _is_active(float(policy[-1]), constraints.eps_out), time.perf_counter() - start,
            ))
            continue
        try:
            if method == "closed_form":
                analysis = solve_n1(constraints, config.model)
                feasible = check_feasibility(analysis, constraints, config.model).feasible
                active = _is_active(analysis.eps_n, constraints.eps_out)
            elif method == "sa":
                res = sa_optimize(constraints, config.model, dataclasses.replace(config.sa, seed=seed))
                analysis, feasible, active = res.best_analysis, res.feasible, res.eps_n_active
            else:
                res = grid_search_oracle(constraints, config.model, config.oracle_resolution)
                analysis, feasible, active = res.best_analysis, res.feasible, res.eps_n_active
        except InfeasibleError:
            rows.append(_infeasible_row(config, value, method, time.perf_counter() - start))
            continue
        if config.policy_file is None:
            policy = analysis.eps
        rows.append(_row(
            config, value, method, analysis.p_avg, analysis.gamma_r, analysis.eps_n,
            feasible, active, time.perf_counter() - start,
        ))
    return rows


def run_experiment(config: ExperimentConfig, out=None, strict=None) -> ExperimentResult:
    """Run every method at every sweep point and write the CSV.

    ``out`` overrides ``config.output_path``; ``strict`` overrides
    ``config.strict``.  The exit status is 1 when every row is infeasible,
    or when strict and any row is infeasible.
    """
    if config.sweep_variable is None:
        raise ConfigError("run_experiment needs a [sweep] section", "sweep.required")
    rows = []
    for index, value in enumerate(config.sweep_values):
        rows.extend(run_point(config, index, value))
    strict = config.strict if strict is None else strict
    status = exit_status(rows, strict)
    path = Path(out) if out is not None else config.output_path
    if path is not None:
        write_csv(path, rows)
    return ExperimentResult(rows=rows, exit_status=status, csv_path=path)


def exit_status(rows, strict=False) -> int:
    if not rows or not any(r.feasible for r in rows):
        return 1
    if strict and not all(r.feasible for r in rows):
        return 1
    return 0


# --------------------------------------------------------------------------
# CSV


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def write_csv(path, rows) -> None:
    """Header line documents units; floats use shortest round-trip repr."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])


def _parse_bool(text):
    if text not in ("true", "false"):
        raise ParameterError(f"expected true/false, got {text!r}")
    return text == "true"


def read_csv(path) -> list[ResultRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ParameterError(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            d = dict(zip(header, rec))
            value = int(d["value"]) if d["sweep_var"] == "n_max" else float(d["value"])
            rows.append(ResultRow(
                sweep_var=d["sweep_var"],
                value=value,
                method=d["method"],
                p_avg_w=float(d["p_avg_w"]),
                p_avg_dbw=float(d["p_avg_dbw"]),
                gamma_r=float(d["gamma_r"]),
                eps_n=float(d["eps_n"]),
                feasible=_parse_bool(d["feasible"]),
                eps_n_active=_parse_bool(d["eps_n_active"]),
                runtime_s=float(d["runtime_s"]) if d["runtime_s"] else None,
            ))
    return rows


# --------------------------------------------------------------------------
# summary


def report(rows, plot_prefix=None, eps_star_rtol=2e-4) -> str:
    """Per-method summary text; optionally writes ``<prefix>_<method>.dat`` files.

    Each ``.dat`` file has two whitespace-separated columns, sweep value and
    average power in watts, for the feasible rows of that method.
    """
    rows = list(rows)
    if not rows:
        raise ParameterError("no rows to report")
    sweep_var = rows[0].sweep_var
    methods = list(dict.fromkeys(r.method for r in rows))
    lines = [f"sweep over {sweep_var}: {len(rows)} rows, methods {', '.join(methods)}"]
    if not any(r.feasible for r in rows):
        lines.append("all rows infeasible")
    for method in methods:
        mine = [r for r in rows if r.method == method]
        ok = [r for r in mine if r.feasible and math.isfinite(r.p_avg_w)]
        head = f"  {method}: {len(ok)}/{len(mine)} feasible"
        if not ok:
            lines.append(head + ", no feasible point")
            continue
        best = min(ok, key=lambda r: r.p_avg_w)
        head += f", min P_a = {best.p_avg_w:.6g} W ({best.p_avg_dbw:.4f} dBW) at {sweep_var} = {best.value}"
        lines.append(head)
        if sweep_var == "eps_out":
            star = locate_eps_out_star([r.value for r in ok], [r.p_avg_w for r in ok], rtol=eps_star_rtol)
            lines.append(f"    eps_out* ~= {star}")
        active = sum(r.eps_n_active for r in ok)
        lines.append(f"    eps_N at the eps_out bound in {active}/{len(ok)} feasible rows")
        if plot_prefix is not None:
            target = Path(f"{plot_prefix}_{method}.dat")
            with target.open("w") as fh:
                fh.write(f"# {sweep_var} p_avg_w\n")
                for r in ok:
                    fh.write(f"{_fmt(r.value)} {_fmt(r.p_avg_w)}\n")
    return "\n".join(lines)
