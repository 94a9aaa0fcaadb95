#!/usr/bin/env python3
"""Command-line surface: one subcommand per computation, CSV or JSON out."""

import argparse
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from analyzer import ResultAnalyzer
from batch import BatchProcessor
from config_manager import CONFIG_DEFAULTS, ConfigError, ConfigurationManager, parse_grid
from logger import run_logger
from meanfield import AXIS_ORDER, branch_summary, classify_region, phase_diagram, solve_steady_states, sweep_detuning
from model_core import (
    DomainError,
    ModelParams,
    NoCriticalCouplingError,
    NumericalError,
    ScaledParams,
    epsilon_crit,
    eta_critical,
    lambda_critical,
    photon_numbers_eta1,
    unscale_params,
)
from output import OUTPUT_FORMATS, ResultTable, render_csv, render_json, write_diagnostic, write_tables
from quantum import QGridSpec, photon_sweep, q_function, steady_state
from quasienergy import (
    bogoliubov_residual,
    capital_lambda,
    default_truncation,
    quasienergies,
    verify_quasienergy,
)
from trajectories import DetuningScan, trajectory_ensemble

SUBCOMMANDS = ("critical", "steady", "sweep", "phase-diagram", "quasi", "spectrum", "traj", "qfunc")

DETUNING_AXES = ("delta", "delta_bar", "delta_over_lambda")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


@dataclass(frozen=True)
class GridSpec:
    axis: str
    start: float
    end: float
    count: int

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.end, self.count)]


@dataclass
class RunConfig:
    subcommand: str
    lam: float = CONFIG_DEFAULTS["lambda"]
    eta: float = CONFIG_DEFAULTS["eta"]
    delta: float = CONFIG_DEFAULTS["delta"]
    delta0: Optional[float] = CONFIG_DEFAULTS["delta0"]
    kappa: float = CONFIG_DEFAULTS["kappa"]
    epsilon: float = CONFIG_DEFAULTS["epsilon"]
    n_systems: int = CONFIG_DEFAULTS["n_systems"]
    scaled: bool = CONFIG_DEFAULTS["scaled"]
    format: str = CONFIG_DEFAULTS["format"]
    output: Optional[str] = CONFIG_DEFAULTS["output"]
    threads: int = CONFIG_DEFAULTS["threads"]
    seed: int = CONFIG_DEFAULTS["seed"]
    n_fock: int = CONFIG_DEFAULTS["n_fock"]
    max_fock: int = CONFIG_DEFAULTS["max_fock"]
    nmax: int = CONFIG_DEFAULTS["nmax"]
    tol: float = CONFIG_DEFAULTS["tol"]
    n_traj: int = CONFIG_DEFAULTS["n_traj"]
    duration: float = CONFIG_DEFAULTS["duration"]
    delta_start: Optional[float] = CONFIG_DEFAULTS["delta_start"]
    delta_end: Optional[float] = CONFIG_DEFAULTS["delta_end"]
    n_output: int = CONFIG_DEFAULTS["n_output"]
    q_points: int = CONFIG_DEFAULTS["q_points"]
    q_extent: Optional[float] = CONFIG_DEFAULTS["q_extent"]
    grid: Optional[GridSpec] = None
    grid_y: Optional[GridSpec] = None
    log_level: str = CONFIG_DEFAULTS["log_level"]
    log_dir: Optional[str] = CONFIG_DEFAULTS["log_dir"]
    explicit: frozenset = field(default_factory=frozenset, compare=False)

    @classmethod
    def from_mapping(cls, subcommand: str, values: dict[str, Any], explicit: Sequence[str] = ()) -> "RunConfig":
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        known = {f.name: f for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in values.items():
            name = "lam" if key == "lambda" else key
            if name not in known or name in ("subcommand", "explicit"):
                raise ConfigError(f"unknown configuration key {key!r}")
            kwargs[name] = _coerce(name, value)
        return cls(subcommand=subcommand, explicit=frozenset("lam" if k == "lambda" else k for k in explicit), **kwargs)

    def to_dict(self) -> dict[str, Any]:
        """Serializable echo; reproduces the run when fed back as a config file."""
        echo = asdict(self)
        echo.pop("explicit")
        return echo

    def model_params(self) -> ModelParams:
        delta0 = self.delta if self.delta0 is None else self.delta0
        if self.scaled:
            scaled = ScaledParams(eps_bar=self.epsilon, kappa_bar=self.kappa, delta_bar=self.delta, delta0_bar=delta0)
            return unscale_params(scaled, self.lam, self.eta, self.n_systems)
        return ModelParams(lam=self.lam, eta=self.eta, delta=self.delta, delta0=delta0,
                           kappa=self.kappa, epsilon=self.epsilon, n_systems=self.n_systems)


_INT_KEYS = {"n_systems", "threads", "seed", "n_fock", "max_fock", "nmax", "n_traj", "n_output", "q_points"}
_FLOAT_KEYS = {"lam", "eta", "delta", "delta0", "kappa", "epsilon", "tol", "duration",
               "delta_start", "delta_end", "q_extent"}


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    try:
        if name in _INT_KEYS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"not an integer: {value}")
            return int(value)
        if name in _FLOAT_KEYS:
            result = float(value)
            if not math.isfinite(result):
                raise ValueError(f"not finite: {value}")
            return result
        if name in ("grid", "grid_y"):
            if isinstance(value, GridSpec):
                return value
            if isinstance(value, dict):
                return GridSpec(**value)
            return GridSpec(**parse_grid(" ".join(str(v) for v in value)))
        if name == "scaled":
            if not isinstance(value, bool):
                raise ValueError(f"not a boolean: {value}")
            return value
        if name == "format" and value not in OUTPUT_FORMATS:
            raise ValueError(f"format must be one of {OUTPUT_FORMATS}")
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad value for {name}: {e}") from e
    return value


class ConfigArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises ConfigError instead of exiting."""

    def error(self, message: str) -> None:
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> ConfigArgumentParser:
    common = ConfigArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--lambda", type=float, dest="lambda", help="coupling lambda")
    common.add_argument("--eta", type=float, help="counter-rotating ratio eta in [0, 1]")
    common.add_argument("--delta", type=float, help="field detuning (or delta_bar with --scaled)")
    common.add_argument("--delta0", type=float, help="two-state detuning; defaults to --delta")
    common.add_argument("--kappa", type=float, help="field decay rate (or kappa_bar with --scaled)")
    common.add_argument("--epsilon", type=float, help="drive amplitude (or eps_bar with --scaled)")
    common.add_argument("--n-systems", type=int, dest="n_systems")
    common.add_argument("--scaled", action="store_true", help="read epsilon, kappa, delta, delta0 in scaled units")
    common.add_argument("--output", help="output file; stdout when omitted")
    common.add_argument("--format", choices=OUTPUT_FORMATS)
    common.add_argument("--threads", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--n-fock", type=int, dest="n_fock")
    common.add_argument("--max-fock", type=int, dest="max_fock")
    common.add_argument("--nmax", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--n-traj", type=int, dest="n_traj")
    common.add_argument("--duration", type=float)
    common.add_argument("--delta-start", type=float, dest="delta_start")
    common.add_argument("--delta-end", type=float, dest="delta_end")
    common.add_argument("--grid", nargs=4, metavar=("AXIS", "START", "END", "COUNT"))
    common.add_argument("--grid-y", nargs=4, dest="grid_y", metavar=("AXIS", "START", "END", "COUNT"))
    common.add_argument("--n-output", type=int, dest="n_output")
    common.add_argument("--q-points", type=int, dest="q_points")
    common.add_argument("--q-extent", type=float, dest="q_extent")
    common.add_argument("--log-level", dest="log_level")

    parser = ConfigArgumentParser(prog="jcrsim", description="Driven Jaynes-Cummings-Rabi model numerics")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=ConfigArgumentParser)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def parse_run_config(argv: Sequence[str]) -> RunConfig:
    """Flags override the config file, which overrides environment and defaults."""
    namespace = vars(build_parser().parse_args(list(argv)))
    subcommand = namespace.pop("subcommand")
    manager = ConfigurationManager(namespace.pop("config", None))
    merged = dict(manager.load_config())
    merged.update(namespace)
    return RunConfig.from_mapping(subcommand, merged, explicit=namespace.keys())


def _require_grid(grid: Optional[GridSpec], flag: str) -> GridSpec:
    if grid is None:
        raise ConfigError(f"this subcommand needs {flag} AXIS START END COUNT")
    return grid


def _detuning_values(grid: GridSpec, params: ModelParams) -> list[float]:
    if grid.axis not in DETUNING_AXES:
        raise ConfigError(f"detuning grids use one of {DETUNING_AXES}, got {grid.axis!r}")
    values = grid.values()
    if grid.axis == "delta_bar":
        return [v * 2.0 * epsilon_crit(params.lam, params.eta) for v in values]
    if grid.axis == "delta_over_lambda":
        return [v * params.lam for v in values]
    return values


def run_critical(config: RunConfig, params: ModelParams) -> list[ResultTable]:
    notes = []
    eta_k: Optional[float] = None
    lam_pair: tuple[Optional[float], Optional[float]] = (None, None)
    try:
        eta_k = eta_critical(params.kappa, params.delta)
    except DomainError as e:
        notes.append(str(e))
    try:
        lam_pair = lambda_critical(params)
    except NoCriticalCouplingError as e:
        notes.append(str(e))
    except DomainError as e:
        notes.append(str(e))
    table = ResultTable("critical", ["eps_crit", "eta_critical", "lambda_plus", "lambda_minus", "note"], [])
    table.add_row([epsilon_crit(params.lam, params.eta), eta_k, lam_pair[0], lam_pair[1], "; ".join(notes) or None])
    return [table]


def run_steady(config: RunConfig, params: ModelParams) -> list[ResultTable]:
    states = solve_steady_states(params, tol=config.tol)
    columns = ["zeta", "alpha", "beta", "photon_number", "stability", "multiplicity", "z2_partner",
               "degenerate", "phase", "residual_poly", "residual_conservation"]
    table = ResultTable("steady", columns, [], meta={
        "regime": states.regime,
        "region": f"R{len(states.branches)}",
        "degeneracies": "; ".join(states.degeneracies) or None,
    })
    for branch in states.branches:
        summary = branch_summary(branch, params)
        table.add_row([summary[c] for c in columns])
    if abs(params.eta - 1.0) < 1e-12 and params.kappa > 0:
        numbers = photon_numbers_eta1(params)
        table.meta["strong_coupling_photons"] = f"{numbers[0]:.17g} {numbers[1]:.17g}"
    return [table]


def run_sweep(config: RunConfig, params: ModelParams) -> list[ResultTable]:
    grid = _require_grid(config.grid, "--grid")
    deltas = _detuning_values(grid, params)
    result = sweep_detuning(params, deltas, processor=BatchProcessor(config.threads, label="sweep"))
    curves = ResultTable("sweep", ["curve_id", "delta", "zeta", "alpha", "photon_number", "stability"], [])
    for curve in result.curves:
        for index, branch in zip(curve.indices, curve.branches):
            curves.add_row([curve.curve_id, result.grid[index], branch.zeta, branch.alpha,
                            params.n_systems * branch.photon_number,
                            branch.stability.value if branch.stability else None])
    folds = ResultTable("folds", ["delta", "kind", "zeta", "curve_id"], [])
    for fold in result.folds:
        folds.add_row([fold.delta, fold.kind, fold.zeta, fold.curve_id])
    return [curves, folds]


def run_phase_diagram(config: RunConfig, params: ModelParams) -> list[ResultTable]:
    gx = _require_grid(config.grid, "--grid")
    gy = _require_grid(config.grid_y, "--grid-y")
    for g in (gx, gy):
        if g.axis not in AXIS_ORDER:
            raise ConfigError(f"phase-diagram axes are {AXIS_ORDER}, got {g.axis!r}")
    diagram = phase_diagram(params, (gx.axis, gy.axis), (gx.values(), gy.values()),
                            processor=BatchProcessor(config.threads, label="phase-diagram"))
    table = ResultTable("phase_diagram", [gx.axis, gy.axis, "n_solutions", "n_stable", "tag"], [],
                        meta={"x_axis": gx.axis, "y_axis": gy.axis})
    for y, row in zip(diagram.y_values, diagram.labels):
        for x, label in zip(diagram.x_values, row):
            table.add_row([x, y, label.n_solutions, label.n_stable, label.tag])
    return [table]


def run_quasi(config: RunConfig, params: ModelParams) -> list[ResultTable]:
    levels = quasienergies(params, config.nmax)
    big_lambda = capital_lambda(params)
    verifiable = big_lambda > 0 and params.eta < 1.0
    table = ResultTable("quasi", ["n", "branch", "energy", "residual", "overlap", "bogoliubov_residual"], [],
                        meta={"Lambda": big_lambda})
    for level in levels:
        residual = overlap = condition = None
        if verifiable:
            trunc = config.n_fock if "n_fock" in config.explicit else default_truncation(config.nmax, params)
            check = verify_quasienergy(level, params, trunc)
            residual, overlap = check.residual, check.overlap
            condition = bogoliubov_residual(params, level) if level.n > 0 else None
        table.add_row([level.n, level.branch, level.energy, residual, overlap, condition])
    return [table]


def run_spectrum(config: RunConfig, params: ModelParams) -> list[ResultTable]:
    grid = _require_grid(config.grid, "--grid")
    deltas = _detuning_values(grid, params)
    curve = photon_sweep(params, deltas, n_fock=config.n_fock, tol=config.tol, max_fock=config.max_fock,
                         processor=BatchProcessor(config.threads, label="spectrum"))
    table = ResultTable("spectrum", ["delta", "photon_number", "field_amplitude", "inversion", "n_fock"], [])
    for row in zip(curve.deltas, curve.photon_number, curve.field_amplitude, curve.inversion, curve.n_fock_used):
        table.add_row(list(row))

    peaks = ResultAnalyzer().find_photon_peaks(curve.deltas, curve.photon_number)
    table.meta["peaks"] = " ".join(f"{p.delta:.17g}" for p in peaks) or None
    return [table]


def run_traj(config: RunConfig, params: ModelParams) -> list[ResultTable]:
    start = params.delta if config.delta_start is None else config.delta_start
    end = start if config.delta_end is None else config.delta_end
    scan = DetuningScan(start, end, config.duration)
    seeds = list(range(config.seed, config.seed + config.n_traj))
    ensemble = trajectory_ensemble(params, scan, config.n_traj, seeds, n_fock=config.n_fock,
                                   n_output=config.n_output,
                                   processor=BatchProcessor(config.threads, label="trajectories"))

    curves = ResultTable("traj", ["time", "kappa_time", "delta", "photon_number", "photon_stderr", "field_amplitude"],
                         [], meta={"time_units": "inverse rate units; kappa_time = kappa * time"})
    for row in zip(ensemble.times, ensemble.detuning_schedule, ensemble.mean_photon,
                   ensemble.stderr_photon, ensemble.mean_field):
        t = float(row[0])
        curves.add_row([t, params.kappa * t, float(row[1]), float(row[2]), float(row[3]), complex(row[4])])

    summary = ResultTable("jumps", ["seed", "n_jumps", "step_halvings", "first_jump", "last_jump"], [])
    for record in ensemble.records:
        summary.add_row([record.seed, record.n_jumps, record.step_halvings,
                         record.jump_times[0] if record.jump_times else None,
                         record.jump_times[-1] if record.jump_times else None])
    return [curves, summary]


def run_qfunc(config: RunConfig, params: ModelParams) -> list[ResultTable]:
    rho = steady_state(params, config.n_fock, config.tol, config.max_fock)
    grid = q_function(rho, QGridSpec(points=config.q_points, extent=config.q_extent))
    table = ResultTable("qfunc", ["alpha_re", "alpha_im", "q"], [], meta={
        "extent": grid.extent,
        "coverage_ok": grid.coverage_ok,
        "normalization": grid.normalization(),
        "photon_number": rho.photon_number(),
        "n_fock": rho.n_fock,
    })
    for i, im in enumerate(grid.alpha_im):
        for j, re in enumerate(grid.alpha_re):
            table.add_row([float(re), float(im), float(grid.q_values[i, j])])
    return [table]


HANDLERS: dict[str, Callable[[RunConfig, ModelParams], list[ResultTable]]] = {
    "critical": run_critical,
    "steady": run_steady,
    "sweep": run_sweep,
    "phase-diagram": run_phase_diagram,
    "quasi": run_quasi,
    "spectrum": run_spectrum,
    "traj": run_traj,
    "qfunc": run_qfunc,
}


def run(config: RunConfig) -> int:
    """Execute one subcommand; returns the process exit status."""
    run_logger.set_level(config.log_level)
    if config.log_dir:
        run_logger.attach_log_dir(config.log_dir)
    run_logger.clear_events()
    echo = config.to_dict()
    try:
        if config.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {config.threads}")
        params = config.model_params()
        tables = HANDLERS[config.subcommand](config, params)
    except (ConfigError, DomainError) as e:
        print(f"jcrsim: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, ArithmeticError) as e:
        events = run_logger.get_numerical_events()
        output = Path(config.output) if config.output else None
        target = write_diagnostic(output, e, echo, events)
        print(f"jcrsim: numerical failure: {e}" + (f" (diagnostics in {target})" if target else ""), file=sys.stderr)
        return EXIT_NUMERICAL

    if config.output:
        written = write_tables(tables, Path(config.output), config.format, echo)
        run_logger.log_with_context("INFO", "results written", {"files": [str(p) for p in written]})
    else:
        render = render_csv if config.format == "csv" else render_json
        for table in tables:
            sys.stdout.write(render(table, echo))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_run_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as e:
        print(f"jcrsim: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
