#!/usr/bin/env python3
"""Quantum-jump trajectories under a linearly scanned detuning.

The unnormalized state follows H - i kappa a+a between jumps; a jump
(operator sqrt(2 kappa) a) fires when the squared norm decays to a uniform
random threshold. Times are in inverse rate units (kappa * t is dimensionless).
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from batch import BatchProcessor
from logger import run_logger
from model_core import DomainError, ModelParams, TrajectoryError
from quantum import QuantumOperators, build_operators

TRAJECTORY_SETTINGS = {
    "rtol": 1e-8,
    "atol": 1e-10,
    "norm_drop": 0.1,
    "max_halvings": 8,
    "n_output": 200,
}


@dataclass(frozen=True)
class DetuningScan:
    delta_start: float
    delta_end: float
    duration: float

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise DomainError(f"scan duration must be > 0, got {self.duration}")
        if not (math.isfinite(self.delta_start) and math.isfinite(self.delta_end)):
            raise DomainError("scan detunings must be finite")

    @classmethod
    def static(cls, delta: float, duration: float) -> "DetuningScan":
        return cls(delta, delta, duration)

    def delta_at(self, t: float) -> float:
        return self.delta_start + (self.delta_end - self.delta_start) * t / self.duration


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    detuning_schedule: np.ndarray
    photon_expect: np.ndarray
    field_expect: np.ndarray
    jump_times: list[float]
    seed: int
    n_fock: int
    step_halvings: int = 0

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)


@dataclass
class EnsembleResult:
    times: np.ndarray
    detuning_schedule: np.ndarray
    mean_photon: np.ndarray
    stderr_photon: np.ndarray
    mean_field: np.ndarray
    seeds: list[int]
    records: list[TrajectoryRecord] = field(default_factory=list)


class _JumpIntegrator:
    def __init__(self, ops: QuantumOperators, scan: DetuningScan) -> None:
        self.ops = ops
        self.scan = scan
        self.detuned = (ops.number + ops.jz_full).tocsr()
        self.damping = ops.kappa * ops.number

    def rhs(self, t: float, psi: np.ndarray) -> np.ndarray:
        return -1j * (self.ops.h_fixed @ psi + self.scan.delta_at(t) * (self.detuned @ psi)) - self.damping @ psi

    def observables(self, psi: np.ndarray) -> tuple[float, complex]:
        norm2 = np.vdot(psi, psi).real
        n = np.vdot(psi, self.ops.number @ psi).real / norm2
        a = np.vdot(psi, self.ops.a @ psi) / norm2
        return float(max(n, 0.0)), complex(a)

    def step_bound(self, psi: np.ndarray, output_dt: float) -> float:
        n, _ = self.observables(psi)
        return min(output_dt, TRAJECTORY_SETTINGS["norm_drop"] / (2.0 * self.ops.kappa * (n + 1.0)))


def mcwf_trajectory(params: ModelParams, scan: DetuningScan, seed: int, n_fock: int,
                    n_output: int = TRAJECTORY_SETTINGS["n_output"]) -> TrajectoryRecord:
    """One quantum-jump trajectory from |0>|1>, bit-reproducible from seed."""
    if params.kappa <= 0:
        raise DomainError("trajectories require kappa > 0")
    if n_output < 2:
        raise DomainError("n_output must be >= 2")

    # delta0 follows delta along the scan
    ops = build_operators(params.with_changes(delta=0.0, delta0=0.0), n_fock)
    integrator = _JumpIntegrator(ops, scan)
    rng = np.random.Generator(np.random.Philox(seed))

    grid = np.linspace(0.0, scan.duration, n_output)
    output_dt = grid[1] - grid[0]
    photons = np.zeros(n_output)
    fields = np.zeros(n_output, dtype=complex)

    psi = np.zeros(ops.dim, dtype=complex)
    psi[1] = 1.0
    t = 0.0
    next_out = 0
    threshold = rng.random()
    jumps: list[float] = []
    halvings_used = 0

    def norm_event(t: float, y: np.ndarray) -> float:
        return np.vdot(y, y).real - threshold

    norm_event.terminal = True
    norm_event.direction = -1

    while next_out < n_output:
        if t >= scan.duration:
            photons[next_out:], fields[next_out:] = integrator.observables(psi)
            break
        max_step = integrator.step_bound(psi, output_dt)
        for attempt in range(TRAJECTORY_SETTINGS["max_halvings"] + 1):
            sol = solve_ivp(integrator.rhs, (t, scan.duration), psi, method="DOP853",
                            t_eval=grid[next_out:], events=norm_event, max_step=max_step,
                            rtol=TRAJECTORY_SETTINGS["rtol"], atol=TRAJECTORY_SETTINGS["atol"])
            if sol.status >= 0:
                break
            max_step *= 0.5
            halvings_used += 1
            run_logger.log_numerical_event("trajectory step halved", {
                "seed": seed, "t": t, "max_step": max_step, "message": sol.message
            }, level="INFO")
        else:
            raise TrajectoryError(f"trajectory seed={seed} failed at t={t:.6g}: {sol.message}")

        for k in range(len(sol.t)):
            photons[next_out], fields[next_out] = integrator.observables(sol.y[:, k])
            next_out += 1

        if sol.status != 1:
            break

        t = float(sol.t_events[0][0])
        psi = sol.y_events[0][0]
        jumped = ops.a @ psi
        jump_norm = np.linalg.norm(jumped)
        if jump_norm > 0:
            psi = jumped / jump_norm
            jumps.append(t)
        else:
            psi = psi / np.linalg.norm(psi)
        threshold = rng.random()

    return TrajectoryRecord(
        times=grid,
        detuning_schedule=np.array([scan.delta_at(x) for x in grid]),
        photon_expect=photons,
        field_expect=fields,
        jump_times=jumps,
        seed=seed,
        n_fock=n_fock,
        step_halvings=halvings_used,
    )


def trajectory_ensemble(params: ModelParams, scan: DetuningScan, n_traj: int, seeds: Optional[Sequence[int]] = None,
                        n_fock: int = 40, n_output: int = TRAJECTORY_SETTINGS["n_output"],
                        processor: Optional[BatchProcessor] = None) -> EnsembleResult:
    """Per-time ensemble means with standard errors over independent seeds."""
    if n_traj < 1:
        raise DomainError(f"n_traj must be >= 1, got {n_traj}")
    seeds = list(seeds) if seeds is not None else list(range(n_traj))
    if len(seeds) != n_traj:
        raise DomainError(f"expected {n_traj} seeds, got {len(seeds)}")

    processor = processor or BatchProcessor(1, label="trajectories")
    records = processor.batch_process(lambda s: mcwf_trajectory(params, scan, s, n_fock, n_output), seeds)

    photons = np.array([r.photon_expect for r in records])
    fields = np.array([r.field_expect for r in records])
    if n_traj > 1:
        stderr = photons.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        stderr = np.zeros(photons.shape[1])
    return EnsembleResult(
        times=records[0].times,
        detuning_schedule=records[0].detuning_schedule,
        mean_photon=photons.mean(axis=0),
        stderr_photon=stderr,
        mean_field=fields.mean(axis=0),
        seeds=seeds,
        records=records,
    )
