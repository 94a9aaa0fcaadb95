#!/usr/bin/env python3
"""Quasi-energy spectrum of the resonantly driven single-system model.

At delta = delta0 = 0 the rotating-frame Hamiltonian

    H'' = lam (a s+ + a+ s-) + eta lam (a+ s+ + a s-) + eps (a+ + a)

has a discrete spectrum below the critical drive, built from squeezed and
displaced Fock states.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import expm_multiply

from cache import spectrum_cache
from logger import run_logger
from model_core import DomainError, ModelParams, SupercriticalError, require_coupling

QUASI_SETTINGS = {
    "lambda_clamp": 1e-12,
    "top_population_tol": 1e-8,
    "spurious_weight_tol": 1e-8,
    "spurious_levels": 5,
    "min_trunc": 200,
    "trunc_factor": 25,
}

DRIVE_KINDS = ("linear", "counter_rotating")


@dataclass(frozen=True)
class BogoliubovParams:
    Lambda: float
    nu: float
    xi: float
    alpha_e: float
    mu_plus: float
    mu_minus: float


@dataclass(frozen=True)
class QuasienergyLevel:
    n: int
    branch: str
    energy: float


@dataclass
class FockVector:
    amplitudes: np.ndarray
    component: str
    truncated: bool = False

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def top_population(self) -> float:
        return float(abs(self.amplitudes[-1]) ** 2)


@dataclass(frozen=True)
class VerificationResult:
    residual: float
    overlap: float
    numerical_energy: float
    truncated: bool


def capital_lambda(params: ModelParams) -> float:
    """1 - eps_bar^2; negative above the critical drive."""
    require_coupling(params)
    value = 1.0 - (2.0 * params.epsilon / (params.lam * (1.0 + params.eta))) ** 2
    return 0.0 if abs(value) < QUASI_SETTINGS["lambda_clamp"] else value


def _require_resonant(params: ModelParams) -> None:
    ref = QUASI_SETTINGS["lambda_clamp"] * params.scale
    if abs(params.delta) > ref or abs(params.delta0) > ref:
        raise DomainError("quasi-energies are defined for delta = delta0 = 0")


def quasienergies(params: ModelParams, n_max: int) -> list[QuasienergyLevel]:
    """Zero level plus the +/- doublets for n = 1..n_max."""
    _require_resonant(params)
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    big_lambda = capital_lambda(params)
    if big_lambda < 0:
        raise SupercriticalError(f"discrete spectrum undefined above the critical drive (Lambda={big_lambda:.6g})")

    unit = params.lam * math.sqrt(max(1.0 - params.eta ** 2, 0.0)) * big_lambda ** 0.75
    levels = [QuasienergyLevel(0, "zero", 0.0)]
    for n in range(1, n_max + 1):
        e = unit * math.sqrt(n)
        levels.append(QuasienergyLevel(n, "plus", e))
        levels.append(QuasienergyLevel(n, "minus", -e))
    return levels


def bogoliubov_params(params: ModelParams, energy: float) -> BogoliubovParams:
    require_coupling(params)
    if params.eta >= 1.0:
        raise DomainError("Bogoliubov construction needs eta < 1")
    big_lambda = capital_lambda(params)
    if big_lambda <= 0:
        raise DomainError(f"Bogoliubov construction needs Lambda > 0, got {big_lambda}")

    lam, eta = params.lam, params.eta
    root = math.sqrt(big_lambda)
    nu = lam ** 2 * (1.0 - eta ** 2) * root
    shift = energy ** 2 / big_lambda
    return BogoliubovParams(
        Lambda=big_lambda,
        nu=nu,
        xi=0.5 * math.log((1.0 + eta) / (1.0 - eta) * root),
        alpha_e=2.0 * params.epsilon * energy / (lam ** 2 * (1.0 + eta) ** 2 * big_lambda),
        mu_plus=0.5 * nu - shift,
        mu_minus=-0.5 * nu - shift,
    )


def bogoliubov_residual(params: ModelParams, level: QuasienergyLevel) -> float:
    """|n + 1/2 +- 1/2 - E^2 Lambda^(-3/2) / (lam^2 (1 - eta^2))| for the level's doublet."""
    big_lambda = capital_lambda(params)
    if big_lambda <= 0 or params.eta >= 1.0:
        raise DomainError("quantization condition needs Lambda > 0 and eta < 1")
    scaled = level.energy ** 2 * big_lambda ** -1.5 / (params.lam ** 2 * (1.0 - params.eta ** 2))
    # minus component carries n, plus component n - 1; both give n here
    n_minus = level.n
    n_plus = level.n - 1
    return min(abs(n_minus - scaled), abs(n_plus + 1 - scaled))


def default_truncation(n: int, params: ModelParams) -> int:
    big_lambda = capital_lambda(params)
    if big_lambda <= 0:
        raise DomainError("no default truncation at or above the critical drive")
    return max(QUASI_SETTINGS["min_trunc"], math.ceil(QUASI_SETTINGS["trunc_factor"] * (n + 1) / big_lambda))


def _ladder(n_fock: int) -> sparse.csr_matrix:
    return sparse.diags(np.sqrt(np.arange(1, n_fock + 1, dtype=float)), 1, format="csr")


def _level_energy(n: int, branch: str, params: ModelParams) -> float:
    if n == 0:
        return 0.0
    levels = {(lv.n, lv.branch): lv.energy for lv in quasienergies(params, n)}
    if (n, branch) not in levels:
        raise DomainError(f"branch must be 'plus' or 'minus' for n >= 1, got {branch!r}")
    return levels[(n, branch)]


def eigenket_fock(n: int, branch: str, params: ModelParams, trunc: Optional[int] = None,
                  component: str = "minus") -> FockVector:
    """Field ket U+|n> (component 'minus') or U+|n-1> (component 'plus')."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if component not in ("minus", "plus"):
        raise DomainError(f"component must be 'minus' or 'plus', got {component!r}")
    fock_index = n if component == "minus" else n - 1
    if fock_index < 0:
        raise DomainError("the plus component needs n >= 1")

    energy = _level_energy(n, branch, params)
    bog = bogoliubov_params(params, energy)
    n_fock = trunc if trunc is not None else default_truncation(n, params)
    if fock_index > n_fock:
        raise DomainError(f"truncation {n_fock} below Fock index {fock_index}")

    a = _ladder(n_fock)
    ad = a.T.tocsr()
    psi = np.zeros(n_fock + 1, dtype=complex)
    psi[fock_index] = 1.0
    # U = S(xi) D(alpha): U+ squeezes by -xi, then displaces by -alpha
    psi = expm_multiply(-0.5 * bog.xi * (ad @ ad - a @ a), psi)
    psi = expm_multiply(-bog.alpha_e * (ad - a), psi)

    vector = FockVector(amplitudes=psi, component=component)
    if vector.top_population() > QUASI_SETTINGS["top_population_tol"]:
        vector.truncated = True
        run_logger.log_numerical_event("eigenket truncation", {
            "n": n, "branch": branch, "n_fock": n_fock, "top_population": vector.top_population()
        })
    return vector


def build_resonant_hamiltonian(params: ModelParams, n_fock: int) -> np.ndarray:
    """Dense H'' on field (x) two-state, two-state ordered {|2>, |1>}."""
    a = _ladder(n_fock).toarray()
    ad = a.T
    s_plus = np.array([[0.0, 1.0], [0.0, 0.0]])
    s_minus = s_plus.T
    lam, eta = params.lam, params.eta
    h = (lam * (np.kron(a, s_plus) + np.kron(ad, s_minus))
         + eta * lam * (np.kron(ad, s_plus) + np.kron(a, s_minus))
         + params.epsilon * np.kron(a + ad, np.eye(2)))
    return h


def _diagonalize(params: ModelParams, n_fock: int) -> tuple[np.ndarray, np.ndarray]:
    def build() -> tuple[np.ndarray, np.ndarray]:
        energies, vectors = linalg.eigh(build_resonant_hamiltonian(params, n_fock))
        top = QUASI_SETTINGS["spurious_levels"] * 2
        weight = np.sum(np.abs(vectors[-top:, :]) ** 2, axis=0)
        keep = weight < QUASI_SETTINGS["spurious_weight_tol"]
        return energies[keep], vectors[:, keep]

    return spectrum_cache.get_or_build((params, n_fock), build)


def verify_quasienergy(level: QuasienergyLevel, params: ModelParams, trunc: Optional[int] = None) -> VerificationResult:
    """Compare a level against dense diagonalization of the truncated H''."""
    big_lambda = capital_lambda(params)
    if big_lambda <= 0:
        raise DomainError("verification needs Lambda > 0")
    n_fock = trunc if trunc is not None else default_truncation(level.n, params)
    energies, vectors = _diagonalize(params, n_fock)
    if len(energies) == 0:
        raise DomainError(f"no converged eigenpairs at truncation {n_fock}")

    idx = int(np.argmin(np.abs(energies - level.energy)))
    residual = float(abs(energies[idx] - level.energy))

    overlap = float("nan")
    truncated = False
    if params.eta < 1.0:
        kets = [eigenket_fock(level.n, level.branch, params, n_fock, "minus")]
        if level.n >= 1:
            kets.append(eigenket_fock(level.n, level.branch, params, n_fock, "plus"))
        truncated = any(k.truncated for k in kets)
        basis, _ = np.linalg.qr(np.column_stack([k.amplitudes for k in kets]))
        vec = vectors[:, idx]
        upper, lower = vec[0::2], vec[1::2]
        projected = np.linalg.norm(basis.conj().T @ upper) ** 2 + np.linalg.norm(basis.conj().T @ lower) ** 2
        overlap = float(projected / np.vdot(vec, vec).real)

    return VerificationResult(residual=residual, overlap=overlap,
                              numerical_energy=float(energies[idx]), truncated=truncated)


def resonance_detunings(lam: float, n_max: int, drive_kind: str = "linear") -> list[float]:
    """Multi-photon resonance detunings +-lam/sqrt(n), even n only for counter-rotating drive."""
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    if drive_kind not in DRIVE_KINDS:
        raise DomainError(f"drive_kind must be one of {DRIVE_KINDS}, got {drive_kind!r}")
    step = 2 if drive_kind == "counter_rotating" else 1
    detunings = []
    for n in range(step, n_max + 1, step):
        d = lam / math.sqrt(n)
        detunings.extend([d, -d])
    return detunings
