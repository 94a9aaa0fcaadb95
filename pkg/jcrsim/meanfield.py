#!/usr/bin/env python3
"""Mean-field steady states of the driven Jaynes-Cummings-Rabi model.

Intensive variables are used throughout: alpha is the field amplitude per
sqrt(N), beta the polarization per N and zeta the inversion 2<J_z>/N.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, linear_sum_assignment

from batch import BatchProcessor
from logger import run_logger
from model_core import (
    AccuracyError,
    DomainError,
    ModelParams,
    epsilon_crit,
    require_coupling,
    scale_params,
)

SOLVER_SETTINGS = {
    "imag_tol": 1e-8,
    "edge_tol": 1e-10,
    "merge_tol": 1e-8,
    "newton_steps": 60,
    "eta1_threshold": 1e-12,
    "delta0_threshold": 1e-12,
    "eps_threshold": 1e-14,
    "det_threshold": 1e-14,
    "residual_tol": 1e-9,
    "quadratic_slack": 1e-12,
    "phase_scan_points": 4096,
    "continuation_gate": 0.5,
}

AXIS_ORDER = ("eta", "lambda_over_delta", "delta_over_lambda", "delta_bar", "eps_bar")


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass
class MeanFieldBranch:
    zeta: float
    alpha: complex
    beta: complex
    stability: Optional[Stability] = None
    residual_poly: float = 0.0
    residual_conservation: float = 0.0
    residual_rhs: float = 0.0
    multiplicity: int = 1
    z2_partner: bool = False
    degenerate: bool = False
    phase: Optional[float] = None

    @property
    def photon_number(self) -> float:
        """Intensive photon number |alpha|^2 (multiply by N for the count)."""
        return abs(self.alpha) ** 2

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha.real, self.alpha.imag, self.beta.real, self.beta.imag, self.zeta])


@dataclass
class SteadyStateSet:
    params: ModelParams
    branches: list[MeanFieldBranch]
    degeneracies: list[str] = field(default_factory=list)
    regime: str = "generic"

    @property
    def zetas(self) -> list[float]:
        return [b.zeta for b in self.branches]

    def stable_branches(self) -> list[MeanFieldBranch]:
        return [b for b in self.branches if b.stability == Stability.STABLE]


@dataclass(frozen=True)
class RegionLabel:
    n_solutions: int
    n_stable: int
    tag: str


@dataclass(frozen=True)
class PhaseSolution:
    phi: float
    alpha: complex
    # kappa = delta = 0: the field equation leaves alpha free, 0 is a placeholder
    degenerate: bool = False


class ProductForm:
    """Polynomial held as outer(z) * base(z)**power - subtract(z).

    Evaluating the unexpanded form keeps Newton polishing free of the
    cancellation the expanded coefficients suffer from.
    """

    def __init__(self, outer: Sequence[float], base: Sequence[float], power: int,
                 subtract: Sequence[float] = (0.0,)) -> None:
        self.outer = np.asarray(outer, dtype=float)
        self.base = np.asarray(base, dtype=float)
        self.power = int(power)
        self.subtract = np.asarray(subtract, dtype=float)
        self._d_outer = P.polyder(self.outer)
        self._d_base = P.polyder(self.base)
        self._d_subtract = P.polyder(self.subtract)

    def coefficients(self) -> np.ndarray:
        """Expanded coefficients, lowest degree first."""
        product = P.polymul(self.outer, P.polypow(self.base, self.power))
        return P.polysub(product, self.subtract)

    def value(self, z: complex) -> complex:
        return P.polyval(z, self.outer) * P.polyval(z, self.base) ** self.power - P.polyval(z, self.subtract)

    def derivative(self, z: complex) -> complex:
        b = P.polyval(z, self.base)
        o = P.polyval(z, self.outer)
        return (P.polyval(z, self._d_outer) * b ** self.power
                + self.power * o * b ** (self.power - 1) * P.polyval(z, self._d_base)
                - P.polyval(z, self._d_subtract))

    def relative_residual(self, z: complex) -> float:
        magnitude = (abs(P.polyval(z, self.outer)) * abs(P.polyval(z, self.base)) ** self.power
                     + abs(P.polyval(z, self.subtract)))
        return abs(self.value(z)) / max(magnitude, 1e-300)


@dataclass
class GoverningPolynomial:
    regime: str
    form: ProductForm

    @property
    def coefficients(self) -> np.ndarray:
        return self.form.coefficients()

    def evaluate(self, zeta: float) -> float:
        return float(np.real(self.form.value(zeta)))


def _eps_bar(params: ModelParams) -> float:
    return params.epsilon / epsilon_crit(params.lam, params.eta)


def _is_delta0_zero(params: ModelParams) -> bool:
    ref = max(abs(params.delta), params.kappa, params.lam)
    return abs(params.delta0) < SOLVER_SETTINGS["delta0_threshold"] * ref


def _is_eta_one(params: ModelParams) -> bool:
    return 1.0 - params.eta < SOLVER_SETTINGS["eta1_threshold"]


def _is_zero_drive(params: ModelParams) -> bool:
    return _eps_bar(params) < SOLVER_SETTINGS["eps_threshold"]


def maxwell_bloch_rhs(state: tuple[complex, complex, float], params: ModelParams) -> tuple[complex, complex, float]:
    """Time derivatives (d alpha, d beta, d zeta) of the intensive mean-field equations."""
    alpha, beta, zeta = state
    lam, eta = params.lam, params.eta
    d_alpha = (-(params.kappa + 1j * params.delta) * alpha
               - 0.5j * lam * (beta + eta * np.conj(beta)) - 1j * params.epsilon)
    d_beta = -1j * params.delta0 * beta + 2j * lam * (alpha + eta * np.conj(alpha)) * zeta
    d_zeta = 2.0 * lam * (np.imag(alpha * np.conj(beta)) - eta * np.imag(alpha * beta))
    return complex(d_alpha), complex(d_beta), float(d_zeta)


def _rhs_real(t: float, y: np.ndarray, params: ModelParams) -> np.ndarray:
    d_alpha, d_beta, d_zeta = maxwell_bloch_rhs((y[0] + 1j * y[1], y[2] + 1j * y[3], y[4]), params)
    return np.array([d_alpha.real, d_alpha.imag, d_beta.real, d_beta.imag, d_zeta])


def integrate_maxwell_bloch(state: tuple[complex, complex, float], params: ModelParams, t_final: float,
                            n_output: int = 200, rtol: float = 1e-10, atol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the mean-field equations; returns (times, rows of [ax, ay, bx, by, zeta])."""
    alpha, beta, zeta = state
    y0 = np.array([alpha.real, alpha.imag, beta.real, beta.imag, zeta], dtype=float)
    t_eval = np.linspace(0.0, t_final, n_output)
    sol = solve_ivp(_rhs_real, (0.0, t_final), y0, method="DOP853", t_eval=t_eval,
                    args=(params,), rtol=rtol, atol=atol)
    if not sol.success:
        raise AccuracyError(f"mean-field integration failed: {sol.message}")
    return sol.t, sol.y.T


def _pq_coefficients(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    lam2 = params.lam ** 2
    eta = params.eta
    c = (1.0 - eta * eta) ** 2
    dd0 = params.delta * params.delta0
    d02 = params.delta0 ** 2
    p = np.array([
        d02 * (params.kappa ** 2 + params.delta ** 2) / (lam2 * lam2 * c),
        2.0 * dd0 * (1.0 + eta * eta) / (lam2 * c),
        1.0,
    ])
    q = np.array([
        d02 * params.kappa ** 2 / (lam2 * lam2 * c) + (dd0 / lam2) ** 2 / (1.0 - eta) ** 4,
        2.0 * dd0 / (lam2 * (1.0 - eta) ** 2),
        1.0,
    ])
    return p, q


def _eta1_linear_factor(params: ModelParams) -> np.ndarray:
    s = scale_params(params)
    return np.array([s.delta0_bar * (s.kappa_bar ** 2 + s.delta_bar ** 2), s.delta_bar])


def sextic_factors(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Quadratics P and Q of the sextic, lowest degree first."""
    require_coupling(params)
    if _is_eta_one(params):
        raise DomainError("sextic diverges at eta = 1; use the eta = 1 quartic path")
    return _pq_coefficients(params)


def build_sextic(params: ModelParams) -> np.ndarray:
    """Coefficients (lowest degree first) of (1 - z^2) P(z)^2 - eps_bar^2 z^2 Q(z)."""
    p, q = sextic_factors(params)
    e2 = _eps_bar(params) ** 2
    return ProductForm([1.0, 0.0, -1.0], p, 2, P.polymul([0.0, 0.0, e2], q)).coefficients()


def governing_polynomial(params: ModelParams) -> GoverningPolynomial:
    """Regime tag and the polynomial whose real roots in [-1, 1] are the inversions."""
    require_coupling(params)
    e2 = _eps_bar(params) ** 2
    sphere = [1.0, 0.0, -1.0]

    if _is_delta0_zero(params):
        return GoverningPolynomial("delta0_zero", ProductForm([1.0 - e2, 0.0, -1.0], [0.0, 0.0, 1.0], 2))

    if _is_zero_drive(params):
        if _is_eta_one(params):
            return GoverningPolynomial("zero_drive", ProductForm(sphere, _eta1_linear_factor(params), 2))
        p, _ = _pq_coefficients(params)
        return GoverningPolynomial("zero_drive", ProductForm(sphere, p, 2))

    if _is_eta_one(params):
        delta_bar = scale_params(params).delta_bar
        return GoverningPolynomial("eta_one", ProductForm(
            sphere, _eta1_linear_factor(params), 2, [0.0, 0.0, e2 * delta_bar ** 2]))

    p, q = _pq_coefficients(params)
    if params.eta == 0.0:
        return GoverningPolynomial("eta_zero", ProductForm(sphere, p, 1, [0.0, 0.0, e2]))
    return GoverningPolynomial("generic", ProductForm(sphere, p, 2, P.polymul([0.0, 0.0, e2], q)))


def _polish(form: ProductForm, z: complex) -> complex:
    best, best_val = z, abs(form.value(z))
    for _ in range(SOLVER_SETTINGS["newton_steps"]):
        d = form.derivative(z)
        if d == 0:
            break
        step = form.value(z) / d
        z = z - step
        val = abs(form.value(z))
        if val < best_val:
            best, best_val = z, val
        if abs(step) <= 1e-16 * max(1.0, abs(z)) or best_val == 0.0:
            break
    return best


def _real_roots(form: ProductForm) -> list[float]:
    """Real roots of the form via companion eigenvalues and Newton polishing."""
    coeffs = P.polytrim(form.coefficients(), tol=0.0)
    if len(coeffs) <= 1:
        if coeffs[0] == 0.0:
            raise DomainError("governing polynomial vanishes identically")
        return []
    roots = []
    for z in P.polyroots(coeffs):
        z = _polish(form, complex(z))
        if abs(z.imag) <= SOLVER_SETTINGS["imag_tol"] * max(1.0, abs(z.real)):
            roots.append(float(z.real))
    return sorted(roots)


def _merge_close(values: list[float], tol: float) -> list[tuple[float, int]]:
    merged: list[tuple[float, int]] = []
    for v in sorted(values):
        if merged and abs(v - merged[-1][0]) <= tol:
            centre, count = merged[-1]
            merged[-1] = ((centre * count + v) / (count + 1), count + 1)
        else:
            merged.append((v, 1))
    return merged


def _in_sphere(roots: list[float]) -> list[float]:
    limit = 1.0 + SOLVER_SETTINGS["edge_tol"]
    return [min(max(r, -1.0), 1.0) for r in roots if abs(r) <= limit]


def zero_drive_roots(params: ModelParams) -> list[tuple[float, int]]:
    """Real roots of P (zero drive) with their multiplicity in P."""
    require_coupling(params)
    if _is_eta_one(params):
        lin = _eta1_linear_factor(params)
        if lin[1] == 0.0:
            return []
        return [(-lin[0] / lin[1], 1)]

    p, _ = _pq_coefficients(params)
    half_b = 0.5 * p[1]
    disc = half_b * half_b - p[0]
    slack = SOLVER_SETTINGS["quadratic_slack"] * (half_b * half_b + abs(p[0]))
    if disc < -slack:
        return []
    if disc <= slack:
        return [(-half_b, 2)]
    q = -(half_b + math.copysign(math.sqrt(disc), half_b))
    if q == 0.0:
        return [(0.0, 2)]
    return sorted([(q, 1), (p[0] / q, 1)])


def _alpha_residual(alpha: complex, zeta: float, params: ModelParams) -> float:
    beta = _beta_from_alpha(alpha, zeta, params)
    d_alpha, _, _ = maxwell_bloch_rhs((alpha, beta, zeta), params)
    return abs(d_alpha)


def _beta_from_alpha(alpha: complex, zeta: float, params: ModelParams) -> complex:
    lam, eta, d0 = params.lam, params.eta, params.delta0
    return complex(2.0 * lam * (1.0 + eta) * alpha.real * zeta / d0,
                   2.0 * lam * (1.0 - eta) * alpha.imag * zeta / d0)


def _zero_drive_field(zeta: float, params: ModelParams) -> tuple[complex, complex, bool]:
    lam, eta, delta, delta0 = params.lam, params.eta, params.delta, params.delta0
    if abs(zeta) < 1e-300 or delta == 0.0:
        return 0j, complex(math.sqrt(max(1.0 - zeta * zeta, 0.0)), 0.0), True

    amp2 = max(-(delta0 / (4.0 * delta)) * (1.0 - zeta * zeta) / zeta, 0.0)
    c1 = delta * delta0 + lam ** 2 * (1.0 - eta) ** 2 * zeta
    c2 = delta * delta0 + lam ** 2 * (1.0 + eta) ** 2 * zeta
    diff = c2 - c1
    if abs(diff) > 1e-12 * (abs(c1) + abs(c2)):
        fx = min(max(-c1 / diff, 0.0), 1.0)
    else:
        # U(1) symmetric case: the phase is free, keep alpha real
        fx = 1.0
    ax = math.sqrt(amp2 * fx)
    ay = math.sqrt(amp2 * (1.0 - fx))
    candidates = [complex(ax, ay), complex(ax, -ay)]
    alpha = min(candidates, key=lambda a: _alpha_residual(a, zeta, params))
    return alpha, _beta_from_alpha(alpha, zeta, params), False


def _driven_field(zeta: float, params: ModelParams) -> tuple[complex, complex, bool]:
    lam, eta, delta, delta0, kappa = params.lam, params.eta, params.delta, params.delta0, params.kappa
    a = lam ** 2 * (1.0 - eta) ** 2 / delta0
    b = lam ** 2 * (1.0 + eta) ** 2 / delta0
    matrix = np.array([[kappa, -(delta + a * zeta)], [delta + b * zeta, kappa]])
    rhs = np.array([0.0, -params.epsilon])
    det = kappa ** 2 + (delta + a * zeta) * (delta + b * zeta)
    scale = np.max(np.abs(matrix)) ** 2
    degenerate = abs(det) < SOLVER_SETTINGS["det_threshold"] * max(scale, 1e-300)
    if degenerate:
        solution = np.linalg.lstsq(matrix, rhs, rcond=None)[0]
        run_logger.log_numerical_event("singular field system", {"zeta": zeta, "det": det}, level="INFO")
    else:
        solution = np.array([-(delta + a * zeta) * params.epsilon / det, -kappa * params.epsilon / det])
    alpha = complex(solution[0], solution[1])
    return alpha, _beta_from_alpha(alpha, zeta, params), bool(degenerate)


def _above_critical_alpha(phi: float, params: ModelParams) -> complex:
    eps_c = epsilon_crit(params.lam, params.eta)
    source = params.epsilon + eps_c * (np.exp(1j * phi) + params.eta * np.exp(-1j * phi)) / (1.0 + params.eta)
    return complex(-1j * source / (params.kappa + 1j * params.delta))


def reconstruct_field(zeta: float, params: ModelParams, phase: Optional[float] = None) -> tuple[complex, complex]:
    """Field and polarization (alpha, beta) belonging to a root zeta."""
    alpha, beta, _, _ = _reconstruct(zeta, params, phase)
    return alpha, beta


def _reconstruct(zeta: float, params: ModelParams, phase: Optional[float] = None) -> tuple[complex, complex, bool, bool]:
    require_coupling(params)
    tol = SOLVER_SETTINGS["merge_tol"]

    if _is_delta0_zero(params):
        eps_bar = _eps_bar(params)
        if abs(zeta) > tol or eps_bar <= 1.0:
            return 0j, complex(-eps_bar, 0.0), False, False
        if phase is None:
            solutions = solve_above_critical_phase(params)
            if not solutions:
                raise DomainError("zeta = 0 class is inactive below the critical drive")
            phase = solutions[0].phi
        beta = complex(np.exp(1j * phase))
        if params.kappa == 0.0 and params.delta == 0.0:
            return 0j, beta, True, False
        return _above_critical_alpha(phase, params), beta, False, False

    if _is_zero_drive(params):
        if abs(abs(zeta) - 1.0) <= tol:
            return 0j, 0j, False, False
        alpha, beta, degenerate = _zero_drive_field(zeta, params)
        return alpha, beta, degenerate, abs(alpha) > 0.0

    alpha, beta, degenerate = _driven_field(zeta, params)
    return alpha, beta, degenerate, False


def solve_above_critical_phase(params: ModelParams) -> list[PhaseSolution]:
    """Phases of beta on the zeta = 0 class (delta0 = 0, drive at or above critical)."""
    require_coupling(params)
    if not _is_delta0_zero(params):
        raise DomainError("the zeta = 0 class exists only for delta0 = 0")
    eps_c = epsilon_crit(params.lam, params.eta)
    eps_bar = params.epsilon / eps_c
    if eps_bar < 1.0 - SOLVER_SETTINGS["eps_threshold"]:
        return []
    undetermined = params.kappa == 0.0 and params.delta == 0.0
    if undetermined:
        run_logger.log_with_context("WARNING", "field amplitude undetermined for kappa = delta = 0",
                                    {"eps_bar": eps_bar})

    if abs(params.delta) <= SOLVER_SETTINGS["delta0_threshold"] * max(params.kappa, params.lam):
        phi0 = math.acos(min(max(-1.0 / eps_bar, -1.0), 1.0))
        phis = [phi0] if abs(math.pi - phi0) < 1e-12 else [-phi0, phi0]
    else:
        phis = _scan_phase_roots(params, eps_c)

    if undetermined:
        return [PhaseSolution(phi=float(phi), alpha=0j, degenerate=True) for phi in phis]
    return [PhaseSolution(phi=float(phi), alpha=_above_critical_alpha(phi, params)) for phi in phis]


def _phase_condition(phi: float, params: ModelParams, eps_c: float) -> float:
    eta, eps = params.eta, params.epsilon
    return (params.kappa * (1.0 - eta * eta) * (eps * math.cos(phi) + eps_c)
            - params.delta * math.sin(phi) * (eps * (1.0 + eta) ** 2 + 4.0 * eta * eps_c * math.cos(phi)))


def _scan_phase_roots(params: ModelParams, eps_c: float) -> list[float]:
    grid = np.linspace(-math.pi, math.pi, SOLVER_SETTINGS["phase_scan_points"] + 1)
    values = np.array([_phase_condition(phi, params, eps_c) for phi in grid])
    scale = max(np.max(np.abs(values)), 1e-300)
    roots: list[float] = []
    for i in range(1, len(grid)):
        lo, hi = grid[i - 1], grid[i]
        g_lo, g_hi = values[i - 1], values[i]
        if abs(g_hi) <= 1e-15 * scale:
            roots.append(hi)
        elif g_lo * g_hi < 0 and abs(g_lo) > 1e-15 * scale:
            roots.append(brentq(_phase_condition, lo, hi, args=(params, eps_c), xtol=1e-15, rtol=4 * np.finfo(float).eps))
    # (-pi, pi]: -pi and pi are the same point
    wrapped = sorted(math.pi if abs(r + math.pi) < 1e-12 else r for r in roots)
    return [r for r, _ in _merge_close(wrapped, 1e-10)]


def linearize(branch: MeanFieldBranch, params: ModelParams) -> np.ndarray:
    """Jacobian of the real 5-dimensional mean-field flow at a branch."""
    lam, eta, kappa, delta, delta0 = params.lam, params.eta, params.kappa, params.delta, params.delta0
    ax, ay, bx, by, zeta = branch.as_vector()
    up, um = 1.0 + eta, 1.0 - eta
    return np.array([
        [-kappa, delta, 0.0, 0.5 * lam * um, 0.0],
        [-delta, -kappa, -0.5 * lam * up, 0.0, 0.0],
        [0.0, -2.0 * lam * um * zeta, 0.0, delta0, -2.0 * lam * um * ay],
        [2.0 * lam * up * zeta, 0.0, -delta0, 0.0, 2.0 * lam * up * ax],
        [-2.0 * lam * up * by, 2.0 * lam * um * bx, 2.0 * lam * um * ay, -2.0 * lam * up * ax, 0.0],
    ])


def stability(branch: MeanFieldBranch, params: ModelParams, tol_stab: Optional[float] = None) -> Stability:
    """Classify a branch after removing the neutral direction of the conserved norm."""
    if tol_stab is None:
        tol_stab = 1e-8 * max(params.kappa, params.lam * 1e-3)
    jac = linearize(branch, params)
    eigvals, left = linalg.eig(jac, left=True, right=False)

    grad = np.array([0.0, 0.0, 2.0 * branch.beta.real, 2.0 * branch.beta.imag, 2.0 * branch.zeta])
    grad_norm = np.linalg.norm(grad)
    if grad_norm > 0:
        overlaps = [abs(np.vdot(left[:, i], grad)) / max(np.linalg.norm(left[:, i]), 1e-300)
                    for i in range(len(eigvals))]
        neutral = int(np.argmax(overlaps))
    else:
        neutral = int(np.argmin(np.abs(eigvals)))

    remaining = np.delete(eigvals, neutral)
    worst = float(np.max(remaining.real))
    if worst < -tol_stab:
        return Stability.STABLE
    if worst > tol_stab:
        return Stability.UNSTABLE
    return Stability.MARGINAL


def _finish_branch(zeta: float, params: ModelParams, form: ProductForm, multiplicity: int = 1,
                   phase: Optional[float] = None, with_stability: bool = True) -> MeanFieldBranch:
    alpha, beta, degenerate, z2 = _reconstruct(zeta, params, phase)
    d_alpha, d_beta, d_zeta = maxwell_bloch_rhs((alpha, beta, zeta), params)
    branch = MeanFieldBranch(
        zeta=float(zeta),
        alpha=alpha,
        beta=beta,
        residual_poly=form.relative_residual(zeta),
        residual_conservation=abs(zeta * zeta + abs(beta) ** 2 - 1.0),
        residual_rhs=max(abs(d_alpha), abs(d_beta), abs(d_zeta)) / params.scale,
        multiplicity=multiplicity,
        z2_partner=z2,
        degenerate=degenerate,
        phase=phase,
    )
    tol = SOLVER_SETTINGS["residual_tol"]
    if branch.residual_conservation > tol or (branch.residual_rhs > tol and not degenerate):
        run_logger.log_numerical_event("branch residual above tolerance", {
            "zeta": zeta,
            "conservation": branch.residual_conservation,
            "rhs": branch.residual_rhs,
        })
    if with_stability:
        branch.stability = stability(branch, params)
    return branch


def _dedupe(branches: list[MeanFieldBranch], notes: list[str]) -> list[MeanFieldBranch]:
    tol = SOLVER_SETTINGS["merge_tol"]
    kept: list[MeanFieldBranch] = []
    for branch in branches:
        twin = next((k for k in kept if abs(k.zeta - branch.zeta) <= tol
                     and abs(k.alpha - branch.alpha) <= tol * max(1.0, abs(k.alpha))
                     and abs(k.beta - branch.beta) <= tol), None)
        if twin is None:
            kept.append(branch)
        else:
            twin.multiplicity += branch.multiplicity
            notes.append(f"zeta={twin.zeta:.12g}: coincident roots merged (multiplicity {twin.multiplicity})")
    return kept


def solve_steady_states(params: ModelParams, tol: float = 1e-9, with_stability: bool = True) -> SteadyStateSet:
    """All mean-field steady states, one branch per distinct real root in [-1, 1]."""
    governing = governing_polynomial(params)
    form = governing.form
    notes: list[str] = []
    branches: list[MeanFieldBranch] = []

    if governing.regime == "delta0_zero":
        eps_bar = _eps_bar(params)
        if eps_bar <= 1.0:
            z = math.sqrt(max(1.0 - eps_bar * eps_bar, 0.0))
            for zeta in ([0.0] if z == 0.0 else [-z, z]):
                branches.append(_finish_branch(zeta, params, form, with_stability=with_stability))
        for solution in solve_above_critical_phase(params):
            branches.append(_finish_branch(0.0, params, form, phase=solution.phi, with_stability=with_stability))

    elif governing.regime == "zero_drive":
        for zeta in (-1.0, 1.0):
            branches.append(_finish_branch(zeta, params, form, with_stability=with_stability))
        for root, mult in zero_drive_roots(params):
            if abs(root) > 1.0 + SOLVER_SETTINGS["edge_tol"]:
                continue
            root = min(max(root, -1.0), 1.0)
            if abs(abs(root) - 1.0) <= SOLVER_SETTINGS["merge_tol"]:
                notes.append(f"zeta={root:.12g}: P-root at boundary merges with trivial branch")
                continue
            notes.append(f"zeta={root:.12g}: double root of (1 - z^2) P(z)^2, Z2 partner (-alpha, -beta)")
            if mult > 1:
                notes.append(f"zeta={root:.12g}: P itself has a root of multiplicity {mult} (U(1) symmetric ring)")
            branches.append(_finish_branch(root, params, form, multiplicity=2, with_stability=with_stability))

    else:
        roots = _in_sphere(_real_roots(form))
        for root, mult in _merge_close(roots, SOLVER_SETTINGS["merge_tol"]):
            if mult > 1:
                notes.append(f"zeta={root:.12g}: multiple root (multiplicity {mult})")
            branches.append(_finish_branch(root, params, form, multiplicity=mult, with_stability=with_stability))
        if len(branches) < 2 and abs(form.value(0.0)) > 0.0:
            raise AccuracyError(f"root solver found {len(branches)} real roots, at least 2 expected for {params}")

    branches.sort(key=lambda b: (b.zeta, b.phase if b.phase is not None else 0.0))
    branches = _dedupe(branches, notes)
    worst = max((b.residual_conservation for b in branches), default=0.0)
    if worst > tol:
        run_logger.log_with_context("WARNING", "steady states exceed requested tolerance", {
            "regime": governing.regime, "worst_conservation": worst, "tol": tol
        })
    return SteadyStateSet(params=params, branches=branches, degeneracies=notes, regime=governing.regime)


def state_equation_eta0(params: ModelParams, branch_sign: int) -> list[float]:
    """Field magnitudes |alpha| solving the eta = 0 equation of state on one branch.

    branch_sign is the sign of zeta on the branch (-1 for the lower one).
    """
    if params.eta != 0.0:
        raise DomainError("the eta = 0 equation of state needs eta = 0")
    if branch_sign not in (1, -1):
        raise DomainError(f"branch_sign must be +1 or -1, got {branch_sign}")
    s = scale_params(params)
    d = abs(s.delta0_bar)
    sigma = branch_sign * (1.0 if s.delta0_bar >= 0 else -1.0)
    # y = sqrt(delta0_bar^2 + 4 |alpha|^2); zeta = branch_sign * d / y
    outer = [-d * d, 0.0, 1.0]
    base = [1.0, 2.0 * sigma * s.delta_bar, s.kappa_bar ** 2 + s.delta_bar ** 2]
    form = ProductForm(outer, base, 1, [0.0, 0.0, s.eps_bar ** 2])

    magnitudes = []
    for y in _real_roots(form):
        if y < d - SOLVER_SETTINGS["edge_tol"] * max(1.0, d):
            continue
        if d == 0.0 and abs(y) <= SOLVER_SETTINGS["merge_tol"]:
            if s.eps_bar <= 1.0:
                magnitudes.append(0.0)
            continue
        magnitudes.append(0.5 * math.sqrt(max(y * y - d * d, 0.0)))
    return [m for m, _ in _merge_close(magnitudes, SOLVER_SETTINGS["merge_tol"])]


def classify_region(params: ModelParams, with_stability: bool = True) -> RegionLabel:
    """Count distinct steady states and stable members; tag is 'R' + count."""
    states = solve_steady_states(params, with_stability=with_stability)
    n_solutions = len(states.branches)
    n_stable = len(states.stable_branches()) if with_stability else 0
    return RegionLabel(n_solutions=n_solutions, n_stable=n_stable, tag=f"R{n_solutions}")


def boundary_eta1(params: ModelParams, delta_grid: Sequence[float], lock_delta0: bool = True) -> list[Optional[float]]:
    """Drive amplitude eps_bar on the eta = 1 line of double roots, None where absent."""
    require_coupling(params)
    if not _is_eta_one(params):
        raise DomainError("boundary_eta1 requires eta = 1")
    two_eps_c = 2.0 * epsilon_crit(params.lam, params.eta)
    kappa_bar = params.kappa / two_eps_c
    boundary: list[Optional[float]] = []
    for delta in delta_grid:
        delta_bar = delta / two_eps_c
        delta0_bar = delta_bar if lock_delta0 else params.delta0 / two_eps_c
        if lock_delta0:
            bracket = kappa_bar ** 2 + delta_bar ** 2
        elif delta_bar == 0.0:
            boundary.append(None)
            continue
        else:
            bracket = abs(delta0_bar) / abs(delta_bar) * (kappa_bar ** 2 + delta_bar ** 2)
        if bracket > 1.0:
            boundary.append(None)
        else:
            boundary.append((1.0 - bracket ** (2.0 / 3.0)) ** 1.5)
    return boundary


@dataclass
class BranchCurve:
    curve_id: int
    indices: list[int] = field(default_factory=list)
    branches: list[MeanFieldBranch] = field(default_factory=list)


@dataclass(frozen=True)
class FoldPoint:
    delta: float
    kind: str
    zeta: float
    curve_id: int


@dataclass
class SweepResult:
    grid: list[float]
    curves: list[BranchCurve]
    folds: list[FoldPoint]
    counts: list[int]


def _detuned(params: ModelParams, delta: float, lock_delta0: bool) -> ModelParams:
    return params.with_changes(delta=delta, delta0=delta if lock_delta0 else params.delta0)


def _branch_distance(a: MeanFieldBranch, b: MeanFieldBranch) -> float:
    return abs(a.zeta - b.zeta) + abs(a.alpha - b.alpha) / max(1.0, abs(a.alpha), abs(b.alpha))


def sweep_detuning(params: ModelParams, grid: Sequence[float], lock_delta0: bool = True,
                   processor: Optional[BatchProcessor] = None) -> SweepResult:
    """Steady states along a detuning grid, continued into per-branch curves."""
    grid = [float(d) for d in grid]
    steps = np.diff(grid)
    if len(grid) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError("detuning grid must be strictly monotone")

    processor = processor or BatchProcessor(1, label="sweep")
    solved = processor.batch_process(lambda d: solve_steady_states(_detuned(params, d, lock_delta0)), grid)

    curves: list[BranchCurve] = []
    folds: list[FoldPoint] = []
    active: list[BranchCurve] = []
    gate = SOLVER_SETTINGS["continuation_gate"]

    for k, states in enumerate(solved):
        current = states.branches
        matched_curves: list[BranchCurve] = []
        used: set[int] = set()
        if active and current:
            cost = np.array([[_branch_distance(c.branches[-1], b) + 1e-12 * j
                              for j, b in enumerate(current)] for c in active])
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols):
                if cost[r, c] <= gate:
                    active[r].indices.append(k)
                    active[r].branches.append(current[c])
                    matched_curves.append(active[r])
                    used.add(int(c))

        for curve in active:
            if curve not in matched_curves:
                folds.append(FoldPoint(delta=grid[k - 1], kind="disappear",
                                       zeta=curve.branches[-1].zeta, curve_id=curve.curve_id))

        for j, branch in enumerate(current):
            if j in used:
                continue
            curve = BranchCurve(curve_id=len(curves), indices=[k], branches=[branch])
            curves.append(curve)
            matched_curves.append(curve)
            if k > 0:
                folds.append(FoldPoint(delta=grid[k], kind="appear", zeta=branch.zeta, curve_id=curve.curve_id))
        active = matched_curves

    return SweepResult(grid=grid, curves=curves, folds=folds, counts=[len(s.branches) for s in solved])


def apply_axis_values(base: ModelParams, values: dict[str, float], lock_delta0: bool = True) -> ModelParams:
    """Parameter point for the given axis coordinates (see AXIS_ORDER)."""
    unknown = set(values) - set(AXIS_ORDER)
    if unknown:
        raise DomainError(f"unknown phase-diagram axes: {sorted(unknown)}")
    params = base
    for axis in AXIS_ORDER:
        if axis not in values:
            continue
        v = float(values[axis])
        if axis == "eta":
            params = params.with_changes(eta=v)
        elif axis == "lambda_over_delta":
            if params.delta == 0.0:
                raise DomainError("lambda_over_delta axis needs delta != 0")
            params = params.with_changes(lam=v * abs(params.delta))
        elif axis == "delta_over_lambda":
            params = _detuned(params, v * params.lam, lock_delta0)
        elif axis == "delta_bar":
            params = _detuned(params, v * 2.0 * epsilon_crit(params.lam, params.eta), lock_delta0)
        elif axis == "eps_bar":
            params = params.with_changes(epsilon=v * epsilon_crit(params.lam, params.eta))
    return params


@dataclass
class PhaseDiagram:
    x_axis: str
    y_axis: str
    x_values: list[float]
    y_values: list[float]
    labels: list[list[RegionLabel]]

    def counts(self) -> np.ndarray:
        """Solution counts indexed [y, x]."""
        return np.array([[cell.n_solutions for cell in row] for row in self.labels], dtype=int)


def _classify_cell(task: tuple[ModelParams, dict[str, float], bool, bool]) -> RegionLabel:
    base, coords, lock_delta0, with_stability = task
    return classify_region(apply_axis_values(base, coords, lock_delta0), with_stability=with_stability)


def phase_diagram(params_base: ModelParams, axes: tuple[str, str], grid: tuple[Sequence[float], Sequence[float]],
                  lock_delta0: bool = True, with_stability: bool = True,
                  processor: Optional[BatchProcessor] = None) -> PhaseDiagram:
    """Region raster over two axes; rows follow the second axis."""
    x_axis, y_axis = axes
    if x_axis == y_axis:
        raise DomainError("phase-diagram axes must differ")
    for axis in axes:
        if axis not in AXIS_ORDER:
            raise DomainError(f"unknown phase-diagram axis {axis!r}")
    xs = [float(x) for x in grid[0]]
    ys = [float(y) for y in grid[1]]
    if not all(math.isfinite(v) for v in xs + ys):
        raise DomainError("phase-diagram grid must be finite")

    tasks = [(params_base, {x_axis: x, y_axis: y}, lock_delta0, with_stability) for y in ys for x in xs]
    processor = processor or BatchProcessor(1, label="phase-diagram")
    results = processor.batch_process(_classify_cell, tasks, strict=False)
    cells = [r if r is not None else RegionLabel(0, 0, "error") for r in results]
    labels = [cells[i * len(xs):(i + 1) * len(xs)] for i in range(len(ys))]
    return PhaseDiagram(x_axis=x_axis, y_axis=y_axis, x_values=xs, y_values=ys, labels=labels)


def branch_summary(branch: MeanFieldBranch, params: ModelParams) -> dict[str, Any]:
    """Flat record of a branch for tabular output."""
    return {
        "zeta": branch.zeta,
        "alpha": branch.alpha,
        "beta": branch.beta,
        "photon_number": params.n_systems * branch.photon_number,
        "stability": branch.stability.value if branch.stability else None,
        "multiplicity": branch.multiplicity,
        "z2_partner": branch.z2_partner,
        "degenerate": branch.degenerate,
        "phase": branch.phase,
        "residual_poly": branch.residual_poly,
        "residual_conservation": branch.residual_conservation,
    }
