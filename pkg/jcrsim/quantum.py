#!/usr/bin/env python3
"""Single-system master equation in a truncated Fock basis.

Basis ordering is field (x) two-state, the two-state basis ordered {|2>, |1>}
so J_z = diag(+1/2, -1/2) and s+ = |2><1|. Density matrices are vectorized
row-major, vec(A rho B) = (A (x) B^T) vec(rho).
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.ndimage import maximum_filter
from scipy.sparse.linalg import gmres, LinearOperator, spilu, spsolve
from scipy.special import gammaln

from batch import BatchProcessor
from cache import operator_cache
from logger import run_logger
from model_core import DomainError, ModelParams, NumericalError, TruncationError

QUANTUM_SETTINGS = {
    "min_fock": 4,
    "max_fock": 1024,
    "escalation_factor": 1.5,
    "top_levels": 5,
    "top_population_tol": 1e-6,
    "iterative_dim": 200_000,
    "gmres_tol": 1e-12,
    "q_population_cut": 1e-8,
    "q_coverage_ratio": 1e-5,
}


@dataclass
class QuantumOperators:
    n_fock: int
    a: sparse.csr_matrix
    a_dagger: sparse.csr_matrix
    sigma_minus: sparse.csr_matrix
    sigma_plus: sparse.csr_matrix
    j_z: sparse.csr_matrix
    number: sparse.csr_matrix
    jz_full: sparse.csr_matrix
    h_fixed: sparse.csr_matrix
    hamiltonian: sparse.csr_matrix
    kappa: float

    @property
    def dim(self) -> int:
        return 2 * (self.n_fock + 1)

    def hamiltonian_at(self, delta: float, delta0: float) -> sparse.csr_matrix:
        """H with the detunings replaced; coupling and drive unchanged."""
        return (self.h_fixed + delta * self.number + delta0 * self.jz_full).tocsr()


@dataclass
class DensityMatrix:
    rho: np.ndarray
    n_fock: int

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))))

    def field_reduced(self) -> np.ndarray:
        """Field density matrix with the two-state system traced out."""
        m = self.n_fock + 1
        return np.einsum("iaja->ij", self.rho.reshape(m, 2, m, 2))

    def photon_distribution(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.field_reduced())), 0.0, None)

    def photon_number(self) -> float:
        p = self.photon_distribution()
        return float(np.dot(np.arange(len(p)), p))

    def field_amplitude(self) -> complex:
        """<a>"""
        rf = self.field_reduced()
        n = np.arange(1, self.n_fock + 1)
        return complex(np.sum(np.sqrt(n) * np.diagonal(rf, offset=-1)))

    def inversion(self) -> float:
        """<2 J_z>"""
        diag = np.real(np.diag(self.rho))
        return float(np.sum(diag[0::2]) - np.sum(diag[1::2]))

    def top_population(self, levels: int = QUANTUM_SETTINGS["top_levels"]) -> float:
        return float(np.sum(self.photon_distribution()[-levels:]))


@dataclass
class PhotonCurve:
    deltas: list[float]
    photon_number: list[float]
    field_amplitude: list[complex]
    inversion: list[float]
    n_fock_used: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class QGridSpec:
    points: int = 81
    extent: Optional[float] = None


@dataclass
class QGrid:
    alpha_re: np.ndarray
    alpha_im: np.ndarray
    q_values: np.ndarray
    extent: float
    coverage_ok: bool = True

    def cell_area(self) -> float:
        d_re = self.alpha_re[1] - self.alpha_re[0] if len(self.alpha_re) > 1 else 0.0
        d_im = self.alpha_im[1] - self.alpha_im[0] if len(self.alpha_im) > 1 else 0.0
        return float(d_re * d_im)

    def normalization(self) -> float:
        return float(np.sum(self.q_values) * self.cell_area())

    def local_maxima(self, min_relative: float = 0.05) -> list[tuple[complex, float]]:
        """Interior local maxima above min_relative of the global peak, largest first."""
        q = self.q_values
        peaks = (q == maximum_filter(q, size=3, mode="constant", cval=-np.inf)) & (q >= min_relative * q.max())
        found = [(complex(self.alpha_re[j], self.alpha_im[i]), float(q[i, j])) for i, j in zip(*np.nonzero(peaks))]
        return sorted(found, key=lambda item: -item[1])


def _field_ladder(n_fock: int) -> sparse.csr_matrix:
    return sparse.diags(np.sqrt(np.arange(1, n_fock + 1, dtype=float)), 1, format="csr")


def _check_fock(n_fock: int) -> None:
    if n_fock < QUANTUM_SETTINGS["min_fock"]:
        raise DomainError(f"n_fock must be >= {QUANTUM_SETTINGS['min_fock']}, got {n_fock}")


def build_operators(params: ModelParams, n_fock: int) -> QuantumOperators:
    _check_fock(n_fock)
    if params.n_systems != 1:
        raise DomainError("the quantum module treats a single two-state system (n_systems = 1)")
    return operator_cache.get_or_build(("operators", params, n_fock), lambda: _assemble(params, n_fock))


def _assemble(params: ModelParams, n_fock: int) -> QuantumOperators:
    a_f = _field_ladder(n_fock)
    id_f = sparse.identity(n_fock + 1, format="csr")
    id_s = sparse.identity(2, format="csr")
    s_plus = sparse.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    s_minus = s_plus.T.tocsr()
    j_z = sparse.diags([0.5, -0.5], format="csr")

    a = sparse.kron(a_f, id_s, format="csr")
    ad = a.T.tocsr()
    sp = sparse.kron(id_f, s_plus, format="csr")
    sm = sparse.kron(id_f, s_minus, format="csr")
    number = (ad @ a).tocsr()
    jz_full = sparse.kron(id_f, j_z, format="csr")

    lam, eta = params.lam, params.eta
    h_fixed = (lam * (a @ sp + ad @ sm) + eta * lam * (ad @ sp + a @ sm) + params.epsilon * (a + ad)).tocsr()
    hamiltonian = (h_fixed + params.delta * number + params.delta0 * jz_full).tocsr()

    return QuantumOperators(
        n_fock=n_fock, a=a, a_dagger=ad, sigma_minus=sm, sigma_plus=sp, j_z=j_z,
        number=number, jz_full=jz_full, h_fixed=h_fixed, hamiltonian=hamiltonian,
        kappa=params.kappa,
    )


def liouvillian_apply(rho: DensityMatrix, ops: QuantumOperators) -> DensityMatrix:
    """d rho/dt = -i[H, rho] + kappa (2 a rho a+ - a+a rho - rho a+a)."""
    if rho.dim != ops.dim:
        raise DomainError(f"density matrix dimension {rho.dim} does not match operators ({ops.dim})")
    r = rho.rho
    h, a, ad, n = ops.hamiltonian, ops.a, ops.a_dagger, ops.number
    coherent = -1j * (h @ r - r @ h)
    dissipative = ops.kappa * (2.0 * ((a @ r) @ ad) - n @ r - r @ n)
    return DensityMatrix(rho=np.asarray(coherent + dissipative), n_fock=rho.n_fock)


def build_liouvillian(hamiltonian: sparse.spmatrix, jump: sparse.spmatrix, kappa: float) -> sparse.csr_matrix:
    """Row-major superoperator of -i[H, .] + kappa L[jump]."""
    d = hamiltonian.shape[0]
    eye = sparse.identity(d, format="csr")
    n = (jump.conj().T @ jump).tocsr()
    coherent = -1j * (sparse.kron(hamiltonian, eye) - sparse.kron(eye, hamiltonian.T))
    dissipative = kappa * (2.0 * sparse.kron(jump, jump.conj())
                           - sparse.kron(n, eye) - sparse.kron(eye, n.T))
    return (coherent + dissipative).tocsr()


def _solve_null(liouvillian: sparse.csr_matrix, d: int) -> np.ndarray:
    trace_row = sparse.csr_matrix((np.ones(d), (np.zeros(d, dtype=int), np.arange(d) * (d + 1))), shape=(1, d * d))
    system = sparse.vstack([trace_row, liouvillian[1:]], format="csc")
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0

    x = None
    if d * d > QUANTUM_SETTINGS["iterative_dim"]:
        try:
            ilu = spilu(system, drop_tol=1e-6, fill_factor=20)
            precond = LinearOperator(system.shape, ilu.solve, dtype=complex)
            x, info = gmres(system, rhs, M=precond, rtol=QUANTUM_SETTINGS["gmres_tol"], restart=200, maxiter=2000)
            if info != 0:
                run_logger.log_numerical_event("gmres did not converge, using direct solve", {"dim": d, "info": info})
                x = None
        except RuntimeError as e:
            run_logger.log_numerical_event("incomplete LU failed, using direct solve", {"dim": d, "error": str(e)})
            x = None
    if x is None:
        x = spsolve(system, rhs)

    rho = np.asarray(x).reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def _field_only_steady_state(params: ModelParams, n_fock: int) -> np.ndarray:
    a_f = _field_ladder(n_fock)
    h_f = (params.delta * (a_f.T @ a_f) + params.epsilon * (a_f + a_f.T)).tocsr()
    rho_f = _solve_null(build_liouvillian(h_f, a_f, params.kappa), n_fock + 1)
    lower = np.array([[0.0, 0.0], [0.0, 1.0]])
    return np.kron(rho_f, lower)


def _steady_state_once(params: ModelParams, n_fock: int) -> DensityMatrix:
    if params.lam == 0.0:
        # two-state system decoupled and undamped: spectator in |1><1|
        return DensityMatrix(rho=_field_only_steady_state(params, n_fock), n_fock=n_fock)
    ops = build_operators(params, n_fock)
    liouvillian = operator_cache.get_or_build(
        ("liouvillian", params, n_fock), lambda: build_liouvillian(ops.hamiltonian, ops.a, ops.kappa))
    return DensityMatrix(rho=_solve_null(liouvillian, ops.dim), n_fock=n_fock)


def steady_state(params: ModelParams, n_fock: int, tol: float = 1e-9, max_fock: Optional[int] = None) -> DensityMatrix:
    """Unique steady state, escalating the truncation until the top levels are empty."""
    if params.kappa <= 0:
        raise DomainError("steady_state requires kappa > 0")
    _check_fock(n_fock)
    cap = max_fock if max_fock is not None else QUANTUM_SETTINGS["max_fock"]

    current = n_fock
    while True:
        rho = _steady_state_once(params, current)
        top = rho.top_population()
        if top <= QUANTUM_SETTINGS["top_population_tol"]:
            break
        if current >= cap:
            raise TruncationError(f"truncation infeasible: top-level population {top:.3g} at n_fock={current} (cap {cap})")
        following = min(math.ceil(current * QUANTUM_SETTINGS["escalation_factor"]), cap)
        run_logger.log_numerical_event("escalating Fock truncation", {
            "from": current, "to": following, "top_population": top
        }, level="INFO")
        current = following

    if params.lam > 0:
        ops = build_operators(params, current)
        residual = float(np.max(np.abs(liouvillian_apply(rho, ops).rho)))
        if residual > tol * params.kappa:
            run_logger.log_numerical_event("steady-state residual above tolerance", {
                "residual": residual, "bound": tol * params.kappa, "n_fock": current
            })
    return rho


def photon_sweep(params: ModelParams, delta_grid: Sequence[float], n_fock: int = 40, tol: float = 1e-9,
                 max_fock: Optional[int] = None, processor: Optional[BatchProcessor] = None) -> PhotonCurve:
    """Steady-state expectations along a detuning grid with delta0 = delta."""
    deltas = [float(d) for d in delta_grid]
    if not all(math.isfinite(d) for d in deltas):
        raise DomainError("detuning grid must be finite")

    def solve(delta: float) -> DensityMatrix:
        return steady_state(params.with_changes(delta=delta, delta0=delta), n_fock, tol, max_fock)

    processor = processor or BatchProcessor(1, label="photon-sweep")
    states = processor.batch_process(solve, deltas)
    return PhotonCurve(
        deltas=deltas,
        photon_number=[s.photon_number() for s in states],
        field_amplitude=[s.field_amplitude() for s in states],
        inversion=[s.inversion() for s in states],
        n_fock_used=[s.n_fock for s in states],
    )


def evolve_density_matrix(params: ModelParams, rho0: DensityMatrix, times: Sequence[float],
                          n_fock: Optional[int] = None, rtol: float = 1e-8, atol: float = 1e-10) -> list[DensityMatrix]:
    """Integrate the master equation directly; returns the state at each requested time."""
    n_fock = n_fock if n_fock is not None else rho0.n_fock
    ops = build_operators(params, n_fock)
    if rho0.dim != ops.dim:
        raise DomainError("initial state does not match the truncation")
    liouvillian = operator_cache.get_or_build(
        ("liouvillian", params, n_fock), lambda: build_liouvillian(ops.hamiltonian, ops.a, ops.kappa))
    times = np.asarray(times, dtype=float)

    sol = solve_ivp(lambda t, y: liouvillian @ y, (0.0, float(times[-1])), rho0.rho.reshape(-1).astype(complex),
                    method="DOP853", t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalError(f"master-equation integration failed: {sol.message}")
    d = ops.dim
    return [DensityMatrix(rho=sol.y[:, k].reshape(d, d), n_fock=n_fock) for k in range(sol.y.shape[1])]


def ground_state(n_fock: int) -> DensityMatrix:
    """|0>|1> as a density matrix."""
    d = 2 * (n_fock + 1)
    rho = np.zeros((d, d), dtype=complex)
    rho[1, 1] = 1.0
    return DensityMatrix(rho=rho, n_fock=n_fock)


def _coherent_rows(alphas: np.ndarray, n_fock: int) -> np.ndarray:
    n = np.arange(n_fock + 1)
    mod = np.abs(alphas)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_amp = n[None, :] * np.log(mod) - 0.5 * gammaln(n + 1)[None, :] - 0.5 * mod ** 2
        rows = np.exp(log_amp) * np.exp(1j * n[None, :] * np.angle(alphas)[:, None])
    rows[:, 0] = np.exp(-0.5 * np.abs(alphas) ** 2)
    rows[mod[:, 0] == 0, 1:] = 0.0
    return rows


def coherent_state(alpha: complex, n_fock: int) -> np.ndarray:
    """Fock amplitudes of |alpha> truncated to 0..n_fock."""
    return _coherent_rows(np.array([complex(alpha)]), n_fock)[0]


def q_function(rho: DensityMatrix, grid: QGridSpec = QGridSpec()) -> QGrid:
    """Husimi Q(alpha) = <alpha| rho_field |alpha> / pi on a square grid."""
    rho_f = rho.field_reduced()
    extent = grid.extent
    if extent is None:
        populated = np.nonzero(rho.photon_distribution() > QUANTUM_SETTINGS["q_population_cut"])[0]
        n_top = int(populated[-1]) if len(populated) else 0
        extent = 1.5 * math.sqrt(n_top) + 4.0
    if grid.points < 2:
        raise DomainError("Q grid needs at least 2 points per axis")

    axis = np.linspace(-extent, extent, grid.points)
    re, im = np.meshgrid(axis, axis)
    alphas = (re + 1j * im).ravel()
    rows = _coherent_rows(alphas, rho.n_fock)
    q = np.einsum("kn,nm,km->k", rows.conj(), rho_f, rows).real / math.pi
    q = np.clip(q, 0.0, None).reshape(grid.points, grid.points)

    boundary = max(q[0, :].max(), q[-1, :].max(), q[:, 0].max(), q[:, -1].max())
    coverage_ok = bool(boundary <= QUANTUM_SETTINGS["q_coverage_ratio"] * q.max())
    if not coverage_ok:
        run_logger.log_numerical_event("Q grid does not cover the state", {
            "extent": extent, "boundary_ratio": float(boundary / q.max())
        })
    return QGrid(alpha_re=axis, alpha_im=axis.copy(), q_values=q, extent=float(extent), coverage_ok=coverage_ok)
