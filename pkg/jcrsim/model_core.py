#!/usr/bin/env python3
"""Model parameters, scalings and closed-form critical quantities."""

import math
from dataclasses import dataclass, asdict, replace
from typing import Any, Optional

MODEL_LIMITS = {
    "eta_min": 0.0,
    "eta_max": 1.0,
    "discriminant_slack": 1e-14,
}


class DomainError(ValueError):
    """Input outside the domain where a formula is defined."""


class NoCriticalCouplingError(DomainError):
    """The critical-coupling pair is complex (eta below eta_critical)."""


class SupercriticalError(DomainError):
    """Drive above the critical amplitude; no discrete quasi-energy spectrum."""


class NumericalError(RuntimeError):
    """A solver failed to meet its accuracy contract."""


class AccuracyError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class TrajectoryError(NumericalError):
    pass


@dataclass(frozen=True)
class ModelParams:
    lam: float
    eta: float = 0.0
    delta: float = 0.0
    delta0: float = 0.0
    kappa: float = 0.0
    epsilon: float = 0.0
    n_systems: int = 1

    def __post_init__(self) -> None:
        values = (self.lam, self.eta, self.delta, self.delta0, self.kappa, self.epsilon)
        if not all(math.isfinite(float(v)) for v in values):
            raise DomainError(f"non-finite model parameter in {self}")
        # lam == 0 is admitted for the decoupled quantum case; every
        # mean-field and scaled operation rejects it.
        if self.lam < 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")
        if not MODEL_LIMITS["eta_min"] <= self.eta <= MODEL_LIMITS["eta_max"]:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
        if self.kappa < 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa}")
        if self.epsilon < 0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if int(self.n_systems) != self.n_systems or self.n_systems < 1:
            raise DomainError(f"n_systems must be a positive integer, got {self.n_systems}")

    @property
    def scale(self) -> float:
        """Largest rate in the problem, used to scale residuals."""
        return max(self.kappa, abs(self.delta), abs(self.delta0), self.lam, self.epsilon, 1e-300)

    def with_changes(self, **changes: Any) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ScaledParams:
    eps_bar: float
    kappa_bar: float
    delta_bar: float
    delta0_bar: float

    def __post_init__(self) -> None:
        if self.eps_bar < 0:
            raise DomainError(f"eps_bar must be >= 0, got {self.eps_bar}")
        if self.kappa_bar < 0:
            raise DomainError(f"kappa_bar must be >= 0, got {self.kappa_bar}")


def require_coupling(params: ModelParams) -> None:
    if params.lam <= 0:
        raise DomainError("operation requires lambda > 0")


def epsilon_crit(lam: float, eta: float) -> float:
    """Critical drive amplitude lambda (1 + eta) / 2."""
    if lam <= 0 or not math.isfinite(lam):
        raise DomainError(f"lambda must be > 0, got {lam}")
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    return lam * (1.0 + eta) / 2.0


def eta_critical(kappa: float, delta: float) -> float:
    """Smallest counter-rotating ratio for which a critical coupling exists."""
    if kappa < 0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    if delta == 0:
        if kappa > 0:
            raise DomainError("eta_critical is undefined for delta = 0 with kappa > 0")
        return 0.0
    ratio = kappa / abs(delta)
    if math.isinf(ratio):
        return 1.0
    return ratio / (1.0 + math.hypot(1.0, ratio))


def _critical_discriminant(eta: float, kappa: float, delta: float) -> float:
    # 4 eta^2 times the bracketed discriminant; finite at eta = 0
    return 4.0 * eta * eta - (1.0 - eta * eta) ** 2 * (kappa / delta) ** 2


def lambda_critical(params: ModelParams) -> tuple[float, float]:
    """Critical couplings (lambda_plus, lambda_minus) with lambda_plus <= lambda_minus."""
    if params.delta * params.delta0 == 0:
        raise DomainError("lambda_critical requires delta * delta0 != 0")
    if params.eta >= 1.0:
        raise DomainError("lambda_critical is undefined at eta = 1")

    disc = _critical_discriminant(params.eta, params.kappa, params.delta)
    if disc < 0:
        if disc < -MODEL_LIMITS["discriminant_slack"]:
            raise NoCriticalCouplingError(
                f"no critical coupling: eta={params.eta} < eta_critical="
                f"{eta_critical(params.kappa, params.delta)}"
            )
        disc = 0.0

    root = math.sqrt(disc)
    one_plus = 1.0 + params.eta ** 2
    prefactor = math.sqrt(abs(params.delta * params.delta0)) / (1.0 - params.eta ** 2)
    lam_plus = prefactor * math.sqrt(max(one_plus - root, 0.0))
    lam_minus = prefactor * math.sqrt(one_plus + root)
    return lam_plus, lam_minus


def scale_params(params: ModelParams) -> ScaledParams:
    """Drive in units of epsilon_crit, rates in units of 2 epsilon_crit."""
    require_coupling(params)
    eps_c = epsilon_crit(params.lam, params.eta)
    two_eps_c = 2.0 * eps_c
    return ScaledParams(
        eps_bar=params.epsilon / eps_c,
        kappa_bar=params.kappa / two_eps_c,
        delta_bar=params.delta / two_eps_c,
        delta0_bar=params.delta0 / two_eps_c,
    )


def unscale_params(scaled: ScaledParams, lam: float, eta: float, n_systems: int = 1) -> ModelParams:
    eps_c = epsilon_crit(lam, eta)
    two_eps_c = 2.0 * eps_c
    return ModelParams(
        lam=lam,
        eta=eta,
        delta=scaled.delta_bar * two_eps_c,
        delta0=scaled.delta0_bar * two_eps_c,
        kappa=scaled.kappa_bar * two_eps_c,
        epsilon=scaled.eps_bar * eps_c,
        n_systems=n_systems,
    )


def photon_numbers_eta1(params: ModelParams) -> Optional[tuple[float, float]]:
    """Strong-coupling photon numbers of the two upper mean-field branches.

    Returns None when kappa = 0 (the expression diverges).
    """
    require_coupling(params)
    if params.kappa <= 0:
        return None
    eps_bar = params.epsilon / epsilon_crit(params.lam, params.eta)
    base = params.n_systems * (params.lam / params.kappa) ** 2 * (1.0 + params.eta) ** 2
    lorentz = 4.0 * (1.0 + (params.delta / params.kappa) ** 2)
    upper = base * (eps_bar + 1.0) ** 2 / lorentz
    lower = base * (eps_bar - 1.0) ** 2 / lorentz
    return float(upper), float(lower)
