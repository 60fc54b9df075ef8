"""
A-posteriori minimum-principle check of a computed profile.

The costates obey lambda' = -A^T lambda, so the switching function is
phi(t) = B^T exp(-A^T t) lambda(0). For a rest-to-rest time-optimal extremal phi vanishes at
every interior switch, the Hamiltonian is zero at both ends (lambda_xi = -1/V_m at t = 0 and
t = t_f), and the command is V_m exactly where -phi > 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from src.model.plant import PlantSpec, simulate, state_space
from src.model.tdfilter import BangOffBangProfile

logger = logging.getLogger(__name__)

FIT_TOL = 1e-6
SAMPLES_PER_SEGMENT = 100
# marge relative au max de |phi| : tangences numériques près d'une fusion/naissance
SIGN_RTOL = 1e-6


@dataclass(frozen=True)
class PmpCertificate:
    """Costate fit report; status is "PASS" or "FAIL"."""

    status: str
    fit_residual: float
    sign_violations: int
    lambda0: tuple[float, ...]
    augmented: bool
    violation_time: float | None = None

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "fit_residual": self.fit_residual,
            "sign_violations": self.sign_violations,
            "augmented": self.augmented,
            "violation_time_s": self.violation_time,
        }


def _input_columns(A: np.ndarray, B: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Rows exp(-A t) B, so that phi(t) = row . lambda(0)."""
    if len(times) == 0:
        return np.zeros((0, len(B)))
    phi = expm(-A[None, :, :] * np.asarray(times, dtype=float)[:, None, None])
    return phi @ B


def fit_costates(
    plant: PlantSpec, profile: BangOffBangProfile, sensitive_modes: tuple[int, ...] = ()
) -> tuple[np.ndarray, float]:
    """
    Least-squares lambda(0) with lambda_xi(0) = -1/V_m fixed, from phi(T_i) = 0 at every switch
    and phi(t_f) = -1/V_m. Returns lambda(0) and the worst row misfit scaled by V_m.
    """
    return fit_costates_at(plant, profile.switch_times, profile.t_f, profile.v_max, sensitive_modes)


def fit_costates_at(
    plant: PlantSpec,
    switch_times,
    t_f: float,
    v_max: float,
    sensitive_modes: tuple[int, ...] = (),
    tangent_times=(),
) -> tuple[np.ndarray, float]:
    """Same fit on raw times; tangent_times add phi'(t) = 0 rows (switches about to merge)."""
    A, B = state_space(plant, sensitive_modes)
    ix = int(np.flatnonzero(B)[0])
    times = np.array(tuple(switch_times) + (t_f,), dtype=float)
    targets = np.zeros(len(times) + len(tangent_times))
    targets[len(times) - 1] = -1.0 / v_max

    rows = np.vstack([_input_columns(A, B, times), _input_columns(A, -A @ B, np.array(tangent_times, dtype=float))])
    free = np.array([i for i in range(len(B)) if i != ix])
    lhs = rows[:, free]
    rhs = targets + rows[:, ix] / v_max

    solution, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    lambda0 = np.empty(len(B))
    lambda0[free] = solution
    lambda0[ix] = -1.0 / v_max
    misfit = float(np.max(np.abs(lhs @ solution - rhs))) * v_max if len(rhs) else 0.0
    return lambda0, misfit


def switching_values(plant: PlantSpec, lambda0: np.ndarray, times, sensitive_modes: tuple[int, ...] = ()):
    A, B = state_space(plant, sensitive_modes)
    return _input_columns(A, B, np.atleast_1d(times)) @ lambda0


def certify(
    plant: PlantSpec, profile: BangOffBangProfile, sensitive_modes: tuple[int, ...] = ()
) -> PmpCertificate:
    lambda0, misfit = fit_costates(plant, profile, sensitive_modes)
    fractions = np.arange(1, SAMPLES_PER_SEGMENT + 1) / (SAMPLES_PER_SEGMENT + 1)

    sampled = []
    for start, end, on in profile.segments():
        if end <= start:
            continue
        t = start + (end - start) * fractions
        sampled.append((t, switching_values(plant, lambda0, t, sensitive_modes), on))
    scale = max((float(np.max(np.abs(phi))) for _, phi, _ in sampled), default=0.0)
    tol = max(1e-9 / profile.v_max, SIGN_RTOL * scale)

    violations = 0
    worst, violation_time = tol, None
    for t, phi, on in sampled:
        # commande maximale là où -phi > 0
        wrong = phi if on else -phi
        violations += int(np.count_nonzero(wrong > tol))
        k = int(np.argmax(wrong))
        if wrong[k] > worst:
            worst, violation_time = float(wrong[k]), float(t[k])

    status = "PASS" if misfit <= FIT_TOL and violations == 0 else "FAIL"
    logger.debug("pmp: misfit=%.3g violations=%d -> %s", misfit, violations, status)
    return PmpCertificate(
        status, misfit, violations, tuple(float(x) for x in lambda0), bool(sensitive_modes), violation_time
    )


def verify_pmp(result, plant: PlantSpec) -> PmpCertificate:
    """Certificate of a DesignResult; robust designs are checked on the sensitivity-augmented model."""
    sensitive = tuple(result.robust_modes) if result.robust else ()
    return certify(plant.with_x_f(result.profile.x_f), result.profile, sensitive)


@dataclass(frozen=True)
class RobustnessReport:
    status: str
    sensitivities: tuple[float, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_dict(self) -> dict:
        return {"status": self.status, "sensitivities": list(self.sensitivities), "tolerance": self.tolerance}


def sensitivity_check(profile: BangOffBangProfile, plant: PlantSpec, modes: tuple[int, ...]) -> RobustnessReport:
    """Terminal frequency sensitivities of the given modes must stay below 1e-7 x_f."""
    trajectory = simulate(plant, profile, augmented=True)
    m = plant.m
    sens = trajectory.terminal[2 * m + 1 :].reshape(m, 2)
    values = tuple(float(abs(x)) for k in modes for x in sens[k])
    tolerance = 1e-7 * profile.x_f
    status = "PASS" if max(values) <= tolerance else "FAIL"
    return RobustnessReport(status, values, tolerance)


def robust_equivalence_check(result, plant: PlantSpec) -> RobustnessReport:
    modes = tuple(result.robust_modes) if result.robust else tuple(range(plant.m))
    return sensitivity_check(result.profile, plant, modes)
