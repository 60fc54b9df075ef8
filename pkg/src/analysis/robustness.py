"""
Frequency-robustness analytics: residual-energy sweeps, curvature at the nominal frequency,
and the displacements where the non-robust design already has a double zero at the pole.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from src.model.plant import PlantSpec, residual_report, simulate
from src.model.tdfilter import BangOffBangProfile, eval_derivative, from_profile
from src.solvers import closed_form
from src.utils.errors import ContractViolation, DomainError

logger = logging.getLogger(__name__)

NOMINAL_TOL = 1e-10


@dataclass(frozen=True)
class SweepPoint:
    omega_ratio: float
    V_tf: float
    V_modes: tuple[float, ...]


def robustness_sweep(
    profile: BangOffBangProfile,
    plant: PlantSpec,
    ratio_range: tuple[float, float] = (0.7, 1.3),
    points: int = 61,
    mode: int | None = None,
) -> list[SweepPoint]:
    """Residual energy at t_f of a fixed profile while the natural frequency is scaled."""
    if points < 2:
        raise DomainError(f"a sweep needs at least 2 points, got {points}")
    lo, hi = ratio_range
    if not 0 < lo < hi:
        raise DomainError(f"invalid ratio range {ratio_range}")
    sweep = []
    for ratio in np.linspace(lo, hi, points):
        report = residual_report(plant.scaled(ratio, mode), simulate(plant.scaled(ratio, mode), profile))
        sweep.append(SweepPoint(float(ratio), report.total, tuple(float(v) for v in report.V)))
    return sweep


@dataclass(frozen=True)
class CurvatureReport:
    analytic: np.ndarray
    finite_difference: np.ndarray
    agrees: bool


def curvature_at_nominal(profile: BangOffBangProfile, plant: PlantSpec, step: float = 1e-3) -> CurvatureReport:
    """
    d2V/dw2 per mode at the design frequency, from the sensitivity states, cross-checked with a
    5-point stencil on V(w) that perturbs one mode at a time.
    """
    nominal = simulate(plant, profile, augmented=True)
    report = residual_report(plant, nominal, derivatives=True, profile=profile)
    limit = NOMINAL_TOL * profile.v_max**2
    if np.any(report.V > limit):
        raise ContractViolation(
            f"curvature needs a profile that nulls the residual (V={report.V.tolist()}, limit {limit:g})"
        )

    stencil = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    fd = np.empty(plant.m)
    for k, spec in enumerate(plant.modes):
        delta = step * spec.omega_n
        values = [
            residual_report(plant.scaled(1.0 + j * step, k), simulate(plant.scaled(1.0 + j * step, k), profile)).V[k]
            for j in (-2, -1, 0, 1, 2)
        ]
        fd[k] = stencil @ np.array(values) / delta**2

    analytic = report.d2V_domega2
    floor = 1e-6 * profile.v_max**2 / plant.omegas**2
    agrees = bool(np.all(np.abs(analytic - fd) <= 1e-3 * np.maximum(np.abs(analytic), np.abs(fd)) + floor))
    if not agrees:
        logger.warning("curvature mismatch: analytic=%s stencil=%s", analytic, fd)
    return CurvatureReport(analytic=analytic, finite_difference=fd, agrees=agrees)


def coincidence_measure(x_f: float, omega_n: float, v_max: float) -> float:
    """
    Signed Re(exp(jw t_f/2) dG_c/ds(jw)) of the undamped minimum-time profile. For these
    anti-symmetric profiles the imaginary part vanishes, so a root is a double zero at jw.
    """
    sol = closed_form.solve_undamped(x_f, omega_n, v_max)
    filt = from_profile(closed_form.to_profile(sol))
    value = np.exp(1j * omega_n * sol.T2) * eval_derivative(filt, 1j * omega_n)
    return float(value.real)


def find_coincidence_displacements(
    plant: PlantSpec, x_f_range: tuple[float, float], resolution: float = 0.5
) -> list[float]:
    """Displacements where robust and non-robust minimum-time designs coincide."""
    if plant.m != 1 or not plant.undamped:
        raise ContractViolation("coincidence search needs a single undamped mode")
    lo, hi = x_f_range
    if not 0 <= lo < hi:
        raise DomainError(f"invalid displacement range {x_f_range}")
    mode = plant.modes[0]
    w, v = mode.omega_n, plant.v_max
    unit = 2.0 * math.pi * v / w

    roots: list[float] = []
    n = 1
    while (n - 1) * unit < hi:
        # une branche de structure par zone ; les impulsions aux bornes ne sont pas des racines
        z_lo, z_hi = closed_form.zone_bounds(n, w, v)
        a = max(lo, z_lo) + 1e-9 * unit
        b = min(hi, z_hi) - 1e-9 * unit
        n += 1
        if b <= a:
            continue
        grid = np.linspace(a, b, max(3, int(math.ceil((b - a) / resolution)) + 1))
        values = np.array([coincidence_measure(x, w, v) for x in grid])
        for k in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0):
            if values[k] == 0.0:
                roots.append(float(grid[k]))
                continue
            if values[k + 1] == 0.0:
                continue
            roots.append(brentq(coincidence_measure, grid[k], grid[k + 1], args=(w, v), xtol=1e-10))
    logger.debug("coincidence displacements in %s: %s", x_f_range, roots)
    return sorted(roots)
