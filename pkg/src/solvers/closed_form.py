"""
Minimum-time profiles for a single undamped mode.

In zone n the optimal profile is anti-symmetric about T2 = t_f/2 and holds n off-zones of
equal width 2*T1, centred 2*pi/w apart. Two constraints pin (T1, T2):

    T2 - n*T1 = x_f / (2 V_m)
    (-1)^(n+1) * n * sin(w T1) - sin(w T2) = 0

Zone 1 has a closed form, zones 2 and 3 reduce to a quartic and a cubic, and higher zones
are bracketed and solved numerically. Among admissible roots the shortest maneuver wins.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from src.model.tdfilter import BangOffBangProfile
from src.utils.errors import ContractViolation, DomainError, SolverError

logger = logging.getLogger(__name__)

CONSTRAINT_TOL = 1e-10
BOUNDARY_RTOL = 1e-12


class Zone(NamedTuple):
    n: int
    degenerate: bool


@dataclass(frozen=True)
class ZoneSolution:
    """Two-parameter description of an undamped optimal profile in zone n."""

    n: int
    T1: float
    T2: float
    x_f: float
    omega_n: float
    v_max: float

    @property
    def t_f(self) -> float:
        return 2.0 * self.T2

    @property
    def degenerate(self) -> bool:
        return self.T1 == 0.0

    def constraint_residuals(self) -> tuple[float, float]:
        w = self.omega_n
        displacement = self.T2 - self.n * self.T1 - self.x_f / (2.0 * self.v_max)
        sine = (-1) ** (self.n + 1) * self.n * math.sin(w * self.T1) - math.sin(w * self.T2)
        return displacement, sine

    def to_dict(self) -> dict:
        return {"n": self.n, "T1_s": self.T1, "T2_s": self.T2, "t_f_s": self.t_f}


def _check_inputs(x_f: float, omega_n: float, v_max: float) -> None:
    if not (x_f > 0 and omega_n > 0 and v_max > 0):
        raise DomainError(f"x_f, omega_n and v_max must be positive (got {x_f}, {omega_n}, {v_max})")


def zone_bounds(n: int, omega_n: float, v_max: float) -> tuple[float, float]:
    unit = 2.0 * math.pi * v_max / omega_n
    return (n - 1) * unit, n * unit


def zone_of(x_f: float, omega_n: float, v_max: float) -> Zone:
    """Smallest n with x_f <= 2 n pi V_m / w; exact multiples are flagged degenerate (pulse)."""
    _check_inputs(x_f, omega_n, v_max)
    ratio = x_f * omega_n / (2.0 * math.pi * v_max)
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= BOUNDARY_RTOL * max(1.0, ratio):
        return Zone(int(nearest), True)
    return Zone(max(1, math.ceil(ratio)), False)


def pulse_displacements(omega_n: float, v_max: float, x_max: float) -> list[float]:
    unit = 2.0 * math.pi * v_max / omega_n
    return [k * unit for k in range(1, int(math.floor(x_max / unit * (1 + BOUNDARY_RTOL))) + 1)]


def _pulse(n: int, x_f: float, omega_n: float, v_max: float) -> ZoneSolution:
    return ZoneSolution(n, 0.0, x_f / (2.0 * v_max), x_f, omega_n, v_max)


def _require_zone(n: int, x_f: float, omega_n: float, v_max: float) -> Zone | None:
    """Raise when x_f lies outside zone n; return the boundary zone when x_f sits on an edge."""
    _check_inputs(x_f, omega_n, v_max)
    lower, upper = zone_bounds(n, omega_n, v_max)
    slack = BOUNDARY_RTOL * upper
    if not (lower - slack <= x_f <= upper + slack):
        raise DomainError(
            f"x_f={x_f} mm lies outside zone {n} [{lower:.6g}, {upper:.6g}] mm", zone=n
        )
    zone = zone_of(x_f, omega_n, v_max)
    return zone if zone.degenerate else None


def _sine_residual(n: int, c: float):
    sign = (-1) ** (n + 1)

    def f(t: float) -> float:
        return sign * n * math.sin(t) - math.sin(n * t + c)

    def df(t: float) -> float:
        return sign * n * math.cos(t) - n * math.cos(n * t + c)

    return f, df


def _polish(f, df, t: float, iterations: int = 8) -> float:
    best = t
    for _ in range(iterations):
        slope = df(best)
        if slope == 0.0:
            break
        candidate = best - f(best) / slope
        if not 0.0 <= candidate <= math.pi or abs(f(candidate)) >= abs(f(best)):
            break
        best = candidate
    return best


def _admissible(n: int, T1: float, T2: float, omega_n: float) -> bool:
    if T1 < 0.0:
        return False
    if T1 == 0.0:
        return True
    half_spacing = math.pi / omega_n
    return T1 < half_spacing and T2 - (n - 1) * half_spacing - T1 > 0.0


def _candidates_from_angles(n: int, angles, x_f: float, omega_n: float, v_max: float) -> list[ZoneSolution]:
    """Map trial angles w*T1 to solutions, keeping those that satisfy the sine constraint."""
    c = omega_n * x_f / (2.0 * v_max)
    f, df = _sine_residual(n, c)
    found: list[ZoneSolution] = []
    for raw in angles:
        t = _polish(f, df, min(max(float(raw), 0.0), math.pi))
        if abs(f(t)) > CONSTRAINT_TOL:
            continue
        T1 = t / omega_n
        T2 = n * T1 + x_f / (2.0 * v_max)
        if not _admissible(n, T1, T2, omega_n):
            continue
        if any(abs(T1 - other.T1) < 1e-9 for other in found):
            continue
        found.append(ZoneSolution(n, T1, T2, x_f, omega_n, v_max))
    return sorted(found, key=lambda sol: sol.T2)


def _companion_roots(coeffs) -> np.ndarray:
    """Polynomial roots as eigenvalues of the companion matrix (highest degree first)."""
    coeffs = np.asarray(coeffs, dtype=float)
    monic = coeffs[1:] / coeffs[0]
    degree = len(monic)
    companion = np.zeros((degree, degree))
    companion[0, :] = -monic
    companion[1:, :-1] = np.eye(degree - 1)
    return np.linalg.eigvals(companion)


def _real_in(roots: np.ndarray, lo: float, hi: float, slack: float = 1e-4) -> list[float]:
    real = [r.real for r in roots if abs(r.imag) <= slack * max(1.0, abs(r))]
    return [min(max(r, lo), hi) for r in real if lo - slack <= r <= hi + slack]


def solve_zone1(x_f: float, omega_n: float, v_max: float) -> ZoneSolution:
    """t_f = pi/w + x_f/(2 V_m), T1 = pi/(2w) - x_f/(4 V_m); a pulse at x_f = 2 pi V_m / w."""
    _check_inputs(x_f, omega_n, v_max)
    boundary = _require_zone(1, x_f, omega_n, v_max)
    if boundary is not None:
        return _pulse(1, x_f, omega_n, v_max)
    T1 = math.pi / (2.0 * omega_n) - x_f / (4.0 * v_max)
    T2 = math.pi / (2.0 * omega_n) + x_f / (4.0 * v_max)
    return ZoneSolution(1, T1, T2, x_f, omega_n, v_max)


def zone2_candidates(x_f: float, omega_n: float, v_max: float) -> list[ZoneSolution]:
    a = x_f / (2.0 * v_max * omega_n)
    c = a * omega_n**2
    alpha, beta = math.sin(c), math.cos(c)
    roots = _companion_roots([4.0, 8.0 * beta, 0.0, -8.0 * beta, alpha**2 - 4.0])
    angles = []
    for z in _real_in(roots, -1.0, 1.0):
        t = math.acos(z)
        angles += [t, math.pi - t]
    return _candidates_from_angles(2, angles, x_f, omega_n, v_max)


def solve_zone2(x_f: float, omega_n: float, v_max: float) -> ZoneSolution:
    """Quartic 4z^4 + 8 beta z^3 - 8 beta z + alpha^2 - 4 = 0 in z = cos(w T1)."""
    boundary = _require_zone(2, x_f, omega_n, v_max)
    if boundary is not None:
        return _pulse(boundary.n, x_f, omega_n, v_max)
    candidates = zone2_candidates(x_f, omega_n, v_max)
    if not candidates:
        # racines quasi multiples près des bords de zone
        candidates = zone_candidates(2, x_f, omega_n, v_max)
    if not candidates:
        raise SolverError(f"zone 2 quartic has no admissible root for x_f={x_f}")
    return candidates[0]


def zone3_candidates(x_f: float, omega_n: float, v_max: float) -> list[ZoneSolution]:
    c = omega_n * x_f / (2.0 * v_max)
    beta = math.cos(c)
    roots = _companion_roots([-16.0, 24.0 + 24.0 * beta, -30.0 * beta - 18.0, beta**2 + 6.0 * beta + 9.0])
    angles = []
    for w2 in _real_in(roots, 0.0, 1.0):
        z = math.sqrt(w2)
        angles += [math.acos(z), math.acos(-z)]
    return _candidates_from_angles(3, angles, x_f, omega_n, v_max)


def solve_zone3(x_f: float, omega_n: float, v_max: float) -> ZoneSolution:
    """Cubic in w = cos^2(w T1); both signs of sqrt(w) are tried."""
    boundary = _require_zone(3, x_f, omega_n, v_max)
    if boundary is not None:
        return _pulse(boundary.n, x_f, omega_n, v_max)
    candidates = zone3_candidates(x_f, omega_n, v_max)
    if not candidates:
        candidates = zone_candidates(3, x_f, omega_n, v_max)
    if not candidates:
        raise SolverError(f"zone 3 cubic has no admissible root for x_f={x_f}")
    return candidates[0]


def _newton2(n: int, T1: float, T2: float, x_f: float, omega_n: float, v_max: float) -> tuple[float, float]:
    sign = (-1) ** (n + 1)
    w = omega_n
    for _ in range(6):
        F = np.array([
            T2 - n * T1 - x_f / (2.0 * v_max),
            sign * n * math.sin(w * T1) - math.sin(w * T2),
        ])
        if np.max(np.abs(F)) < 1e-15:
            break
        J = np.array([
            [-float(n), 1.0],
            [sign * n * w * math.cos(w * T1), -w * math.cos(w * T2)],
        ])
        try:
            dT1, dT2 = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        T1, T2 = T1 + dT1, T2 + dT2
    return T1, T2


def zone_candidates(n: int, x_f: float, omega_n: float, v_max: float, resolution: int = 400) -> list[ZoneSolution]:
    """Every admissible root of the zone-n constraints, shortest maneuver first."""
    c = omega_n * x_f / (2.0 * v_max)
    f, _ = _sine_residual(n, c)
    grid = np.linspace(0.0, math.pi, resolution * n + 1)
    values = np.array([f(t) for t in grid])
    angles = [t for t, value in zip(grid, values) if value == 0.0]
    for k in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        angles.append(brentq(f, grid[k], grid[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))

    found = []
    for sol in _candidates_from_angles(n, angles, x_f, omega_n, v_max):
        T1, T2 = _newton2(n, sol.T1, sol.T2, x_f, omega_n, v_max)
        polished = ZoneSolution(n, T1, T2, x_f, omega_n, v_max)
        if max(abs(r) for r in polished.constraint_residuals()) <= 1e-12 and _admissible(n, T1, T2, omega_n):
            found.append(polished)
        else:
            found.append(sol)
    return sorted(found, key=lambda sol: sol.T2)


def solve_zone_n(n: int, x_f: float, omega_n: float, v_max: float) -> ZoneSolution:
    """Numeric solution for any zone: sign-change bracketing in w*T1, then 2x2 Newton polish."""
    if n < 1:
        raise DomainError(f"zone index must be >= 1, got {n}")
    boundary = _require_zone(n, x_f, omega_n, v_max)
    if boundary is not None:
        return _pulse(boundary.n, x_f, omega_n, v_max)
    candidates = zone_candidates(n, x_f, omega_n, v_max)
    if not candidates:
        raise SolverError(f"no admissible zone-{n} solution for x_f={x_f}", zone=n)
    logger.debug("zone %d at x_f=%g: %d admissible root(s)", n, x_f, len(candidates))
    return candidates[0]


def solve_undamped(x_f: float, omega_n: float, v_max: float) -> ZoneSolution:
    zone = zone_of(x_f, omega_n, v_max)
    if zone.degenerate:
        return _pulse(zone.n, x_f, omega_n, v_max)
    solvers = {1: solve_zone1, 2: solve_zone2, 3: solve_zone3}
    if zone.n in solvers:
        return solvers[zone.n](x_f, omega_n, v_max)
    return solve_zone_n(zone.n, x_f, omega_n, v_max)


def to_profile(sol: ZoneSolution) -> BangOffBangProfile:
    """
    Anti-symmetric profile of a zone solution: n off-zones of width 2*T1 centred at
    T2 + (k - (n-1)/2) * 2*pi/w, k = 0..n-1.
    """
    if sol.degenerate:
        return BangOffBangProfile.pulse(sol.t_f, sol.v_max)
    spacing = 2.0 * math.pi / sol.omega_n
    switches = []
    for k in range(sol.n):
        centre = sol.T2 + (k - (sol.n - 1) / 2.0) * spacing
        switches += [centre - sol.T1, centre + sol.T1]
    times = [0.0] + switches + [sol.t_f]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ContractViolation(
            f"off-zones overlap or leave [0, t_f] for n={sol.n}, T1={sol.T1}, T2={sol.T2}"
        )
    return BangOffBangProfile(tuple(switches), sol.t_f, sol.v_max)
