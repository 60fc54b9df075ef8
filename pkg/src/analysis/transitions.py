"""
Switch-structure transitions along the displacement axis.

At a transition two adjacent switches merge: the switching function and its time derivative
vanish together at the merge instant t_cr. For an undamped mode these are the pulse
displacements 2 n pi V_m / w, where the n off-zones of zone n close at their centres. For a
damped mode the instants come from the designer: where the optimal switch count changes
between grid neighbours, the larger structure is continued through the gap and the
displacement where the vanishing spacing crosses zero is bracketed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from src.model.plant import PlantSpec
from src.solvers import closed_form
from src.solvers.constraints import ConstraintSet
from src.solvers.designer import DesignRequest, DesignResult, ProfileDesigner, sweep
from src.solvers.pmp import fit_costates_at
from src.utils.errors import ContractViolation, DomainError, SolverError

logger = logging.getLogger(__name__)

CONTINUATION_STEPS = 4


@dataclass(frozen=True)
class TransitionPoint:
    x_f: float
    t_cr: float
    kind: str
    residual: float | None = None

    def to_dict(self) -> dict:
        return {"x_f_mm": self.x_f, "t_cr_s": self.t_cr, "kind": self.kind}


def _check_range(x_f_range: tuple[float, float]) -> tuple[float, float]:
    lo, hi = (float(x) for x in x_f_range)
    if not (0.0 <= lo < hi and math.isfinite(hi)):
        raise DomainError(f"invalid displacement range {x_f_range}")
    return lo, hi


def _undamped_transitions(plant: PlantSpec, lo: float, hi: float) -> list[TransitionPoint]:
    mode = plant.modes[0]
    w, v = mode.omega_n, plant.v_max
    period = mode.period
    points = []
    for n, x_cr in enumerate(closed_form.pulse_displacements(w, v, hi), start=1):
        if x_cr <= lo:
            continue
        T2 = x_cr / (2.0 * v)
        centres = [T2 + (k - (n - 1) / 2.0) * period for k in range(n)]
        _, misfit = fit_costates_at(plant, centres, 2.0 * T2, v, tangent_times=centres)
        points += [TransitionPoint(x_cr, t_cr, "collapse", misfit) for t_cr in centres]
    return points


class _Branch:
    """Fixed-structure continuation of a design away from its grid point."""

    def __init__(self, plant: PlantSpec, designer: ProfileDesigner, start: DesignResult):
        self.plant = plant
        self.designer = designer
        self.x0 = start.profile.x_f
        self.T0 = start.delays

    def at(self, x_f: float) -> np.ndarray:
        T = self.T0
        for x in np.linspace(self.x0, x_f, CONTINUATION_STEPS + 1)[1:]:
            cons = ConstraintSet.for_plant(self.plant.with_x_f(x))
            T = self.designer.follow_branch(cons, T)
            if T is None:
                raise SolverError(f"branch continuation lost at x_f={x:g}", x_f=x)
        return T

    @staticmethod
    def spacings(T: np.ndarray) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], T]))


def _damped_transition(plant: PlantSpec, left: DesignResult, right: DesignResult) -> TransitionPoint | None:
    big, small = (left, right) if left.N > right.N else (right, left)
    request = DesignRequest(plant.with_x_f(big.profile.x_f))
    branch = _Branch(plant, ProfileDesigner(request), big)

    try:
        far = _Branch.spacings(branch.at(small.profile.x_f))
    except SolverError as e:
        logger.debug("no branch between %g and %g mm: %s", left.profile.x_f, right.profile.x_f, e)
        return None
    gap = int(np.argmin(far))
    if far[gap] >= 0.0:
        # changement de N sans fusion de commutations (certificat ou temps plus court)
        logger.debug("N %d -> %d between %g and %g mm without a merge", left.N, right.N, left.profile.x_f, right.profile.x_f)
        return None

    def spacing(x: float) -> float:
        return float(_Branch.spacings(branch.at(x))[gap])

    a, b = sorted((big.profile.x_f, small.profile.x_f))
    try:
        x_cr = brentq(spacing, a, b, xtol=1e-10)
    except (SolverError, ValueError) as e:
        logger.debug("spacing not bracketed on [%g, %g]: %s", a, b, e)
        return None

    T = branch.at(x_cr)
    times = np.concatenate([[0.0], T])
    t_cr = 0.5 * (times[gap] + times[gap + 1])
    switches = [t for i, t in enumerate(T[:-1]) if i not in (gap - 1, gap)] + [t_cr]
    _, misfit = fit_costates_at(plant, sorted(switches), T[-1], plant.v_max, tangent_times=[t_cr])
    kind = "collapse" if big.profile.x_f < small.profile.x_f else "birth"
    return TransitionPoint(float(x_cr), float(t_cr), kind, misfit)


def find_transitions(
    plant: PlantSpec, x_f_range: tuple[float, float], points: int = 60, workers: int = 1
) -> list[TransitionPoint]:
    """Every structure transition with x_f in (lo, hi], ordered by displacement then instant."""
    if plant.m != 1:
        raise ContractViolation(f"transition search needs a single mode, got {plant.m}")
    lo, hi = _check_range(x_f_range)
    if plant.undamped:
        found = _undamped_transitions(plant, lo, hi)
    else:
        if points < 2:
            raise DomainError(f"a transition sweep needs at least 2 points, got {points}")
        grid = np.linspace(lo, hi, points + 1)[1:] if lo == 0.0 else np.linspace(lo, hi, points)
        results = sweep(plant, grid, workers=workers)
        found = []
        for left, right in zip(results, results[1:]):
            if left is None or right is None or left.N == right.N:
                continue
            point = _damped_transition(plant, left, right)
            if point is not None:
                found.append(point)
    logger.info("%d transition(s) in (%g, %g] mm", len(found), lo, hi)
    return sorted(found, key=lambda p: (p.x_f, p.t_cr))
