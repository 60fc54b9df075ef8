"""Zero loci of the optimal time-delay filter as the displacement grows."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.model.plant import PlantSpec
from src.model.tdfilter import ComplexWindow, find_zeros, from_profile
from src.solvers.designer import DesignResult, sweep
from src.utils.errors import DomainError, SolverError

logger = logging.getLogger(__name__)

LOCI_COLUMNS = ["x_f_mm", "re_rad_s", "im_rad_s", "multiplicity_flag", "robust"]


@dataclass
class LociTable:
    frame: pd.DataFrame
    continuity: list[dict] = field(default_factory=list)

    @property
    def continuous(self) -> bool:
        return all(run["continuous"] for run in self.continuity)

    def zeros_at(self, x_f: float, robust: bool) -> pd.DataFrame:
        rows = self.frame[(self.frame["robust"] == robust) & np.isclose(self.frame["x_f_mm"], x_f)]
        return rows.reset_index(drop=True)


def _designs(plant: PlantSpec, grid: np.ndarray, robust: bool, workers: int) -> list[DesignResult]:
    results = sweep(plant, grid, robust=robust, workers=workers)
    for x_f, result in zip(grid, results):
        if result is None:
            raise SolverError(f"{'robust' if robust else 'non-robust'} design failed at x_f={x_f:g}", x_f=x_f)
    return results


def _continuity(rows: pd.DataFrame, results: list[DesignResult], window: ComplexWindow, robust: bool) -> list[dict]:
    """Largest nearest-zero jump between neighbouring steps of one switch structure."""
    runs = []
    for prev, curr in zip(results, results[1:]):
        if prev.N != curr.N:
            continue
        bound = math.pi / max(prev.t_f, curr.t_f)
        a = rows[np.isclose(rows["x_f_mm"], prev.profile.x_f)]
        b = rows[np.isclose(rows["x_f_mm"], curr.profile.x_f)]
        za = (a["re_rad_s"] + 1j * a["im_rad_s"]).to_numpy()
        zb = (b["re_rad_s"] + 1j * b["im_rad_s"]).to_numpy()
        # les zéros proches du bord peuvent sortir de la fenêtre
        inner = (
            (za.real > window.re_min + bound) & (za.real < window.re_max - bound)
            & (za.imag > window.im_min + bound) & (za.imag < window.im_max - bound)
        )
        jump = float(np.max(np.min(np.abs(za[inner, None] - zb[None, :]), axis=1))) if inner.any() and zb.size else 0.0
        runs.append({
            "robust": robust,
            "N": curr.N,
            "x_from_mm": prev.profile.x_f,
            "x_to_mm": curr.profile.x_f,
            "max_jump_rad_s": jump,
            "bound_rad_s": bound,
            "continuous": jump <= bound,
        })
        if jump > bound:
            logger.warning(
                "loci jump %.3g > %.3g rad/s between %g and %g mm (robust=%s)",
                jump, bound, prev.profile.x_f, curr.profile.x_f, robust,
            )
    return runs


def loci_sweep(
    plant: PlantSpec,
    x_f_range: tuple[float, float],
    window: ComplexWindow | tuple[float, float, float, float],
    steps: int = 50,
    workers: int = 1,
    variants: tuple[bool, ...] = (False, True),
) -> LociTable:
    """
    For every x_f of an evenly spaced grid, design the robust and non-robust profiles and list
    the zeros of their filters inside the window.
    """
    if steps < 2:
        raise DomainError(f"a loci sweep needs at least 2 steps, got {steps}")
    window = ComplexWindow(*window)
    window.validate()
    lo, hi = (float(x) for x in x_f_range)
    if not 0.0 <= lo < hi:
        raise DomainError(f"invalid displacement range {x_f_range}")
    grid = np.linspace(lo, hi, steps + 1)[1:] if lo == 0.0 else np.linspace(lo, hi, steps)

    records = []
    continuity = []
    for robust in variants:
        results = _designs(plant, grid, robust, workers)
        rows = []
        for result in results:
            for zero in find_zeros(from_profile(result.profile), window):
                rows.append({
                    "x_f_mm": result.profile.x_f,
                    "re_rad_s": zero.value.real,
                    "im_rad_s": zero.value.imag,
                    "multiplicity_flag": zero.multiplicity_flag,
                    "robust": robust,
                })
        frame = pd.DataFrame(rows, columns=LOCI_COLUMNS)
        continuity += _continuity(frame, results, window, robust)
        records.append(frame)

    table = pd.concat(records, ignore_index=True) if records else pd.DataFrame(columns=LOCI_COLUMNS)
    logger.info("loci: %d zeros over %d displacements", len(table), len(grid))
    return LociTable(frame=table, continuity=continuity)
