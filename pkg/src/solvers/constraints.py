"""
Equality constraints of the N-switch minimum-time problem in the delay variables
T = (T_1, ..., T_N, T_{N+1} = t_f).

Rows, in order:
  displacement   sum (-1)^(i+1) T_i - x_f / V_m
  per mode k     Re, Im of G_c(p_k)
  per robust k   Re, Im of dG_c/ds(p_k)

Every row is a sum of single-variable terms, so the Hessian of any combination of rows is
diagonal; the KKT polish relies on that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.model.plant import PlantSpec


@dataclass(frozen=True)
class ConstraintSet:
    poles: tuple[complex, ...]
    robust_poles: tuple[complex, ...]
    on_time: float

    @classmethod
    def for_plant(cls, plant: PlantSpec, robust_modes: tuple[int, ...] = ()) -> "ConstraintSet":
        return cls(
            poles=tuple(mode.pole for mode in plant.modes),
            robust_poles=tuple(plant.modes[k].pole for k in robust_modes),
            on_time=plant.x_f / plant.v_max,
        )

    @property
    def n_eq(self) -> int:
        return 1 + 2 * len(self.poles) + 2 * len(self.robust_poles)

    def names(self) -> list[str]:
        labels = ["displacement"]
        for k in range(len(self.poles)):
            labels += [f"mode{k + 1}_re", f"mode{k + 1}_im"]
        for k in range(len(self.robust_poles)):
            labels += [f"robust{k + 1}_re", f"robust{k + 1}_im"]
        return labels

    @staticmethod
    def _signs(n: int) -> np.ndarray:
        return np.array([(-1.0) ** i for i in range(1, n + 1)])

    def residuals(self, T: np.ndarray) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        sg = self._signs(T.size)
        rows = [-(sg @ T) - self.on_time]
        for p in self.poles:
            g = 1.0 + sg @ np.exp(-p * T)
            rows += [g.real, g.imag]
        for p in self.robust_poles:
            d = -(sg * T) @ np.exp(-p * T)
            rows += [d.real, d.imag]
        return np.array(rows)

    def jacobian(self, T: np.ndarray) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        sg = self._signs(T.size)
        rows = [-sg]
        for p in self.poles:
            d = -p * sg * np.exp(-p * T)
            rows += [d.real, d.imag]
        for p in self.robust_poles:
            d = -sg * (1.0 - p * T) * np.exp(-p * T)
            rows += [d.real, d.imag]
        return np.vstack(rows)

    def hessian_diagonal(self, T: np.ndarray, multipliers: np.ndarray) -> np.ndarray:
        """Diagonal of sum_j mu_j * Hess(c_j)."""
        T = np.asarray(T, dtype=float)
        sg = self._signs(T.size)
        diag = np.zeros(T.size)
        row = 1
        for p in self.poles:
            h = p**2 * sg * np.exp(-p * T)
            diag += multipliers[row] * h.real + multipliers[row + 1] * h.imag
            row += 2
        for p in self.robust_poles:
            h = sg * (2.0 * p - p**2 * T) * np.exp(-p * T)
            diag += multipliers[row] * h.real + multipliers[row + 1] * h.imag
            row += 2
        return diag
