"""Switching function phi(t) = B^T lambda(t) and its time derivative."""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from src.model.plant import PlantSpec, state_space
from src.utils.errors import ContractViolation


def switching_function(lambda0, plant: PlantSpec, t, sensitive_modes: tuple[int, ...] = ()):
    """
    Value and time derivative of the switching function at t (scalar or array).

    A single undamped mode uses lambda_3(t) = (1 - cos wt) l1 - w sin(wt) l2 + l3;
    otherwise the adjoint lambda' = -A^T lambda is propagated with the matrix exponential.
    """
    lambda0 = np.asarray(lambda0, dtype=float)
    A, B = state_space(plant, sensitive_modes)
    if lambda0.shape != B.shape:
        raise ContractViolation(f"costate vector has size {lambda0.size}, expected {B.size}")

    times = np.asarray(t, dtype=float)
    flat = np.atleast_1d(times)

    if plant.m == 1 and plant.undamped and not sensitive_modes:
        w = plant.modes[0].omega_n
        l1, l2, l3 = lambda0
        value = (1.0 - np.cos(w * flat)) * l1 - w * np.sin(w * flat) * l2 + l3
        slope = w * np.sin(w * flat) * l1 - w**2 * np.cos(w * flat) * l2
    else:
        lam = expm(-A.T[None, :, :] * flat[:, None, None]) @ lambda0
        value = lam @ B
        slope = -lam @ (A @ B)

    if times.ndim == 0:
        return float(value[0]), float(slope[0])
    return value, slope
