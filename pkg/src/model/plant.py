"""
Linear modal plant driven by a trolley velocity command.

Each mode obeys  x'' = -2 zeta w x' - w^2 x + w^2 x_i  with x_i' = v, so modes are decoupled
and share the trolley position x_i. Simulation is exact: inside a constant-velocity segment
the damped-oscillator response is evaluated in closed form, and the frequency-sensitivity
states (d/dw at fixed zeta) come from the matrix exponential of the augmented segment model.

State layout: [x_1, v_1, ..., x_m, v_m, x_i] for plain runs, followed by
[dx_1/dw_1, dv_1/dw_1, ..., dx_m/dw_m, dv_m/dw_m] for augmented runs. Units are mm, s, rad/s.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy.linalg import expm

from src.model.tdfilter import BangOffBangProfile
from src.utils.config import GRAVITY
from src.utils.errors import ContractViolation, DomainError

logger = logging.getLogger(__name__)

CURVATURE_STEP = 1e-4


@dataclass(frozen=True)
class ModeSpec:
    """One vibratory mode."""

    omega_n: float
    zeta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "omega_n", float(self.omega_n))
        object.__setattr__(self, "zeta", float(self.zeta))
        if not (self.omega_n > 0 and math.isfinite(self.omega_n)):
            raise DomainError(f"omega_n must be positive, got {self.omega_n}")
        if not 0.0 <= self.zeta < 1.0:
            raise DomainError(f"zeta must lie in [0, 1), got {self.zeta}")

    @classmethod
    def from_hz(cls, frequency_hz: float, zeta: float = 0.0) -> "ModeSpec":
        return cls(2.0 * math.pi * frequency_hz, zeta)

    @property
    def sigma(self) -> float:
        return self.zeta * self.omega_n

    @property
    def omega_d(self) -> float:
        return self.omega_n * math.sqrt(1.0 - self.zeta**2)

    @property
    def pole(self) -> complex:
        return complex(-self.sigma, self.omega_d)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_n

    def scaled(self, ratio: float) -> "ModeSpec":
        return replace(self, omega_n=self.omega_n * ratio)


@dataclass(frozen=True)
class PlantSpec:
    """Design problem statement: modes, velocity limit V_m and target displacement x_f."""

    modes: tuple[ModeSpec, ...]
    v_max: float
    x_f: float

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "v_max", float(self.v_max))
        object.__setattr__(self, "x_f", float(self.x_f))
        if not self.modes:
            raise DomainError("a plant needs at least one mode")
        if not self.v_max > 0:
            raise DomainError(f"v_max must be positive, got {self.v_max}")
        if not self.x_f > 0:
            raise DomainError(f"x_f must be positive, got {self.x_f}")
        omegas = [mode.omega_n for mode in self.modes]
        if any(b <= a for a, b in zip(omegas, omegas[1:])):
            raise DomainError(f"modes must have strictly increasing omega_n, got {omegas}")

    @property
    def m(self) -> int:
        return len(self.modes)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([mode.omega_n for mode in self.modes])

    @property
    def zetas(self) -> np.ndarray:
        return np.array([mode.zeta for mode in self.modes])

    @property
    def undamped(self) -> bool:
        return all(mode.zeta == 0.0 for mode in self.modes)

    def with_x_f(self, x_f: float) -> "PlantSpec":
        return replace(self, x_f=x_f)

    def scaled(self, ratio: float, mode: int | None = None) -> "PlantSpec":
        """Plant with natural frequencies multiplied by ratio (one mode, or all); zeta unchanged."""
        modes = tuple(
            spec.scaled(ratio) if mode is None or k == mode else spec for k, spec in enumerate(self.modes)
        )
        return replace(self, modes=modes)

    def to_dict(self) -> dict:
        return {
            "modes": [{"omega_n_rad_s": mode.omega_n, "zeta": mode.zeta} for mode in self.modes],
            "v_max_mm_s": self.v_max,
            "x_f_mm": self.x_f,
        }

    @classmethod
    def from_dict(cls, data: dict, hz: bool = False) -> "PlantSpec":
        """Build from the model JSON; with hz=True the frequencies are read as Hz."""
        try:
            scale = 2.0 * math.pi if hz else 1.0
            modes = tuple(
                ModeSpec(float(entry["omega_n_rad_s"]) * scale, float(entry.get("zeta", 0.0)))
                for entry in data["modes"]
            )
            return cls(modes, float(data["v_max_mm_s"]), float(data["x_f_mm"]))
        except KeyError as e:
            raise DomainError(f"plant JSON is missing key {e}") from None
        except (TypeError, ValueError) as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"plant JSON is malformed: {e}") from None


def mode_from_cable_length(length: float, gravity: float = GRAVITY) -> ModeSpec:
    """Small-angle pendulum as an undamped mode, omega_n = sqrt(g/L)."""
    if not length > 0:
        raise DomainError(f"cable length must be positive, got {length}")
    if not gravity > 0:
        raise DomainError(f"gravity must be positive, got {gravity}")
    return ModeSpec(math.sqrt(gravity / length), 0.0)


@dataclass(frozen=True)
class Trajectory:
    """States sampled at increasing times; rows follow the module's state layout."""

    t: np.ndarray
    states: np.ndarray
    n_modes: int
    augmented: bool

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def columns(self) -> list[str]:
        names = []
        for k in range(1, self.n_modes + 1):
            names += [f"x_mode{k}_mm", f"v_mode{k}_mm_s"]
        names.append("xi_mm")
        if self.augmented:
            for k in range(1, self.n_modes + 1):
                names += [f"dx_mode{k}_domega", f"dv_mode{k}_domega"]
        return names

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.states, columns=self.columns())
        frame.insert(0, "t_s", self.t)
        return frame


def _segments(profile: BangOffBangProfile) -> tuple[np.ndarray, np.ndarray]:
    """Segment start times and velocities, with a trailing zero-input segment from t_f on."""
    starts = np.append(profile.breakpoints[:-1], profile.t_f)
    velocities = np.array([profile.v_max if j % 2 == 0 else 0.0 for j in range(len(starts) - 1)] + [0.0])
    return starts, velocities


def _plain_step(plant: PlantSpec, x, xd, xi: float, v: float, tau: np.ndarray):
    """Closed-form response of every mode over elapsed times tau from (x, xd, xi)."""
    w = plant.omegas
    zeta = plant.zetas
    sigma = zeta * w
    wd = w * np.sqrt(1.0 - zeta**2)

    offset = xi - 2.0 * zeta * v / w
    d0 = x - offset
    dd0 = xd - v

    tau = np.asarray(tau, dtype=float)[:, None]
    decay = np.exp(-sigma * tau)
    c = np.cos(wd * tau)
    s = np.sin(wd * tau)
    d = decay * ((c + sigma / wd * s) * d0 + s / wd * dd0)
    dd = decay * (-(w**2 / wd) * s * d0 + (c - sigma / wd * s) * dd0)

    xi_t = xi + v * tau[:, 0]
    return offset + v * tau + d, v + dd, xi_t


def sensitivity_matrix(mode: ModeSpec) -> np.ndarray:
    """Augmented segment model on [x, x', dx/dw, dx'/dw, x_i, v] at fixed zeta."""
    w, z = mode.omega_n, mode.zeta
    M = np.zeros((6, 6))
    M[0, 1] = 1.0
    M[1, :] = [-(w**2), -2 * z * w, 0.0, 0.0, w**2, 0.0]
    M[2, 3] = 1.0
    M[3, :] = [-2 * w, -2 * z, -(w**2), -2 * z * w, 2 * w, 0.0]
    M[4, 5] = 1.0
    return M


def _sensitivity_step(plant: PlantSpec, x, xd, sens, xi: float, v: float, tau: np.ndarray) -> np.ndarray:
    out = np.empty((len(tau), plant.m, 2))
    for k, mode in enumerate(plant.modes):
        z0 = np.array([x[k], xd[k], sens[k, 0], sens[k, 1], xi, v])
        phi = expm(sensitivity_matrix(mode)[None, :, :] * np.asarray(tau, dtype=float)[:, None, None])
        out[:, k, :] = (phi @ z0)[:, 2:4]
    return out


def simulate(
    plant: PlantSpec,
    profile: BangOffBangProfile,
    augmented: bool = False,
    dt: float | None = None,
    t_end: float | None = None,
) -> Trajectory:
    """
    Exact response to a bang-off-bang profile, starting at rest.

    Samples are taken at t = 0, every switch, t_f, t_end and (optionally) on a uniform grid of
    step dt. Every sample is propagated from the start of its own segment, so the grid has no
    influence on the reported states. After t_f the command is zero.
    """
    t_end = profile.t_f if t_end is None else float(t_end)
    if t_end < profile.t_f:
        raise ContractViolation(f"t_end={t_end} precedes t_f={profile.t_f}")
    samples = [profile.breakpoints, [t_end]]
    if dt is not None:
        if not dt > 0:
            raise DomainError(f"dt must be positive, got {dt}")
        samples.append(np.arange(0.0, t_end, dt))
    t = np.unique(np.concatenate(samples))

    starts, velocities = _segments(profile)
    m = plant.m
    n_seg = len(starts)

    # états au début de chaque segment
    seg_x = np.zeros((n_seg, m))
    seg_xd = np.zeros((n_seg, m))
    seg_xi = np.zeros(n_seg)
    seg_sens = np.zeros((n_seg, m, 2))
    for j in range(n_seg - 1):
        tau = np.array([starts[j + 1] - starts[j]])
        x, xd, xi = _plain_step(plant, seg_x[j], seg_xd[j], seg_xi[j], velocities[j], tau)
        seg_x[j + 1], seg_xd[j + 1], seg_xi[j + 1] = x[0], xd[0], xi[0]
        if augmented:
            seg_sens[j + 1] = _sensitivity_step(
                plant, seg_x[j], seg_xd[j], seg_sens[j], seg_xi[j], velocities[j], tau
            )[0]

    width = 4 * m + 1 if augmented else 2 * m + 1
    states = np.empty((len(t), width))
    seg_index = np.searchsorted(starts, t, side="right") - 1
    for j in np.unique(seg_index):
        rows = np.flatnonzero(seg_index == j)
        tau = t[rows] - starts[j]
        x, xd, xi = _plain_step(plant, seg_x[j], seg_xd[j], seg_xi[j], velocities[j], tau)
        states[rows, 0 : 2 * m : 2] = x
        states[rows, 1 : 2 * m : 2] = xd
        states[rows, 2 * m] = xi
        if augmented:
            sens = _sensitivity_step(plant, seg_x[j], seg_xd[j], seg_sens[j], seg_xi[j], velocities[j], tau)
            states[rows, 2 * m + 1 :] = sens.reshape(len(rows), 2 * m)

    logger.debug("simulate: %d samples, %d segments, augmented=%s", len(t), n_seg, augmented)
    return Trajectory(t=t, states=states, n_modes=m, augmented=augmented)


@dataclass(frozen=True)
class ResidualReport:
    """Residual energy per mode at the end of a maneuver, with its frequency derivatives."""

    V: np.ndarray
    dV_domega: np.ndarray | None = None
    d2V_domega2: np.ndarray | None = None

    @property
    def total(self) -> float:
        return float(np.sum(self.V))

    def to_dict(self) -> dict:
        data = {"V_mm2_s2": self.V.tolist(), "V_total_mm2_s2": self.total}
        if self.dV_domega is not None:
            data["dV_domega"] = self.dV_domega.tolist()
        if self.d2V_domega2 is not None:
            data["d2V_domega2"] = self.d2V_domega2.tolist()
        return data


def _split(plant: PlantSpec, state: np.ndarray):
    m = plant.m
    x = state[0 : 2 * m : 2]
    xd = state[1 : 2 * m : 2]
    xi = state[2 * m]
    sens = state[2 * m + 1 :].reshape(m, 2) if state.size == 4 * m + 1 else None
    return x, xd, xi, sens


def residual_report(
    plant: PlantSpec,
    terminal: np.ndarray | Trajectory,
    derivatives: bool = False,
    profile: BangOffBangProfile | None = None,
) -> ResidualReport:
    """
    V = 1/2 x'^2 + 1/2 w^2 (x - x_f)^2 per mode, measured against the final trolley position.

    With derivatives=True the terminal state must be augmented; dV/dw follows from the
    sensitivity states. The curvature also needs the profile: second-order sensitivities are
    central differences of the first-order ones over w(1 +/- 1e-4).
    """
    state = terminal.terminal if isinstance(terminal, Trajectory) else np.asarray(terminal, dtype=float)
    m = plant.m
    if state.size not in (2 * m + 1, 4 * m + 1):
        raise ContractViolation(f"state of size {state.size} does not match a {m}-mode plant")

    x, xd, xi, sens = _split(plant, state)
    w = plant.omegas
    e = x - xi
    V = 0.5 * xd**2 + 0.5 * w**2 * e**2
    if not derivatives:
        return ResidualReport(V=V)
    if sens is None:
        raise ContractViolation("frequency derivatives need an augmented terminal state")

    sx, sxd = sens[:, 0], sens[:, 1]
    dV = xd * sxd + w * e**2 + w**2 * e * sx

    d2V = None
    if profile is not None:
        upper = simulate(plant.scaled(1.0 + CURVATURE_STEP), profile, augmented=True).terminal
        lower = simulate(plant.scaled(1.0 - CURVATURE_STEP), profile, augmented=True).terminal
        s_up = _split(plant, upper)[3]
        s_lo = _split(plant, lower)[3]
        second = (s_up - s_lo) / (2.0 * CURVATURE_STEP * w[:, None])
        s2x, s2xd = second[:, 0], second[:, 1]
        d2V = sxd**2 + xd * s2xd + e**2 + 4.0 * w * e * sx + w**2 * sx**2 + w**2 * e * s2x

    return ResidualReport(V=V, dV_domega=dV, d2V_domega2=d2V)


def terminal_energy(plant: PlantSpec, profile: BangOffBangProfile) -> np.ndarray:
    """Per-mode residual energy at t_f of a plain run."""
    return residual_report(plant, simulate(plant, profile)).V


def state_space(plant: PlantSpec, sensitive_modes: tuple[int, ...] = ()) -> tuple[np.ndarray, np.ndarray]:
    """
    (A, B) of the stacked modal model, optionally augmented with the frequency-sensitivity
    states of the listed modes. Ordering: [x_1, v_1, ..., x_m, v_m, x_i, dx_k/dw_k, dv_k/dw_k, ...].
    """
    m = plant.m
    ix = 2 * m
    dim = 2 * m + 1 + 2 * len(sensitive_modes)
    A = np.zeros((dim, dim))
    for k, mode in enumerate(plant.modes):
        w, z = mode.omega_n, mode.zeta
        A[2 * k, 2 * k + 1] = 1.0
        A[2 * k + 1, 2 * k] = -(w**2)
        A[2 * k + 1, 2 * k + 1] = -2.0 * z * w
        A[2 * k + 1, ix] = w**2
    for j, k in enumerate(sensitive_modes):
        w, z = plant.modes[k].omega_n, plant.modes[k].zeta
        r = ix + 1 + 2 * j
        A[r, r + 1] = 1.0
        A[r + 1, 2 * k] = -2.0 * w
        A[r + 1, 2 * k + 1] = -2.0 * z
        A[r + 1, r] = -(w**2)
        A[r + 1, r + 1] = -2.0 * z * w
        A[r + 1, ix] = 2.0 * w
    B = np.zeros(dim)
    B[ix] = 1.0
    return A, B
