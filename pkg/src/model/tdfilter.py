"""
Time-delay filter algebra for bang-off-bang velocity commands.

A profile that starts at V_m and toggles between V_m and 0 at T_1 < ... < T_N, ending at
t_f = T_{N+1}, has the velocity transform V(s) = V_m G_c(s) / s with

    G_c(s) = 1 + sum_{i=1}^{N+1} (-1)^i exp(-s T_i).

Cancelling a plant pole p means G_c(p) = 0; desensitising it means dG_c/ds(p) = 0 as well.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from src.utils.errors import ContractViolation, DomainError, ZeroSearchError

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-10
STEP_TOL = 1e-13
MULTIPLE_TOL = 1e-6
DEDUP_RADIUS = 1e-6


@dataclass(frozen=True)
class BangOffBangProfile:
    """Velocity command: on at V_m on [0, T_1], off on [T_1, T_2], ... on up to t_f."""

    switch_times: tuple[float, ...]
    t_f: float
    v_max: float

    def __post_init__(self):
        switches = tuple(float(t) for t in self.switch_times)
        object.__setattr__(self, "switch_times", switches)
        object.__setattr__(self, "t_f", float(self.t_f))
        object.__setattr__(self, "v_max", float(self.v_max))

        if not self.v_max > 0:
            raise DomainError(f"v_max must be positive, got {self.v_max}")
        if not self.t_f >= 0 or not math.isfinite(self.t_f):
            raise ContractViolation(f"t_f must be finite and non-negative, got {self.t_f}")
        if len(switches) % 2:
            raise ContractViolation(
                f"a bang-off-bang profile needs an even number of switches, got {len(switches)}"
            )
        times = (0.0,) + switches + (self.t_f,)
        if switches and any(b <= a for a, b in zip(times, times[1:])):
            raise ContractViolation(
                "switch times must satisfy 0 < T_1 < ... < T_N < t_f", switch_times=list(switches), t_f=self.t_f
            )

    @classmethod
    def pulse(cls, t_f: float, v_max: float) -> "BangOffBangProfile":
        return cls((), t_f, v_max)

    @property
    def n_switches(self) -> int:
        return len(self.switch_times)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array((0.0,) + self.switch_times + (self.t_f,))

    @property
    def delays(self) -> tuple[float, ...]:
        return self.switch_times + (self.t_f,)

    def segments(self) -> list[tuple[float, float, bool]]:
        """(start, end, on) for each constant-input segment."""
        b = self.breakpoints
        return [(b[j], b[j + 1], j % 2 == 0) for j in range(len(b) - 1)]

    @property
    def on_time(self) -> float:
        b = self.breakpoints
        return float(np.sum(b[1::2] - b[0:-1:2]))

    @property
    def x_f(self) -> float:
        return self.v_max * self.on_time

    def time_reversed(self) -> "BangOffBangProfile":
        return replace(self, switch_times=tuple(self.t_f - t for t in reversed(self.switch_times)))

    def perturbed(self, index: int, dt: float) -> "BangOffBangProfile":
        switches = list(self.switch_times)
        switches[index] += dt
        return replace(self, switch_times=tuple(switches))

    def to_dict(self) -> dict:
        return {
            "switch_times_s": list(self.switch_times),
            "t_f_s": self.t_f,
            "v_max_mm_s": self.v_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BangOffBangProfile":
        try:
            return cls(tuple(data["switch_times_s"]), data["t_f_s"], data["v_max_mm_s"])
        except KeyError as e:
            raise ContractViolation(f"profile JSON is missing key {e}") from None


@dataclass(frozen=True)
class TimeDelayFilter:
    """G_c(s) = 1 + sum (-1)^i exp(-s T_i) for delays T_1 < ... < T_{N+1}."""

    delays: tuple[float, ...]

    def __post_init__(self):
        delays = tuple(float(t) for t in self.delays)
        object.__setattr__(self, "delays", delays)
        if len(delays) % 2 == 0:
            raise ContractViolation(f"a filter needs an odd number of delays (N even), got {len(delays)}")
        if delays[0] <= 0 or any(b <= a for a, b in zip(delays, delays[1:])):
            raise ContractViolation("filter delays must be positive and strictly increasing", delays=list(delays))

    @property
    def n_switches(self) -> int:
        return len(self.delays) - 1

    @property
    def t_f(self) -> float:
        return self.delays[-1]

    @property
    def all_delays(self) -> np.ndarray:
        return np.array((0.0,) + self.delays)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([(-1.0) ** i for i in range(len(self.delays) + 1)])

    def __call__(self, s):
        return evaluate(self, s)


class ComplexWindow(NamedTuple):
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def validate(self) -> None:
        values = (self.re_min, self.re_max, self.im_min, self.im_max)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("zero-search window must be bounded")
        if self.re_max <= self.re_min or self.im_max <= self.im_min:
            raise DomainError(f"empty zero-search window {tuple(values)}")

    def contains(self, z: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        return (
            (z.real >= self.re_min - tol) & (z.real <= self.re_max + tol)
            & (z.imag >= self.im_min - tol) & (z.imag <= self.im_max + tol)
        )


class FilterZero(NamedTuple):
    value: complex
    multiple: bool

    @property
    def multiplicity_flag(self) -> str:
        return "double" if self.multiple else "single"


def from_profile(profile: BangOffBangProfile) -> TimeDelayFilter:
    return TimeDelayFilter(profile.delays)


def to_profile(filt: TimeDelayFilter, v_max: float) -> BangOffBangProfile:
    return BangOffBangProfile(filt.delays[:-1], filt.delays[-1], v_max)


def _weighted_sum(filt: TimeDelayFilter, s, weights: np.ndarray):
    s_arr = np.asarray(s, dtype=complex)
    terms = np.exp(-np.multiply.outer(s_arr, filt.all_delays))
    value = terms @ weights
    return complex(value) if value.ndim == 0 else value


def evaluate(filt: TimeDelayFilter, s):
    """G_c(s); accepts a scalar or an array of complex frequencies (1/s)."""
    return _weighted_sum(filt, s, filt.coefficients)


def eval_derivative(filt: TimeDelayFilter, s):
    """dG_c/ds = sum (-1)^(i+1) T_i exp(-s T_i)."""
    return _weighted_sum(filt, s, -filt.coefficients * filt.all_delays)


def eval_second_derivative(filt: TimeDelayFilter, s):
    return _weighted_sum(filt, s, filt.coefficients * filt.all_delays**2)


def pole_residuals(filt: TimeDelayFilter, pole: complex) -> tuple[float, float]:
    """Real and imaginary parts of G_c at a plant pole; both vanish when the pole is cancelled."""
    value = evaluate(filt, pole)
    return value.real, value.imag


def _seed_grid(filt: TimeDelayFilter, window: ComplexWindow, density: float) -> np.ndarray:
    spacing = 2.0 * math.pi / filt.t_f / density

    def axis(lo: float, hi: float) -> np.ndarray:
        count = max(1, int(math.ceil((hi - lo) / spacing)))
        step = (hi - lo) / count
        return lo + step * (np.arange(count) + 0.5)

    re = axis(window.re_min, window.re_max)
    im = axis(window.im_min, window.im_max)
    return (re[:, None] + 1j * im[None, :]).ravel()


def _newton(fun, dfun, z: np.ndarray, max_iter: int) -> np.ndarray:
    z = z.copy()
    active = np.ones(z.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            step = fun(z[idx]) / dfun(z[idx])
            z[idx] -= step
            done = ~np.isfinite(step) | (np.abs(step) < STEP_TOL)
            active[idx[done]] = False
    return z


def find_zeros(
    filt: TimeDelayFilter,
    window: ComplexWindow | Sequence[float],
    density: float = 4.0,
    max_iter: int = 100,
) -> list[FilterZero]:
    """
    Zeros of G_c inside a rectangle of the complex plane.

    Newton runs from a uniform seed grid whose spacing is (2*pi/t_f)/density. Converged
    points with |G_c| <= 1e-10 are kept; points where |dG_c/ds| is small are re-polished as
    stationary points of G_c and flagged as (at least) double zeros.

    Args:
        filt: filter to analyse.
        window: (re_min, re_max, im_min, im_max) in rad/s.
        density: seeds per expected zero spacing, at least 4.

    Returns:
        Deduplicated zeros sorted by imaginary then real part.

    Raises:
        ZeroSearchError: nothing converged although the argument principle counts zeros.
    """
    window = ComplexWindow(*window)
    window.validate()
    if density < 4:
        raise DomainError(f"seed density must be >= 4 per zero spacing, got {density}")

    seeds = _seed_grid(filt, window, density)
    z = _newton(lambda x: evaluate(filt, x), lambda x: eval_derivative(filt, x), seeds, max_iter)
    z = z[np.isfinite(z)]
    z = z[window.contains(z)]
    with np.errstate(all="ignore"):
        z = z[np.abs(evaluate(filt, z)) <= ZERO_TOL]

    if z.size:
        slope = np.abs(eval_derivative(filt, z))
        suspect = slope < 1e-3
        if suspect.any():
            polished = _newton(
                lambda x: eval_derivative(filt, x), lambda x: eval_second_derivative(filt, x), z[suspect], 50
            )
            with np.errstate(all="ignore"):
                ok = np.isfinite(polished) & (np.abs(evaluate(filt, polished)) <= ZERO_TOL)
            idx = np.flatnonzero(suspect)
            z[idx[ok]] = polished[ok]

    order = np.lexsort((z.real, z.imag))
    kept: list[complex] = []
    for candidate in z[order]:
        if all(abs(candidate - k) > DEDUP_RADIUS for k in kept):
            kept.append(complex(candidate))

    zeros = [FilterZero(k, bool(abs(eval_derivative(filt, k)) < MULTIPLE_TOL)) for k in kept]
    logger.debug("find_zeros: %d seeds -> %d zeros", seeds.size, len(zeros))

    if not zeros:
        expected = count_zeros(filt, window)
        if expected > 0:
            raise ZeroSearchError(
                f"no zero converged but the window encloses {expected} zero(s)", window=list(window)
            )
    return zeros


def count_zeros(filt: TimeDelayFilter, window: ComplexWindow | Sequence[float], samples: int | None = None) -> int:
    """Number of zeros (with multiplicity) inside the window, by the argument principle."""
    window = ComplexWindow(*window)
    window.validate()
    width = window.re_max - window.re_min
    height = window.im_max - window.im_min
    perimeter = 2.0 * (width + height)
    if samples is None:
        samples = max(1024, int(math.ceil(16.0 * filt.t_f * perimeter)))

    def edge(a: complex, b: complex, length: float) -> np.ndarray:
        count = max(8, int(math.ceil(samples * length / perimeter)))
        return a + (b - a) * np.arange(count) / count

    c00 = complex(window.re_min, window.im_min)
    c10 = complex(window.re_max, window.im_min)
    c11 = complex(window.re_max, window.im_max)
    c01 = complex(window.re_min, window.im_max)
    path = np.concatenate([
        edge(c00, c10, width),
        edge(c10, c11, height),
        edge(c11, c01, width),
        edge(c01, c00, height),
        [c00],
    ])
    phase = np.unwrap(np.angle(evaluate(filt, path)))
    return int(round((phase[-1] - phase[0]) / (2.0 * math.pi)))
