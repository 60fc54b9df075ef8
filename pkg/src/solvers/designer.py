"""
General N-switch minimum-time designer.

For each candidate switch count N = 0, 2, 4, ... the delays T_1..T_{N+1} minimise t_f under
the displacement and pole-cancellation equalities (plus double-zero equalities for robust
modes) and the ordering T_1 <= ... <= T_{N+1}. Each N is solved from a deterministic family
of seeds with SLSQP, then polished by Newton on the KKT system. The first N whose best
solution passes the costate certificate is returned.

Seeds come from warm starts, the closed-form zones and uniform guesses, and from the profiles
found at smaller N with zones opened (split in two, or at the worst costate sign violation).
Robust designs also start from the half-displacement profile echoed an odd number of half
periods later. When no N is certified, the design is reached by continuation in x_f from a
certified shorter move before falling back to the fastest uncertified profile.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from scipy.optimize import minimize

from src.model.plant import ModeSpec, PlantSpec
from src.model.tdfilter import BangOffBangProfile
from src.solvers import closed_form
from src.solvers.constraints import ConstraintSet
from src.solvers.pmp import PmpCertificate, certify
from src.tools.worker_pool import run_tasks
from src.utils.errors import DomainError, InfeasibleDesignError, SolverError

logger = logging.getLogger(__name__)

INTERNAL_TOL = 1e-12
REPORTED_TOL = 1e-9
STEP_TOL = 1e-13
COLLAPSE_TOL = 1e-7
HOMOTOPY_STEPS = 5
MARCH_STEP = 0.05
MARCH_TRIES = 4


@dataclass(frozen=True)
class DesignRequest:
    """Design problem: plant, robustness choice and switch-count cap."""

    plant: PlantSpec
    robust: bool = False
    robust_modes: tuple[int, ...] | None = None
    max_switches: int = 8

    def __post_init__(self):
        if self.max_switches < 0 or self.max_switches % 2:
            raise DomainError(f"max_switches must be even and >= 0, got {self.max_switches}")
        if self.robust_modes is not None:
            modes = tuple(sorted(set(int(k) for k in self.robust_modes)))
            if any(k < 0 or k >= self.plant.m for k in modes):
                raise DomainError(f"robust_modes {modes} outside 0..{self.plant.m - 1}")
            object.__setattr__(self, "robust_modes", modes)

    @property
    def desensitized(self) -> tuple[int, ...]:
        if not self.robust:
            return ()
        return self.robust_modes if self.robust_modes is not None else tuple(range(self.plant.m))


@dataclass(frozen=True)
class DesignResult:
    profile: BangOffBangProfile
    N: int
    constraint_residuals: dict[str, float]
    pmp_certificate: PmpCertificate | None
    robust: bool = False
    robust_modes: tuple[int, ...] = ()
    seed: str = ""
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def t_f(self) -> float:
        return self.profile.t_f

    @property
    def max_residual(self) -> float:
        return max(abs(v) for v in self.constraint_residuals.values())

    @property
    def delays(self) -> np.ndarray:
        return np.array(self.profile.delays)

    def to_dict(self) -> dict:
        return {
            "profile": self.profile.to_dict(),
            "N": self.N,
            "t_f_s": self.t_f,
            "robust": self.robust,
            "robust_modes": list(self.robust_modes),
            "constraint_residuals": self.constraint_residuals,
            "pmp_certificate": self.pmp_certificate.to_dict() if self.pmp_certificate else None,
            "seed": self.seed,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class _Candidate:
    T: np.ndarray
    seed: str

    @property
    def t_f(self) -> float:
        return float(self.T[-1])


def _ordered(T: np.ndarray, tol: float = 0.0) -> bool:
    return bool(T[0] > tol and np.all(np.diff(T) > tol))


def _from_segments(on: Iterable[float], off: Iterable[float]) -> np.ndarray:
    """Delays from alternating on/off durations (on first and last)."""
    on, off = list(on), list(off)
    durations = [on[0]]
    for a, b in zip(off, on[1:]):
        durations += [a, b]
    return np.cumsum(durations)


def _to_segments(T: np.ndarray) -> tuple[list[float], list[float]]:
    durations = np.diff(np.concatenate([[0.0], T]))
    return list(durations[0::2]), list(durations[1::2])


def _durations(T: np.ndarray) -> list[float]:
    return list(np.diff(np.concatenate([[0.0], T])))


def _split(d: list[float], i: int, width: float, at: float = 0.5) -> list[float] | None:
    """
    Open a zone of the opposite kind inside segment i (even index = on). An off-zone keeps the
    on-time; a new pulse is paid for by the longest on-zone.
    """
    d = list(d)
    length = d[i]
    if i % 2 == 0:
        d[i : i + 1] = [at * length, width, (1.0 - at) * length]
        return d if length > 0 else None
    if length <= 2.0 * width:
        return None
    d[i : i + 1] = [at * (length - width), width, (1.0 - at) * (length - width)]
    k = max(range(0, len(d), 2), key=lambda j: d[j])
    if d[k] <= 2.0 * width:
        return None
    d[k] -= width
    return d


def _grown(T: np.ndarray, N: int, width: float) -> list[tuple[str, np.ndarray]]:
    """Seeds with N switches grown from a shorter structure by opening zones."""
    d = _durations(T)
    missing = N - (len(d) - 1)
    seeds = []
    if missing == 2:
        for i in range(len(d)):
            grown = _split(d, i, width)
            if grown is not None:
                seeds.append((f"split[{i + 1}]", np.cumsum(grown)))
    elif missing == 4:
        # paires symétriques : les profils optimaux sont anti-symétriques
        for i in range(len(d) // 2):
            outer = _split(d, len(d) - 1 - i, width)
            grown = _split(outer, i, width) if outer is not None else None
            if grown is not None:
                seeds.append((f"split[{i + 1},{len(d) - i}]", np.cumsum(grown)))
    return seeds


def _needle(T: np.ndarray, t: float, width: float) -> np.ndarray | None:
    """Open a zone of the opposite kind centred at t."""
    d = _durations(T)
    edges = np.concatenate([[0.0], T])
    i = int(np.clip(np.searchsorted(edges, t) - 1, 0, len(d) - 1))
    if d[i] <= 0:
        return None
    grown = _split(d, i, width, at=float(np.clip((t - edges[i]) / d[i], 0.05, 0.95)))
    return np.cumsum(grown) if grown is not None else None


def _resize(T: np.ndarray, N: int, filler: float) -> np.ndarray | None:
    """Add or remove off-zones so a seed has N switches, keeping the on-time."""
    on, off = _to_segments(T)
    if len(off) * 2 == N:
        return T
    while len(off) * 2 > N:
        # retirer la zone morte la plus proche d'une extrémité
        k = 0 if len(off) % 2 else len(off) - 1
        on[k : k + 2] = [on[k] + on[k + 1]]
        del off[k]
    while len(off) * 2 < N:
        k = int(np.argmax(on))
        half = on[k] / 2.0
        on[k : k + 1] = [half, half]
        off.insert(k, filler)
    if min(on) <= 0 or (off and min(off) <= 0):
        return None
    return _from_segments(on, off)


class ProfileDesigner:
    """Multi-start NLP designer with bottom-up switch-count selection."""

    def __init__(self, request: DesignRequest, lookahead: bool = True, march: bool = True):
        self.request = request
        self.plant = request.plant
        self.robust_modes = request.desensitized
        self.constraints = ConstraintSet.for_plant(self.plant, self.robust_modes)
        self.lookahead = lookahead
        self.march = march

    # ---- seeds -------------------------------------------------------------------------

    def _closed_form_seeds(self, plant: PlantSpec, N: int) -> list[tuple[str, np.ndarray]]:
        seeds = []
        for k, mode in enumerate(plant.modes):
            try:
                sol = closed_form.solve_undamped(plant.x_f, mode.omega_n, plant.v_max)
                profile = closed_form.to_profile(sol)
            except (SolverError, ValueError) as e:
                logger.debug("closed-form seed for mode %d unavailable: %s", k, e)
                continue
            resized = _resize(np.array(profile.delays), N, 0.05 * mode.period)
            if resized is not None:
                seeds.append((f"closed_form[mode{k + 1}]", resized))
        return seeds

    def _uniform_seeds(self, plant: PlantSpec, N: int) -> list[tuple[str, np.ndarray]]:
        tau = plant.x_f / plant.v_max
        if N == 0:
            return [("pulse", np.array([tau]))]
        seeds = []
        zones = N // 2
        for k, mode in enumerate(plant.modes):
            for fraction in (0.1, 0.25, 0.4):
                on = [tau / (zones + 1)] * (zones + 1)
                off = [fraction * mode.period] * zones
                seeds.append((f"uniform[mode{k + 1},{fraction}]", _from_segments(on, off)))
        return seeds

    def _robust_seeds(self, plant: PlantSpec, N: int) -> list[tuple[str, np.ndarray]]:
        """Three-pulse anti-symmetric seeds (a, 2b, a) centred at multiples of half a period."""
        if N < 4:
            return []
        tau = plant.x_f / plant.v_max
        seeds = []
        for k in self.robust_modes:
            half = math.pi / plant.modes[k].omega_n
            for a_frac in (0.25, 1.0 / 3.0):
                a = a_frac * tau
                b = (tau - 2.0 * a) / 2.0
                for q in range(1, 7):
                    T = q * half
                    gap = T - a - b
                    if gap <= 0:
                        continue
                    base = _from_segments([a, 2.0 * b, a], [gap, gap])
                    resized = _resize(base, N, 0.05 * plant.modes[k].period)
                    if resized is not None:
                        seeds.append((f"three_pulse[mode{k + 1},q={q},a={a_frac:.2f}]", resized))
                    if len(seeds) >= 8:
                        return seeds
        return seeds

    def _echo_seeds(self, plant: PlantSpec, N: int) -> list[tuple[str, np.ndarray]]:
        """
        The minimum-time profile for x_f / 2, repeated an odd number of half periods later:
        (1 + e^{-sD}) doubles the zero at the robust mode, so the seed is already feasible.
        """
        seeds = []
        for k in self.robust_modes:
            mode = plant.modes[k]
            try:
                half = closed_form.to_profile(closed_form.solve_undamped(plant.x_f / 2.0, mode.omega_n, plant.v_max))
            except (SolverError, ValueError) as e:
                logger.debug("echo seed for mode %d unavailable: %s", k, e)
                continue
            d = _durations(np.array(half.delays))
            step = math.pi / mode.omega_n
            q = math.ceil(half.t_f / step - 1e-9)
            q += 1 - q % 2
            for delay in (q * step, (q + 2) * step):
                gap = delay - half.t_f
                if gap <= COLLAPSE_TOL:
                    continue
                T = np.cumsum(d + [gap] + d)
                resized = T if T.size == N + 1 else _resize(T, N, 0.05 * mode.period)
                if resized is not None:
                    seeds.append((f"echo[mode{k + 1},{delay / step:.0f}]", resized))
        return seeds

    def _split_seeds(self, plant: PlantSpec, N: int) -> list[tuple[str, np.ndarray]]:
        """Robust seeds: the non-robust closed form of the same zone with extra zones opened."""
        seeds = []
        for k in self.robust_modes:
            mode = plant.modes[k]
            try:
                base = closed_form.to_profile(closed_form.solve_undamped(plant.x_f, mode.omega_n, plant.v_max))
            except (SolverError, ValueError):
                continue
            for name, T in _grown(np.array(base.delays), N, 0.05 * mode.period):
                seeds.append((f"closed_form[mode{k + 1}]+{name}", T))
        return seeds

    def _seeds(
        self, plant: PlantSpec, N: int, warm: list[np.ndarray], extra: list[tuple[str, np.ndarray]] = ()
    ) -> list[tuple[str, np.ndarray]]:
        width = 0.05 * plant.modes[0].period
        seeds = []
        for T in warm:
            T = np.asarray(T, dtype=float)
            if T.size == N + 1:
                seeds.append(("warm_start", T))
            else:
                seeds += [(f"warm_start+{name}", G) for name, G in _grown(T, N, width)]
        seeds += [item for item in extra if item[1].size == N + 1]
        seeds += self._closed_form_seeds(plant, N)
        if self.robust_modes:
            seeds += self._echo_seeds(plant, N)
            seeds += self._split_seeds(plant, N)
            seeds += self._robust_seeds(plant, N)
        seeds += self._uniform_seeds(plant, N)
        return seeds

    # ---- local solves ------------------------------------------------------------------

    def _newton_feasibility(self, cons: ConstraintSet, T: np.ndarray, iterations: int = 50) -> np.ndarray:
        """
        Minimum-norm Newton (Gauss-Newton when over-determined) on the equalities. A diverging
        iteration (overflowing exp(sigma T) on damped modes) comes back as a NaN vector.
        """
        T = T.copy()
        for _ in range(iterations):
            r = cons.residuals(T)
            J = cons.jacobian(T)
            if not (np.all(np.isfinite(r)) and np.all(np.isfinite(J))):
                return np.full_like(T, np.nan)
            if np.max(np.abs(r)) < INTERNAL_TOL * 0.1:
                break
            try:
                step, *_ = np.linalg.lstsq(J, -r, rcond=None)
            except np.linalg.LinAlgError:
                return np.full_like(T, np.nan)
            if not np.all(np.isfinite(step)):
                return np.full_like(T, np.nan)
            T = T + step
            if np.max(np.abs(step)) < STEP_TOL:
                break
        return T

    def _kkt_polish(self, cons: ConstraintSet, T: np.ndarray, iterations: int = 30) -> np.ndarray | None:
        n = T.size
        p = cons.n_eq
        grad = np.zeros(n)
        grad[-1] = 1.0
        J = cons.jacobian(T)
        if not np.all(np.isfinite(J)):
            return None
        mu, *_ = np.linalg.lstsq(J.T, -grad, rcond=None)
        for _ in range(iterations):
            J = cons.jacobian(T)
            r = cons.residuals(T)
            if not (np.all(np.isfinite(J)) and np.all(np.isfinite(r))):
                return None
            stationarity = grad + J.T @ mu
            if np.max(np.abs(r)) < INTERNAL_TOL * 0.1 and np.max(np.abs(stationarity)) < 1e-11:
                return T
            K = np.zeros((n + p, n + p))
            K[:n, :n] = np.diag(cons.hessian_diagonal(T, mu))
            K[:n, n:] = J.T
            K[n:, :n] = J
            rhs = -np.concatenate([stationarity, r])
            try:
                step = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                step, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            if not np.all(np.isfinite(step)) or np.max(np.abs(step[:n])) > 0.1 * T[-1]:
                return None
            T = T + step[:n]
            mu = mu + step[n:]
            if np.max(np.abs(step[:n])) < STEP_TOL:
                break
        return T if np.max(np.abs(cons.residuals(T))) < INTERNAL_TOL else None

    def _slsqp(self, cons: ConstraintSet, T0: np.ndarray) -> np.ndarray:
        n = T0.size
        order = np.zeros((n, n))
        order[0, 0] = 1.0
        for i in range(1, n):
            order[i, i] = 1.0
            order[i, i - 1] = -1.0
        objective_grad = np.zeros(n)
        objective_grad[-1] = 1.0
        result = minimize(
            lambda T: T[-1],
            T0,
            jac=lambda T: objective_grad,
            method="SLSQP",
            constraints=[
                {"type": "eq", "fun": cons.residuals, "jac": cons.jacobian},
                {"type": "ineq", "fun": lambda T: order @ T, "jac": lambda T: order},
            ],
            options={"ftol": 1e-13, "maxiter": 300},
        )
        if not result.success:
            logger.debug("SLSQP from %s: %s", np.round(T0, 4), result.message)
        return np.asarray(result.x, dtype=float)

    def solve_structure(self, cons: ConstraintSet, T0: np.ndarray) -> np.ndarray | None:
        """
        Locally optimal delays with the seed's switch count, or None.

        The returned vector satisfies the equalities to the internal tolerance but may be
        unordered; ordering is the caller's decision (collapse, reject or follow a branch).
        A seed whose iterations blow up is dropped.
        """
        n, p = T0.size, cons.n_eq
        with np.errstate(all="ignore"):
            try:
                if p >= n:
                    T = self._newton_feasibility(cons, T0)
                else:
                    T = self._slsqp(cons, T0)
                    polished = self._kkt_polish(cons, T) if np.all(np.isfinite(T)) else None
                    if polished is not None and polished[-1] <= T[-1] + 1e-6:
                        T = polished
                    elif np.all(np.isfinite(T)):
                        T = self._newton_feasibility(cons, T)
            except (np.linalg.LinAlgError, ValueError) as e:
                logger.debug("seed %s dropped: %s", np.round(T0, 4), e)
                return None
            return T if self._feasible(cons, T) else None

    def follow_branch(self, cons: ConstraintSet, T0: np.ndarray) -> np.ndarray | None:
        """Stationary point of the seed's structure without the ordering constraints."""
        with np.errstate(all="ignore"):
            try:
                if cons.n_eq >= T0.size:
                    T = self._newton_feasibility(cons, T0)
                else:
                    T = self._kkt_polish(cons, T0)
            except (np.linalg.LinAlgError, ValueError):
                return None
            return T if T is not None and self._feasible(cons, T) else None

    @staticmethod
    def _feasible(cons: ConstraintSet, T: np.ndarray) -> bool:
        if not np.all(np.isfinite(T)):
            return False
        return bool(np.all(np.abs(cons.residuals(T)) <= INTERNAL_TOL))

    def _candidates(
        self, plant: PlantSpec, cons: ConstraintSet, N: int, warm: list[np.ndarray], extra=()
    ) -> list[_Candidate]:
        found: list[_Candidate] = []
        for name, T0 in self._seeds(plant, N, warm, extra):
            T = self.solve_structure(cons, T0)
            if T is None or not _ordered(T):
                continue
            if N and np.min(np.diff(np.concatenate([[0.0], T]))) < COLLAPSE_TOL:
                # paire de commutations confondue : relève d'un N plus petit
                continue
            if any(np.max(np.abs(T - c.T)) < 1e-8 for c in found):
                continue
            found.append(_Candidate(T, name))
        return sorted(found, key=lambda c: c.t_f)

    def _homotopy(self, N: int, warm: list[np.ndarray], extra=()) -> list[_Candidate]:
        """Continue the best undamped solutions to the actual damping in equal steps."""
        undamped = replace(self.plant, modes=tuple(ModeSpec(m.omega_n, 0.0) for m in self.plant.modes))
        cons0 = ConstraintSet.for_plant(undamped, self.robust_modes)
        start = self._candidates(undamped, cons0, N, warm, extra)[:2]
        continued = []
        for cand in start:
            T = cand.T
            for step in range(1, HOMOTOPY_STEPS + 1):
                scale = step / HOMOTOPY_STEPS
                plant_s = replace(
                    self.plant, modes=tuple(ModeSpec(m.omega_n, m.zeta * scale) for m in self.plant.modes)
                )
                T = self.solve_structure(ConstraintSet.for_plant(plant_s, self.robust_modes), T)
                if T is None or not _ordered(T, COLLAPSE_TOL):
                    break
            else:
                continued.append(_Candidate(T, f"homotopy<{cand.seed}>"))
        return continued

    def best_for(
        self, N: int, warm: list[np.ndarray] | None = None, extra: list[tuple[str, np.ndarray]] | None = None
    ) -> _Candidate | None:
        warm, extra = warm or [], extra or []
        found = self._candidates(self.plant, self.constraints, N, warm, extra)
        if not self.plant.undamped and N:
            for cand in self._homotopy(N, warm, extra):
                if any(np.max(np.abs(cand.T - c.T)) < 1e-8 for c in found):
                    continue
                found.append(cand)
            found.sort(key=lambda c: c.t_f)
        return found[0] if found else None

    def _grown_seeds(
        self, feasible: list[tuple[_Candidate, PmpCertificate]], N: int
    ) -> list[tuple[str, np.ndarray]]:
        """Seeds for N grown from the best profiles of smaller switch counts."""
        period = min(m.period for m in self.plant.modes)
        seeds = []
        for cand, certificate in feasible:
            if cand.T.size == N - 1 and not certificate.passed and certificate.violation_time is not None:
                # zone opposée à l'endroit où le signe de phi est le plus faux
                T = _needle(cand.T, certificate.violation_time, 0.02 * period)
                if T is not None:
                    seeds.append((f"needle<{cand.seed}>", T))
            seeds += [(f"{name}<{cand.seed}>", T) for name, T in _grown(cand.T, N, 0.05 * period)]
        return seeds

    # ---- selection ---------------------------------------------------------------------

    def _result(self, cand: _Candidate, certificate: PmpCertificate | None, warnings=()) -> DesignResult:
        residuals = self.constraints.residuals(cand.T)
        profile = BangOffBangProfile(tuple(cand.T[:-1]), cand.T[-1], self.plant.v_max)
        return DesignResult(
            profile=profile,
            N=cand.T.size - 1,
            constraint_residuals={name: float(value) for name, value in zip(self.constraints.names(), residuals)},
            pmp_certificate=certificate,
            robust=self.request.robust,
            robust_modes=self.robust_modes,
            seed=cand.seed,
            warnings=tuple(warnings),
        )

    def _certify(self, cand: _Candidate) -> PmpCertificate:
        profile = BangOffBangProfile(tuple(cand.T[:-1]), cand.T[-1], self.plant.v_max)
        return certify(self.plant, profile, self.robust_modes)

    def _at(self, x_f: float) -> ProfileDesigner:
        return ProfileDesigner(
            replace(self.request, plant=self.plant.with_x_f(x_f)), lookahead=self.lookahead, march=False
        )

    def _march(self) -> DesignResult | None:
        """
        Continuation in x_f: a certified design a few percent shorter, then equal steps back up
        to x_f, each warm-started from the previous one.
        """
        for k in range(1, MARCH_TRIES + 1):
            x0 = self.plant.x_f * (1.0 - MARCH_STEP * k)
            try:
                prev = self._at(x0).design()
            except SolverError as e:
                logger.debug("march from x_f=%g unavailable: %s", x0, e)
                continue
            if prev.warnings:
                continue
            for x in np.linspace(x0, self.plant.x_f, 2 * k + 1)[1:]:
                try:
                    prev = self._at(float(x)).design([prev.delays])
                except SolverError:
                    break
                if prev.warnings:
                    break
            else:
                logger.debug("x_f=%g reached by continuation from %g", self.plant.x_f, x0)
                return replace(prev, seed=f"march<{prev.seed}>")
        return None

    def design(self, warm: list[np.ndarray] | None = None) -> DesignResult:
        feasible: list[tuple[_Candidate, PmpCertificate]] = []
        chosen: tuple[_Candidate, PmpCertificate] | None = None

        for N in range(0, self.request.max_switches + 1, 2):
            cand = self.best_for(N, warm, self._grown_seeds(feasible, N))
            certificate = self._certify(cand) if cand is not None else None
            if cand is not None:
                feasible.append((cand, certificate))
                logger.debug("N=%d: t_f=%.9f seed=%s pmp=%s", N, cand.t_f, cand.seed, certificate.status)
            else:
                logger.debug("N=%d: no feasible solution", N)

            if chosen is None:
                if certificate is not None and certificate.passed:
                    chosen = (cand, certificate)
                    if not self.lookahead:
                        break
                continue
            # un seul cran d'anticipation : N+2 doit faire strictement mieux
            if certificate is not None and certificate.passed and cand.t_f < chosen[0].t_f - 1e-9:
                chosen = (cand, certificate)
                continue
            break

        if chosen is not None:
            return self._result(*chosen)
        if self.march:
            marched = self._march()
            if marched is not None:
                return marched
        if not feasible:
            raise InfeasibleDesignError(
                f"no feasible profile with N <= {self.request.max_switches}; raise --max-switches",
                x_f=self.plant.x_f,
                max_switches=self.request.max_switches,
            )
        cand, certificate = min(feasible, key=lambda item: item[0].t_f)
        message = f"no switch count up to {self.request.max_switches} passed the costate check"
        logger.warning("%s (x_f=%g); returning the fastest feasible profile", message, self.plant.x_f)
        return self._result(cand, certificate, warnings=[message])


def design(request: DesignRequest, warm: list[np.ndarray] | None = None, lookahead: bool = True) -> DesignResult:
    return ProfileDesigner(request, lookahead=lookahead).design(warm)


def _sweep_chunk(task: dict) -> list[DesignResult | None]:
    results: list[DesignResult | None] = []
    warm: list[np.ndarray] = []
    for x_f in task["x_f"]:
        try:
            request = DesignRequest(
                task["plant"].with_x_f(x_f), task["robust"], task["robust_modes"], task["max_switches"]
            )
            result = design(request, warm)
        except Exception as e:
            logger.warning("sweep point x_f=%g failed: %s", x_f, e)
            results.append(None)
            continue
        results.append(result)
        # on repart du dernier profil certifié
        warm = [result.delays] if not result.warnings else warm[:1] + [result.delays]
    return results


def sweep(
    plant: PlantSpec,
    x_f_grid: Iterable[float],
    robust: bool = False,
    robust_modes: tuple[int, ...] | None = None,
    max_switches: int = 8,
    workers: int = 1,
) -> list[DesignResult | None]:
    """
    Designs over a displacement grid, in grid order. Each worker takes a contiguous chunk and
    seeds every point with its predecessor's solution; failed points come back as None.
    """
    grid = [float(x) for x in x_f_grid]
    if not grid:
        return []
    workers = max(1, min(workers, len(grid)))
    chunks = np.array_split(np.array(grid), workers)
    tasks = [
        {"plant": plant, "x_f": list(chunk), "robust": robust, "robust_modes": robust_modes, "max_switches": max_switches}
        for chunk in chunks
        if len(chunk)
    ]
    outcomes = run_tasks(_sweep_chunk, tasks, workers)
    results: list[DesignResult | None] = []
    for task, outcome in zip(tasks, outcomes):
        if outcome["status"] == "SUCCESS":
            results.extend(outcome["result"])
        else:
            logger.warning("sweep chunk failed: %s", outcome["error"])
            results.extend([None] * len(task["x_f"]))
    return results
