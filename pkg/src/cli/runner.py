"""
Subcommand execution for the swayopt command line.

`SwayoptRunner` holds one method per subcommand (`cmd_design`, `cmd_sweep`, ...) and the
`--repro` registry. Every method writes its artifacts under the output directory and returns
a CommandOutcome; `run()` times it, prints the summary and writes exactly one run-log entry.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from colorama import Fore, Style

from src.analysis.loci import loci_sweep
from src.analysis.robustness import curvature_at_nominal, find_coincidence_displacements, robustness_sweep
from src.analysis.transitions import find_transitions
from src.model.plant import ModeSpec, PlantSpec, residual_report, simulate
from src.model.tdfilter import BangOffBangProfile
from src.reports.design_summary import get_design_summary, get_zone_summary
from src.reports.run_summary import get_run_summary
from src.solvers import closed_form
from src.solvers.designer import DesignRequest, DesignResult, design, sweep
from src.solvers.pmp import certify, robust_equivalence_check, sensitivity_check
from src.tools.file_operations import load_plant, load_profile, write_csv, write_json
from src.utils.config import REFERENCE_OMEGA_N, REFERENCE_V_MAX, Settings
from src.utils.errors import ContractViolation, DomainError, SolverError
from src.utils.logger import ActionType, log_run

logger = logging.getLogger(__name__)

COMMANDS = ("design", "sweep", "loci", "transitions", "simulate", "zones")
REPRO_FIGURES = ("fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10")

# fenêtre des lieux des zéros : bande autour de l'axe imaginaire positif
DEFAULT_WINDOW = (-3.0, 3.0, 0.5, 20.0)


@dataclass
class RunConfig:
    """Parsed command line: one subcommand (or one --repro figure) plus its flags."""

    command: str | None
    output: Path = Path("results")
    model: Path | None = None
    profile: Path | None = None
    repro: str | None = None
    hz: bool = False
    x_f: float | None = None
    robust: bool = False
    max_switches: int = 8
    closed_form: bool = False
    over: str = "omega"
    x_min: float = 0.0
    x_max: float = 700.0
    points: int = 50
    ratio_min: float = 0.7
    ratio_max: float = 1.3
    mode: int | None = None
    window: tuple[float, float, float, float] = DEFAULT_WINDOW
    dt: float | None = None
    t_end: float | None = None
    augmented: bool = False
    verbose: bool = False

    def validate(self) -> None:
        if (self.command is None) == (self.repro is None):
            raise DomainError("give exactly one subcommand, or --repro without a subcommand")
        if self.command is not None and self.command not in COMMANDS:
            raise DomainError(f"unknown subcommand {self.command!r}")
        if self.repro is not None and self.repro not in REPRO_FIGURES:
            raise DomainError(f"unknown figure {self.repro!r}; choose from {', '.join(REPRO_FIGURES)}")
        if self.command is not None and self.model is None:
            raise DomainError(f"'{self.command}' needs --model")
        for label, path in (("model", self.model), ("profile", self.profile)):
            if path is not None and not Path(path).is_file():
                raise DomainError(f"{label} file not found: {path}")
        if self.x_f is not None and not self.x_f > 0:
            raise DomainError(f"--xf must be positive, got {self.x_f}")
        if self.points < 2:
            raise DomainError(f"--points must be >= 2, got {self.points}")
        if not 0.0 <= self.x_min < self.x_max:
            raise DomainError(f"need 0 <= --x-min < --x-max, got {self.x_min}, {self.x_max}")
        if not 0.0 < self.ratio_min < self.ratio_max:
            raise DomainError(f"need 0 < --ratio-min < --ratio-max, got {self.ratio_min}, {self.ratio_max}")
        if self.dt is not None and not self.dt > 0:
            raise DomainError(f"--dt must be positive, got {self.dt}")
        if self.max_switches < 0 or self.max_switches % 2:
            raise DomainError(f"--max-switches must be even and >= 0, got {self.max_switches}")
        if self.over not in ("omega", "xf"):
            raise DomainError(f"--over must be 'omega' or 'xf', got {self.over!r}")


@dataclass
class CommandOutcome:
    status: str
    outputs: list[Path] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    action: ActionType = ActionType.ANALYSIS
    solver: str = ""


def reference_plant(x_f: float = 100.0, zeta: float = 0.0) -> PlantSpec:
    return PlantSpec((ModeSpec(REFERENCE_OMEGA_N, zeta),), REFERENCE_V_MAX, x_f)


def _grid(lo: float, hi: float, points: int) -> np.ndarray:
    """Evenly spaced displacements; a zero lower end is excluded."""
    return np.linspace(lo, hi, points + 1)[1:] if lo == 0.0 else np.linspace(lo, hi, points)


def design_frame(results: list[DesignResult | None], grid, robust: bool) -> pd.DataFrame:
    """Design CSV: x_f_mm, robust_flag, N, T1..TN, tf_s (shorter rows padded with NaN)."""
    width = max((r.N for r in results if r is not None), default=0)
    rows = []
    for x_f, result in zip(grid, results):
        row = {"x_f_mm": float(x_f), "robust_flag": int(robust), "N": result.N if result else -1}
        times = list(result.profile.switch_times) if result else []
        for i in range(width):
            row[f"T{i + 1}_s"] = times[i] if i < len(times) else math.nan
        row["tf_s"] = result.t_f if result else math.nan
        rows.append(row)
    return pd.DataFrame(rows)


def zone_frame(plant: PlantSpec, grid) -> pd.DataFrame:
    """Zone-sweep CSV: x_f_mm, n, T1_s, T2_s, t_f_s, sw1_s.. (closed form, single undamped mode)."""
    mode = plant.modes[0]
    rows = []
    for x_f in grid:
        sol = closed_form.solve_undamped(float(x_f), mode.omega_n, plant.v_max)
        profile = closed_form.to_profile(sol)
        row = {"x_f_mm": float(x_f), "n": sol.n, "T1_s": sol.T1, "T2_s": sol.T2, "t_f_s": sol.t_f}
        for i, t in enumerate(profile.switch_times):
            row[f"sw{i + 1}_s"] = t
        rows.append(row)
    return pd.DataFrame(rows)


def sweep_frame(points) -> pd.DataFrame:
    """Sweep CSV: omega_ratio, V_mm2_s2 and one column per mode when there are several."""
    rows = []
    for point in points:
        row = {"omega_ratio": point.omega_ratio, "V_mm2_s2": point.V_tf}
        if len(point.V_modes) > 1:
            for k, value in enumerate(point.V_modes):
                row[f"V_mode{k + 1}_mm2_s2"] = value
        rows.append(row)
    return pd.DataFrame(rows)


class SwayoptRunner:
    """Runs one subcommand (or repro figure) from a RunConfig."""

    def __init__(self, config: RunConfig, settings: Settings):
        config.validate()
        self.config = config
        self.settings = settings
        self.output = Path(config.output)

    # ---- helpers -----------------------------------------------------------------------

    def _plant(self) -> PlantSpec:
        return load_plant(self.config.model, hz=self.config.hz, x_f=self.config.x_f)

    def _require_single_undamped(self, plant: PlantSpec, what: str) -> None:
        if plant.m != 1 or not plant.undamped:
            raise DomainError(f"{what} needs a single undamped mode (m={plant.m}, zeta={plant.zetas.tolist()})")

    def _design(self, plant: PlantSpec, robust: bool) -> DesignResult:
        return design(DesignRequest(plant, robust=robust, max_switches=self.config.max_switches))

    def _profile(self, plant: PlantSpec) -> BangOffBangProfile:
        if self.config.profile is not None:
            return load_profile(self.config.profile)
        return self._design(plant, self.config.robust).profile

    def _path(self, name: str) -> Path:
        return self.output / name

    # ---- subcommands -------------------------------------------------------------------

    def cmd_design(self) -> CommandOutcome:
        cfg = self.config
        plant = self._plant()
        inputs = {"plant": plant.to_dict(), "robust": cfg.robust, "max_switches": cfg.max_switches}

        if cfg.profile is not None:
            return self._validate(plant)

        if cfg.closed_form:
            self._require_single_undamped(plant, "--closed-form")
            if cfg.robust:
                raise DomainError("--closed-form has no robust variant")
            mode = plant.modes[0]
            sol = closed_form.solve_undamped(plant.x_f, mode.omega_n, plant.v_max)
            profile = closed_form.to_profile(sol)
            payload = {"profile": profile.to_dict(), "zone": sol.to_dict(), "N": profile.n_switches}
            path = write_json(self._path("profile.json"), payload)
            print(get_zone_summary().format(
                x_f=plant.x_f, n=sol.n, T1=sol.T1, T2=sol.T2, t_f=sol.t_f,
                degenerate=" (pulse)" if sol.degenerate else "",
            ))
            return CommandOutcome("SUCCESS", [path], inputs, payload, ActionType.DESIGN, "closed_form")

        result = self._design(plant, cfg.robust)
        payload = result.to_dict()
        if result.robust:
            payload["robustness_check"] = robust_equivalence_check(result, plant).to_dict()
        path = write_json(self._path("profile.json"), payload)
        print(get_design_summary().format(
            x_f=plant.x_f,
            robust=result.robust,
            N=result.N,
            t_f=result.t_f,
            switches=", ".join(f"{t:.6f}" for t in result.profile.switch_times) or "-",
            residuals=f"max |c| = {result.max_residual:.2e}",
            pmp=result.pmp_certificate.status if result.pmp_certificate else "n/a",
            seed=result.seed,
        ))
        for warning in result.warnings:
            print(f"{Fore.YELLOW}⚠️  {warning}{Style.RESET_ALL}")
        passed = result.pmp_certificate is not None and result.pmp_certificate.passed
        status = "SUCCESS" if passed and not result.warnings else "PARTIAL"
        return CommandOutcome(status, [path], inputs, {"N": result.N, "t_f_s": result.t_f}, ActionType.DESIGN, "slsqp+kkt")

    def _validate(self, plant: PlantSpec) -> CommandOutcome:
        """Costate certificate (and sensitivity check when robust) of an existing profile."""
        profile = load_profile(self.config.profile)
        plant = plant.with_x_f(profile.x_f)
        modes = tuple(range(plant.m)) if self.config.robust else ()
        certificate = certify(plant, profile, modes)
        payload = {"profile": profile.to_dict(), "pmp_certificate": certificate.to_dict()}
        passed = certificate.passed
        if self.config.robust:
            report = sensitivity_check(profile, plant, modes)
            payload["robustness_check"] = report.to_dict()
            passed = passed and report.passed
        path = write_json(self._path("certificate.json"), payload)
        colour = Fore.GREEN if passed else Fore.YELLOW
        print(f"{colour}PMP {certificate.status}: misfit {certificate.fit_residual:.2e}, "
              f"{certificate.sign_violations} sign violation(s){Style.RESET_ALL}")
        inputs = {"plant": plant.to_dict(), "profile": profile.to_dict(), "robust": self.config.robust}
        outputs = {"status": certificate.status, "sign_violations": certificate.sign_violations}
        return CommandOutcome(
            "SUCCESS" if passed else "PARTIAL", [path], inputs, outputs, ActionType.VALIDATION, "costate_fit"
        )

    def cmd_sweep(self) -> CommandOutcome:
        cfg = self.config
        plant = self._plant()
        if cfg.over == "xf":
            grid = _grid(cfg.x_min, cfg.x_max, cfg.points)
            results = sweep(plant, grid, robust=cfg.robust, max_switches=cfg.max_switches, workers=self.settings.threads)
            path = write_csv(self._path("designs.csv"), design_frame(results, grid, cfg.robust))
            failed = sum(r is None for r in results)
            status = "SUCCESS" if not failed else "PARTIAL"
            inputs = {"plant": plant.to_dict(), "x_range_mm": [cfg.x_min, cfg.x_max], "points": cfg.points}
            return CommandOutcome(status, [path], inputs, {"failed_points": failed}, ActionType.SWEEP, "slsqp+kkt")

        profile = self._profile(plant)
        points = robustness_sweep(profile, plant, (cfg.ratio_min, cfg.ratio_max), cfg.points, cfg.mode)
        path = write_csv(self._path("sweep.csv"), sweep_frame(points))
        inputs = {"plant": plant.to_dict(), "profile": profile.to_dict(), "ratio_range": [cfg.ratio_min, cfg.ratio_max]}
        worst = max(p.V_tf for p in points)
        return CommandOutcome("SUCCESS", [path], inputs, {"max_V_mm2_s2": worst}, ActionType.SWEEP, "exact_propagation")

    def cmd_loci(self) -> CommandOutcome:
        cfg = self.config
        plant = self._plant()
        table = loci_sweep(plant, (cfg.x_min, cfg.x_max), cfg.window, cfg.points, workers=self.settings.threads)
        path = write_csv(self._path("loci.csv"), table.frame)
        if not table.continuous:
            print(f"{Fore.YELLOW}⚠️  loci continuity bound exceeded in at least one structure run{Style.RESET_ALL}")
        status = "SUCCESS" if table.continuous else "PARTIAL"
        return CommandOutcome(status, [path], {"window": list(cfg.window)}, {"zeros": len(table.frame)}, ActionType.ANALYSIS, "newton_grid")

    def cmd_transitions(self) -> CommandOutcome:
        cfg = self.config
        plant = self._plant()
        points = find_transitions(plant, (cfg.x_min, cfg.x_max), cfg.points, workers=self.settings.threads)
        frame = pd.DataFrame([p.to_dict() for p in points], columns=["x_f_mm", "t_cr_s", "kind"])
        path = write_csv(self._path("transitions.csv"), frame)
        for p in points:
            print(f"   {p.kind:<8} x_f = {p.x_f:.6f} mm   t_cr = {p.t_cr:.6f} s")
        return CommandOutcome("SUCCESS", [path], {"x_range_mm": [cfg.x_min, cfg.x_max]}, {"transitions": len(points)}, ActionType.ANALYSIS, "branch_continuation")

    def cmd_simulate(self) -> CommandOutcome:
        cfg = self.config
        plant = self._plant()
        profile = self._profile(plant)
        trajectory = simulate(plant, profile, augmented=cfg.augmented, dt=cfg.dt, t_end=cfg.t_end)
        path = write_csv(self._path("trajectory.csv"), trajectory.to_frame())
        report = residual_report(plant, simulate(plant, profile))
        print(f"   V(t_f) = {report.total:.3e} mm²/s²")
        return CommandOutcome("SUCCESS", [path], {"profile": profile.to_dict()}, report.to_dict(), ActionType.SIMULATION, "exact_propagation")

    def cmd_zones(self) -> CommandOutcome:
        cfg = self.config
        plant = self._plant()
        self._require_single_undamped(plant, "zones")
        grid = _grid(cfg.x_min, cfg.x_max, cfg.points)
        path = write_csv(self._path("zones.csv"), zone_frame(plant, grid))
        inputs = {"plant": plant.to_dict(), "x_range_mm": [cfg.x_min, cfg.x_max], "points": cfg.points}
        return CommandOutcome("SUCCESS", [path], inputs, {"rows": len(grid)}, ActionType.SWEEP, "closed_form")

    # ---- figure data -------------------------------------------------------------------

    def repro_fig4(self) -> CommandOutcome:
        """Undamped zone sweep and the collapse displacements."""
        plant = reference_plant()
        grid = _grid(0.0, self.config.x_max, max(self.config.points, 200))
        zones = write_csv(self._path("fig4_zones.csv"), zone_frame(plant, grid))
        points = find_transitions(plant, (0.0, self.config.x_max))
        frame = pd.DataFrame([p.to_dict() for p in points], columns=["x_f_mm", "t_cr_s", "kind"])
        transitions = write_csv(self._path("fig4_transitions.csv"), frame)
        return CommandOutcome("SUCCESS", [zones, transitions], {"x_max_mm": self.config.x_max}, {"transitions": len(points)}, ActionType.SWEEP, "closed_form")

    def _design_sweep_figure(self, name: str, plant: PlantSpec, robust: bool) -> CommandOutcome:
        grid = _grid(0.0, self.config.x_max, self.config.points)
        results = sweep(plant, grid, robust=robust, max_switches=self.config.max_switches, workers=self.settings.threads)
        path = write_csv(self._path(f"{name}_designs.csv"), design_frame(results, grid, robust))
        failed = sum(r is None for r in results)
        return CommandOutcome("SUCCESS" if not failed else "PARTIAL", [path], {"x_max_mm": self.config.x_max}, {"failed_points": failed}, ActionType.SWEEP, "slsqp+kkt")

    def repro_fig5(self) -> CommandOutcome:
        """Robust designs over the displacement range."""
        return self._design_sweep_figure("fig5", reference_plant(), robust=True)

    def _sweep_pair(self, name: str, x_f: float, ratio_range: tuple[float, float]) -> list[Path]:
        plant = reference_plant(x_f)
        paths = []
        for robust in (False, True):
            profile = self._design(plant, robust).profile
            points = robustness_sweep(profile, plant, ratio_range, max(self.config.points, 61))
            label = "robust" if robust else "nonrobust"
            paths.append(write_csv(self._path(f"{name}_sweep_{label}.csv"), sweep_frame(points)))
        return paths

    def repro_fig6(self) -> CommandOutcome:
        """Residual energy over +/-30 % frequency error, robust and non-robust."""
        x_f = self.config.x_f or 50.0
        paths = self._sweep_pair("fig6", x_f, (0.7, 1.3))
        return CommandOutcome("SUCCESS", paths, {"x_f_mm": x_f}, {"files": len(paths)}, ActionType.SWEEP, "exact_propagation")

    def repro_fig7(self) -> CommandOutcome:
        """t_f and residual-energy curvature against displacement for both variants."""
        grid = _grid(0.0, self.config.x_max, self.config.points)
        rows = []
        plant = reference_plant()
        designs = {robust: sweep(plant, grid, robust=robust, workers=self.settings.threads) for robust in (False, True)}
        for i, x_f in enumerate(grid):
            row = {"x_f_mm": float(x_f)}
            for robust, label in ((False, "nonrobust"), (True, "robust")):
                result = designs[robust][i]
                row[f"tf_{label}_s"] = result.t_f if result else math.nan
                try:
                    curvature = curvature_at_nominal(result.profile, plant.with_x_f(x_f)).analytic[0] if result else math.nan
                except ContractViolation as e:
                    logger.warning("curvature skipped at x_f=%g: %s", x_f, e)
                    curvature = math.nan
                row[f"curvature_{label}"] = curvature
            rows.append(row)
        path = write_csv(self._path("fig7_curvature.csv"), pd.DataFrame(rows))
        coincidences = find_coincidence_displacements(plant, (0.0, self.config.x_max))
        write_json(self._path("fig7_coincidences.json"), {"x_f_mm": coincidences})
        return CommandOutcome("SUCCESS", [path, self._path("fig7_coincidences.json")], {"x_max_mm": self.config.x_max}, {"coincidences_mm": coincidences}, ActionType.SWEEP, "exact_propagation")

    def repro_fig8(self) -> CommandOutcome:
        """Zero loci of both variants against displacement."""
        table = loci_sweep(reference_plant(), (0.0, self.config.x_max), self.config.window, self.config.points, workers=self.settings.threads)
        path = write_csv(self._path("fig8_loci.csv"), table.frame)
        return CommandOutcome("SUCCESS" if table.continuous else "PARTIAL", [path], {"window": list(self.config.window)}, {"zeros": len(table.frame)}, ActionType.ANALYSIS, "newton_grid")

    def repro_fig9(self) -> CommandOutcome:
        """Zeros and frequency sweeps of both variants at one displacement."""
        x_f = self.config.x_f or 500.0
        table = loci_sweep(reference_plant(), (x_f - 1e-6, x_f), self.config.window, 2)
        zeros = write_csv(self._path("fig9_zeros.csv"), table.frame[np.isclose(table.frame["x_f_mm"], x_f, rtol=0.0, atol=1e-7)])
        paths = [zeros] + self._sweep_pair("fig9", x_f, (0.7, 1.3))
        return CommandOutcome("SUCCESS", paths, {"x_f_mm": x_f}, {"files": len(paths)}, ActionType.ANALYSIS, "newton_grid")

    def repro_fig10(self) -> CommandOutcome:
        """Switch count against displacement for a lightly damped mode (zeta = 0.01)."""
        return self._design_sweep_figure("fig10", reference_plant(zeta=0.01), robust=False)

    # ---- entry point -------------------------------------------------------------------

    def run(self) -> CommandOutcome:
        cfg = self.config
        label = cfg.command or f"repro {cfg.repro}"
        handler = getattr(self, f"cmd_{cfg.command}" if cfg.command else f"repro_{cfg.repro}")
        print(f"▶️  {label}")
        start = time.perf_counter()
        try:
            outcome = handler()
        except (SolverError, ValueError) as e:
            log_run(
                component=f"cli.{label.replace(' ', '.')}",
                solver="",
                action=ActionType.ANALYSIS,
                details={"config": _config_dict(cfg), "error": f"{type(e).__name__}: {e}"},
                status="FAILURE",
            )
            raise
        duration = time.perf_counter() - start

        colour = Fore.GREEN if outcome.status == "SUCCESS" else Fore.YELLOW
        print(colour + get_run_summary().format(
            command=label,
            status=outcome.status,
            outputs=", ".join(str(p) for p in outcome.outputs),
            duration=duration,
        ) + Style.RESET_ALL)

        log_run(
            component=f"cli.{label.replace(' ', '.')}",
            solver=outcome.solver,
            action=outcome.action,
            details={
                "inputs": {**outcome.inputs, "config": _config_dict(cfg)},
                "outputs": {"files": [str(p) for p in outcome.outputs], **outcome.results},
                "duration_s": duration,
            },
            status=outcome.status,
        )
        return outcome


def _config_dict(config: RunConfig) -> dict:
    data = {}
    for key, value in vars(config).items():
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, tuple):
            value = list(value)
        data[key] = value
    return data
