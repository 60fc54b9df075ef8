import math

import numpy as np
import pytest

from src.model.plant import ModeSpec, PlantSpec, residual_report, simulate, terminal_energy
from src.solvers import closed_form
from src.solvers.constraints import ConstraintSet
from src.solvers import designer as designer_module
from src.solvers.designer import DesignRequest, ProfileDesigner, _grown, _needle, design, sweep
from src.utils.errors import DomainError, InfeasibleDesignError

OMEGA = 2.0 * math.pi
V_MAX = 240.0
NULL = 1e-10 * V_MAX**2


def plant_at(x_f, zeta=0.0):
    return PlantSpec((ModeSpec(OMEGA, zeta),), V_MAX, x_f)


def compressed(sequence):
    out = []
    for value in sequence:
        if not out or out[-1] != value:
            out.append(value)
    return out


def contains_in_order(sequence, pattern):
    it = iter(sequence)
    return all(any(value == wanted for value in it) for wanted in pattern)


def on_time(T):
    return float(np.sum(np.diff(np.concatenate([[0.0], T]))[0::2]))


# --- requests and constraints ---------------------------------------------------------

def test_request_validation(reference_plant):
    with pytest.raises(DomainError):
        DesignRequest(reference_plant, max_switches=3)
    with pytest.raises(DomainError):
        DesignRequest(reference_plant, robust=True, robust_modes=(1,))
    assert DesignRequest(reference_plant, robust=True).desensitized == (0,)
    assert DesignRequest(reference_plant).desensitized == ()


def test_constraint_jacobian_matches_finite_differences(two_mode_plant, rng):
    cons = ConstraintSet.for_plant(two_mode_plant, (0, 1))
    T = np.sort(rng.uniform(0.1, 2.0, 9))
    J = cons.jacobian(T)
    h = 1e-7
    for i in range(T.size):
        step = np.zeros(T.size)
        step[i] = h
        fd = (cons.residuals(T + step) - cons.residuals(T - step)) / (2 * h)
        np.testing.assert_allclose(J[:, i], fd, rtol=1e-6, atol=1e-6)
    assert J.shape == (cons.n_eq, T.size) == (9, 9)
    assert cons.names()[:3] == ["displacement", "mode1_re", "mode1_im"]


def test_constraint_rows_vanish_on_a_closed_form_profile():
    profile = closed_form.to_profile(closed_form.solve_undamped(400.0, OMEGA, V_MAX))
    cons = ConstraintSet.for_plant(plant_at(400.0))
    assert np.max(np.abs(cons.residuals(np.array(profile.delays)))) < 1e-10


# --- single designs -------------------------------------------------------------------

def test_zone1_design_matches_closed_form():
    result = design(DesignRequest(plant_at(100.0)))
    assert result.N == 2
    assert result.t_f == pytest.approx(0.708333333, abs=1e-8)
    assert result.pmp_certificate.passed
    assert result.max_residual <= 1e-9


def test_pulse_design_at_the_collapse():
    result = design(DesignRequest(plant_at(240.0)))
    assert result.N == 0
    assert result.t_f == pytest.approx(1.0, abs=1e-9)


def test_zone2_design_needs_four_switches():
    result = design(DesignRequest(plant_at(400.0)))
    assert result.N == 4
    assert result.t_f == pytest.approx(2 * 0.9151, abs=1e-4)
    assert result.pmp_certificate.passed
    reference = closed_form.to_profile(closed_form.solve_zone2(400.0, OMEGA, V_MAX))
    np.testing.assert_allclose(result.profile.switch_times, reference.switch_times, atol=1e-8)


def test_robust_design_is_slower_and_desensitised():
    plain = design(DesignRequest(plant_at(100.0)))
    robust = design(DesignRequest(plant_at(100.0), robust=True))
    assert robust.t_f > plain.t_f + 1e-6
    assert robust.robust and robust.robust_modes == (0,)
    assert "robust1_re" in robust.constraint_residuals
    sens = simulate(plant_at(100.0), robust.profile, augmented=True).terminal[3:]
    assert np.max(np.abs(sens)) <= 1e-7 * 100.0


def test_infeasible_cap_raises():
    with pytest.raises(InfeasibleDesignError) as info:
        design(DesignRequest(plant_at(100.0), max_switches=0))
    assert info.value.exit_code == 2
    assert "max-switches" in info.value.message


@pytest.mark.parametrize(
    "plant, robust",
    [
        (PlantSpec((ModeSpec(OMEGA, 0.0),), V_MAX, 150.0), True),
        (PlantSpec((ModeSpec(OMEGA, 0.01),), V_MAX, 150.0), False),
        (PlantSpec((ModeSpec(OMEGA, 0.01),), V_MAX, 150.0), True),
        (PlantSpec((ModeSpec(OMEGA, 0.026),), V_MAX, 350.0), False),
        (PlantSpec((ModeSpec.from_hz(0.6832, 0.0), ModeSpec.from_hz(6.159, 0.026065)), V_MAX, 100.0), False),
    ],
)
def test_designs_null_the_residual(plant, robust):
    result = design(DesignRequest(plant, robust=robust))
    assert np.all(terminal_energy(plant, result.profile) <= NULL)
    assert result.profile.x_f == pytest.approx(plant.x_f, rel=1e-9)


@pytest.mark.slow
def test_two_mode_design_robust_to_the_first_mode(two_mode_plant):
    result = design(DesignRequest(two_mode_plant, robust=True, robust_modes=(0,)))
    report = residual_report(two_mode_plant, simulate(two_mode_plant, result.profile, augmented=True), derivatives=True)
    assert np.all(report.V <= NULL)
    assert abs(report.dV_domega[0]) <= 1e-6


def test_result_dict(reference_plant):
    data = design(DesignRequest(reference_plant)).to_dict()
    assert data["N"] == 2
    assert set(data["profile"]) == {"switch_times_s", "t_f_s", "v_max_mm_s"}
    assert data["pmp_certificate"]["status"] == "PASS"


def test_lookahead_never_slows_the_answer():
    request = DesignRequest(plant_at(400.0))
    eager = ProfileDesigner(request, lookahead=False).design()
    assert design(request).t_f <= eager.t_f + 1e-12


# --- sweeps ---------------------------------------------------------------------------

def test_sweep_keeps_grid_order(reference_plant):
    results = sweep(reference_plant, [100.0, 200.0, 400.0])
    assert [r.N for r in results] == [2, 2, 4]
    assert [r.profile.x_f for r in results] == pytest.approx([100.0, 200.0, 400.0], rel=1e-9)


def test_sweep_reports_failed_points_as_none(reference_plant):
    results = sweep(reference_plant, [100.0, 240.0], max_switches=0)
    assert results[0] is None
    assert results[1].N == 0


def test_parallel_sweep_matches_serial(reference_plant):
    grid = [60.0, 120.0, 180.0, 260.0]
    serial = sweep(reference_plant, grid)
    parallel = sweep(reference_plant, grid, workers=2)
    assert [r.N for r in serial] == [r.N for r in parallel]
    np.testing.assert_allclose([r.t_f for r in serial], [r.t_f for r in parallel], atol=1e-9)


@pytest.mark.slow
def test_designer_agrees_with_closed_form_over_three_zones(reference_plant):
    grid = np.linspace(10.0, 700.0, 50)
    for x_f, result in zip(grid, sweep(reference_plant, grid)):
        reference = closed_form.to_profile(closed_form.solve_undamped(x_f, OMEGA, V_MAX))
        assert result.N == reference.n_switches, x_f
        np.testing.assert_allclose(result.profile.delays, reference.delays, atol=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("robust", [False, True])
def test_maneuver_time_is_monotone_on_a_sweep(reference_plant, robust):
    results = sweep(reference_plant, np.linspace(20.0, 600.0, 30), robust=robust)
    t_f = [r.t_f for r in results]
    assert np.all(np.diff(t_f) >= -1e-9)


@pytest.mark.slow
def test_robust_time_never_beats_non_robust(reference_plant):
    grid = np.linspace(25.0, 600.0, 24)
    plain = sweep(reference_plant, grid)
    robust = sweep(reference_plant, grid, robust=True)
    for a, b in zip(plain, robust):
        assert b.t_f >= a.t_f - 1e-9


@pytest.mark.slow
def test_damped_switch_count_sequence():
    plant = plant_at(100.0, zeta=0.01)
    results = sweep(plant, np.linspace(3.5, 700.0, 200))
    counts = compressed([r.N for r in results if r is not None])
    assert contains_in_order(counts, [2, 4, 2, 4, 6, 4, 2])
    assert all(r.pmp_certificate.passed for r in results if r is not None)


# --- seeds and guards -----------------------------------------------------------------

def test_opened_zones_keep_the_on_time():
    T = np.array([0.3, 0.5, 0.8])
    seeds = _grown(T, 4, 0.05)
    assert len(seeds) == 3
    for name, G in seeds:
        assert G.size == 5, name
        assert np.all(np.diff(np.concatenate([[0.0], G])) > 0), name
        assert on_time(G) == pytest.approx(on_time(T)), name
    assert [G.size for _, G in _grown(T, 6, 0.05)] == [7]


def test_needle_opens_a_pulse_inside_an_off_zone():
    G = _needle(np.array([0.3, 0.5, 0.8]), 0.4, 0.05)
    np.testing.assert_allclose(G, [0.25, 0.325, 0.375, 0.45, 0.75])
    assert on_time(G) == pytest.approx(0.6)
    assert _needle(np.array([0.3, 0.32, 0.8]), 0.31, 0.05) is None


def test_echo_seeds_are_robust_feasible():
    plant = plant_at(100.0)
    designer = ProfileDesigner(DesignRequest(plant, robust=True))
    seeds = designer._echo_seeds(plant, 6)
    assert len(seeds) == 2
    for name, T in seeds:
        assert T.size == 7, name
        assert np.all(np.diff(T) > 0), name
        assert np.max(np.abs(designer.constraints.residuals(T))) < 1e-9, name


def test_diverging_seed_is_dropped():
    designer = ProfileDesigner(DesignRequest(plant_at(350.0, zeta=0.026)))
    seed = np.array([1000.0, 3000.0, 5000.0])
    with np.errstate(all="ignore"):
        assert np.all(np.isnan(designer._newton_feasibility(designer.constraints, seed)))
    assert designer.solve_structure(designer.constraints, seed) is None
    assert designer.follow_branch(designer.constraints, seed) is None


def test_heavily_damped_design_nulls_the_residual():
    plant = plant_at(350.0, zeta=0.026)
    result = design(DesignRequest(plant))
    assert np.all(terminal_energy(plant, result.profile) <= NULL)
    assert result.max_residual <= 1e-9


def test_sweep_isolates_a_failing_point(reference_plant, monkeypatch):
    real = designer_module.design

    def flaky(request, warm=None, lookahead=True):
        if request.plant.x_f == 200.0:
            raise np.linalg.LinAlgError("SVD did not converge")
        return real(request, warm, lookahead)

    monkeypatch.setattr(designer_module, "design", flaky)
    results = sweep(reference_plant, [100.0, 200.0, 300.0])
    assert results[1] is None
    assert results[0].N == 2
    assert results[2].profile.x_f == pytest.approx(300.0, rel=1e-9)


def test_march_is_off_in_sub_designs(reference_plant):
    designer = ProfileDesigner(DesignRequest(reference_plant, robust=True))
    assert designer.march
    assert not designer._at(50.0).march
    assert designer._at(50.0).plant.x_f == 50.0


def test_robust_design_at_500mm():
    result = design(DesignRequest(plant_at(500.0), robust=True))
    assert result.t_f == pytest.approx(2.4046, abs=1e-4)
    assert result.pmp_certificate.passed
    assert not result.warnings


@pytest.mark.slow
@pytest.mark.parametrize("x_f", [550.0, 575.0, 600.0, 650.0])
def test_long_robust_moves_are_certified(x_f):
    robust = design(DesignRequest(plant_at(x_f), robust=True))
    plain = design(DesignRequest(plant_at(x_f)))
    assert not robust.warnings
    assert robust.pmp_certificate.passed
    assert robust.max_residual <= 1e-9
    assert robust.t_f >= plain.t_f - 1e-9
    assert robust.t_f >= 2.5543


@pytest.mark.slow
def test_two_mode_design_is_certified(two_mode_plant):
    result = design(DesignRequest(two_mode_plant))
    assert result.N >= 4
    assert result.pmp_certificate.passed
    assert not result.warnings
    assert np.all(terminal_energy(two_mode_plant, result.profile) <= NULL)


@pytest.mark.slow
def test_every_damped_sweep_point_is_certified(damped_plant):
    grid = [241.5, 427.0, 483.0, 493.5, 581.0, 668.5]
    results = sweep(damped_plant, grid)
    for x_f, result in zip(grid, results):
        assert result is not None, x_f
        assert not result.warnings, x_f
        assert result.pmp_certificate.passed, x_f
