import math

import numpy as np
import pytest

from src.analysis.switching import switching_function
from src.model.plant import ModeSpec, PlantSpec
from src.model.tdfilter import BangOffBangProfile
from src.solvers import closed_form
from src.solvers.designer import DesignRequest, ProfileDesigner, design, sweep
from src.solvers.pmp import (
    certify,
    fit_costates,
    fit_costates_at,
    robust_equivalence_check,
    sensitivity_check,
    switching_values,
    verify_pmp,
)
from src.utils.errors import ContractViolation

OMEGA = 2.0 * math.pi
V_MAX = 240.0


def plant_at(x_f, zeta=0.0):
    return PlantSpec((ModeSpec(OMEGA, zeta),), V_MAX, x_f)


def zone_profile(x_f):
    return closed_form.to_profile(closed_form.solve_undamped(x_f, OMEGA, V_MAX))


@pytest.mark.parametrize("x_f", [100.0, 400.0, 600.0])
def test_closed_form_profiles_are_extremals(x_f):
    certificate = certify(plant_at(x_f), zone_profile(x_f))
    assert certificate.passed
    assert certificate.fit_residual <= 1e-6
    assert certificate.sign_violations == 0


@pytest.mark.parametrize("index", [0, 1])
def test_one_millisecond_shift_breaks_the_certificate(index):
    profile = zone_profile(100.0).perturbed(index, 1e-3)
    assert certify(plant_at(100.0), profile).status == "FAIL"


def test_costate_normalisation():
    lambda0, misfit = fit_costates(plant_at(100.0), zone_profile(100.0))
    assert lambda0[-1] == pytest.approx(-1.0 / V_MAX)
    assert misfit <= 1e-6


def test_switching_function_vanishes_at_the_switches():
    plant = plant_at(400.0)
    profile = zone_profile(400.0)
    lambda0, _ = fit_costates(plant, profile)
    values, _ = switching_function(lambda0, plant, np.array(profile.switch_times))
    np.testing.assert_allclose(values, 0.0, atol=1e-9 / V_MAX)
    start, _ = switching_function(lambda0, plant, 0.0)
    assert start == pytest.approx(-1.0 / V_MAX)


def test_closed_form_switching_function_matches_exponential():
    plant = plant_at(400.0)
    lambda0 = np.array([0.3, -0.02, -1.0 / V_MAX])
    t = np.linspace(0.0, 2.0, 17)
    value, slope = switching_function(lambda0, plant, t)
    np.testing.assert_allclose(value, switching_values(plant, lambda0, t), atol=1e-12)
    h = 1e-6
    fd = (switching_function(lambda0, plant, t + h)[0] - switching_function(lambda0, plant, t - h)[0]) / (2 * h)
    np.testing.assert_allclose(slope, fd, atol=1e-6)


def test_augmented_switching_function(damped_plant):
    lambda0 = np.array([0.1, 0.01, -1.0 / V_MAX, 0.02, -0.003])
    value, slope = switching_function(lambda0, damped_plant, np.array([0.2, 0.9]), sensitive_modes=(0,))
    np.testing.assert_allclose(value, switching_values(damped_plant, lambda0, [0.2, 0.9], (0,)), atol=1e-12)
    assert slope.shape == (2,)


def test_switching_function_checks_costate_size(reference_plant):
    with pytest.raises(ContractViolation):
        switching_function(np.zeros(5), reference_plant, 0.1)


def test_feasible_two_switch_profile_is_not_optimal_at_400mm():
    designer = ProfileDesigner(DesignRequest(plant_at(400.0)))
    candidate = designer.best_for(2)
    assert candidate is not None
    assert candidate.t_f > 1.8302
    profile = BangOffBangProfile(tuple(candidate.T[:-1]), candidate.T[-1], V_MAX)
    assert not certify(plant_at(400.0), profile).passed


def test_robust_design_certified_on_the_augmented_model():
    result = design(DesignRequest(plant_at(100.0), robust=True))
    certificate = verify_pmp(result, plant_at(100.0))
    assert certificate.augmented
    assert certificate.passed
    assert robust_equivalence_check(result, plant_at(100.0)).passed


def test_non_robust_design_fails_the_robustness_check():
    result = design(DesignRequest(plant_at(100.0)))
    report = robust_equivalence_check(result, plant_at(100.0))
    assert report.status == "FAIL"
    assert report.tolerance == pytest.approx(1e-5)


@pytest.mark.slow
def test_every_non_robust_sweep_design_is_certified():
    plant = plant_at(100.0)
    grid = np.linspace(7.0, 700.0, 100)
    for x_f, result in zip(grid, sweep(plant, grid)):
        assert verify_pmp(result, plant).passed, x_f


def test_tangent_rows_at_a_collapsing_pulse():
    lambda0, misfit = fit_costates_at(plant_at(240.0), (), 1.0, V_MAX, tangent_times=(0.5,))
    assert misfit <= 1e-9
    _, slope = switching_function(lambda0, plant_at(240.0), 0.5)
    assert slope == pytest.approx(0.0, abs=1e-9)


def test_worst_sign_violation_is_located():
    plant = plant_at(400.0)
    candidate = ProfileDesigner(DesignRequest(plant)).best_for(2)
    profile = BangOffBangProfile(tuple(candidate.T[:-1]), candidate.T[-1], V_MAX)
    certificate = certify(plant, profile)
    assert (certificate.violation_time is not None) == (certificate.sign_violations > 0)
    if certificate.violation_time is not None:
        assert 0.0 < certificate.violation_time < profile.t_f
    assert certify(plant, zone_profile(400.0)).violation_time is None
    assert "violation_time_s" in certificate.to_dict()


def test_sensitivity_check_of_a_robust_profile():
    result = design(DesignRequest(plant_at(100.0), robust=True))
    report = sensitivity_check(result.profile, plant_at(100.0), (0,))
    assert report.passed
    assert max(report.sensitivities) <= report.tolerance
