import math

import numpy as np
import pytest

from src.analysis.loci import LOCI_COLUMNS, loci_sweep
from src.analysis.robustness import (
    coincidence_measure,
    curvature_at_nominal,
    find_coincidence_displacements,
    robustness_sweep,
)
from src.analysis.transitions import find_transitions
from src.model.plant import ModeSpec, PlantSpec
from src.model.tdfilter import BangOffBangProfile
from src.solvers.designer import DesignRequest, design
from src.solvers.pmp import robust_equivalence_check
from src.utils.errors import ContractViolation, DomainError

OMEGA = 2.0 * math.pi
V_MAX = 240.0
POLE = 2j * math.pi
WINDOW = (-0.5, 0.5, 5.0, 7.5)


def plant_at(x_f, zeta=0.0):
    return PlantSpec((ModeSpec(OMEGA, zeta),), V_MAX, x_f)


@pytest.fixture(scope="module")
def designs_at_50mm():
    plant = plant_at(50.0)
    return design(DesignRequest(plant)), design(DesignRequest(plant, robust=True))


# --- transitions ----------------------------------------------------------------------

def test_undamped_transitions_are_the_pulse_displacements(reference_plant):
    points = find_transitions(reference_plant, (0.0, 700.0))
    assert [p.x_f for p in points] == pytest.approx([240.0, 480.0, 480.0], abs=1e-6)
    assert [p.t_cr for p in points] == pytest.approx([0.5, 0.5, 1.5], abs=1e-9)
    assert all(p.kind == "collapse" for p in points)
    assert all(p.residual <= 1e-6 for p in points)
    assert points[0].to_dict() == {"x_f_mm": pytest.approx(240.0), "t_cr_s": pytest.approx(0.5), "kind": "collapse"}


def test_no_transition_inside_zone_one(reference_plant):
    assert find_transitions(reference_plant, (0.0, 200.0)) == []


def test_transition_range_excludes_its_lower_end(reference_plant):
    points = find_transitions(reference_plant, (240.0, 300.0))
    assert points == []


def test_transitions_need_a_single_mode(two_mode_plant):
    with pytest.raises(ContractViolation):
        find_transitions(two_mode_plant, (0.0, 700.0))


def test_transition_range_is_checked(reference_plant):
    with pytest.raises(DomainError):
        find_transitions(reference_plant, (300.0, 100.0))


@pytest.mark.slow
def test_damped_transitions_are_bracketed(damped_plant):
    points = find_transitions(damped_plant, (0.0, 700.0), points=60)
    assert points
    assert [p.x_f for p in points] == sorted(p.x_f for p in points)
    for p in points:
        assert p.kind in {"collapse", "birth"}
        assert 0.0 < p.t_cr
        assert 0.0 < p.x_f <= 700.0


# --- robustness -----------------------------------------------------------------------

def test_robust_profile_flattens_the_sweep(designs_at_50mm):
    plain, robust = designs_at_50mm
    plant = plant_at(50.0)
    a = robustness_sweep(plain.profile, plant, (0.95, 1.05), points=11)
    b = robustness_sweep(robust.profile, plant, (0.95, 1.05), points=11)
    assert [p.omega_ratio for p in a] == pytest.approx(np.linspace(0.95, 1.05, 11))
    for p, q in zip(a, b):
        assert q.V_tf <= p.V_tf + 1e-9
    nominal = a[5]
    assert nominal.omega_ratio == pytest.approx(1.0)
    assert nominal.V_tf <= 1e-10 * V_MAX**2


def test_sweep_arguments_are_checked(designs_at_50mm):
    plain, _ = designs_at_50mm
    with pytest.raises(DomainError):
        robustness_sweep(plain.profile, plant_at(50.0), points=1)
    with pytest.raises(DomainError):
        robustness_sweep(plain.profile, plant_at(50.0), (1.2, 0.8))


def test_sweep_reports_each_mode(two_mode_plant):
    profile = BangOffBangProfile.pulse(0.5, V_MAX)
    points = robustness_sweep(profile, two_mode_plant, (0.9, 1.1), points=3, mode=1)
    assert all(len(p.V_modes) == 2 for p in points)
    assert points[0].V_modes[0] == pytest.approx(points[-1].V_modes[0])


def test_curvature_at_the_design_frequency(designs_at_50mm):
    plain, robust = designs_at_50mm
    plant = plant_at(50.0)
    c_plain = curvature_at_nominal(plain.profile, plant)
    c_robust = curvature_at_nominal(robust.profile, plant)
    assert c_plain.analytic[0] > 0.0
    assert c_plain.agrees and c_robust.agrees
    assert abs(c_robust.analytic[0]) <= 1e-6 * c_plain.analytic[0]


def test_curvature_needs_a_nulling_profile(reference_plant):
    with pytest.raises(ContractViolation):
        curvature_at_nominal(BangOffBangProfile.pulse(0.5, V_MAX), reference_plant)


@pytest.mark.slow
def test_above_the_nominal_frequency_the_plain_design_wins_at_500mm():
    plant = plant_at(500.0)
    plain = design(DesignRequest(plant)).profile
    robust = design(DesignRequest(plant, robust=True)).profile
    high = [robustness_sweep(p, plant, (1.0, 1.1), points=2)[-1].V_tf for p in (plain, robust)]
    low = [robustness_sweep(p, plant, (0.9, 1.0), points=2)[0].V_tf for p in (plain, robust)]
    assert high[0] < high[1]
    assert low[0] > low[1]


def test_coincidence_displacements(reference_plant):
    roots = find_coincidence_displacements(reference_plant, (0.0, 700.0))
    assert roots == pytest.approx([266.5, 513.3], abs=1.0)
    for x in roots:
        assert abs(coincidence_measure(x, OMEGA, V_MAX)) < 1e-6


@pytest.fixture(scope="module")
def coincidence_roots():
    return find_coincidence_displacements(plant_at(100.0), (0.0, 700.0))


@pytest.mark.parametrize("index", [0, pytest.param(1, marks=pytest.mark.slow)])
def test_designs_coincide_at_the_coincidence_displacements(coincidence_roots, index):
    plant = plant_at(coincidence_roots[index])
    plain = design(DesignRequest(plant))
    robust = design(DesignRequest(plant, robust=True))
    assert robust.t_f == pytest.approx(plain.t_f, abs=1e-6)
    assert robust_equivalence_check(plain, plant).passed
    assert abs(curvature_at_nominal(plain.profile, plant).analytic[0]) <= 1e-9 * V_MAX**2

    a = robustness_sweep(plain.profile, plant, (0.95, 1.05), points=11)
    b = robustness_sweep(robust.profile, plant, (0.95, 1.05), points=11)
    assert [p.V_tf for p in b] == pytest.approx([p.V_tf for p in a], rel=1e-6, abs=1e-10 * V_MAX**2)


def test_coincidence_search_needs_one_undamped_mode(damped_plant, two_mode_plant):
    for plant in (damped_plant, two_mode_plant):
        with pytest.raises(ContractViolation):
            find_coincidence_displacements(plant, (0.0, 700.0))


# --- loci -----------------------------------------------------------------------------

def test_loci_at_500mm():
    table = loci_sweep(plant_at(500.0), (490.0, 500.0), WINDOW, steps=2)
    assert list(table.frame.columns) == LOCI_COLUMNS

    def at_pole(robust):
        rows = table.zeros_at(500.0, robust)
        z = rows["re_rad_s"] + 1j * rows["im_rad_s"]
        return rows[np.abs(z - POLE) < 1e-4]

    plain = at_pole(False)
    robust = at_pole(True)
    assert len(plain) == 1 and plain["multiplicity_flag"].iloc[0] == "single"
    assert len(robust) == 1 and robust["multiplicity_flag"].iloc[0] == "double"
    assert {run["robust"] for run in table.continuity} <= {False, True}


def test_loci_single_variant():
    table = loci_sweep(plant_at(100.0), (90.0, 100.0), WINDOW, steps=2, variants=(False,))
    assert not table.frame["robust"].any()
    assert table.continuous


def test_loci_arguments_are_checked(reference_plant):
    with pytest.raises(DomainError):
        loci_sweep(reference_plant, (0.0, 100.0), WINDOW, steps=1)
    with pytest.raises(DomainError):
        loci_sweep(reference_plant, (0.0, 100.0), (1.0, -1.0, 0.0, 5.0))
