import json
import math

import numpy as np
import pytest

from src.model.plant import ModeSpec, PlantSpec

OMEGA = 2.0 * math.pi
V_MAX = 240.0


@pytest.fixture(autouse=True)
def isolated_run_log(tmp_path, monkeypatch):
    """Every test writes its run-log entries to a private file."""
    path = tmp_path / "logs" / "run_data.json"
    monkeypatch.setenv("SWAYOPT_LOG_FILE", str(path))
    return path


@pytest.fixture
def reference_plant():
    return PlantSpec((ModeSpec(OMEGA, 0.0),), V_MAX, 100.0)


@pytest.fixture
def damped_plant():
    return PlantSpec((ModeSpec(OMEGA, 0.01),), V_MAX, 100.0)


@pytest.fixture
def two_mode_plant():
    # pendule double identifié : 0.6832 Hz quasi non amorti, 6.159 Hz amorti
    return PlantSpec((ModeSpec.from_hz(0.6832, 0.0), ModeSpec.from_hz(6.159, 0.026065)), V_MAX, 100.0)


@pytest.fixture
def model_file(tmp_path):
    def write(omega_n=OMEGA, zeta=0.0, x_f=100.0, v_max=V_MAX):
        path = tmp_path / "plant.json"
        path.write_text(json.dumps({"modes": [{"omega_n_rad_s": omega_n, "zeta": zeta}], "v_max_mm_s": v_max, "x_f_mm": x_f}))
        return path

    return write


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
