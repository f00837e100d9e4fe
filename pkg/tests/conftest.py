"""Shared fixtures for safe-admittance tests."""

import numpy as np
import pytest

from safe_admittance.admittance import AdmittanceParams, build_state_space
from safe_admittance.reference import ReferenceModelSet, compliant_matrix, safety_matrix
from safe_admittance.safety import BoxConstraints


@pytest.fixture
def params():
    return AdmittanceParams.from_values([1.0, 1.0], [15.0, 15.0], [10.0, 10.0])


@pytest.fixture
def state_space(params):
    return build_state_space(params)


@pytest.fixture
def models(state_space):
    _, B_a = state_space
    return ReferenceModelSet(compliant_matrix(), safety_matrix(), B_a)


@pytest.fixture
def box():
    return BoxConstraints(
        offset=[0.25, 0.35],
        amplitude=[0.0, 0.0],
        frequency=[0.0, 0.0],
        desired_pose=[0.1, 0.2],
        dbar=0.015,
    )


@pytest.fixture
def isolated_config(tmp_path, monkeypatch):
    """Point the preferences file at a temporary directory."""
    config_dir = tmp_path / "config"
    monkeypatch.setattr("safe_admittance.config.CONFIG_DIR", config_dir)
    monkeypatch.setattr("safe_admittance.config.CONFIG_FILE", config_dir / "config.json")
    monkeypatch.delenv("SAFE_ADMITTANCE_OUT_DIR", raising=False)
    return config_dir


def stacked(e, edot) -> np.ndarray:
    return np.concatenate([np.asarray(e, float), np.asarray(edot, float)])
