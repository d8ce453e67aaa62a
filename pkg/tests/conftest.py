"""Shared fixtures: one baseline-calibrated device per session."""

import pytest

from maicas.circuit import calibrate_baseline, lumped_from_geometry
from maicas.geometry import DeviceGeometry, Rest
from maicas.readout import fit_reader

TARGET_F0 = 1.71e9
TARGET_DEPTH_DB = -14.0


@pytest.fixture(scope="session")
def device():
    return DeviceGeometry()


@pytest.fixture(scope="session")
def baseline_cal(device):
    return calibrate_baseline(device, TARGET_F0, TARGET_DEPTH_DB)


@pytest.fixture(scope="session")
def rest_circuit(device, baseline_cal):
    return lumped_from_geometry(device, Rest(), baseline_cal)


@pytest.fixture(scope="session")
def reader(rest_circuit):
    return fit_reader(rest_circuit, TARGET_DEPTH_DB)
