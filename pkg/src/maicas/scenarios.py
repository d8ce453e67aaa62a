"""Virtual characterization campaigns.

Each mode maps a measurand grid onto deformation states (or medium swaps),
synthesizes noisy reflection sweeps, extracts the dip per repeat, and fits
the calibration line on per-point means. One kinematic coupling parameter
per mode absorbs the unmodeled fixture mechanics; it is fitted once against
a target sensitivity and frozen.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize

from .calibration import CalibrationModel, _line_fit, fit_linear
from .circuit import ModelCalibration, calibrate_baseline, lumped_from_geometry
from .dsp import ResonanceEstimate, extract_resonance
from .errors import (CalibrationFailed, DomainError, GridTooCoarse,
                     NoResonance)
from .geometry import (DeviceGeometry, JointBend, Rest, RolledDisplacement,
                       RolledPressure, UniaxialStrain, device_from_dict,
                       device_to_dict)
from .readout import ReaderCouple, S11Sweep, add_noise, fit_reader, s11_spectrum
from .sweepio import write_touchstone

MODES = ("epicardial_strain", "graft_pressure", "stent_displacement",
         "joint_bend", "media_stability", "aging")

MODE_UNITS = {
    "epicardial_strain": "percent-strain",
    "graft_pressure": "mmHg",
    "stent_displacement": "um",
    "joint_bend": "degrees",
    "media_stability": "rel-permittivity",
    "aging": "days",
}

DEFAULT_GRIDS = {
    "epicardial_strain": (0.0, 5.0, 10.0, 15.0, 20.0),
    "graft_pressure": (50.0, 100.0, 150.0, 200.0),
    "stent_displacement": (0.0, 100.0, 200.0, 300.0, 400.0),
    "joint_bend": (0.0, 15.0, 30.0, 60.0, 90.0),
    "media_stability": (1.0, 10.0, 40.0, 80.0),
    "aging": (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0),
}

# sensitivities resolved when no explicit coupling is configured
DEFAULT_STRAIN_SENSITIVITY = 2.9e6    # Hz per percent strain
STRAIN_SENSITIVITY_BAND = 0.3e6       # natural model accepted inside this
DEFAULT_PRESSURE_SENSITIVITY = 0.43e6  # Hz per mmHg

DEFAULT_LUMEN_DIAMETER = 3.18  # mm
DEFAULT_BEND_RADIUS = 2.0      # mm
_STRAIN_LIMIT = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete, serializable description of one virtual campaign."""

    mode: str
    measurand_grid: tuple[float, ...]
    repeats: int = 5
    noise_sigma_db: float = 0.1
    seed: int = 0
    f_start: float = 1.5e9
    f_stop: float = 2.0e9
    n_points: int = 2001
    device: DeviceGeometry = field(default_factory=DeviceGeometry)
    calibration: ModelCalibration | None = None
    target_f0: float = 1.71e9
    target_depth_db: float = -14.0
    min_depth_db: float = 3.0
    lumen_diameter: float = DEFAULT_LUMEN_DIAMETER
    compliance: float | None = None      # graft strain per mmHg
    strain_scale: float | None = None    # epicardial gap-coupling scale
    displacement_scale: float = 1.0      # stent strain scale
    expansion_positive: bool = True      # stent sign convention
    bend_radius: float = DEFAULT_BEND_RADIUS
    aging_temperature: float = 70.0
    equivalent_storage: str = "16 days at 70 C ~ 1 year ambient"

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}")
        grid = tuple(float(x) for x in self.measurand_grid)
        if not grid:
            raise DomainError("measurand_grid must be nonempty")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise DomainError("measurand_grid must be sorted ascending")
        object.__setattr__(self, "measurand_grid", grid)
        if self.repeats < 1:
            raise DomainError(f"repeats must be >= 1, got {self.repeats}")
        if self.noise_sigma_db < 0:
            raise DomainError(
                f"noise_sigma_db must be >= 0, got {self.noise_sigma_db}")
        if self.f_start <= 0 or self.f_stop <= self.f_start:
            raise DomainError("need 0 < f_start < f_stop")
        if self.n_points < 5:
            raise DomainError(f"n_points must be >= 5, got {self.n_points}")
        if self.lumen_diameter <= 0:
            raise DomainError("lumen_diameter must be > 0")

    def to_json(self) -> str:
        obj = {
            "mode": self.mode,
            "measurand_grid": list(self.measurand_grid),
            "repeats": self.repeats,
            "noise_sigma_db": self.noise_sigma_db,
            "seed": self.seed,
            "f_start": self.f_start,
            "f_stop": self.f_stop,
            "n_points": self.n_points,
            "device": device_to_dict(self.device),
            "calibration": (None if self.calibration is None
                            else json.loads(self.calibration.to_json())),
            "target_f0": self.target_f0,
            "target_depth_db": self.target_depth_db,
            "min_depth_db": self.min_depth_db,
            "lumen_diameter": self.lumen_diameter,
            "compliance": self.compliance,
            "strain_scale": self.strain_scale,
            "displacement_scale": self.displacement_scale,
            "expansion_positive": self.expansion_positive,
            "bend_radius": self.bend_radius,
            "aging_temperature": self.aging_temperature,
            "equivalent_storage": self.equivalent_storage,
        }
        return json.dumps(obj, indent=2)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        obj = json.loads(text)
        kwargs = dict(obj)
        if "device" in kwargs:
            kwargs["device"] = device_from_dict(kwargs["device"] or {})
        cal = kwargs.get("calibration")
        if cal is not None:
            kwargs["calibration"] = ModelCalibration.from_json(json.dumps(cal))
        if "measurand_grid" in kwargs:
            kwargs["measurand_grid"] = tuple(kwargs["measurand_grid"])
        return ExperimentConfig(**kwargs)


def default_config(mode: str, **overrides) -> ExperimentConfig:
    """Config with the standard grid for a mode."""
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}")
    kwargs = {"mode": mode, "measurand_grid": DEFAULT_GRIDS[mode]}
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def derive_seed(seed: int, grid_index: int, repeat_index: int) -> np.random.SeedSequence:
    """Documented per-repeat seed mixing: spawn-safe SeedSequence keyed by
    (experiment seed, grid index, repeat index)."""
    return np.random.SeedSequence((seed, grid_index, repeat_index))


def _strain_per_unit(mode: str, coupling: float, config: ExperimentConfig) -> float:
    """Effective-strain increment per unit of measurand (linear kinematics)."""
    if mode == "epicardial_strain":
        return coupling / 100.0
    if mode == "graft_pressure":
        return coupling
    if mode == "stent_displacement":
        return coupling / (config.lumen_diameter * 1000.0)
    if mode == "joint_bend":
        return coupling * 1000.0 * math.pi / 180.0 / config.device.rest_length
    raise DomainError(f"mode {mode!r} has no kinematic coupling")


def _state_for(config: ExperimentConfig, coupling: float, x: float):
    """DeformationState (and possibly modified device) for one grid value."""
    mode = config.mode
    if mode == "epicardial_strain":
        return config.device, UniaxialStrain(coupling * x / 100.0)
    if mode == "graft_pressure":
        return config.device, RolledPressure(config.lumen_diameter, x, coupling)
    if mode == "stent_displacement":
        return config.device, RolledDisplacement(
            config.lumen_diameter, coupling * x, config.expansion_positive)
    if mode == "joint_bend":
        return config.device, JointBend(x, coupling)
    if mode == "media_stability":
        device = replace(config.device,
                         stack=replace(config.device.stack,
                                       medium_rel_permittivity=x))
        return device, Rest()
    if mode == "aging":
        return config.device, Rest()
    raise DomainError(f"unknown mode {mode!r}")


def _noiseless_slope(mode: str, coupling: float, config: ExperimentConfig,
                     cal: ModelCalibration, grid: Sequence[float]) -> float:
    xs, ys = [], []
    for x in grid:
        device, state = _state_for(config, coupling, x)
        xs.append(x)
        ys.append(lumped_from_geometry(device, state, cal).f0)
    slope, _ = _line_fit(xs, ys)
    return slope


def fit_scenario_coupling(mode: str, target_sensitivity: float,
                          device: DeviceGeometry, cal: ModelCalibration) -> float:
    """Fit the one free kinematic parameter of a mode so the noiseless
    end-to-end sensitivity over the default grid matches the target.

    The sensitivity is monotone in the parameter, so a bracketed root solve
    is exact and deterministic. Raises CalibrationFailed when the target is
    non-positive or beyond what the strain validity window allows.
    """
    if mode not in ("epicardial_strain", "graft_pressure",
                    "stent_displacement", "joint_bend"):
        raise DomainError(f"mode {mode!r} has no kinematic coupling")
    if target_sensitivity <= 0:
        raise CalibrationFailed(
            f"target sensitivity must be positive, got {target_sensitivity}")
    config = default_config(mode, device=device, calibration=cal)
    grid = config.measurand_grid
    x_extreme = max(abs(grid[0]), abs(grid[-1]))
    unit_strain = _strain_per_unit(mode, 1.0, config)
    p_max = (_STRAIN_LIMIT * (1.0 - 1e-9)) / (unit_strain * x_extreme)
    p_min = 1e-9 * p_max

    def residual(p: float) -> float:
        return _noiseless_slope(mode, p, config, cal, grid) - target_sensitivity

    r_hi = residual(p_max)
    if r_hi < 0:
        raise CalibrationFailed(
            f"target {target_sensitivity:.6g} Hz/unit unreachable inside the "
            f"strain validity window (max {target_sensitivity + r_hi:.6g})",
            residual=-r_hi)
    if residual(p_min) > 0:
        raise CalibrationFailed(
            "target sensitivity below the model floor", residual=residual(p_min))
    p_star = float(optimize.brentq(residual, p_min, p_max,
                                   xtol=1e-14 * p_max, rtol=8.9e-16))
    achieved = _noiseless_slope(mode, p_star, config, cal, grid)
    if abs(achieved - target_sensitivity) > 0.02 * abs(target_sensitivity):
        raise CalibrationFailed(
            f"coupling fit residual {achieved - target_sensitivity:.3g} Hz",
            residual=abs(achieved - target_sensitivity))
    return p_star


def resolve_coupling(config: ExperimentConfig, cal: ModelCalibration) -> float:
    """Effective kinematic parameter for a config: explicit value if given,
    otherwise the documented default resolution for the mode."""
    mode = config.mode
    if mode == "epicardial_strain":
        if config.strain_scale is not None:
            return config.strain_scale
        natural = _noiseless_slope(mode, 1.0, config, cal, config.measurand_grid)
        if abs(natural - DEFAULT_STRAIN_SENSITIVITY) <= STRAIN_SENSITIVITY_BAND:
            return 1.0
        return fit_scenario_coupling(mode, DEFAULT_STRAIN_SENSITIVITY,
                                     config.device, cal)
    if mode == "graft_pressure":
        if config.compliance is not None:
            return config.compliance
        return fit_scenario_coupling(mode, DEFAULT_PRESSURE_SENSITIVITY,
                                     config.device, cal)
    if mode == "stent_displacement":
        return config.displacement_scale
    if mode == "joint_bend":
        return config.bend_radius
    return 0.0  # media_stability and aging carry no coupling


@dataclass(frozen=True, eq=False)
class PointResult:
    """All repeats at one grid value. estimates holds None where extraction
    failed; mean/sd cover the successful repeats only."""

    measurand: float
    sweeps: tuple[S11Sweep, ...]
    estimates: tuple[ResonanceEstimate | None, ...]
    mean_f0: float
    sd_f0: float
    n_ok: int


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    config: ExperimentConfig
    calibration: ModelCalibration
    reader: ReaderCouple
    coupling: float
    points: tuple[PointResult, ...]
    summary: CalibrationModel
    failure_count: int

    def to_summary_csv(self) -> str:
        lines = ["measurand,mean_f0_hz,sd_f0_hz,n"]
        for p in self.points:
            lines.append(f"{p.measurand!r},{p.mean_f0!r},{p.sd_f0!r},{p.n_ok}")
        return "\n".join(lines) + "\n"

    def write_summary_csv(self, path) -> None:
        Path(path).write_text(self.to_summary_csv())

    def export_sweeps(self, directory) -> list[Path]:
        """Touchstone file per repeat, named by grid and repeat index."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for gi, point in enumerate(self.points):
            for ri, sweep in enumerate(point.sweeps):
                path = directory / f"sweep_g{gi:02d}_r{ri:02d}.s1p"
                write_touchstone(sweep, path)
                written.append(path)
        return written


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute one campaign. Fully deterministic for a fixed config: repeat
    noise comes from derive_seed(seed, grid_index, repeat_index) and the
    summary CSV is byte-identical across runs."""
    cal = config.calibration
    if cal is None:
        cal = calibrate_baseline(config.device, config.target_f0,
                                 config.target_depth_db)
    rest = lumped_from_geometry(config.device, Rest(), cal)
    reader = fit_reader(rest, config.target_depth_db)
    coupling = resolve_coupling(config, cal)

    points = []
    failures = 0
    for gi, x in enumerate(config.measurand_grid):
        device, state = _state_for(config, coupling, x)
        circuit = lumped_from_geometry(device, state, cal)
        clean = s11_spectrum(circuit, reader, config.f_start, config.f_stop,
                             config.n_points)
        sweeps = []
        estimates: list[ResonanceEstimate | None] = []
        for ri in range(config.repeats):
            noisy = add_noise(clean, config.noise_sigma_db,
                              derive_seed(config.seed, gi, ri))
            sweeps.append(noisy)
            try:
                estimates.append(extract_resonance(noisy, config.min_depth_db))
            except (NoResonance, GridTooCoarse):
                estimates.append(None)
                failures += 1
        ok = [e.f0_hat for e in estimates if e is not None]
        if ok:
            mean = math.fsum(ok) / len(ok)
            if len(ok) >= 2:
                var = math.fsum((f - mean) ** 2 for f in ok) / (len(ok) - 1)
                sd = math.sqrt(var)
            else:
                sd = 0.0
        else:
            mean, sd = math.nan, math.nan
        points.append(PointResult(
            measurand=x,
            sweeps=tuple(sweeps),
            estimates=tuple(estimates),
            mean_f0=mean,
            sd_f0=sd,
            n_ok=len(ok),
        ))

    fit_points = [(p.measurand, p.mean_f0) for p in points if p.n_ok > 0]
    summary = fit_linear(fit_points, MODE_UNITS[config.mode])
    return ExperimentResult(
        config=config,
        calibration=cal,
        reader=reader,
        coupling=coupling,
        points=tuple(points),
        summary=summary,
        failure_count=failures,
    )


def media_shift(device: DeviceGeometry, cal: ModelCalibration,
                medium_rel_permittivity: float) -> float:
    """Rest-state resonance with the surrounding medium swapped. Monotone
    decreasing in the permittivity; the calibration medium is a fixed
    point."""
    swapped = replace(device,
                      stack=replace(device.stack,
                                    medium_rel_permittivity=medium_rel_permittivity))
    return lumped_from_geometry(swapped, Rest(), cal).f0
