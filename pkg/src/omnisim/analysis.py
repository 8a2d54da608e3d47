"""Evaluation artifacts: radiation patterns, coverage maps, point SNR.

Pattern sweeps place a far-field probe on an angular cut through the panel
centre; coverage maps drop a virtual single-antenna user in every grid cell
of the plane spanned by the panel normal (local x) and the panel's in-plane
u axis (local y).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import (ChannelGeometry, Scene, channel_geometry, db_to_linear,
                      friis_gain)
from .elements import Configuration, StateTable
from .errors import SideUndefinedError, ValidationError
from .geometry import PLANE_EPS, ElementLayout, Side

MASKED = 0
REFLECTION_CELL = 1
REFRACTION_CELL = -1


@dataclass(frozen=True)
class PatternSample:
    """One probe angle of a sweep; power is dB below the sweep's maximum."""

    angle_deg: float
    power_db: float
    side: Side


@dataclass(frozen=True, eq=False)
class PatternSweep:
    samples: tuple[PatternSample, ...]
    skipped: int  # probe angles dropped because they fell in the panel plane

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)

    def peak_angle(self) -> float:
        return max(self.samples, key=lambda s: s.power_db).angle_deg


@dataclass(frozen=True)
class CoverageGrid:
    """Rectangular cell grid in the panel-centred (normal, u) plane."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValidationError("grid must have at least one cell per axis")
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValidationError("grid extents must satisfy x1 >= x0, y1 >= y0")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)


@dataclass(frozen=True, eq=False)
class CoverageMap:
    """Spectral efficiency per cell; masked in-plane cells hold NaN."""

    grid: CoverageGrid
    values: np.ndarray  # (nx, ny) bits/s/Hz, NaN where masked
    side: np.ndarray    # (nx, ny) int: +1 reflection, -1 refraction, 0 masked

    def __post_init__(self):
        self.values.setflags(write=False)
        self.side.setflags(write=False)


def _pattern_angles(step_deg: float) -> np.ndarray:
    """Symmetric grid k*step strictly inside (-90, 90); step > range gives
    the single broadside sample."""
    if not step_deg > 0:
        raise ValidationError("step_deg must be positive")
    kmax = int(math.floor((90.0 - 1e-9) / step_deg))
    return np.arange(-kmax, kmax + 1) * step_deg


def pattern_power(scene: Scene, layout: ElementLayout, table: StateTable,
                  config: Configuration, side: Side, angles_deg: np.ndarray,
                  eval_radius: float = 100.0, cut: str = "azimuth",
                  geometry: ChannelGeometry | None = None
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalised scattered power at each probe angle.

    Returns (power, valid): power is |sum_m incident_m Gamma_m g(p_m,probe)|^2
    and valid flags probes that fell outside the panel plane.
    """
    if eval_radius <= 0:
        raise ValidationError("eval_radius must be positive")
    if cut not in ("azimuth", "elevation"):
        raise ValidationError(f"unknown cut {cut!r}; expected azimuth or elevation")
    if geometry is None:
        geometry = channel_geometry(scene, layout)
    config.validate_against(table, layout)
    axis = layout.u if cut == "azimuth" else layout.v
    normal_out = scene.panel.normal * scene.bs_side_sign
    if side is Side.REFRACTION:
        normal_out = -normal_out
    theta = np.deg2rad(np.asarray(angles_deg, dtype=float))
    probes = (scene.panel.center[None, :]
              + eval_radius * (np.sin(theta)[:, None] * axis[None, :]
                               + np.cos(theta)[:, None] * normal_out[None, :]))
    signed = (probes - scene.panel.center[None, :]) @ scene.panel.normal
    valid = np.abs(signed) > PLANE_EPS
    side_index = 0 if side is Side.REFLECTION else 1
    gamma = table.coefficient_matrix[side_index, np.asarray(config.states)]  # (M,)
    weights = geometry.incident_field * gamma
    power = np.zeros(len(theta))
    if np.any(valid):
        dist = np.linalg.norm(probes[valid][:, None, :]
                              - layout.positions[None, :, :], axis=2)
        field = friis_gain(dist, scene.wavelength) @ weights
        power[valid] = np.abs(field) ** 2
    return power, valid


def radiation_pattern(scene: Scene, layout: ElementLayout, table: StateTable,
                      config: Configuration, side: Side,
                      cut: str = "azimuth", step_deg: float = 1.0,
                      eval_radius: float = 100.0) -> PatternSweep:
    """Angular sweep of scattered power, normalised so the sweep's own
    maximum sits at 0 dB.  In-plane probe angles are skipped and counted."""
    angles = _pattern_angles(step_deg)
    power, valid = pattern_power(scene, layout, table, config, side, angles,
                                 eval_radius=eval_radius, cut=cut)
    angles, power = angles[valid], power[valid]
    peak = power.max() if power.size else 0.0
    with np.errstate(divide="ignore"):
        power_db = (10.0 * np.log10(power / peak) if peak > 0
                    else np.full_like(power, -np.inf))
    samples = tuple(PatternSample(angle_deg=float(a), power_db=float(p), side=side)
                    for a, p in zip(angles, power_db))
    return PatternSweep(samples=samples, skipped=int(np.sum(~valid)))


def _coverage_rows(scene: Scene, layout: ElementLayout, table: StateTable,
                   config: Configuration, geometry: ChannelGeometry,
                   points: np.ndarray, sides: np.ndarray) -> np.ndarray:
    """Spectral efficiency for a batch of virtual user positions."""
    diff = points[:, None, :] - layout.positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    g2 = friis_gain(dist, scene.wavelength)
    if scene.element_factor_q > 0:
        cos = np.abs(diff @ scene.panel.normal) / dist
        g2 = g2 * cos ** scene.element_factor_q
    side_index = np.where(sides == REFLECTION_CELL, 0, 1)
    gamma = table.coefficient_matrix[side_index[:, None],
                                     np.asarray(config.states)[None, :]]
    h = (gamma * g2) @ geometry.bs_to_element.T  # (cells, Nt)
    if scene.direct_path:
        on_bs_side = sides == REFLECTION_CELL
        if np.any(on_bs_side):
            d_direct = np.linalg.norm(points[on_bs_side][:, None, :]
                                      - scene.bs_antennas[None, :, :], axis=2)
            h[on_bs_side] += friis_gain(d_direct, scene.wavelength)
    snr = scene.tx_power_w * np.sum(np.abs(h) ** 2, axis=1) / scene.noise_power_w
    return np.log2(1.0 + snr)


def coverage_map(scene: Scene, layout: ElementLayout, table: StateTable,
                 config: Configuration, grid: CoverageGrid,
                 workers: int = 1) -> CoverageMap:
    """Spectral efficiency of a virtual single-antenna user in every cell.

    Cell (ix, iy) sits at center + x*normal + y*u; cells within 1e-9 m of
    the panel plane are masked with NaN.
    """
    config.validate_against(table, layout)
    geometry = channel_geometry(scene, layout)
    normal = scene.panel.normal
    u_axis = layout.u
    xs, ys = grid.xs, grid.ys
    side = np.zeros((grid.nx, grid.ny), dtype=np.int8)
    for ix, x in enumerate(xs):
        if abs(x) <= PLANE_EPS:
            continue
        same_side = math.copysign(1.0, x) == scene.bs_side_sign
        side[ix, :] = REFLECTION_CELL if same_side else REFRACTION_CELL
    values = np.full((grid.nx, grid.ny), np.nan)

    def fill(ix: int) -> None:
        if side[ix, 0] == MASKED:
            return
        points = (scene.panel.center[None, :]
                  + xs[ix] * normal[None, :]
                  + ys[:, None] * u_axis[None, :])
        values[ix, :] = _coverage_rows(scene, layout, table, config, geometry,
                                       points, side[ix, :])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(grid.nx)))
    else:
        for ix in range(grid.nx):
            fill(ix)
    return CoverageMap(grid=grid, values=values, side=side)


def snr_at(scene: Scene, layout: ElementLayout, table: StateTable,
           config: Configuration, point) -> float:
    """Received SNR in dB at a point, folding the scene's antenna and LNA
    gains into the chain."""
    point = np.asarray(point, dtype=float)
    if abs(scene.panel.signed_distance(point)) <= PLANE_EPS:
        raise SideUndefinedError("SNR undefined for a point in the panel plane")
    config.validate_against(table, layout)
    geometry = channel_geometry(scene, layout)
    side = scene.side_of_point(point)
    diff = point[None, :] - layout.positions
    dist = np.linalg.norm(diff, axis=1)
    g2 = friis_gain(dist, scene.wavelength)
    if scene.element_factor_q > 0:
        cos = np.abs(diff @ scene.panel.normal) / dist
        g2 = g2 * cos ** scene.element_factor_q
    side_index = 0 if side is Side.REFLECTION else 1
    gamma = table.coefficient_matrix[side_index, np.asarray(config.states)]
    h = geometry.bs_to_element @ (gamma * g2)  # (Nt,)
    if scene.direct_path and side is Side.REFLECTION:
        d_direct = np.linalg.norm(scene.bs_antennas - point[None, :], axis=1)
        h = h + friis_gain(d_direct, scene.wavelength)
    chain_gain = db_to_linear(scene.tx_gain_db + scene.rx_gain_db
                              + scene.lna_gain_db)
    snr = (scene.tx_power_w * float(np.sum(np.abs(h) ** 2)) * chain_gain
           / scene.noise_power_w)
    return 10.0 * math.log10(snr) if snr > 0 else float("-inf")
