"""Free-space propagation, cascaded BS-panel-user channels, noise, link budgets.

The cascaded channel entry for user k and BS antenna n is the fixed-order
sum over elements m of

    g(a_n, p_m) * Gamma_m(side_k) * g(p_m, u_k)

where g is the free-space amplitude gain and Gamma_m the element coefficient
toward the user's side.  Geometry-only factors are precomputed once per
scene (:func:`channel_geometry`) so that optimizers can re-assemble the
matrix for many candidate configurations with identical arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .elements import Configuration, StateTable
from .errors import InvalidSceneError, SideUndefinedError, ValidationError
from .geometry import PLANE_EPS, ElementLayout, PanelSpec, Side

SPEED_OF_LIGHT = 299792458.0

# Measured channel gains of the bundled prototype deployment, used as the
# default Tx->panel / panel->Rx items of the CLI link budget.
MEASURED_TX_IOS_GAIN_DB = -47.76
MEASURED_IOS_RX_GAIN_DB = -43.53


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True, eq=False)
class Scene:
    """Complete simulation world: panel, terminals, powers, model options."""

    frequency_hz: float
    panel: PanelSpec
    bs_antennas: np.ndarray  # (Nt, 3) metres
    users: np.ndarray        # (K, 3) metres
    tx_power_dbm: float
    bandwidth_hz: float
    noise_figure_db: float = 0.0
    tx_gain_db: float = 0.0
    rx_gain_db: float = 0.0
    lna_gain_db: float = 0.0
    direct_path: bool = False
    plane_wave_incidence: bool = False
    element_factor_q: float = 0.0

    def __post_init__(self):
        if not (self.frequency_hz > 0):
            raise ValidationError("frequency_hz must be positive")
        if not (self.bandwidth_hz > 0):
            raise ValidationError("bandwidth_hz must be positive")
        if self.element_factor_q < 0:
            raise ValidationError("element_factor_q must be non-negative")
        bs = np.atleast_2d(np.asarray(self.bs_antennas, dtype=float))
        users = np.atleast_2d(np.asarray(self.users, dtype=float))
        for name, arr in (("bs antennas", bs), ("users", users)):
            if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
                raise ValidationError(f"{name} must be a non-empty list of [x, y, z]")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} must have finite coordinates")
        bs_signs = set()
        for p in bs:
            d = self.panel.signed_distance(p)
            if abs(d) <= PLANE_EPS:
                raise InvalidSceneError(f"BS antenna {p.tolist()} lies in the panel plane")
            bs_signs.add(d > 0)
        if len(bs_signs) > 1:
            raise InvalidSceneError(
                "BS antennas straddle the panel; all must share one side")
        for p in users:
            if abs(self.panel.signed_distance(p)) <= PLANE_EPS:
                raise InvalidSceneError(f"user {p.tolist()} lies in the panel plane")
        bs.setflags(write=False)
        users.setflags(write=False)
        object.__setattr__(self, "bs_antennas", bs)
        object.__setattr__(self, "users", users)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    @property
    def num_antennas(self) -> int:
        return self.bs_antennas.shape[0]

    @property
    def num_users(self) -> int:
        return self.users.shape[0]

    @property
    def tx_power_w(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watts(noise_power(self.bandwidth_hz, self.noise_figure_db))

    @cached_property
    def bs_side_sign(self) -> float:
        """Sign of the BS half-space; +1 along the panel normal."""
        return math.copysign(1.0, self.panel.signed_distance(self.bs_antennas[0]))

    def side_of_point(self, point) -> Side:
        d = self.panel.signed_distance(point)
        if abs(d) <= PLANE_EPS:
            raise SideUndefinedError("point lies in the panel plane")
        return Side.REFLECTION if d * self.bs_side_sign > 0 else Side.REFRACTION


def friis_gain(distance, wavelength: float):
    """Free-space complex amplitude gain: lambda/(4 pi d) at phase -2 pi d/lambda.

    Accepts scalar or array distances; raises on non-positive distance.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValidationError("friis_gain requires positive distance")
    amp = wavelength / (4.0 * math.pi * d)
    out = amp * np.exp(-2j * math.pi * d / wavelength)
    return complex(out) if np.isscalar(distance) else out


def noise_power(bandwidth_hz: float, noise_figure_db: float = 0.0) -> float:
    """Thermal noise power in dBm: -174 + 10 log10(B) + NF."""
    if not bandwidth_hz > 0:
        raise ValidationError("bandwidth must be positive")
    return -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


@dataclass(frozen=True)
class LinkBudgetChain:
    """Transmit power plus an ordered list of named dB gains/losses."""

    tx_power_dbm: float
    items: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class LinkBudgetResult:
    tx_power_dbm: float
    items: tuple[tuple[str, float], ...]
    received_dbm: float


def link_budget(chain: LinkBudgetChain) -> LinkBudgetResult:
    """Sum the chain exactly; sorted exact summation makes the total
    independent of item order."""
    values = sorted(v for _, v in chain.items)
    total = math.fsum([chain.tx_power_dbm, *values])
    return LinkBudgetResult(tx_power_dbm=chain.tx_power_dbm,
                            items=tuple(chain.items),
                            received_dbm=total)


def prototype_chain(scene: Scene, ios_gain_db: float,
                    tx_ios_db: float = MEASURED_TX_IOS_GAIN_DB,
                    ios_rx_db: float = MEASURED_IOS_RX_GAIN_DB) -> LinkBudgetChain:
    """Link budget chain: scene gains around the two channel hops and the
    panel gain.  Channel items default to the prototype's measured values."""
    return LinkBudgetChain(
        tx_power_dbm=scene.tx_power_dbm,
        items=(
            ("tx_antenna_db", scene.tx_gain_db),
            ("tx_ios_channel_db", tx_ios_db),
            ("ios_gain_db", ios_gain_db),
            ("ios_rx_channel_db", ios_rx_db),
            ("rx_antenna_db", scene.rx_gain_db),
            ("lna_db", scene.lna_gain_db),
        ),
    )


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Cascaded complex channel, users x BS antennas, dimensionless amplitude."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if not np.all(np.isfinite(entries)):
            raise ValidationError("channel entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def num_users(self) -> int:
        return self.entries.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.entries.shape[1]


def _element_factor(cos_angles: np.ndarray, q: float) -> np.ndarray:
    return np.ones_like(cos_angles) if q == 0.0 else cos_angles ** q


def _hop_gains(points: np.ndarray, layout: ElementLayout, scene: Scene) -> np.ndarray:
    """Free-space gains between each point (rows) and each element (cols)."""
    diff = points[:, None, :] - layout.positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    if np.any(dist <= 0):
        raise ValidationError("a terminal coincides with an element position")
    gains = friis_gain(dist, scene.wavelength)
    if scene.element_factor_q > 0:
        cos = np.abs(diff @ scene.panel.normal) / dist
        gains = gains * _element_factor(cos, scene.element_factor_q)
    return gains


@dataclass(frozen=True, eq=False)
class ChannelGeometry:
    """Configuration-independent factors of the cascaded channel.

    ``bs_to_element`` is (Nt, M), ``element_to_user`` (K, M); ``direct`` is
    (K, Nt) with zeros where no direct path applies, or None when disabled.
    ``user_side_index`` holds 0 for reflection-side users, 1 for refraction.
    """

    bs_to_element: np.ndarray
    element_to_user: np.ndarray
    user_side_index: np.ndarray
    direct: np.ndarray | None

    def __post_init__(self):
        for arr in (self.bs_to_element, self.element_to_user, self.user_side_index):
            arr.setflags(write=False)
        if self.direct is not None:
            self.direct.setflags(write=False)

    @property
    def num_antennas(self) -> int:
        return self.bs_to_element.shape[0]

    @property
    def num_users(self) -> int:
        return self.element_to_user.shape[0]

    @property
    def num_elements(self) -> int:
        return self.bs_to_element.shape[1]

    @cached_property
    def incident_field(self) -> np.ndarray:
        """(M,) total incident field at each element, summed over BS antennas."""
        return self.bs_to_element.sum(axis=0)


def channel_geometry(scene: Scene, layout: ElementLayout) -> ChannelGeometry:
    """Precompute the geometry-only channel factors for a scene."""
    if layout.num_elements != scene.panel.num_elements:
        raise ValidationError("layout does not match the scene's panel")
    if scene.plane_wave_incidence:
        # Unit-amplitude plane wave per antenna, travelling antenna -> panel
        # centre; phase referenced to the panel centre.
        k = 2.0 * math.pi / scene.wavelength
        directions = scene.panel.center[None, :] - scene.bs_antennas
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        if np.any(norms <= 0):
            raise ValidationError("BS antenna coincides with the panel center")
        directions = directions / norms
        rel = layout.positions - scene.panel.center[None, :]
        bs_to_element = np.exp(-1j * k * (directions @ rel.T))
    else:
        bs_to_element = _hop_gains(scene.bs_antennas, layout, scene)
    element_to_user = _hop_gains(scene.users, layout, scene)
    user_side_index = np.array(
        [0 if scene.side_of_point(u) is Side.REFLECTION else 1 for u in scene.users],
        dtype=np.int64,
    )
    direct = None
    if scene.direct_path:
        direct = np.zeros((scene.num_users, scene.num_antennas), dtype=complex)
        for i, u in enumerate(scene.users):
            if user_side_index[i] == 0:  # only reflection-side users see the BS
                dist = np.linalg.norm(scene.bs_antennas - u[None, :], axis=1)
                direct[i, :] = friis_gain(dist, scene.wavelength)
    return ChannelGeometry(bs_to_element=bs_to_element,
                           element_to_user=element_to_user,
                           user_side_index=user_side_index,
                           direct=direct)


@dataclass(frozen=True)
class FadingModel:
    """Rician small-scale overlay on each hop; infinite K disables fading."""

    k_factor_db: float = math.inf

    @property
    def is_degenerate(self) -> bool:
        return math.isinf(self.k_factor_db) and self.k_factor_db > 0

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        """One Rician factor per entry: unit mean-square, deterministic in rng."""
        k = db_to_linear(self.k_factor_db)
        los = math.sqrt(k / (k + 1.0))
        sigma = math.sqrt(1.0 / (2.0 * (k + 1.0)))
        scatter = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return los + sigma * scatter


@dataclass(frozen=True, eq=False)
class FadingRealization:
    """Per-hop multiplicative factors for one channel draw."""

    bs_to_element: np.ndarray   # (Nt, M)
    element_to_user: np.ndarray  # (K, M)
    direct: np.ndarray | None    # (K, Nt)


def draw_realizations(model: FadingModel, geometry: ChannelGeometry,
                      seed: int, num_samples: int) -> list[FadingRealization]:
    """Draw ``num_samples`` frozen fading realizations from one seeded stream."""
    if num_samples < 1:
        raise ValidationError("num_samples must be at least 1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(num_samples):
        f1 = model.draw(rng, (geometry.num_antennas, geometry.num_elements))
        f2 = model.draw(rng, (geometry.num_users, geometry.num_elements))
        f0 = None
        if geometry.direct is not None:
            f0 = model.draw(rng, (geometry.num_users, geometry.num_antennas))
        out.append(FadingRealization(bs_to_element=f1, element_to_user=f2, direct=f0))
    return out


def assemble_entries(geometry: ChannelGeometry, coefficient_matrix: np.ndarray,
                     states: np.ndarray,
                     fading: FadingRealization | None = None) -> np.ndarray:
    """Raw (K, Nt) channel entries for a per-element state index array.

    This is the single assembly path shared by :func:`cascaded_channel` and
    the optimizers, so repeated evaluations are arithmetically identical.
    """
    gamma = coefficient_matrix[geometry.user_side_index[:, None],
                               states[None, :]]  # (K, M)
    g1 = geometry.bs_to_element
    g2 = geometry.element_to_user
    if fading is not None:
        g1 = g1 * fading.bs_to_element
        g2 = g2 * fading.element_to_user
    entries = (gamma * g2) @ g1.T  # (K, Nt); fixed reduction order over m
    if geometry.direct is not None:
        direct = geometry.direct
        if fading is not None and fading.direct is not None:
            direct = direct * fading.direct
        entries = entries + direct
    return entries


def assemble_channel(geometry: ChannelGeometry, table: StateTable,
                     config: Configuration,
                     fading: FadingRealization | None = None) -> ChannelMatrix:
    """Combine geometry factors with the per-element coefficients of ``config``."""
    if len(config) != geometry.num_elements:
        raise ValidationError(
            f"configuration covers {len(config)} elements, geometry has "
            f"{geometry.num_elements}"
        )
    states = np.asarray(config.states)
    if states.max() >= table.num_states:
        raise ValidationError(
            f"state index {states.max()} out of range for a "
            f"{table.num_states}-state table"
        )
    return ChannelMatrix(entries=assemble_entries(
        geometry, table.coefficient_matrix, states, fading=fading))


def cascaded_channel(scene: Scene, layout: ElementLayout, table: StateTable,
                     config: Configuration) -> ChannelMatrix:
    """Cascaded BS -> panel -> user channel matrix for one configuration."""
    return assemble_channel(channel_geometry(scene, layout), table, config)
