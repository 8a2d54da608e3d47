"""Panel geometry: element lattice construction, side classification, mirror law.

Conventions
-----------
The panel is a flat rectangular lattice of ``rows x cols`` elements centred
at ``center`` with unit ``normal``.  In-plane axes are deterministic so that
layouts are reproducible bit-for-bit: ``u`` is the normalised projection of
global +x onto the panel plane (falling back to +y when the normal is
parallel to x), and ``v = normal x u``.  Columns run along ``u`` with pitch
``dx``, rows along ``v`` with pitch ``dy``.  Element order is row-major.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import InvalidSceneError, SideUndefinedError, ValidationError

Vec3 = np.ndarray  # shape (3,), float64

PLANE_EPS = 1e-9   # metres; closer than this to the plane counts as "in plane"
UNIT_EPS = 1e-12


def as_vec3(value, name: str = "vector") -> Vec3:
    """Coerce to a read-only finite (3,) float array."""
    v = np.array(value, dtype=float)
    if v.shape != (3,):
        raise ValidationError(f"{name} must have 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} must be finite, got {v.tolist()}")
    v.setflags(write=False)
    return v


def unit(v) -> Vec3:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < UNIT_EPS:
        raise ValidationError("cannot normalize a near-zero vector")
    out = v / n
    out.setflags(write=False)
    return out


class Side(Enum):
    """Half-space relative to the panel; REFLECTION is the side holding the BS."""

    REFLECTION = "reflection"
    REFRACTION = "refraction"


@dataclass(frozen=True, eq=False)
class PanelSpec:
    """Placement and tiling of the element lattice.

    Defaults describe the bundled prototype panel: 20 x 32 = 640 elements
    with a 2.87 cm x 1.42 cm footprint, tiled into 16 groups of 5 x 8.
    """

    center: Vec3
    normal: Vec3
    rows: int = 20
    cols: int = 32
    dx: float = 0.0287
    dy: float = 0.0142
    group_rows: int = 5
    group_cols: int = 8

    def __post_init__(self):
        object.__setattr__(self, "center", as_vec3(self.center, "panel center"))
        normal = as_vec3(self.normal, "panel normal")
        if abs(np.linalg.norm(normal) - 1.0) > UNIT_EPS:
            raise ValidationError(
                f"panel normal must be unit length within {UNIT_EPS}, "
                f"got |n| = {np.linalg.norm(normal)!r}"
            )
        object.__setattr__(self, "normal", normal)
        for name in ("rows", "cols", "group_rows", "group_cols"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value <= 0:
                raise ValidationError(f"panel {name} must be a positive integer")
            object.__setattr__(self, name, int(value))
        if self.rows % self.group_rows != 0:
            raise ValidationError(
                f"rows ({self.rows}) not divisible by group_rows ({self.group_rows})"
            )
        if self.cols % self.group_cols != 0:
            raise ValidationError(
                f"cols ({self.cols}) not divisible by group_cols ({self.group_cols})"
            )
        if not (self.dx > 0 and self.dy > 0):
            raise ValidationError("element pitch dx, dy must be positive")

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols

    @property
    def num_groups(self) -> int:
        return (self.rows // self.group_rows) * (self.cols // self.group_cols)

    @cached_property
    def basis(self) -> tuple[Vec3, Vec3]:
        """In-plane unit axes (u, v); see module docstring for the convention."""
        n = self.normal
        for hint in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
            tangential = hint - np.dot(hint, n) * n
            if np.linalg.norm(tangential) > 1e-6:
                u = unit(tangential)
                break
        v = unit(np.cross(n, u))
        return u, v

    def signed_distance(self, point) -> float:
        return float(np.dot(np.asarray(point, dtype=float) - self.center, self.normal))


@dataclass(frozen=True, eq=False)
class ElementLayout:
    """Element centres (row-major), group membership, and the panel basis."""

    positions: np.ndarray  # (M, 3)
    group_of: np.ndarray   # (M,) int
    u: Vec3
    v: Vec3

    def __post_init__(self):
        self.positions.setflags(write=False)
        self.group_of.setflags(write=False)

    @property
    def num_elements(self) -> int:
        return self.positions.shape[0]

    @property
    def num_groups(self) -> int:
        return int(self.group_of.max()) + 1


def build_layout(spec: PanelSpec) -> ElementLayout:
    """Place ``rows x cols`` element centres on the panel lattice.

    The lattice is centred on ``spec.center``; group indices tile contiguous
    ``group_rows x group_cols`` blocks, numbered row-major over the blocks.
    """
    u, v = spec.basis
    cc = np.arange(spec.cols) - (spec.cols - 1) / 2.0
    rr = np.arange(spec.rows) - (spec.rows - 1) / 2.0
    col_idx, row_idx = np.meshgrid(np.arange(spec.cols), np.arange(spec.rows))
    offsets_u = (cc[None, :] * spec.dx).repeat(spec.rows, axis=0)
    offsets_v = (rr[:, None] * spec.dy).repeat(spec.cols, axis=1)
    positions = (
        spec.center[None, None, :]
        + offsets_u[:, :, None] * u[None, None, :]
        + offsets_v[:, :, None] * v[None, None, :]
    ).reshape(-1, 3)
    groups_per_band = spec.cols // spec.group_cols
    group_of = (
        (row_idx // spec.group_rows) * groups_per_band + (col_idx // spec.group_cols)
    ).reshape(-1).astype(np.int64)
    return ElementLayout(positions=positions, group_of=group_of, u=u, v=v)


def side_of(spec: PanelSpec, bs_position, point) -> Side:
    """Classify ``point`` as REFLECTION (BS half-space) or REFRACTION."""
    d_bs = spec.signed_distance(bs_position)
    if abs(d_bs) <= PLANE_EPS:
        raise InvalidSceneError("BS lies in the panel plane; scene is invalid")
    d_pt = spec.signed_distance(point)
    if abs(d_pt) <= PLANE_EPS:
        raise SideUndefinedError(
            f"point {np.asarray(point, dtype=float).tolist()} lies in the panel plane"
        )
    return Side.REFLECTION if (d_pt > 0) == (d_bs > 0) else Side.REFRACTION


def specular_direction(incident_dir, normal) -> Vec3:
    """Mirror-law direction d - 2 (d.n) n for unit inputs."""
    d = as_vec3(incident_dir, "incident direction")
    n = as_vec3(normal, "normal")
    for name, vec in (("incident direction", d), ("normal", n)):
        if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
            raise ValidationError(f"{name} must be unit length")
    out = d - 2.0 * np.dot(d, n) * n
    out.setflags(write=False)
    return out
