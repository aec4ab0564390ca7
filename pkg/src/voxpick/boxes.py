"""Box specifications, top-surface defect grids, and scenario files.

A box is an upright cuboid resting on the table (z = 0), described by half
extents, a base world pose (xy + yaw), mass and a rigidity in [0, 1]
(1 = rigid cardboard, lower = deformable). The top face carries a 5 mm cell
grid of surface flags:

    0 smooth   1 hole (recessed)   2 ridge (zip tie, raised)   3 concave (sag)

Holes and ridges break the vacuum seal when they intersect the cup
footprint; concave cells only lower the surface. An optional top-face tilt
(wedge lid) and a start-yaw offset support the harder evaluation boxes.

Scenario files are JSON: {"schema_version": 1, "boxes": [record...]} where
each record carries a "set" of "seen" or "unseen".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CELL_SIZE = 0.005
SMOOTH, HOLE, RIDGE, CONCAVE = 0, 1, 2, 3

# surface height offsets per cell code, meters
CELL_OFFSET = {SMOOTH: 0.0, HOLE: -0.020, RIDGE: 0.004, CONCAVE: -0.006}

SCHEMA_VERSION = 1


@dataclass
class BoxSpec:
    name: str
    half_extents: np.ndarray  # (3,) m
    base_xy: np.ndarray  # (2,) world m
    base_yaw: float
    rigidity: float
    mass: float
    surface: np.ndarray  # (nu, nv) uint8 cell codes over the top face
    set_name: str = "seen"
    tilt_deg: float = 0.0  # top-face tilt about the box x-axis
    start_yaw: float = 0.0  # extra start-pose yaw (wrong-estimate scenario)

    def __post_init__(self):
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64)
        self.base_xy = np.asarray(self.base_xy, dtype=np.float64)
        self.surface = np.asarray(self.surface, dtype=np.uint8)
        if np.any(self.half_extents <= 0):
            raise ValueError(f"box {self.name}: half_extents must be positive")
        if not (0.0 <= self.rigidity <= 1.0):
            raise ValueError(f"box {self.name}: rigidity outside [0, 1]")
        nu, nv = surface_cells(self.half_extents)
        if self.surface.shape != (nu, nv):
            raise ValueError(
                f"box {self.name}: surface grid {self.surface.shape} does not cover "
                f"the top face (expected {(nu, nv)})"
            )

    @property
    def top_z(self) -> float:
        """Nominal top-face height when resting on the table."""
        return 2.0 * float(self.half_extents[2])

    def cell_index(self, u: float, v: float):
        """Surface cell containing box-frame top-face point (u, v), or None."""
        hx, hy = self.half_extents[:2]
        i = int(np.floor((u + hx) / CELL_SIZE))
        j = int(np.floor((v + hy) / CELL_SIZE))
        if 0 <= i < self.surface.shape[0] and 0 <= j < self.surface.shape[1]:
            return i, j
        return None

    def to_dict(self):
        return {
            "name": self.name,
            "half_extents": self.half_extents.tolist(),
            "base_xy": self.base_xy.tolist(),
            "base_yaw": self.base_yaw,
            "rigidity": self.rigidity,
            "mass": self.mass,
            "set": self.set_name,
            "tilt_deg": self.tilt_deg,
            "start_yaw": self.start_yaw,
            "surface": ["".join(str(c) for c in row) for row in self.surface],
        }

    @staticmethod
    def from_dict(d: dict) -> "BoxSpec":
        known = {
            "name", "half_extents", "base_xy", "base_yaw", "rigidity",
            "mass", "set", "tilt_deg", "start_yaw", "surface",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown box fields: {sorted(unknown)}")
        surface = np.array([[int(c) for c in row] for row in d["surface"]], dtype=np.uint8)
        return BoxSpec(
            name=d["name"],
            half_extents=np.array(d["half_extents"]),
            base_xy=np.array(d["base_xy"]),
            base_yaw=float(d["base_yaw"]),
            rigidity=float(d["rigidity"]),
            mass=float(d["mass"]),
            surface=surface,
            set_name=d.get("set", "seen"),
            tilt_deg=float(d.get("tilt_deg", 0.0)),
            start_yaw=float(d.get("start_yaw", 0.0)),
        )


def surface_cells(half_extents):
    nu = max(1, int(round(2.0 * half_extents[0] / CELL_SIZE)))
    nv = max(1, int(round(2.0 * half_extents[1] / CELL_SIZE)))
    return nu, nv


def smooth_surface(half_extents) -> np.ndarray:
    return np.zeros(surface_cells(half_extents), dtype=np.uint8)


def _cell_centers(half_extents, shape):
    hx, hy = half_extents[:2]
    u = -hx + (np.arange(shape[0]) + 0.5) * CELL_SIZE
    v = -hy + (np.arange(shape[1]) + 0.5) * CELL_SIZE
    return np.meshgrid(u, v, indexing="ij")

def paint_hole_disc(surface, half_extents, center_uv, radius):
    """Mark cells whose center lies within radius of center_uv as HOLE."""
    uu, vv = _cell_centers(half_extents, surface.shape)
    mask = (uu - center_uv[0]) ** 2 + (vv - center_uv[1]) ** 2 <= radius**2
    surface[mask] = HOLE
    return surface


def paint_ridge_strip(surface, half_extents, axis, position, width):
    """Mark a straight raised strip (axis 0: along u at v=position, 1: along v)."""
    uu, vv = _cell_centers(half_extents, surface.shape)
    coord = vv if axis == 0 else uu
    surface[np.abs(coord - position) <= width / 2.0] = RIDGE
    return surface


def paint_concave_bowl(surface, half_extents, center_uv, radius):
    uu, vv = _cell_centers(half_extents, surface.shape)
    mask = (uu - center_uv[0]) ** 2 + (vv - center_uv[1]) ** 2 <= radius**2
    surface[mask] = CONCAVE
    return surface


# ---------------------------------------------------------------------------
# scenario files


def save_scenario(path, boxes):
    doc = {"schema_version": SCHEMA_VERSION, "boxes": [b.to_dict() for b in boxes]}
    Path(path).write_text(json.dumps(doc, indent=1))


def load_scenario(path):
    """Load a scenario file; returns {"seen": [BoxSpec...], "unseen": [...]}."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"scenario file not found: {path}")
    doc = json.loads(path.read_text())
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"{path}: expected schema_version {SCHEMA_VERSION}, "
            f"got {doc.get('schema_version')!r}"
        )
    unknown = set(doc) - {"schema_version", "boxes"}
    if unknown:
        raise ValueError(f"{path}: unknown top-level keys {sorted(unknown)}")
    sets: dict = {"seen": [], "unseen": []}
    for rec in doc["boxes"]:
        box = BoxSpec.from_dict(rec)
        if box.set_name not in sets:
            raise ValueError(f"{path}: box {box.name} has unknown set {box.set_name!r}")
        sets[box.set_name].append(box)
    return sets


# ---------------------------------------------------------------------------
# built-in box sets


def _box(name, ext, rigidity, mass, set_name="seen", yaw=0.0, **kw):
    half = np.array(ext) / 2.0
    surf = kw.pop("surface", None)
    if surf is None:
        surf = smooth_surface(half)
    return BoxSpec(
        name=name,
        half_extents=half,
        base_xy=np.zeros(2),
        base_yaw=yaw,
        rigidity=rigidity,
        mass=mass,
        surface=surf,
        set_name=set_name,
        **kw,
    )


def builtin_seen():
    """Training set: rigid smooth boxes of several sizes plus defect boxes."""
    boxes = [
        _box("rigid-m", (0.20, 0.15, 0.10), 1.0, 0.40),
        _box("rigid-s", (0.12, 0.12, 0.08), 1.0, 0.25, yaw=0.3),
        _box("rigid-l", (0.26, 0.20, 0.12), 1.0, 0.80, yaw=-0.2),
        _box("rigid-flat", (0.18, 0.14, 0.05), 1.0, 0.30, yaw=0.15),
        _box("rigid-tall", (0.14, 0.10, 0.14), 1.0, 0.50, yaw=-0.4),
        _box("soft", (0.18, 0.14, 0.09), 0.55, 0.35),
    ]
    half = np.array((0.20, 0.16, 0.09)) / 2.0
    surf = paint_hole_disc(smooth_surface(half), half, (0.0, 0.0), 0.030)
    boxes.append(_box("hole-center", (0.20, 0.16, 0.09), 1.0, 0.45, surface=surf))

    half = np.array((0.22, 0.16, 0.10)) / 2.0
    surf = smooth_surface(half)
    paint_ridge_strip(surf, half, axis=0, position=0.0, width=0.012)
    paint_ridge_strip(surf, half, axis=1, position=-0.03, width=0.012)
    boxes.append(_box("ridge-cross", (0.22, 0.16, 0.10), 1.0, 0.50, surface=surf, yaw=0.25))

    half = np.array((0.18, 0.18, 0.08)) / 2.0
    surf = smooth_surface(half)
    paint_hole_disc(surf, half, (-0.035, 0.02), 0.025)
    paint_hole_disc(surf, half, (0.045, -0.03), 0.022)
    boxes.append(_box("hole-pair", (0.18, 0.18, 0.08), 1.0, 0.40, surface=surf, yaw=-0.1))

    half = np.array((0.20, 0.15, 0.08)) / 2.0
    surf = paint_concave_bowl(smooth_surface(half), half, (0.0, 0.0), 0.045)
    boxes.append(_box("concave-soft", (0.20, 0.15, 0.08), 0.45, 0.35, surface=surf))
    return boxes


def builtin_unseen():
    boxes = [
        _box("rigid-wide", (0.24, 0.18, 0.07), 1.0, 0.55, set_name="unseen", yaw=0.35),
        _box("tilted", (0.16, 0.12, 0.10), 1.0, 0.40, set_name="unseen", tilt_deg=7.0),
    ]
    half = np.array((0.20, 0.15, 0.09)) / 2.0
    surf = smooth_surface(half)
    paint_ridge_strip(surf, half, axis=1, position=0.02, width=0.010)
    paint_hole_disc(surf, half, (-0.045, -0.02), 0.024)
    boxes.append(
        _box("zip-hole", (0.20, 0.15, 0.09), 1.0, 0.45, set_name="unseen", surface=surf)
    )
    boxes.append(_box("soft-small", (0.13, 0.11, 0.07), 0.60, 0.30, set_name="unseen"))
    boxes.append(
        _box("angled-start", (0.18, 0.14, 0.09), 1.0, 0.40, set_name="unseen", start_yaw=1.3)
    )
    return boxes


def builtin_clean():
    """Defect-free rigid boxes only (baseline sanity set)."""
    return [
        b for b in builtin_seen()
        if b.rigidity == 1.0 and not b.surface.any() and b.tilt_deg == 0.0
    ]


def builtin_defect():
    """Hole/ridge boxes only."""
    return [b for b in builtin_seen() if np.isin(b.surface, (HOLE, RIDGE)).any()]
