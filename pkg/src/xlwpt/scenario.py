"""Scenario files: schema, validation and channel synthesis for a whole scene.

A scenario is a JSON document (``schema_version`` 1)::

    {
      "schema_version": 1,
      "frequency_hz": 3.8e9,
      "array": {"count": [40, 25], "spacing_wavelengths": [0.7275, 0.7275],
                "center": [15.4, -2.6, 3.6], "normal": [-1, 0, 0]},
      "walls": [{"name": "floor", "normal": [0, 0, 1], "offset": 0,
                 "u_axis": [1, 0, 0], "limits": [-2, 22, -5, 1],
                 "reflection_coeff": 0.0068}],
      "devices": {"positions": [[3.5, -2, 1]]}
    }

Unknown fields are rejected. See ``SCHEMA`` for the complete layout.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, Optional, Union

import jsonschema
import numpy as np

from .arrays import ISOTROPIC, ArrayLayout, GainPattern, make_ura
from .channel import SPEED_OF_LIGHT, SmcComponent, build_components, smc_channel, total_channel
from .geometry import Wall

__all__ = ["SCHEMA", "ScenarioError", "Scenario", "parse_scenario", "load_scenario",
           "bundled_scenarios"]

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_pos2 = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
         "minItems": 2, "maxItems": 2}
_pattern = {"type": "string"}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "frequency_hz", "array", "devices"],
    "properties": {
        "schema_version": {"const": 1},
        "name": {"type": "string"},
        "frequency_hz": {"type": "number", "exclusiveMinimum": 0},
        "array": {
            "type": "object",
            "additionalProperties": False,
            "required": ["count", "center", "normal"],
            "oneOf": [{"required": ["spacing_m"]}, {"required": ["spacing_wavelengths"]}],
            "properties": {
                "count": {"type": "array", "items": {"type": "integer", "minimum": 1},
                          "minItems": 2, "maxItems": 2},
                "spacing_m": _pos2,
                "spacing_wavelengths": _pos2,
                "center": _vec3,
                "normal": _vec3,
                "polarization": _vec3,
                "pattern": _pattern,
            },
        },
        "walls": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "normal", "offset", "u_axis", "limits"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "normal": _vec3,
                    "offset": {"type": "number"},
                    "u_axis": _vec3,
                    "v_axis": _vec3,
                    "limits": {"type": "array", "items": {"type": "number"},
                               "minItems": 4, "maxItems": 4},
                    "reflection_coeff": {"type": "number", "minimum": 0},
                    "reflect": {"type": "boolean"},
                },
            },
        },
        "devices": {
            "type": "object",
            "additionalProperties": False,
            "required": ["positions"],
            "properties": {
                "positions": {"type": "array", "items": _vec3, "minItems": 1},
                "polarization": _vec3,
                "orientation": {"type": "array", "items": _vec3, "minItems": 3, "maxItems": 3},
                "pattern": _pattern,
            },
        },
        "diffuse_variance": {"type": ["number", "null"], "minimum": 0},
        "occlusion": {"type": "boolean"},
    },
}

_NORM_TOL = 1e-6


class ScenarioError(ValueError):
    """Invalid scenario document; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")


def _unit(vec, path):
    v = np.asarray(vec, dtype=float)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > _NORM_TOL:
        raise ScenarioError(path, f"expected a unit vector, norm is {n:.6g}")
    if n != 1.0:
        warnings.warn(f"{path}: normalizing vector of norm {n!r}", stacklevel=3)
    return v / n


def _load_pattern(source: Optional[str], base: Optional[Path], path: str) -> GainPattern:
    if source is None or source == "isotropic":
        return ISOTROPIC
    p = Path(source)
    if not p.is_absolute() and base is not None:
        p = base / p
    try:
        return GainPattern.from_csv(p)
    except (OSError, ValueError) as exc:
        raise ScenarioError(path, str(exc)) from exc


@dataclass
class Scenario:
    """Validated scene: array, walls, device positions and propagation options."""

    frequency: float
    layout: ArrayLayout
    walls: List[Wall] = field(default_factory=list)
    reflecting: List[bool] = field(default_factory=list)
    devices: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))
    tx_pattern: GainPattern = ISOTROPIC
    device_pattern: GainPattern = ISOTROPIC
    device_orientation: np.ndarray = field(default_factory=lambda: np.eye(3))
    device_polarization: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    diffuse_variance: Optional[float] = None
    occlusion: bool = False
    name: str = ""

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        self.devices = np.atleast_2d(np.asarray(self.devices, dtype=float))
        if len(self.devices) < 1:
            raise ValueError("at least one device position required")
        if not self.reflecting:
            self.reflecting = [True] * len(self.walls)
        self.wavelength = SPEED_OF_LIGHT / self.frequency
        self.k0 = 2 * np.pi / self.wavelength

    @property
    def num_elements(self) -> int:
        return self.layout.num_elements

    @property
    def reflectors(self) -> List[Wall]:
        return [w for w, r in zip(self.walls, self.reflecting) if r]

    def device(self, index: int) -> np.ndarray:
        """Device position by 1-based index."""
        if not 1 <= index <= len(self.devices):
            raise IndexError(f"device {index} out of range 1..{len(self.devices)}")
        return self.devices[index - 1]

    def components(self, device_pos, walls=None) -> List[SmcComponent]:
        """LoS plus image components at ``device_pos``; ``walls`` overrides the scene walls."""
        walls = self.walls if walls is None else walls
        refl = [w for w, r in zip(walls, self.reflecting) if r]
        return build_components(self.layout, device_pos, walls, refl, self.occlusion)

    def component_channels(self, device_pos, walls=None, unit_reflection=False) -> List[np.ndarray]:
        """Per-component channel vectors at ``device_pos``.

        With ``unit_reflection`` every image uses a reflection coefficient of
        one, which is the parameterization the reflection-coefficient search
        expects.
        """
        out = []
        for c in self.components(device_pos, walls):
            if unit_reflection and not c.is_los:
                c = SmcComponent(c.index, c.layout, 1.0, c.generating_wall, c.visibility)
            out.append(smc_channel(c, device_pos, self.wavelength, self.tx_pattern,
                                   self.device_pattern, self.device_orientation,
                                   self.device_polarization))
        return out

    def channel(self, device_pos, dm_variance=None, seed=None, walls=None) -> np.ndarray:
        """Total channel: sum of components plus optional diffuse multipath."""
        dm = self.diffuse_variance if dm_variance is None else dm_variance
        return total_channel(self.component_channels(device_pos, walls), dm, seed)


def _build(doc: dict, base: Optional[Path]) -> Scenario:
    f = float(doc["frequency_hz"])
    lam = SPEED_OF_LIGHT / f
    arr = doc["array"]
    if "spacing_m" in arr:
        dy, dz = arr["spacing_m"]
    else:
        dy, dz = (s * lam for s in arr["spacing_wavelengths"])
    normal = _unit(arr["normal"], "array.normal")
    pol = _unit(arr.get("polarization", [0, 0, 1]), "array.polarization")
    Ly, Lz = arr["count"]
    layout = make_ura(Ly, Lz, dy, dz, arr["center"], normal, pol)

    walls, reflect, names = [], [], set()
    for i, w in enumerate(doc.get("walls", [])):
        p = f"walls[{i}]"
        if w["name"] in names:
            raise ScenarioError(f"{p}.name", f"duplicate wall name {w['name']!r}")
        names.add(w["name"])
        n = _unit(w["normal"], f"{p}.normal")
        u = _unit(w["u_axis"], f"{p}.u_axis")
        if abs(n @ u) > _NORM_TOL:
            raise ScenarioError(f"{p}.u_axis", "must be orthogonal to the normal")
        u = u - (n @ u) * n
        u /= np.linalg.norm(u)
        if "v_axis" in w:
            v = _unit(w["v_axis"], f"{p}.v_axis")
            if max(abs(n @ v), abs(u @ v)) > _NORM_TOL:
                raise ScenarioError(f"{p}.v_axis", "must be orthogonal to normal and u_axis")
            v = np.cross(n, u) * np.sign(np.cross(n, u) @ v)
        else:
            v = np.cross(n, u)
        try:
            walls.append(Wall(n, w["offset"], u, v, w["limits"],
                              w.get("reflection_coeff", 1.0), w["name"]))
        except ValueError as exc:
            raise ScenarioError(p, str(exc)) from exc
        reflect.append(w.get("reflect", True))

    dev = doc["devices"]
    positions = np.asarray(dev["positions"], dtype=float)
    for i, q in enumerate(positions):
        if np.any(np.all(layout.positions == q, axis=1)):
            raise ScenarioError(f"devices.positions[{i}]", "coincides with an array element")
    orient = np.asarray(dev.get("orientation", np.eye(3)), dtype=float)
    if np.abs(orient @ orient.T - np.eye(3)).max() > _NORM_TOL:
        raise ScenarioError("devices.orientation", "must be an orthogonal matrix")
    return Scenario(
        frequency=f,
        layout=layout,
        walls=walls,
        reflecting=reflect,
        devices=positions,
        tx_pattern=_load_pattern(arr.get("pattern"), base, "array.pattern"),
        device_pattern=_load_pattern(dev.get("pattern"), base, "devices.pattern"),
        device_orientation=orient,
        device_polarization=_unit(dev.get("polarization", [0, 0, 1]), "devices.polarization"),
        diffuse_variance=doc.get("diffuse_variance"),
        occlusion=bool(doc.get("occlusion", False)),
        name=doc.get("name", ""),
    )


def parse_scenario(text: Union[str, dict], base_dir: Optional[Path] = None) -> Scenario:
    """Validate a scenario document (JSON text or already-decoded dict)."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError("", f"invalid JSON: {exc}") from exc
    else:
        doc = text
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        path = ".".join(str(p) for p in err.absolute_path)
        raise ScenarioError(path, err.message)
    return _build(doc, base_dir)


def bundled_scenarios() -> List[str]:
    files = resources.files("xlwpt") / "data"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_scenario(name_or_path: Union[str, Path]) -> Scenario:
    """Load a scenario file, or a bundled one by name (e.g. ``"hallway"``)."""
    p = Path(name_or_path)
    if p.is_file():
        return parse_scenario(p.read_text(encoding="utf-8"), p.parent)
    if str(name_or_path) in bundled_scenarios():
        res = resources.files("xlwpt") / "data" / f"{name_or_path}.json"
        return parse_scenario(res.read_text(encoding="utf-8"))
    raise FileNotFoundError(f"no scenario file or bundled scenario named {name_or_path!r}")
