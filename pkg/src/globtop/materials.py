"""Candidate encapsulant materials and the material library file format.

Library files are JSON:

    {"materials": [{"name": ..., "youngs_modulus_gpa": ..., "poisson_ratio": ...}, ...]}

The modulus is stored in GPa exactly as read, so serialize/load round-trips
are field-exact; physics code uses the youngs_modulus_pa property.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterator

from .errors import ConfigError, InputDomainError
from .units import GPA_PA

_NORM_RE = re.compile(r"[^a-z0-9]+")


def _normalize(name: str) -> str:
    return _NORM_RE.sub("", name.lower())


@dataclass(frozen=True)
class Material:
    """Isotropic elastic encapsulant candidate."""

    name: str
    youngs_modulus_gpa: float
    poisson_ratio: float

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name.strip():
            raise InputDomainError("material name must be a non-empty string")
        e = float(self.youngs_modulus_gpa)
        if not math.isfinite(e) or e <= 0.0:
            raise InputDomainError(
                f"{self.name}: youngs_modulus_gpa must be finite and positive, got {e!r}"
            )
        nu = float(self.poisson_ratio)
        if not math.isfinite(nu) or not 0.0 <= nu < 0.5:
            raise InputDomainError(
                f"{self.name}: poisson_ratio must lie in [0, 0.5), got {nu!r}"
            )

    @property
    def youngs_modulus_pa(self) -> float:
        return self.youngs_modulus_gpa * GPA_PA

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "youngs_modulus_gpa": self.youngs_modulus_gpa,
            "poisson_ratio": self.poisson_ratio,
        }


@dataclass(frozen=True)
class MaterialLibrary:
    """Ordered collection of materials with case-insensitive name lookup."""

    materials: tuple[Material, ...]

    def __post_init__(self) -> None:
        if not self.materials:
            raise ConfigError("material library must contain at least one material")
        seen: dict[str, str] = {}
        for m in self.materials:
            key = _normalize(m.name)
            if key in seen:
                raise ConfigError(
                    f"duplicate material name: {m.name!r} collides with {seen[key]!r}"
                )
            seen[key] = m.name

    def __iter__(self) -> Iterator[Material]:
        return iter(self.materials)

    def __len__(self) -> int:
        return len(self.materials)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.materials)

    def get(self, name: str) -> Material:
        """Look up a material by name.

        Matching ignores case, spaces, and punctuation, and falls back to a
        unique normalized prefix, so "CarbonEpoxy" finds "Carbon epoxy resin".
        """
        key = _normalize(name)
        by_key = {_normalize(m.name): m for m in self.materials}
        if key in by_key:
            return by_key[key]
        if key:
            prefixed = [m for k, m in by_key.items() if k.startswith(key)]
            if len(prefixed) == 1:
                return prefixed[0]
        raise KeyError(
            f"unknown material {name!r}; available: {', '.join(self.names)}"
        )

    def sorted_by_modulus(self) -> tuple[Material, ...]:
        return tuple(sorted(self.materials, key=lambda m: m.youngs_modulus_gpa))


def load_library(text: str) -> MaterialLibrary:
    """Parse a material library from JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"material library is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "materials" not in doc:
        raise ConfigError('material library must be an object with a "materials" list')
    entries = doc["materials"]
    if not isinstance(entries, list):
        raise ConfigError('"materials" must be a list')
    materials = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"materials[{i}] must be an object")
        missing = {"name", "youngs_modulus_gpa", "poisson_ratio"} - set(entry)
        if missing:
            raise ConfigError(f"materials[{i}] is missing {sorted(missing)}")
        extra = set(entry) - {"name", "youngs_modulus_gpa", "poisson_ratio"}
        if extra:
            raise ConfigError(f"materials[{i}] has unknown keys {sorted(extra)}")
        try:
            materials.append(
                Material(
                    name=entry["name"],
                    youngs_modulus_gpa=entry["youngs_modulus_gpa"],
                    poisson_ratio=entry["poisson_ratio"],
                )
            )
        except (InputDomainError, TypeError, ValueError) as exc:
            raise ConfigError(f"materials[{i}]: {exc}") from exc
    return MaterialLibrary(materials=tuple(materials))


def load_library_file(path: str | Path) -> MaterialLibrary:
    """Load a material library from a JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read material library {path}: {exc}") from exc
    return load_library(text)


def serialize_library(library: MaterialLibrary) -> str:
    """Serialize a library to JSON text; load_library inverts this exactly."""
    doc = {"materials": [m.as_dict() for m in library]}
    return json.dumps(doc, indent=2) + "\n"


def default_library() -> MaterialLibrary:
    """The three bundled candidate encapsulants, softest first."""
    text = resources.files("globtop").joinpath("data/materials.json").read_text("utf-8")
    return load_library(text)
