from __future__ import annotations
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable, Iterator, Optional

from ..utils.errors import InvalidMaterialError


@dataclass(frozen=True)
class MaterialParams:
    """One row of a particle/wall property table (SI units)."""

    name: str
    density: float
    poisson_ratio: float
    young_modulus: float
    restitution: float
    static_friction: float
    rolling_friction: float
    cohesion: float = 0.0
    # metadata only, never read by the contact law
    repose_target_deg: Optional[float] = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self, path: str = "") -> None:
        where = f"{path}." if path else ""

        def bad(fld: str, msg: str) -> InvalidMaterialError:
            return InvalidMaterialError(f"{msg} (material '{self.name}')", path=f"{where}{fld}")

        for fld in ("density", "poisson_ratio", "young_modulus", "restitution",
                    "static_friction", "rolling_friction", "cohesion"):
            if not math.isfinite(getattr(self, fld)):
                raise bad(fld, "must be finite")
        if self.density <= 0:
            raise bad("density", "must be > 0")
        if self.young_modulus <= 0:
            raise bad("young_modulus", "must be > 0")
        if not 0 < self.poisson_ratio < 0.5:
            raise bad("poisson_ratio", "must lie in (0, 0.5)")
        if not 0 < self.restitution <= 1:
            raise bad("restitution", "must lie in (0, 1]")
        if self.static_friction < 0:
            raise bad("static_friction", "must be >= 0")
        if self.rolling_friction < 0:
            raise bad("rolling_friction", "must be >= 0")
        if self.cohesion != 0:
            raise bad("cohesion", "cohesive contact is not supported; must be 0")

    @property
    def shear_modulus(self) -> float:
        return self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))

    def scaled(self, stiffness_scale: float) -> MaterialParams:
        return replace(self, young_modulus=self.young_modulus * stiffness_scale)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


TOYOURA = MaterialParams(
    name="toyoura", density=2650.0, poisson_ratio=0.25, young_modulus=5e7,
    restitution=0.3, static_friction=0.65, rolling_friction=0.15, repose_target_deg=34.0,
)
REGOLITH = MaterialParams(
    name="regolith", density=2857.0, poisson_ratio=0.3, young_modulus=1e8,
    restitution=0.4, static_friction=0.81, rolling_friction=0.42, repose_target_deg=39.0,
)
GRIPPER = MaterialParams(
    name="gripper", density=2700.0, poisson_ratio=0.33, young_modulus=7e10,
    restitution=0.3, static_friction=0.4, rolling_friction=0.05,
)
WALL = replace(GRIPPER, name="wall")

PRESET_MATERIALS: dict[str, MaterialParams] = {
    m.name: m for m in (TOYOURA, REGOLITH, GRIPPER, WALL)
}


@dataclass(frozen=True)
class Interaction:
    """Explicit pair override. Fields left as None fall back to the default rule."""

    a: str
    b: str
    static_friction: Optional[float] = None
    rolling_friction: Optional[float] = None
    restitution: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class PairCoefficients:
    static_friction: float
    rolling_friction: float
    restitution: float

    def __iter__(self) -> Iterator[float]:
        return iter((self.static_friction, self.rolling_friction, self.restitution))


def default_coefficients(a: MaterialParams, b: MaterialParams) -> PairCoefficients:
    """Pair rule when no interaction entry exists: the smaller value of each."""
    return PairCoefficients(
        min(a.static_friction, b.static_friction),
        min(a.rolling_friction, b.rolling_friction),
        min(a.restitution, b.restitution),
    )


@dataclass
class MaterialTable:
    """Indexed material list plus the (a, b) interaction table."""

    materials: list[MaterialParams]
    interactions: list[Interaction] = field(default_factory=list)

    def __post_init__(self) -> None:
        names = [m.name for m in self.materials]
        if len(set(names)) != len(names):
            raise InvalidMaterialError("duplicate material names", path="materials")
        self._index = {n: i for i, n in enumerate(names)}
        for k, inter in enumerate(self.interactions):
            for side in (inter.a, inter.b):
                if side not in self._index:
                    raise InvalidMaterialError(
                        f"unknown material '{side}'", path=f"interactions[{k}]"
                    )

    def __len__(self) -> int:
        return len(self.materials)

    def __getitem__(self, idx: int) -> MaterialParams:
        return self.materials[idx]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError as e:
            raise InvalidMaterialError(f"unknown material '{name}'") from e

    def ensure(self, material: MaterialParams) -> int:
        """Index of `material`, appending it when the name is new."""
        if material.name in self._index:
            return self._index[material.name]
        self.materials.append(material)
        self._index[material.name] = len(self.materials) - 1
        return self._index[material.name]

    def pair(self, i: int, j: int) -> PairCoefficients:
        a, b = self.materials[i], self.materials[j]
        mu_s, mu_r, e = default_coefficients(a, b)
        for inter in self.interactions:
            if {inter.a, inter.b} == {a.name, b.name}:
                mu_s = inter.static_friction if inter.static_friction is not None else mu_s
                mu_r = inter.rolling_friction if inter.rolling_friction is not None else mu_r
                e = inter.restitution if inter.restitution is not None else e
                break
        return PairCoefficients(mu_s, mu_r, e)

    def scaled(self, stiffness_scale: float) -> MaterialTable:
        return MaterialTable(
            [m.scaled(stiffness_scale) for m in self.materials], list(self.interactions)
        )

    def names(self) -> Iterable[str]:
        return (m.name for m in self.materials)
