"""Chain specifications and sinusoidal bond profiles.

Bond centres sit at half-integer positions ``x = l + 1/2``.  They are carried
around as the integer ``2x`` so the convention stays exact until the single
trigonometric evaluation in :func:`rescale_factor`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np


class Boundary(str, enum.Enum):
    OPEN_DEFORMED = "open-deformed"
    UNIFORM_OPEN = "uniform-open"
    UNIFORM_PERIODIC = "uniform-periodic"

    @classmethod
    def parse(cls, value: "str | Boundary") -> "Boundary":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "opendeformed": cls.OPEN_DEFORMED,
            "deformed": cls.OPEN_DEFORMED,
            "sd": cls.OPEN_DEFORMED,
            "uniformopen": cls.UNIFORM_OPEN,
            "open": cls.UNIFORM_OPEN,
            "uniformperiodic": cls.UNIFORM_PERIODIC,
            "periodic": cls.UNIFORM_PERIODIC,
        }
        for member in cls:
            if member.value == key:
                return member
        try:
            return aliases[key.replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown boundary {value!r}") from None


@dataclass(frozen=True)
class ChainSpec:
    """One XXZ chain instance.

    ``alpha`` only matters for ``Boundary.OPEN_DEFORMED``.  Energies are in
    units of ``j_coupling`` and temperatures in ``k_B T / J`` with ``k_B = 1``.
    """

    n_sites: int
    alpha: float = 2.0
    delta: float = 1.0
    j_coupling: float = 1.0
    boundary: Boundary = Boundary.OPEN_DEFORMED

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta!r}")
        if not (self.j_coupling > 0 and math.isfinite(self.j_coupling)):
            raise ValueError(f"j_coupling must be > 0, got {self.j_coupling!r}")

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.UNIFORM_PERIODIC

    def replace(self, **changes: Any) -> "ChainSpec":
        data = self.to_record()
        data.update({"j" if k == "j_coupling" else k: v for k, v in changes.items()})
        return ChainSpec.from_record(data)

    def to_record(self) -> dict[str, Any]:
        return {
            "n_sites": self.n_sites,
            "alpha": float(self.alpha),
            "delta": float(self.delta),
            "j": float(self.j_coupling),
            "boundary": self.boundary.value,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "ChainSpec":
        unknown = set(record) - {"n_sites", "alpha", "delta", "j", "boundary"}
        if unknown:
            raise ValueError(f"unknown ChainSpec keys: {sorted(unknown)}")
        return cls(
            n_sites=int(record["n_sites"]),
            alpha=float(record.get("alpha", 2.0)),
            delta=float(record.get("delta", 1.0)),
            j_coupling=float(record.get("j", 1.0)),
            boundary=Boundary.parse(record.get("boundary", Boundary.OPEN_DEFORMED)),
        )


@dataclass(frozen=True)
class CouplingProfile:
    """Bond strengths ``J f_{l+1/2}``; ``bonds[i]`` joins sites ``i`` and ``i+1`` (0-based).

    For periodic chains the last bond joins site ``N-1`` back to site ``0``.
    """

    n_sites: int
    bonds: np.ndarray = field(repr=False)
    periodic: bool = False

    def __post_init__(self) -> None:
        bonds = np.array(self.bonds, dtype=float)
        bonds.setflags(write=False)
        object.__setattr__(self, "bonds", bonds)
        expected = self.n_sites if self.periodic else self.n_sites - 1
        if bonds.shape != (expected,):
            raise ValueError(f"expected {expected} bonds, got shape {bonds.shape}")
        if np.any(bonds < 0):
            raise ValueError("bond strengths must be non-negative")

    def pairs(self) -> list[tuple[int, int, float]]:
        """``(i, j, strength)`` for every bond, 0-based site indices."""
        n = self.n_sites
        return [(i, (i + 1) % n, float(b)) for i, b in enumerate(self.bonds)]


def _factor_from_twice_x(n_sites: int, alpha: float, twice_x: int) -> float:
    # sin((pi/N)(x - 1/2)) with x = twice_x / 2
    s = math.sin(math.pi * (twice_x - 1) / (2 * n_sites))
    s = max(s, 0.0)
    if s == 0.0:
        return 1.0 if alpha == 0 else 0.0
    if alpha == 0:
        return 1.0
    return math.exp(alpha * math.log(s))


def rescale_factor(n_sites: int, alpha: float, x: float) -> float:
    """Sinusoidal rescaling ``sin^alpha[(pi/N)(x - 1/2)]`` of a local term at ``x``.

    Raises
    ------
    ValueError
        If ``alpha < 0`` or ``x`` lies outside ``[1/2, N + 1/2]``.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha!r}")
    if n_sites < 1:
        raise ValueError(f"n_sites must be positive, got {n_sites!r}")
    if not (0.5 <= x <= n_sites + 0.5):
        raise ValueError(f"x={x!r} outside [1/2, {n_sites + 0.5}]")
    twice_x = 2 * x
    if twice_x == int(twice_x):
        # Exact at the edges and the centre, where the float path drifts by an ulp.
        ix = int(twice_x)
        if ix == 1 or ix == 2 * n_sites + 1:
            return 1.0 if alpha == 0 else 0.0
        if ix == n_sites + 1:
            return 1.0
        # Fold onto the left half so mirrored positions share one evaluation.
        ix = min(ix, 2 * n_sites + 2 - ix)
        return _factor_from_twice_x(n_sites, alpha, ix)
    s = math.sin(math.pi / n_sites * (x - 0.5))
    s = max(s, 0.0)
    if s == 0.0:
        return 1.0 if alpha == 0 else 0.0
    return 1.0 if alpha == 0 else math.exp(alpha * math.log(s))


def bond_profile(spec: ChainSpec) -> CouplingProfile:
    n, j = spec.n_sites, spec.j_coupling
    if spec.boundary is Boundary.UNIFORM_PERIODIC:
        return CouplingProfile(n, np.full(n, j), periodic=True)
    if spec.boundary is Boundary.UNIFORM_OPEN:
        return CouplingProfile(n, np.full(n - 1, j))
    # bond l (1-based) is centred at x = l + 1/2, i.e. 2x = 2l + 1
    bonds = [j * rescale_factor(n, spec.alpha, l + 0.5) for l in range(1, n)]
    return CouplingProfile(n, np.array(bonds))
