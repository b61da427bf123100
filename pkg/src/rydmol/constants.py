"""Physical constants and unit conversions.

Everything inside the numeric core is in atomic units (hartree, bohr,
electron mass).  MHz, gauss, V/cm and microseconds only appear at the I/O
boundary, through the helpers in this module.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Conversion factors used by the package (CODATA 2018 by default)."""

    hartree_to_mhz: float = 6.579683920502e9
    bohr_magneton_mhz_per_gauss: float = 1.39962449361
    amu_to_me: float = 1822.888486209
    mass_rb87_amu: float = 86.909180531  # AME2016
    field_au_to_v_per_cm: float = 5.14220674763e9
    vintage: str = "CODATA 2018 / AME2016"

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if f.name == "vintage":
                continue
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"constant {f.name} must be strictly positive, got {value!r}")
        if not 6.5e9 <= self.hartree_to_mhz <= 6.7e9:
            raise ValueError(f"hartree_to_mhz={self.hartree_to_mhz!r} outside sanity bound [6.5e9, 6.7e9]")

    def with_overrides(self, **overrides) -> "PhysicalConstants":
        """Return a copy with some values replaced, e.g. to pin another CODATA vintage."""
        if overrides and "vintage" not in overrides:
            overrides["vintage"] = self.vintage + " (overridden)"
        return dataclasses.replace(self, **overrides)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_CONSTANTS = PhysicalConstants()


def energy_au_to_mhz(e, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Convert an energy in hartree to a frequency in MHz."""
    return e * constants.hartree_to_mhz


def energy_mhz_to_au(f, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Convert a frequency in MHz to an energy in hartree."""
    return f / constants.hartree_to_mhz


def field_v_per_cm_to_au(field, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    return field / constants.field_au_to_v_per_cm


def reduced_mass_rb2(constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Reduced mass of the homonuclear 87Rb dimer in electron masses."""
    return constants.mass_rb87_amu * constants.amu_to_me / 2.0
