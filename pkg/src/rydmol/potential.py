"""Born-Oppenheimer mean-field potential for a ground-state atom inside a Rydberg orbit.

The ground-state atom at distance R sees the Rydberg electron density weighted
by an energy-dependent s-wave scattering length,

    V(R) = 2 pi a(k(R)) |Psi(R)|^2,   a(k) = a_atom + (pi/3) alpha k,

with the electron momentum taken from the classical energy balance
k^2/2 = -1/(2 n^2) + 1/R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .wavefunction import RadialWavefunction


@dataclass(frozen=True)
class ScatteringModel:
    """Electron-atom s-wave scattering: zero-energy length and polarisability (a.u.).

    ``ak_table`` optionally replaces the linear a(k) with a tabulated curve
    given as ``(k_values, a_values)``; it is linearly interpolated and held
    constant beyond its ends.
    """

    a_atom: float
    alpha: float = 319.0
    ak_table: tuple | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"polarisability must be positive, got {self.alpha!r}")
        if not -100.0 <= self.a_atom <= 100.0:
            raise ValueError(f"a_atom={self.a_atom!r} bohr outside sanity bound [-100, 100]")

    @property
    def model_id(self) -> str:
        tab = "" if self.ak_table is None else f",table={len(self.ak_table[0])}pts"
        return f"a(k)={self.a_atom!r}+pi/3*{self.alpha!r}*k{tab}"


def local_momentum(n_star: float, R):
    """Semiclassical electron momentum sqrt(2/R - 1/n*^2); zero beyond the turning point."""
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0):
        raise ValueError("R must be positive")
    k2 = 2.0 / R - 1.0 / n_star**2
    k = np.sqrt(np.maximum(k2, 0.0))
    return float(k) if k.ndim == 0 else k


def scattering_length(model: ScatteringModel, k):
    """Energy-dependent scattering length a(k) in bohr."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("momentum must be non-negative")
    if model.ak_table is not None:
        ks, avals = (np.asarray(v, dtype=float) for v in model.ak_table)
        a = np.interp(k, ks, avals)
    else:
        a = model.a_atom + (math.pi / 3.0) * model.alpha * k
    return float(a) if np.ndim(a) == 0 else a


def scattering_zero_momentum(model: ScatteringModel) -> float:
    """Momentum at which the linear a(k) changes sign."""
    return -3.0 * model.a_atom / (math.pi * model.alpha)


@dataclass(frozen=True, eq=False)
class PotentialCurve:
    """V(R) in hartree tabulated on (a restriction of) the wavefunction mesh."""

    r_grid: np.ndarray
    v_values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.r_grid)
        if r.ndim != 1 or len(r) != len(self.v_values) or len(r) < 3:
            raise ValueError("r_grid and v_values must be 1-D arrays of equal length >= 3")
        if np.any(np.diff(r) <= 0):
            raise ValueError("r_grid must be strictly increasing")

    @property
    def mesh_id(self) -> str:
        return self.metadata.get("mesh", "unnamed")

    def minimum(self) -> tuple[float, float]:
        i = int(np.argmin(self.v_values))
        return float(self.r_grid[i]), float(self.v_values[i])


def build_potential(
    wf: RadialWavefunction,
    scattering: ScatteringModel,
    n_star: float | None = None,
    *,
    r_min: float = 100.0,
    momentum_uses_n_star: bool = True,
) -> PotentialCurve:
    """Mean-field potential on the wavefunction mesh for r_min <= R <= r_out.

    ``n_star`` defaults to the wavefunction's effective quantum number.  With
    ``momentum_uses_n_star=False`` the bare principal quantum number enters the
    momentum instead.
    """
    if n_star is None:
        n_star = wf.state.n_star
    if not momentum_uses_n_star:
        n_star = float(wf.state.n)
    r = wf.r_grid
    if r_min >= r[-1] or r_min < 0:
        raise ValueError(f"r_min={r_min} bohr not inside mesh {wf.mesh_id}")
    mask = r >= r_min
    R = r[mask]
    u = wf.u_values[mask]
    a = scattering_length(scattering, local_momentum(n_star, R))
    # 2 pi a |Psi|^2 with |Psi|^2 = u^2 / (4 pi R^2)
    v = a * u * u / (2.0 * R * R)
    metadata = {
        "n": wf.state.n,
        "n_star": n_star,
        "momentum_uses_n_star": momentum_uses_n_star,
        "defect_model": wf.metadata.get("defect_model"),
        "scattering_model": scattering.model_id,
        "a_atom_bohr": scattering.a_atom,
        "alpha_au": scattering.alpha,
        "mesh": wf.mesh_id,
        "r_min_bohr": float(R[0]),
    }
    return PotentialCurve(r_grid=R.copy(), v_values=v, metadata=metadata)


@dataclass(frozen=True)
class ValidityReport:
    ratio: float
    ok: bool


def validity_check(n_star: float, alpha: float, threshold: float = 10.0) -> ValidityReport:
    """Compare the orbit size 3/2 n*^2 with the interaction range sqrt(alpha)."""
    if not (n_star > 0 and alpha > 0):
        raise ValueError("n_star and alpha must be positive")
    ratio = 1.5 * n_star**2 / math.sqrt(alpha)
    return ValidityReport(ratio=ratio, ok=ratio >= threshold)


def potential_table_mhz(curve: PotentialCurve, hartree_to_mhz: float) -> np.ndarray:
    """Two-column (R bohr, V MHz) array for plotting."""
    return np.column_stack([curve.r_grid, curve.v_values * hartree_to_mhz])
