"""Rydberg nS energies and radial wavefunctions.

The radial equation for the Rydberg electron is integrated inward with the
Numerov scheme over a pure Coulomb potential at the quantum-defect energy
-1/(2 n*^2).  The mesh is uniform in x = sqrt(r), which packs points near
the core and keeps the outer lobes well resolved with a modest point count.

With r = x^2 and u(r) = x^(1/2) y(x) the equation u'' = [2(V - E) + l(l+1)/r^2] u
becomes

    y'' = [8 x^2 (V(x^2) - E) + (2l + 1/2)(2l + 3/2) / x^2] y

which is free of first-derivative terms and so suitable for Numerov.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline


class WavefunctionError(RuntimeError):
    """Raised when a wavefunction cannot be produced on the requested mesh."""


@dataclass(frozen=True)
class QuantumDefectModel:
    """Rydberg-Ritz coefficients for one (l, j) series."""

    delta0: float
    delta2: float = 0.0
    delta4: float = 0.0
    source: str = "user supplied"

    def __post_init__(self):
        if not 0.0 <= self.delta0 <= 5.0:
            raise ValueError(f"delta0={self.delta0!r} outside sanity bound [0, 5]")

    @property
    def model_id(self) -> str:
        return f"ritz(d0={self.delta0!r},d2={self.delta2!r},d4={self.delta4!r})"


#: Rb nS1/2 series, millimetre-wave spectroscopy of cold Rb (Li, Mourachko,
#: Noel & Gallagher, Phys. Rev. A 67, 052502 (2003)).
RB_NS_DEFECTS = QuantumDefectModel(
    delta0=3.1311804,
    delta2=0.1784,
    delta4=0.0,
    source="Li et al., PRA 67, 052502 (2003), Rb nS1/2",
)

HYDROGEN = QuantumDefectModel(delta0=0.0, source="hydrogen (no defect)")

MIN_DEFECT_N = 10


def quantum_defect(model: QuantumDefectModel, n: int) -> float:
    """Rydberg-Ritz quantum defect delta0 + delta2/(n-delta0)^2 + delta4/(n-delta0)^4."""
    if n < MIN_DEFECT_N:
        raise ValueError(f"n={n} below the Rydberg-Ritz validity floor n >= {MIN_DEFECT_N}")
    m = (n - model.delta0) ** 2
    return model.delta0 + model.delta2 / m + model.delta4 / (m * m)


def rydberg_energy(n: float, defect: float = 0.0) -> float:
    """Energy -1/(2 n*^2) in hartree of a level with effective quantum number n - defect."""
    n_star = n - defect
    if not n_star > 0:
        raise ValueError(f"effective quantum number must be positive, got {n_star!r}")
    return -0.5 / n_star**2


@dataclass(frozen=True)
class RydbergState:
    n: int
    l: int
    n_star: float
    energy: float

    @classmethod
    def from_model(cls, n: int, model: QuantumDefectModel, l: int = 0) -> "RydbergState":
        if model.delta0 == 0.0 and model.delta2 == 0.0 and model.delta4 == 0.0:
            delta = 0.0  # hydrogen limit holds for any n, including n < 10
        else:
            delta = quantum_defect(model, n)
        n_star = n - delta
        return cls(n=n, l=l, n_star=n_star, energy=rydberg_energy(n, delta))

    @property
    def defect(self) -> float:
        return self.n - self.n_star


@dataclass(frozen=True)
class RadialGrid:
    """Mesh uniform in sqrt(r).

    ``step`` is the spacing in x = sqrt(r) (units of bohr^1/2).  ``r_out``
    defaults to 2 n (n + 15) bohr, far enough out that the inward seed
    is negligible.
    """

    step: float = 0.005
    r_out: float | None = None

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("mesh step must be positive")
        if self.r_out is not None and not self.r_out > 0:
            raise ValueError("r_out must be positive")

    def outer_radius(self, n: int) -> float:
        return float(self.r_out) if self.r_out is not None else 2.0 * n * (n + 15)

    def points_per_wavelength(self) -> float:
        # |y''/y| in x peaks at 8 (Coulomb term) away from the centrifugal region
        return 2.0 * math.pi / (math.sqrt(8.0) * self.step)

    def x_values(self, n: int) -> np.ndarray:
        k_max = int(math.ceil(math.sqrt(self.outer_radius(n)) / self.step))
        return self.step * np.arange(k_max + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class RadialWavefunction:
    """Normalised reduced radial function u(r) = r R(r) on a sqrt(r) mesh."""

    r_grid: np.ndarray
    u_values: np.ndarray
    n_nodes: int
    norm: float
    state: RydbergState
    truncation_radius: float = 0.0
    mesh_id: str = ""
    metadata: dict = field(default_factory=dict)

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.r_grid, self.u_values)

    def __call__(self, r):
        """Cubic interpolation of u(r)."""
        return self._spline(r)

    def outermost_antinode(self) -> float:
        """Radius of the outermost maximum of u^2, refined between mesh points."""
        u = self.u_values
        sign = np.sign(u)
        crossings = np.nonzero(sign[1:] * sign[:-1] < 0)[0]
        start = crossings[-1] + 1 if len(crossings) else 0
        i = start + int(np.argmax(np.abs(u[start:])))
        lo, hi = max(i - 6, 0), min(i + 7, len(u))
        local = CubicSpline(self.r_grid[lo:hi], u[lo:hi] ** 2)
        roots = local.derivative().roots(extrapolate=False)
        roots = roots[(roots >= self.r_grid[max(i - 1, 0)]) & (roots <= self.r_grid[min(i + 1, len(u) - 1)])]
        if len(roots) == 0:
            return float(self.r_grid[i])
        return float(roots[np.argmax(local(roots))])

    def to_table(self) -> np.ndarray:
        """Two-column array (r, u)."""
        return np.column_stack([self.r_grid, self.u_values])


def _numerov_inward(g: np.ndarray, h: float, seed: float = 1e-20) -> np.ndarray:
    """Integrate y'' = g y from the last mesh point toward index 1.

    Index 0 (x = 0) is left untouched; the caller sets it.
    """
    n_pts = len(g)
    f = (1.0 - h * h * g / 12.0).tolist()
    y = [0.0] * n_pts
    y[-1] = seed
    y[-2] = seed * math.exp(h * math.sqrt(max(g[-1], 0.0)))
    for k in range(n_pts - 2, 1, -1):
        y_next = ((12.0 - 10.0 * f[k]) * y[k] - f[k + 1] * y[k + 1]) / f[k - 1]
        if abs(y_next) > 1e250:
            # rescaling keeps the shape; normalisation happens later
            y = [v * 1e-250 for v in y]
            y_next *= 1e-250
        y[k - 1] = y_next
    return np.asarray(y)


def _sign_changes(values: np.ndarray) -> np.ndarray:
    s = np.sign(values)
    nz = np.nonzero(s)[0]
    if len(nz) < 2:
        return np.empty(0, dtype=int)
    flips = np.nonzero(s[nz[1:]] != s[nz[:-1]])[0]
    return nz[flips]


def compute_wavefunction(
    n: int,
    l: int = 0,
    defects: QuantumDefectModel = RB_NS_DEFECTS,
    grid: RadialGrid = RadialGrid(),
    *,
    node_floor: float = 0.5,
    irregular_tol: float = 0.02,
    min_points_per_wavelength: float = 20.0,
) -> RadialWavefunction:
    """Numerov wavefunction of the nS Rydberg state at its quantum-defect energy.

    For non-integer n* the inward solution does not vanish at the origin (it
    picks up the irregular Coulomb component).  When the value at the
    innermost mesh point exceeds ``irregular_tol`` times the innermost-lobe
    amplitude, the function is zeroed inside its innermost node and that
    radius is recorded as ``truncation_radius``.

    Node counting skips ``r < node_floor`` bohr.  The expected count is
    n - l - 1 - floor(delta): the core nodes a Coulomb-only model cannot
    reproduce are removed with the truncated region.
    """
    if l != 0:
        raise ValueError("only l = 0 states are supported")
    state = RydbergState.from_model(n, defects, l)
    r_out = grid.outer_radius(n)
    n_star = state.n_star
    if r_out < 2.0 * n_star**2 + 10.0 * n_star:
        raise ValueError(
            f"grid outer radius {r_out:.1f} bohr is inside 2 n*^2 + 10 n* = {2 * n_star**2 + 10 * n_star:.1f}"
        )
    ppw = grid.points_per_wavelength()
    if ppw < min_points_per_wavelength:
        raise WavefunctionError(
            f"mesh step {grid.step} gives {ppw:.1f} points per wavelength (< {min_points_per_wavelength})"
        )

    x = grid.x_values(n)
    h = grid.step
    r = x * x
    g = np.empty_like(x)
    xs = x[1:]
    centrifugal = (2 * l + 0.5) * (2 * l + 1.5)
    g[1:] = 8.0 * xs**2 * (-1.0 / xs**2 - state.energy) + centrifugal / xs**2
    g[0] = g[1]
    y = _numerov_inward(g, h)
    u = y * np.sqrt(x)
    u[0] = 0.0
    if not np.all(np.isfinite(u)):
        raise WavefunctionError(
            f"Numerov integration diverged for n={n}; raise the inner cutoff above r={r[1]:.3g} bohr"
        )

    nodes = _sign_changes(np.where(r > node_floor, u, 0.0))
    expected = n - l - 1 - int(math.floor(state.defect + 1e-12))
    truncation_radius = 0.0
    if len(nodes):
        k_node = nodes[0]
        inner_peak = np.max(np.abs(u[1 : k_node + 1]))
        if inner_peak > 0 and abs(u[1]) > irregular_tol * inner_peak:
            # cut at whichever mesh point of the innermost crossing is closer to zero
            k_cut = k_node if abs(u[k_node]) <= abs(u[k_node + 1]) else k_node + 1
            truncation_radius = float(r[k_cut])
            u[: k_cut + 1] = 0.0

    if len(nodes) != expected:
        raise WavefunctionError(
            f"node count mismatch for n={n}: expected {expected}, found {len(nodes)} "
            f"(mesh step {h} too coarse?)"
        )

    raw_norm = float(trapezoid(u * u, r))
    u /= math.sqrt(raw_norm)
    mesh_id = f"sqrt-mesh(step={h!r},points={len(r)},r_out={r_out!r})"
    metadata = {
        "n": n,
        "l": l,
        "n_star": n_star,
        "energy_hartree": state.energy,
        "defect_model": defects.model_id,
        "defect_source": defects.source,
        "truncation_radius_bohr": truncation_radius,
        "mesh": mesh_id,
    }
    return RadialWavefunction(
        r_grid=r,
        u_values=u,
        n_nodes=len(nodes),
        norm=raw_norm,
        state=state,
        truncation_radius=truncation_radius,
        mesh_id=mesh_id,
        metadata=metadata,
    )


def probability_density_s(wf: RadialWavefunction, R):
    """|Psi(R)|^2 in bohr^-3 for an s state, from cubic interpolation of u."""
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0) or np.any(R < wf.r_grid[0]) or np.any(R > wf.r_grid[-1]):
        raise ValueError(f"R outside wavefunction grid (0, {wf.r_grid[-1]:.1f}] bohr")
    u = wf(R)
    out = (u / R) ** 2 / (4.0 * math.pi)
    return float(out) if out.ndim == 0 else out
