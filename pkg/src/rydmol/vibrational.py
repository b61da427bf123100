"""Vibrational bound states of the nuclear motion in a tabulated potential.

Two independent solvers are provided:

* :func:`solve_bound_states` discretises -(1/2mu) chi'' + V chi = E chi with a
  three-point finite-difference stencil on the (possibly non-uniform) potential
  mesh.  The symmetrised tridiagonal matrix is handed to LAPACK's
  bisection (stebz) and inverse iteration (stein) via
  :func:`scipy.linalg.eigh_tridiagonal`, restricted to the energy window.
* :func:`numerov_bound_states` shoots with Numerov from the inner boundary and
  brackets each eigenvalue by bisection on the node count.  It is slower
  and serves as a cross-check.

Energies are in hartree relative to the dissociation threshold V = 0.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .potential import PotentialCurve


class GridResolutionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class VibrationalLevel:
    v: int
    energy: float
    energy_mhz: float
    r_grid: np.ndarray
    wf: np.ndarray
    r_expect: float
    well_span: tuple[float, float]
    b_rot: float
    n_nodes: int

    @property
    def b_rot_khz(self) -> float:
        return self.b_rot * 1e3


def rotational_constant(level_or_r, mu: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Rotational constant 1/(2 mu <R>^2) in MHz.

    Accepts a :class:`VibrationalLevel` (its <R> is used) or a radius in bohr.
    """
    r = level_or_r.r_expect if isinstance(level_or_r, VibrationalLevel) else float(level_or_r)
    if not r > 0:
        raise ValueError("<R> must be positive")
    return constants.hartree_to_mhz / (2.0 * mu * r * r)


def _quadrature_weights(r: np.ndarray) -> np.ndarray:
    h = np.diff(r)
    w = np.empty_like(r)
    w[0] = h[0] / 2
    w[-1] = h[-1] / 2
    w[1:-1] = (h[:-1] + h[1:]) / 2
    return w


def _count_nodes(chi: np.ndarray, rel_floor: float = 1e-6) -> int:
    big = np.abs(chi) > rel_floor * np.max(np.abs(chi))
    s = np.sign(chi[big])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _fd_matrix(r: np.ndarray, v: np.ndarray, mu: float):
    h = np.diff(r)
    h_left, h_right = h[:-1], h[1:]
    w = 0.5 * (h_left + h_right)
    c = 0.5 / mu
    diag = c * (1.0 / h_left + 1.0 / h_right) / w + v[1:-1]
    off = -c / (h[1:-1] * np.sqrt(w[:-1] * w[1:]))
    return diag, off, w


def _fd_eigen(r, v, mu, e_lo, e_hi, max_levels, vectors=True):
    diag, off, w = _fd_matrix(r, v, mu)
    if e_lo <= float(np.min(v)) and max_levels is not None:
        # no eigenvalue can lie below min V, so index selection is equivalent and cheaper
        res = eigh_tridiagonal(diag, off, eigvals_only=not vectors, select="i",
                               select_range=(0, min(max_levels, len(diag)) - 1))
    else:
        res = eigh_tridiagonal(diag, off, eigvals_only=not vectors, select="v",
                               select_range=(e_lo, e_hi))
    vals, vecs = (res, None) if not vectors else res
    keep = (vals > e_lo) & (vals <= e_hi)
    vals = vals[keep]
    if vectors:
        vecs = vecs[:, keep]
    if max_levels is not None:
        vals = vals[:max_levels]
        vecs = vecs[:, :max_levels] if vectors else None
    return vals, vecs, w


def solve_bound_states(
    potential: PotentialCurve,
    mu: float,
    e_window: tuple[float, float] | None = None,
    max_levels: int | None = None,
    *,
    check_grid: bool = False,
    grid_tol_mhz: float = 0.05,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> list[VibrationalLevel]:
    """Eigenstates with energies in ``e_window`` (hartree), lowest first.

    Zero boundary conditions apply at both ends of the potential mesh.  The
    default window is (min V, 0).  An empty list means no bound state.

    With ``check_grid`` the problem is also solved on every other mesh point;
    a shift above ``grid_tol_mhz`` in any level raises
    :class:`GridResolutionError`.
    """
    r = np.asarray(potential.r_grid, dtype=float)
    v = np.asarray(potential.v_values, dtype=float)
    if e_window is None:
        e_window = (float(np.min(v)), 0.0)
    e_lo, e_hi = e_window
    if e_lo >= e_hi:
        return []
    vals, vecs, w = _fd_eigen(r, v, mu, e_lo, e_hi, max_levels)

    if check_grid and len(vals):
        coarse, _, _ = _fd_eigen(r[::2], v[::2], mu, e_lo, e_hi, max_levels, vectors=False)
        m = min(len(coarse), len(vals))
        shift = np.abs(coarse[:m] - vals[:m]) * constants.hartree_to_mhz
        if len(coarse) != len(vals) or (m and shift.max() > grid_tol_mhz):
            raise GridResolutionError(
                f"eigenvalues move by up to {shift.max() if m else float('nan'):.3g} MHz "
                f"({len(vals)} vs {len(coarse)} levels) when the mesh is coarsened; "
                f"tolerance {grid_tol_mhz} MHz"
            )

    w_full = _quadrature_weights(r)
    levels = []
    for i, energy in enumerate(vals):
        chi = np.zeros_like(r)
        chi[1:-1] = vecs[:, i] / np.sqrt(w)
        if chi[np.argmax(np.abs(chi))] < 0:
            chi = -chi
        dens = w_full * chi * chi
        dens_sum = dens.sum()
        chi /= math.sqrt(dens_sum)
        dens /= dens_sum
        cum = np.cumsum(dens)
        span = (float(r[np.searchsorted(cum, 0.05)]), float(r[min(np.searchsorted(cum, 0.95), len(r) - 1)]))
        r_expect = float(np.sum(dens * r))
        levels.append(
            VibrationalLevel(
                v=_count_nodes(chi),
                energy=float(energy),
                energy_mhz=float(energy) * constants.hartree_to_mhz,
                r_grid=r,
                wf=chi,
                r_expect=r_expect,
                well_span=span,
                b_rot=rotational_constant(r_expect, mu, constants),
                n_nodes=_count_nodes(chi),
            )
        )
    return levels


# -- Numerov shooting oracle -------------------------------------------------


def _mesh_variable(r: np.ndarray) -> tuple[str, np.ndarray, float]:
    """Identify a mesh uniform in R or in sqrt(R)."""
    for kind, x in (("linear", r), ("sqrt", np.sqrt(r))):
        dx = np.diff(x)
        if np.all(dx > 0) and np.ptp(dx) <= 1e-7 * dx.mean():
            return kind, x, float(dx.mean())
    raise ValueError("Numerov oracle needs a mesh uniform in R or in sqrt(R)")


def _shoot_node_count(a_term: np.ndarray, b_term: np.ndarray, energy: float, h: float) -> int:
    f = (1.0 - h * h * (a_term - energy * b_term) / 12.0).tolist()
    y_prev, y = 0.0, 1e-30
    nodes = 0
    for k in range(1, len(f) - 1):
        y_next = ((12.0 - 10.0 * f[k]) * y - f[k - 1] * y_prev) / f[k + 1]
        if (y_next < 0.0) != (y < 0.0) and y_next != 0.0:
            nodes += 1
        y_prev, y = y, y_next
        if abs(y) > 1e200:
            y_prev *= 1e-200
            y *= 1e-200
    return nodes


def numerov_bound_states(
    potential: PotentialCurve,
    mu: float,
    e_window: tuple[float, float] | None = None,
    rtol: float = 1e-11,
) -> np.ndarray:
    """Eigenvalues in ``e_window`` from Numerov shooting and node-count bisection.

    The shooting solution starts at zero on the inner boundary; the number of
    sign changes up to the outer boundary equals the number of Dirichlet
    eigenvalues below the trial energy.
    """
    r = np.asarray(potential.r_grid, dtype=float)
    v = np.asarray(potential.v_values, dtype=float)
    kind, x, h = _mesh_variable(r)
    if kind == "linear":
        a_term = 2.0 * mu * v
        b_term = np.full_like(v, 2.0 * mu)
    else:
        # chi(R) = x^(1/2) y(x), R = x^2
        a_term = 8.0 * mu * x * x * v + 0.75 / (x * x)
        b_term = 8.0 * mu * x * x
    if e_window is None:
        e_window = (float(np.min(v)), 0.0)
    e_lo, e_hi = e_window

    def count(e):
        return _shoot_node_count(a_term, b_term, e, h)

    n_lo, n_hi = count(e_lo), count(e_hi)
    found = []
    for k in range(n_lo, n_hi):
        lo, hi = e_lo, e_hi
        while hi - lo > rtol * max(abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if count(mid) > k:
                hi = mid
            else:
                lo = mid
        found.append(0.5 * (lo + hi))
    return np.asarray(found)


# -- outer-well assignment ----------------------------------------------------


def negative_lobes(potential: PotentialCurve, split_fraction: float = 0.01) -> list[tuple[float, float]]:
    """Attractive wells as radial intervals, innermost first.

    A well is a run of V < 0 points.  Runs are split at interior local maxima
    of V that come within ``split_fraction`` of zero relative to the run's
    depth: these sit at the nodes of the Rydberg density, where V touches zero
    between mesh points.  Shallower maxima (e.g. the kink at the classical
    turning point) do not split a well.
    """
    v = np.asarray(potential.v_values)
    r = potential.r_grid
    neg = v < 0
    lobes = []
    i = 0
    while i < len(v):
        if not neg[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(v) and neg[j + 1]:
            j += 1
        start = i
        floor = split_fraction * np.min(v[i : j + 1])
        for k in range(i + 1, j):
            if v[k] > v[k - 1] and v[k] >= v[k + 1] and v[k] > floor:
                lobes.append((float(r[start]), float(r[k])))
                start = k
        lobes.append((float(r[start]), float(r[j])))
        i = j + 1
    return lobes


@dataclass(frozen=True)
class OuterWellLevels:
    v0: VibrationalLevel | None
    v1: VibrationalLevel | None
    diagnostics: str = ""

    @property
    def found(self) -> bool:
        return self.v0 is not None


def select_outer_well_levels(
    levels: list[VibrationalLevel],
    potential: PotentialCurve,
    mu: float,
    lobes: int = 2,
    min_overlap: float = 0.25,
) -> OuterWellLevels:
    """Pick the v = 0, 1 levels of the outer-well manifold.

    The manifold is the outermost ``lobes`` negative lobes of V.  Its own
    v = 0, 1 states are found with a hard wall at the inner edge of that
    region; each is matched to the level of ``levels`` it overlaps most.
    A match needs a squared overlap of at least ``min_overlap``, otherwise
    that level is reported absent.

    Matching by overlap rather than by localisation keeps the assignment
    stable through avoided crossings with inner-well states, where the
    outer-well character is shared between two near-degenerate levels.
    """
    all_lobes = negative_lobes(potential)
    if not levels or not all_lobes:
        return OuterWellLevels(None, None, f"{len(levels)} levels, {len(all_lobes)} attractive lobes")
    outer = all_lobes[-min(lobes, len(all_lobes)):]
    r_lo, r_hi = outer[0][0], outer[-1][1]
    r = potential.r_grid
    inside = r >= r_lo
    reference = solve_bound_states(PotentialCurve(r[inside], potential.v_values[inside]), mu, max_levels=2)
    w = _quadrature_weights(r)
    picked, notes = [], []
    for k, ref in enumerate(reference):
        phi = np.zeros_like(r)
        phi[inside] = ref.wf
        overlaps = [float(np.sum(w * phi * lv.wf)) ** 2 for lv in levels]
        best = int(np.argmax(overlaps))
        notes.append(f"v={k}: reference {ref.energy_mhz:.3f} MHz, best {levels[best].energy_mhz:.3f} MHz "
                     f"overlap {overlaps[best]:.2f}")
        if overlaps[best] < min_overlap or (picked and picked[-1] is levels[best]):
            picked.append(None)
        else:
            picked.append(levels[best])
    picked += [None] * (2 - len(picked))
    diag = f"outer region [{r_lo:.1f}, {r_hi:.1f}] bohr; " + ("; ".join(notes) or "no reference state")
    if picked[0] is None:
        return OuterWellLevels(None, None, "no level localised in the outer wells; " + diag)
    v0 = dataclasses.replace(picked[0], v=0)
    v1 = dataclasses.replace(picked[1], v=1) if picked[1] is not None else None
    return OuterWellLevels(v0, v1, diag)
