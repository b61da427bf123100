"""Spectroscopic analysis: line centres, binding energies and the fits built on them."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares, minimize_scalar

from .constants import DEFAULT_CONSTANTS, PhysicalConstants, field_v_per_cm_to_au, reduced_mass_rb2
from .potential import ScatteringModel, build_potential, validity_check
from .vibrational import OuterWellLevels, select_outer_well_levels, solve_bound_states
from .wavefunction import RB_NS_DEFECTS, QuantumDefectModel, RadialGrid, compute_wavefunction

log = logging.getLogger(__name__)


class FitError(RuntimeError):
    pass


class ModelError(RuntimeError):
    pass


# -- spectra and lines --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Spectrum:
    detuning: np.ndarray  # MHz, relative to the atomic line
    signal: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.detuning, dtype=float)
        s = np.asarray(self.signal, dtype=float)
        if d.shape != s.shape or d.ndim != 1:
            raise ValueError("detuning and signal must be 1-D arrays of equal length")
        if len(d) < 8:
            raise ValueError(f"spectrum needs at least 8 points, got {len(d)}")
        if np.any(np.diff(d) <= 0):
            raise ValueError("detuning must be strictly increasing")
        object.__setattr__(self, "detuning", d)
        object.__setattr__(self, "signal", s)

    def __len__(self):
        return len(self.detuning)


@dataclass(frozen=True)
class LineFit:
    center: float
    width: float  # FWHM
    amplitude: float
    baseline: float
    center_sigma: float
    width_sigma: float
    amplitude_sigma: float
    shape: str = "gaussian"
    nfev: int = 0


def _gaussian(x, center, width, amplitude, baseline):
    return amplitude * np.exp(-4.0 * math.log(2.0) * ((x - center) / width) ** 2) + baseline


def _lorentzian(x, center, width, amplitude, baseline):
    hw = 0.5 * width
    return amplitude * hw * hw / ((x - center) ** 2 + hw * hw) + baseline


LINE_SHAPES = {"gaussian": _gaussian, "lorentzian": _lorentzian}


def fit_line(spectrum: Spectrum, window: tuple[float, float], shape: str = "gaussian") -> LineFit:
    """Least-squares fit of a single line plus constant baseline inside ``window`` (MHz)."""
    try:
        model = LINE_SHAPES[shape]
    except KeyError:
        raise ValueError(f"unknown line shape {shape!r}; choose from {sorted(LINE_SHAPES)}") from None
    lo, hi = window
    sel = (spectrum.detuning >= lo) & (spectrum.detuning <= hi)
    x, y = spectrum.detuning[sel], spectrum.signal[sel]
    if len(x) < 8:
        raise ValueError(f"window [{lo}, {hi}] MHz holds {len(x)} points; need at least 8")
    span = float(np.ptp(y))
    if span <= 1e-12 * max(float(np.max(np.abs(y))), 1.0):
        raise ValueError(f"no peak in window [{lo}, {hi}] MHz (flat signal)")

    base0 = float(np.median(y))
    i_max = int(np.argmax(y))
    amp0 = float(y[i_max] - base0)
    above = x[y > base0 + 0.5 * amp0]
    step = float(np.median(np.diff(x)))
    width0 = max(float(np.ptp(above)) if len(above) > 1 else step, 2.0 * step)
    p0 = [float(x[i_max]), width0, amp0, base0]
    scale = max(abs(amp0), 1e-300)

    def residuals(p):
        return (model(x, *p) - y) / scale

    res = least_squares(
        residuals,
        p0,
        bounds=([lo, 1e-3 * step, -np.inf, -np.inf], [hi, 10.0 * (hi - lo), np.inf, np.inf]),
        x_scale=[width0, width0, scale, scale],
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
        max_nfev=2000,
    )
    if not res.success:
        raise FitError(
            f"line fit did not converge: status {res.status} ({res.message}); "
            f"nfev={res.nfev}, cost={res.cost:.3g}, gradient={res.optimality:.3g}"
        )
    dof = max(len(x) - 4, 1)
    s2 = 2.0 * res.cost / dof
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * s2
        sig = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        sig = np.full(4, np.nan)
    center, width, amplitude, baseline = res.x
    return LineFit(
        center=float(center),
        width=float(width),
        amplitude=float(amplitude),
        baseline=float(baseline),
        center_sigma=float(sig[0]),
        width_sigma=float(sig[1]),
        amplitude_sigma=float(sig[2] * scale),
        shape=shape,
        nfev=int(res.nfev),
    )


def zeeman_correction(b0_gauss: float, g_eff: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Zeeman shift g_eff * mu_B * B0 in MHz."""
    if b0_gauss < 0:
        raise ValueError("B0 must be non-negative")
    return g_eff * constants.bohr_magneton_mhz_per_gauss * b0_gauss


#: g_eff reproducing the ~ -3 MHz spin-flip shoulder at B0 = 0.8 G
DEFAULT_G_EFF = 3.0 / (DEFAULT_CONSTANTS.bohr_magneton_mhz_per_gauss * 0.8)


@dataclass(frozen=True)
class BindingEnergyDatum:
    n: int
    v: int | None  # None for unassigned lines
    e_b: float  # MHz
    sigma: float  # MHz
    source: str = ""

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive (n={self.n})")

    @property
    def assigned(self) -> bool:
        return self.v is not None


def binding_energy(atomic: LineFit, molecular: LineFit, delta_b: float = 0.0) -> tuple[float, float]:
    """E_B = (molecular - atomic centre) + Zeeman correction, with sigma in quadrature (MHz)."""
    e_b = molecular.center - atomic.center + delta_b
    sigma = math.hypot(atomic.center_sigma, molecular.center_sigma)
    if e_b >= 0:
        warnings.warn(f"binding energy {e_b:.3f} MHz is not negative; line is not a bound molecule", stacklevel=2)
    return e_b, sigma


# -- model binding energies ---------------------------------------------------


@dataclass(frozen=True)
class ModelOptions:
    grid: RadialGrid = RadialGrid()
    r_min: float = 100.0
    momentum_uses_n_star: bool = True
    outer_lobes: int = 2
    outer_overlap: float = 0.25
    max_levels: int | None = None
    validity_threshold: float = 10.0


class BindingEnergyModel:
    """Model binding energies for one principal quantum number.

    The Rydberg wavefunction does not depend on the scattering length, so it
    is computed once and reused for every ``a_atom`` evaluated.
    """

    def __init__(self, n, defects=RB_NS_DEFECTS, alpha=319.0, mu=None, options=ModelOptions(),
                 constants=DEFAULT_CONSTANTS):
        self.n = n
        self.alpha = alpha
        self.mu = reduced_mass_rb2(constants) if mu is None else mu
        self.options = options
        self.constants = constants
        self.wf = compute_wavefunction(n, 0, defects, options.grid)
        report = validity_check(self.wf.state.n_star, alpha, options.validity_threshold)
        if not report.ok:
            raise ModelError(f"n={n}: orbit/interaction-range ratio {report.ratio:.2f} below threshold")

    def levels(self, a_atom: float) -> OuterWellLevels:
        opts = self.options
        pot = build_potential(self.wf, ScatteringModel(a_atom, self.alpha), r_min=opts.r_min,
                              momentum_uses_n_star=opts.momentum_uses_n_star)
        found = solve_bound_states(pot, self.mu, max_levels=opts.max_levels, constants=self.constants)
        return select_outer_well_levels(found, pot, self.mu, opts.outer_lobes, opts.outer_overlap)

    def energies_mhz(self, a_atom: float) -> tuple[float | None, float | None]:
        sel = self.levels(a_atom)
        return (
            sel.v0.energy_mhz if sel.v0 is not None else None,
            sel.v1.energy_mhz if sel.v1 is not None else None,
        )


def model_binding_energies(
    n_list,
    scattering: ScatteringModel,
    defects: QuantumDefectModel = RB_NS_DEFECTS,
    mu: float | None = None,
    options: ModelOptions = ModelOptions(),
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> dict[int, tuple[float | None, float | None]]:
    """Outer-well (v=0, v=1) energies in MHz per n; ``None`` where a level is absent."""
    out = {}
    for n in n_list:
        try:
            model = BindingEnergyModel(n, defects, scattering.alpha, mu, options, constants)
            out[n] = model.energies_mhz(scattering.a_atom)
        except ModelError:
            raise
        except Exception as exc:
            raise ModelError(f"n={n}: {exc}") from exc
    return out


# -- scattering-length fit ----------------------------------------------------


@dataclass(frozen=True)
class ScatteringLengthFit:
    a_best: float
    a_interval: tuple[float, float]
    chi2: float
    data: tuple[BindingEnergyDatum, ...]
    model: tuple[float, ...]  # MHz, aligned with data
    residuals: tuple[float, ...]  # model - measured, MHz
    scan_a: tuple[float, ...]
    scan_chi2: tuple[float, ...]
    unimodal: bool
    notes: tuple[str, ...] = ()


def _model_for_n(args):
    """Worker: energies for one n over a list of scattering lengths."""
    n, a_values, defects, alpha, mu, options, constants = args
    model = BindingEnergyModel(n, defects, alpha, mu, options, constants)
    return [model.energies_mhz(a) for a in a_values]


def _chi2(data, energies) -> float:
    total = 0.0
    for d in data:
        e = energies[d.n][d.v]
        if e is None:
            return math.inf
        total += ((e - d.e_b) / d.sigma) ** 2
    return total


def _count_local_minima(values) -> int:
    vals = np.asarray(values)
    finite = np.isfinite(vals)
    v = np.where(finite, vals, np.inf)
    # collapse plateaus so flat stretches are not counted twice
    keep = np.concatenate([[True], v[1:] != v[:-1]])
    v = v[keep]
    count = 0
    for i in range(len(v)):
        left = v[i - 1] if i > 0 else np.inf
        right = v[i + 1] if i + 1 < len(v) else np.inf
        if np.isfinite(v[i]) and v[i] < left and v[i] < right:
            count += 1
    return count


def fit_scattering_length(
    data,
    defects: QuantumDefectModel = RB_NS_DEFECTS,
    alpha: float = 319.0,
    mu: float | None = None,
    a_range: tuple[float, float] = (-30.0, -5.0),
    *,
    step: float = 0.1,
    tol: float = 1e-3,
    options: ModelOptions = ModelOptions(),
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    workers: int = 1,
    min_data: int = 1,
) -> ScatteringLengthFit:
    """Least-squares scattering length from assigned binding energies.

    A dense scan over ``a_range`` with spacing ``step`` locates the chi^2
    minimum; golden-section search then refines it to ``tol`` bohr.  The
    reported interval is where chi^2 rises by one.  Unassigned data are
    ignored.  Results do not depend on the order of ``data`` or on
    ``workers``.
    """
    assigned = sorted(
        (d for d in data if d.assigned),
        key=lambda d: (d.n, d.v, d.e_b, d.sigma, d.source),
    )
    if len(assigned) < min_data:
        raise ValueError(f"need at least {min_data} assigned binding energies, got {len(assigned)}")
    if any(d.v not in (0, 1) for d in assigned):
        raise ValueError("only v = 0 and v = 1 levels can be fitted")
    if mu is None:
        mu = reduced_mass_rb2(constants)
    a_lo, a_hi = a_range
    n_steps = int(round((a_hi - a_lo) / step))
    scan_a = [a_lo + i * step for i in range(n_steps + 1)]
    ns = sorted({d.n for d in assigned})

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        def evaluate(a_values):
            jobs = [(n, a_values, defects, alpha, mu, options, constants) for n in ns]
            results = list(pool.map(_model_for_n, jobs)) if pool else [_model_for_n(j) for j in jobs]
            return [{n: res[i] for n, res in zip(ns, results)} for i in range(len(a_values))]

        scan_energies = evaluate(scan_a)
        scan_chi2 = [_chi2(assigned, e) for e in scan_energies]
        cache = dict(zip(scan_a, scan_energies))

        def energies_at(a):
            if a not in cache:
                cache[a] = evaluate([a])[0]
            return cache[a]

        def chi2_at(a):
            return _chi2(assigned, energies_at(a))

        notes = []
        i_min = int(np.argmin(scan_chi2))
        if not np.isfinite(scan_chi2[i_min]):
            raise FitError("model has no matching levels anywhere in a_range")
        if i_min == 0 or i_min == len(scan_a) - 1:
            raise FitError(
                f"chi^2 minimum at the edge of a_range {a_range} (a={scan_a[i_min]}); widen the range"
            )
        unimodal = _count_local_minima(scan_chi2) == 1
        if not unimodal:
            msg = "chi^2 scan is not unimodal over a_range"
            notes.append(msg)
            log.warning(msg)

        bracket = (scan_a[i_min - 1], scan_a[i_min], scan_a[i_min + 1])
        xtol = tol / (2.0 * max(abs(bracket[1]), 1.0))
        opt = minimize_scalar(chi2_at, bracket=bracket, method="golden", options={"xtol": xtol})
        a_best = float(opt.x)
        chi2_min = chi2_at(a_best)
        if chi2_min > scan_chi2[i_min]:
            a_best, chi2_min = scan_a[i_min], scan_chi2[i_min]

        target = chi2_min + 1.0

        def crossing(direction):
            idx = i_min
            while 0 <= idx + direction < len(scan_a):
                idx += direction
                if scan_chi2[idx] > target:
                    inner = scan_a[idx - direction]
                    if (inner - a_best) * direction < 0:
                        inner = a_best
                    return brentq(lambda a: min(chi2_at(a), 1e300) - target, min(inner, scan_a[idx]),
                                  max(inner, scan_a[idx]), xtol=tol)
            notes.append(f"delta chi^2 = 1 not reached on the {'upper' if direction > 0 else 'lower'} side")
            return scan_a[-1] if direction > 0 else scan_a[0]

        interval = (float(crossing(-1)), float(crossing(+1)))
        best_energies = energies_at(a_best)
    finally:
        if pool is not None:
            pool.shutdown()

    model_vals = tuple(float(best_energies[d.n][d.v]) for d in assigned)
    residuals = tuple(m - d.e_b for m, d in zip(model_vals, assigned))
    return ScatteringLengthFit(
        a_best=a_best,
        a_interval=interval,
        chi2=float(chi2_min),
        data=tuple(assigned),
        model=model_vals,
        residuals=residuals,
        scan_a=tuple(scan_a),
        scan_chi2=tuple(float(c) for c in scan_chi2),
        unimodal=unimodal,
        notes=tuple(notes),
    )


# -- Stark and lifetime fits --------------------------------------------------

STARK_SYSTEMATIC = 0.12


@dataclass(frozen=True)
class PolarizabilityFit:
    alpha_pol: float  # a.u.
    sigma: float  # a.u.
    zero_field_center: float  # MHz
    zero_field_sigma: float  # MHz
    chi2: float
    n_points: int
    systematic_fraction: float = STARK_SYSTEMATIC


def fit_stark(fields, centers, sigmas=None, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> PolarizabilityFit:
    """Quadratic Stark fit centre(F) = c0 - (alpha/2) F^2.

    ``fields`` in V/cm, ``centers`` and optional ``sigmas`` in MHz.  With
    ``sigmas`` the covariance is absolute; without, it is scaled by the
    reduced chi^2.
    """
    f = np.asarray(fields, dtype=float)
    c = np.asarray(centers, dtype=float)
    if f.shape != c.shape or f.ndim != 1:
        raise ValueError("fields and centers must be 1-D arrays of equal length")
    if len(np.unique(f)) < 4:
        raise ValueError("need at least 4 distinct field values")
    x = field_v_per_cm_to_au(f, constants) ** 2
    if np.ptp(x) == 0:
        raise ValueError("all fields have the same magnitude")
    y = c / constants.hartree_to_mhz
    if sigmas is None:
        w = np.ones_like(x)
    else:
        s = np.asarray(sigmas, dtype=float) / constants.hartree_to_mhz
        if np.any(s <= 0):
            raise ValueError("sigmas must be positive")
        w = 1.0 / s**2
    sw = w.sum()
    x_mean = (w * x).sum() / sw
    dx = x - x_mean
    sxx = (w * dx * dx).sum()
    slope = (w * dx * y).sum() / sxx
    intercept = (w * y).sum() / sw - slope * x_mean
    resid = y - intercept - slope * x
    chi2 = float((w * resid * resid).sum())
    var_slope = 1.0 / sxx
    var_icpt = 1.0 / sw + x_mean**2 / sxx
    if sigmas is None:
        scale = chi2 / max(len(x) - 2, 1)
        var_slope *= scale
        var_icpt *= scale
    return PolarizabilityFit(
        alpha_pol=float(-2.0 * slope),
        sigma=float(2.0 * math.sqrt(var_slope)),
        zero_field_center=float(intercept * constants.hartree_to_mhz),
        zero_field_sigma=float(math.sqrt(var_icpt) * constants.hartree_to_mhz),
        chi2=chi2,
        n_points=len(x),
    )


@dataclass(frozen=True)
class LifetimeFit:
    tau: float  # microseconds
    sigma: float
    amplitude: float
    baseline: float
    chi2: float


def fit_lifetime(delays, counts) -> LifetimeFit:
    """Poisson-weighted fit of A exp(-t/tau) + baseline; delays in microseconds."""
    t = np.asarray(delays, dtype=float)
    y = np.asarray(counts, dtype=float)
    if t.shape != y.shape or t.ndim != 1 or len(t) < 5:
        raise ValueError("need at least 5 (delay, counts) pairs")
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    span = float(np.ptp(t))
    if span <= 0:
        raise ValueError("delays must not all be equal")
    order = np.argsort(t)
    t, y = t[order], y[order]
    sigma = np.sqrt(np.maximum(y, 1.0))

    base0 = float(min(y[-1], y.min()))
    above = y - base0
    good = above > 0.05 * max(above.max(), 1e-300)
    if good.sum() >= 2:
        slope = np.polyfit(t[good], np.log(above[good]), 1)[0]
        tau0 = -1.0 / slope if slope < 0 else span
    else:
        tau0 = span
    tau_lo, tau_hi = 1e-3 * span, 1e3 * span
    tau0 = float(np.clip(tau0, 2 * tau_lo, 0.5 * tau_hi))
    amp0 = float(max(y[0] - base0, 1.0)) * math.exp(t[0] / tau0)

    def residuals(p):
        amp, tau, base = p
        return (amp * np.exp(-t / tau) + base - y) / sigma

    res = least_squares(
        residuals,
        [amp0, tau0, base0],
        bounds=([0.0, tau_lo, -np.inf], [np.inf, tau_hi, np.inf]),
        x_scale=[max(amp0, 1.0), tau0, max(abs(base0), 1.0)],
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
        max_nfev=5000,
    )
    amp, tau, base = res.x
    if not res.success:
        raise FitError(f"lifetime fit did not converge: {res.message}")
    if tau >= tau_hi * (1 - 1e-6) or amp <= 0:
        raise FitError("data show no decay (best tau at its upper bound)")
    cov = np.linalg.pinv(res.jac.T @ res.jac)
    amp_sigma = math.sqrt(abs(cov[0, 0]))
    if amp <= 1e-6 * float(y.max()) or amp < 2.0 * amp_sigma:
        raise FitError(f"decay amplitude {amp:.3g} not significant (sigma {amp_sigma:.3g}); data show no decay")
    return LifetimeFit(
        tau=float(tau),
        sigma=float(math.sqrt(abs(cov[1, 1]))),
        amplitude=float(amp),
        baseline=float(base),
        chi2=float(2.0 * res.cost),
    )
