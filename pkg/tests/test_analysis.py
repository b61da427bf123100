import math
import random
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydmol.analysis import (
    DEFAULT_G_EFF,
    BindingEnergyDatum,
    FitError,
    LineFit,
    ModelError,
    ModelOptions,
    Spectrum,
    binding_energy,
    fit_lifetime,
    fit_line,
    fit_scattering_length,
    fit_stark,
    model_binding_energies,
    zeeman_correction,
)
from rydmol.constants import energy_au_to_mhz, field_v_per_cm_to_au
from rydmol.io import parse_binding_energies
from rydmol.potential import ScatteringModel

from conftest import FIXTURES


def gaussian(x, c, w, a, b=0.0):
    return a * np.exp(-4 * math.log(2) * ((x - c) / w) ** 2) + b


def lorentzian(x, c, w, a, b=0.0):
    return a / (1 + ((x - c) / (w / 2)) ** 2) + b


def stark_centers(fields, alpha, c0=0.0):
    return c0 + energy_au_to_mhz(-0.5 * alpha * field_v_per_cm_to_au(np.asarray(fields)) ** 2)


# -- line fits ----------------------------------------------------------------


def test_noiseless_gaussian_recovered():
    x = np.linspace(-30, -14, 161)
    fit = fit_line(Spectrum(x, gaussian(x, -22.0, 1.5, 40.0, 3.0)), (-30, -14))
    assert fit.center == pytest.approx(-22.0, abs=1e-6)
    assert fit.width == pytest.approx(1.5, rel=1e-6)
    assert fit.amplitude == pytest.approx(40.0, rel=1e-6)
    assert fit.baseline == pytest.approx(3.0, abs=1e-6)


def test_noiseless_lorentzian_recovered():
    x = np.linspace(-30, -14, 161)
    fit = fit_line(Spectrum(x, lorentzian(x, -21.3, 2.0, 10.0, 1.0)), (-30, -14), "lorentzian")
    assert fit.center == pytest.approx(-21.3, abs=1e-6)
    assert fit.width == pytest.approx(2.0, rel=1e-6)


def test_noisy_gaussian_monte_carlo():
    rng = np.random.default_rng(7)
    x = np.linspace(-30, -14, 161)
    clean = gaussian(x, -22.0, 1.5, 40.0)
    centers, sigmas = [], []
    for _ in range(100):
        fit = fit_line(Spectrum(x, clean + rng.normal(0, 0.05 * 40.0, x.size)), (-30, -14))
        centers.append(fit.center)
        sigmas.append(fit.center_sigma)
    standard_error = np.std(centers, ddof=1) / math.sqrt(len(centers))
    assert abs(np.mean(centers) + 22.0) < 3 * standard_error
    # reported sigma tracks the scatter of the estimates
    assert np.mean(sigmas) == pytest.approx(np.std(centers, ddof=1), rel=0.3)


def test_flat_signal_rejected():
    x = np.linspace(-5, 5, 50)
    with pytest.raises(ValueError, match="flat"):
        fit_line(Spectrum(x, np.full_like(x, 7.0)), (-5, 5))


def test_sparse_window_rejected():
    x = np.linspace(-5, 5, 50)
    with pytest.raises(ValueError, match="at least 8"):
        fit_line(Spectrum(x, gaussian(x, 0, 1, 1)), (-0.5, 0.5))


def test_unknown_shape_rejected():
    x = np.linspace(-5, 5, 50)
    with pytest.raises(ValueError):
        fit_line(Spectrum(x, gaussian(x, 0, 1, 1)), (-5, 5), "voigt")


@pytest.mark.parametrize("det", [np.arange(5.0), np.r_[0.0, 2.0, 1.0, 3, 4, 5, 6, 7, 8]])
def test_spectrum_validation(det):
    with pytest.raises(ValueError):
        Spectrum(det, np.zeros_like(det))


# -- Zeeman and binding energies ---------------------------------------------------


def test_zeeman_examples():
    assert zeeman_correction(0.0, 2.0) == 0.0
    assert zeeman_correction(0.8, 2.0) == pytest.approx(2.24, abs=0.005)
    assert zeeman_correction(0.8, DEFAULT_G_EFF) == pytest.approx(3.0, rel=1e-12)
    assert DEFAULT_G_EFF == pytest.approx(2.7, abs=0.05)
    with pytest.raises(ValueError):
        zeeman_correction(-0.1, 2.0)


def line(center, sigma):
    return LineFit(center, 1.0, 1.0, 0.0, sigma, 0.0, 0.0)


def test_binding_energy_examples():
    assert binding_energy(line(0.0, 0.3), line(-23.4, 0.4)) == pytest.approx((-23.4, 0.5))
    e_b, _ = binding_energy(line(0.0, 0.1), line(-26.4, 0.1), 3.0)
    assert e_b == pytest.approx(-23.4)


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.01, 2), st.floats(0.01, 2))
def test_binding_energy_antisymmetric(a, m, sa, sm):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fwd = binding_energy(line(a, sa), line(m, sm))
        back = binding_energy(line(m, sm), line(a, sa))
    assert fwd[0] == -back[0]
    assert fwd[1] == back[1]


def test_positive_binding_energy_warns():
    with pytest.warns(UserWarning, match="not negative"):
        binding_energy(line(0.0, 0.1), line(2.0, 0.1))


def test_datum_validation():
    with pytest.raises(ValueError):
        BindingEnergyDatum(35, 0, -23.4, 0.0)
    assert not BindingEnergyDatum(35, None, -5.0, 0.3).assigned


# -- model curve --------------------------------------------------------------------


def test_model_35s_pair_and_trend():
    energies = model_binding_energies(range(34, 41), ScatteringModel(-18.5, 319.0))
    e0, e1 = energies[35]
    assert e0 == pytest.approx(-23.4, abs=2.0)
    assert e1 == pytest.approx(-10.6, abs=2.0)
    depth = [-energies[n][0] for n in range(34, 41)]
    assert all(a > b for a, b in zip(depth, depth[1:]))
    assert list(energies) == list(range(34, 41))


def test_model_without_scattering_binds_nothing():
    energies = model_binding_energies([34, 37, 40], ScatteringModel(0.0, 319.0))
    assert all(v == (None, None) for v in energies.values())


def test_model_errors_name_the_failing_n():
    with pytest.raises(ModelError, match="n=35"):
        model_binding_energies([35], ScatteringModel(-18.5, 319.0), options=ModelOptions(validity_threshold=1e4))


# -- scattering-length fit ------------------------------------------------------------


def test_single_datum_fit_is_exact():
    fit = fit_scattering_length([BindingEnergyDatum(35, 0, -23.4, 0.3)], a_range=(-25.0, -12.0))
    assert abs(fit.residuals[0]) < 0.1
    assert fit.a_interval[0] <= fit.a_best <= fit.a_interval[1]


def test_chi2_scan_unimodal_over_default_range():
    data = parse_binding_energies([FIXTURES / "synthetic_binding_a-18.5.csv"])
    fit = fit_scattering_length(data, step=0.25)
    assert fit.unimodal
    assert fit.a_best == pytest.approx(-18.5, abs=0.2)


def test_fit_is_bitwise_invariant_under_reordering():
    data = [
        BindingEnergyDatum(34, 0, -28.1, 0.4, "a"),
        BindingEnergyDatum(35, 0, -23.3, 0.3, "b"),
        BindingEnergyDatum(35, 1, -10.5, 0.5, "c"),
        BindingEnergyDatum(36, None, -4.0, 0.5, "unassigned"),
        BindingEnergyDatum(36, 0, -19.2, 0.3, "d"),
    ]
    shuffled = data[:]
    random.Random(3).shuffle(shuffled)
    a = fit_scattering_length(data, a_range=(-21.0, -16.0))
    b = fit_scattering_length(shuffled, a_range=(-21.0, -16.0))
    assert a == b
    assert len(a.data) == 4  # unassigned line excluded


def test_duplicate_entries_are_both_weighted():
    one = [BindingEnergyDatum(35, 0, -23.4, 0.3)]
    fit1 = fit_scattering_length(one + [BindingEnergyDatum(36, 0, -19.0, 0.3)], a_range=(-21.0, -16.0))
    fit2 = fit_scattering_length(one * 2 + [BindingEnergyDatum(36, 0, -19.0, 0.3)], a_range=(-21.0, -16.0))
    assert len(fit2.data) == 3
    assert fit1.a_best != fit2.a_best


def test_minimum_on_range_edge_demands_wider_range():
    with pytest.raises(FitError, match="widen"):
        fit_scattering_length([BindingEnergyDatum(35, 0, -23.4, 0.3)], a_range=(-16.0, -12.0))


def test_fit_rejects_unusable_inputs():
    with pytest.raises(ValueError):
        fit_scattering_length([BindingEnergyDatum(35, None, -23.4, 0.3)])
    with pytest.raises(ValueError):
        fit_scattering_length([BindingEnergyDatum(35, 2, -3.0, 0.3)])


# -- Stark ------------------------------------------------------------------------------


def test_stark_noiseless_recovery():
    f = np.linspace(0, 1, 9)
    fit = fit_stark(f, stark_centers(f, 1542e7))
    assert fit.alpha_pol == pytest.approx(1542e7, rel=1e-3)
    assert fit.zero_field_center == pytest.approx(0.0, abs=1e-9)
    assert fit.systematic_fraction == 0.12


@settings(deadline=None)
@given(st.floats(-100, 100))
def test_stark_offset_shifts_only_intercept(offset):
    rng = np.random.default_rng(0)
    f = np.linspace(0, 1, 11)
    c = stark_centers(f, 1524e7) + rng.normal(0, 0.01, f.size)
    base = fit_stark(f, c)
    moved = fit_stark(f, c + offset)
    assert moved.alpha_pol == pytest.approx(base.alpha_pol, rel=1e-12)
    assert moved.zero_field_center == pytest.approx(base.zero_field_center + offset, abs=1e-9)


def test_stark_needs_four_distinct_fields():
    with pytest.raises(ValueError):
        fit_stark([0.5, 0.5, 0.5, 0.5, 0.5], [0.0] * 5)
    with pytest.raises(ValueError):
        fit_stark([0.0, 0.1, 0.2], [0.0, 0.0, 0.0])


# -- lifetimes ----------------------------------------------------------------------------


def test_noiseless_lifetime_exact():
    t = np.linspace(0, 200, 21)
    fit = fit_lifetime(t, 1000 * np.exp(-t / 65.0))
    assert fit.tau == pytest.approx(65.0, rel=1e-8)
    assert fit.baseline == pytest.approx(0.0, abs=1e-6)


def test_poisson_lifetime_statistics():
    rng = np.random.default_rng(11)
    t = np.linspace(0, 60, 13)
    taus = [fit_lifetime(t, rng.poisson(30 * 20 * np.exp(-t / 15.0) + 5)).tau for _ in range(50)]
    assert np.mean(taus) == pytest.approx(15.0, abs=2.0)


def test_lifetime_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_lifetime([0, 1, 2, 3], [4, 3, 2, 1])
    with pytest.raises(ValueError):
        fit_lifetime([0, 1, 2, 3, 4], [4, 3, -2, 1, 0])
    with pytest.raises(FitError):
        fit_lifetime(np.arange(10.0), np.full(10, 100.0))
    with pytest.raises(FitError):
        fit_lifetime(np.arange(10.0), np.random.default_rng(1).poisson(100.0, 10))
