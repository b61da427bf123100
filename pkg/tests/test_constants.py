import dataclasses

import numpy as np
import pytest
import scipy.constants as sc
from hypothesis import given
from hypothesis import strategies as st

from rydmol.constants import (
    DEFAULT_CONSTANTS,
    PhysicalConstants,
    energy_au_to_mhz,
    energy_mhz_to_au,
    field_v_per_cm_to_au,
    reduced_mass_rb2,
)


def test_hartree_frequency_matches_codata():
    codata = sc.physical_constants["hartree-hertz relationship"][0] / 1e6
    assert DEFAULT_CONSTANTS.hartree_to_mhz == pytest.approx(codata, rel=1e-11)


def test_bohr_magneton_and_field_unit_match_codata():
    # defaults are CODATA 2018; scipy may ship a later adjustment (shifts ~1e-9)
    mu_b = sc.physical_constants["Bohr magneton in Hz/T"][0] * 1e-4 / 1e6
    assert DEFAULT_CONSTANTS.bohr_magneton_mhz_per_gauss == pytest.approx(mu_b, rel=1e-8)
    field = sc.physical_constants["atomic unit of electric field"][0] / 100
    assert DEFAULT_CONSTANTS.field_au_to_v_per_cm == pytest.approx(field, rel=1e-8)


def test_reduced_mass_is_half_the_atomic_mass():
    c = DEFAULT_CONSTANTS
    assert reduced_mass_rb2() == pytest.approx(c.mass_rb87_amu * c.amu_to_me / 2, rel=1e-15)
    assert reduced_mass_rb2() == pytest.approx(79212.9, abs=0.1)


@given(st.floats(min_value=1e-15, max_value=1e3))
def test_energy_round_trip(e):
    assert energy_mhz_to_au(energy_au_to_mhz(e)) == pytest.approx(e, rel=1e-12)


def test_hartree_is_about_6580_thz():
    assert energy_au_to_mhz(1.0) == pytest.approx(6.5797e9, rel=1e-4)


def test_overrides_change_conversions_without_touching_defaults():
    custom = DEFAULT_CONSTANTS.with_overrides(hartree_to_mhz=6.5e9)
    assert energy_au_to_mhz(1.0, custom) == 6.5e9
    assert energy_au_to_mhz(1.0) == DEFAULT_CONSTANTS.hartree_to_mhz


def test_constants_are_immutable():
    with pytest.raises(dataclasses.FrozenInstanceError):
        DEFAULT_CONSTANTS.hartree_to_mhz = 1.0


@pytest.mark.parametrize("kwargs", [{"hartree_to_mhz": -1.0}, {"amu_to_me": 0.0}, {"hartree_to_mhz": 7e9}])
def test_bad_constants_rejected(kwargs):
    with pytest.raises(ValueError):
        PhysicalConstants(**kwargs)


def test_field_conversion_is_linear():
    f = np.array([0.0, 1.0, 2.0])
    out = field_v_per_cm_to_au(f)
    assert out[0] == 0.0
    assert out[2] == pytest.approx(2 * out[1])
