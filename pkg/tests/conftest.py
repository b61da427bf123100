from functools import lru_cache
from pathlib import Path

import pytest

from rydmol.constants import reduced_mass_rb2
from rydmol.potential import ScatteringModel, build_potential
from rydmol.vibrational import solve_bound_states
from rydmol.wavefunction import HYDROGEN, compute_wavefunction

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
CONFIGS = ROOT / "configs"
MU = reduced_mass_rb2()

# lines recorded by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES = {}


@lru_cache(maxsize=None)
def rb_wavefunction(n):
    return compute_wavefunction(n)


@lru_cache(maxsize=None)
def hydrogen_wavefunction(n):
    return compute_wavefunction(n, defects=HYDROGEN)


@lru_cache(maxsize=None)
def reference_potential(n, a_atom=-18.5):
    return build_potential(rb_wavefunction(n), ScatteringModel(a_atom, 319.0))


@lru_cache(maxsize=None)
def reference_levels(n, a_atom=-18.5):
    return tuple(solve_bound_states(reference_potential(n, a_atom), MU))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
