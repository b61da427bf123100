import json
from pathlib import Path

import numpy as np
import pytest

from rydmol.cli import main
from rydmol.io import (
    ConfigError,
    ParseError,
    fmt,
    load_config,
    parse_binding_energies,
    parse_config_text,
    parse_spectrum_csv,
    write_atomically,
)

from conftest import CONFIGS, FIXTURES


def write_spectrum(path, rows, meta=""):
    path.write_text(meta + "detuning_mhz,signal\n" + "".join(f"{d},{s}\n" for d, s in rows))
    return path


def run(args):
    return main([str(a) for a in args])


# -- parsing ----------------------------------------------------------------


def test_spectrum_round_trip(tmp_path):
    rows = [(i * 0.1 - 5, np.exp(-(i * 0.1 - 5) ** 2)) for i in range(100)]
    meta = "# n = 35\n# b0_gauss = 0.8\n# molecular_windows = v0:-3:-1, x:1:2\n"
    spec = parse_spectrum_csv(write_spectrum(tmp_path / "s.csv", rows, meta))
    assert len(spec) == 100
    assert spec.meta["n"] == 35 and spec.meta["b0_gauss"] == 0.8
    assert spec.meta["molecular_windows"] == (("v0", -3.0, -1.0), ("x", 1.0, 2.0))


def test_short_spectrum_rejected(tmp_path):
    with pytest.raises(ParseError, match="at least 8"):
        parse_spectrum_csv(write_spectrum(tmp_path / "s.csv", [(0, 1), (1, 2)]))


@pytest.mark.parametrize(
    "bad_row, message",
    [(("0.35", "nan"), "s.csv:6"), (("0.35", "abc"), "s.csv:6"), (("0.1", "1"), "s.csv:6: detuning not strictly")],
)
def test_bad_cells_named_by_row(tmp_path, bad_row, message):
    rows = [(i * 0.1, 1.0) for i in range(4)] + [bad_row] + [(1 + i, 1.0) for i in range(5)]
    with pytest.raises(ParseError, match=message):
        parse_spectrum_csv(write_spectrum(tmp_path / "s.csv", rows))


def test_missing_header_and_file(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("x,y\n1,2\n")
    with pytest.raises(ParseError, match="header"):
        parse_spectrum_csv(p)
    with pytest.raises(ParseError, match="not found"):
        parse_spectrum_csv(tmp_path / "nope.csv")


def test_binding_energy_tables(tmp_path):
    p = tmp_path / "be.csv"
    p.write_text("n,v,e_b_mhz,sigma_mhz,source\n35,0,-23.4,0.5,x\n35,unassigned,-5.1,0.4,y\n36,1,-8.7,0.5\n")
    data = parse_binding_energies([p])
    assert [(d.n, d.v) for d in data] == [(35, 0), (35, None), (36, 1)]
    assert data[2].source == "be.csv"


def test_binding_energy_errors_are_collected(tmp_path):
    a = tmp_path / "a.csv"
    a.write_text("n,v,e_b_mhz,sigma_mhz\n35,0,-23.4,0.5\n35,0,oops,0.5\n")
    b = tmp_path / "b.csv"
    b.write_text("n,v,e_b_mhz,sigma_mhz\n36,0,-19.0,-1\n")
    with pytest.raises(ParseError) as err:
        parse_binding_energies([a, b])
    assert "a.csv:3" in str(err.value) and "b.csv:2" in str(err.value)


# -- configuration ------------------------------------------------------------


def test_config_defaults_and_overrides():
    cfg = parse_config_text("a_atom = -17  # comment\nn_list = 34-36, 40\n", n_list=(35,))
    assert cfg.a_atom == -17.0
    assert cfg.n_list == (35,)
    assert parse_config_text("n_list = 34-36, 40").n_list == (34, 35, 36, 40)


@pytest.mark.parametrize(
    "text, field",
    [
        ("bogus = 1", "bogus"),
        ("alpha = abc", "alpha"),
        ("n_list = 12", "n_list"),
        ("mesh_step = -0.1", "mesh_step"),
        ("a_min = -5\na_max = -10", "a_min"),
        ("line_shape = voigt", "line_shape"),
        ("hartree_to_mhz = -1", "constants"),
        ("stark_files = x.csv\nlifetime_files = x.csv", "paths"),
    ],
)
def test_bad_config_names_the_field(text, field):
    with pytest.raises(ConfigError, match=field):
        parse_config_text(text)


def test_config_paths_resolve_against_config_dir():
    cfg = load_config(CONFIGS / "fit_reference.cfg")
    assert Path(cfg.binding_energy_files[0]).resolve() == (FIXTURES / "reference_binding_energies.csv").resolve()


def test_fixed_scientific_format():
    assert fmt(-23.4) == "-2.34000000e+01"
    assert len(fmt(1 / 3).split("e")[0].replace(".", "")) == 9


def test_atomic_write_all_or_nothing(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    with pytest.raises(OSError):
        write_atomically({tmp_path / "a.txt": "a", blocker / "b.txt": "b"})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["blocker"]


# -- commands -----------------------------------------------------------------


def test_wavefunction_command(tmp_path):
    assert run(["wavefunction", "--n", 35, "--out", tmp_path, "-q"]) == 0
    tables = sorted(tmp_path.glob("wavefunction_*.csv"))
    assert [p.name for p in tables] == ["wavefunction_n35.csv"]
    rows = [line for line in tables[0].read_text().splitlines() if not line.startswith("#")]
    assert rows[0] == "r_bohr,u,density_bohr3"
    values = np.array([[float(c) for c in line.split(",")] for line in rows[1:]])
    r, dens = values[:, 0], values[:, 2]
    assert r[np.argmax(dens * r**2)] == pytest.approx(1900, rel=0.05)
    meta = json.loads((tmp_path / "wavefunction.meta.json").read_text())
    assert meta["outputs"] == ["wavefunction_n35.csv"]


def test_commands_are_idempotent(tmp_path):
    for out in ("one", "two"):
        assert run(["potential", "--n", 36, "--out", tmp_path / out, "-q"]) == 0
    assert (tmp_path / "one/potential_n36.csv").read_bytes() == (tmp_path / "two/potential_n36.csv").read_bytes()


def test_malformed_config_leaves_no_output(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n_list = 35\nmesh_step = two\n")
    assert run(["wavefunction", "--config", cfg, "--out", tmp_path / "out"]) == 2
    assert "mesh_step" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_runtime_failure_leaves_no_output(tmp_path, capsys):
    cfg = tmp_path / "coarse.cfg"
    cfg.write_text("n_list = 34, 35\nmesh_step = 0.2\n")
    assert run(["wavefunction", "--config", cfg, "--out", tmp_path / "out"]) == 1
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_boundstates_reports(tmp_path, capsys):
    assert run(["boundstates", "--n", 35, "--out", tmp_path, "--format", "json", "-q"]) == 0
    report = json.loads((tmp_path / "boundstates.json").read_text())["boundstates"][0]
    outer = sorted((lv["outer_v"], lv["energy_mhz"]) for lv in report["levels"] if lv["outer_v"] is not None)
    assert [v for v, _ in outer] == [0, 1]
    assert outer[0][1] == pytest.approx(-23.4, abs=2.0)

    assert run(["boundstates", "--n", "", "--out", tmp_path / "empty", "-q"]) == 0
    text = (tmp_path / "empty/boundstates.txt").read_text()
    assert text.rstrip().splitlines()[-1].startswith("n,level")

    assert run(["boundstates", "--n", 35, "--a-atom", 10, "--out", tmp_path / "rep", "-q"]) == 0
    text = (tmp_path / "rep/boundstates.txt").read_text()
    assert "0 outer-well level(s)" in text


def test_model_curve_command(tmp_path):
    assert run(["model-curve", "--n", "35,36", "--out", tmp_path, "-q"]) == 0
    rows = (tmp_path / "model_curve.csv").read_text().strip().splitlines()
    assert rows[-2].startswith("35,-2.3") and rows[-1].startswith("36,-1.9")


def test_fit_recovers_synthetic_a15(tmp_path):
    cfg = load_config(CONFIGS / "fit_synthetic.cfg")
    assert run(["fit-scattering-length", "--config", CONFIGS / "fit_synthetic.cfg", "--out", tmp_path,
                "--format", "json", "-q"]) == 0
    report = json.loads((tmp_path / "scattering_length_fit.json").read_text())
    assert report["a_best_bohr"] == pytest.approx(-15.0, abs=0.2)
    assert len(report["data"]) == len(parse_binding_energies(cfg.binding_energy_files))


def test_fit_reports_parse_errors_with_rows(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("n,v,e_b_mhz,sigma_mhz\n35,0,-23.4,0.5\n36,x,-19,0.5\n")
    assert run(["fit-scattering-length", bad, "--out", tmp_path / "out"]) == 1
    assert "bad.csv:3" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_fit_without_inputs_is_a_config_error(tmp_path):
    assert run(["fit-scattering-length", "--out", tmp_path]) == 2


def test_stark_and_lifetime_commands(tmp_path):
    assert run(["fit-stark", "--config", CONFIGS / "stark.cfg", "--out", tmp_path, "-q"]) == 0
    assert "atom_35S" in (tmp_path / "stark_fit.txt").read_text()
    assert run(["fit-lifetime", "--config", CONFIGS / "lifetime.cfg", "--out", tmp_path, "-q"]) == 0
    assert len((tmp_path / "lifetime_fit.txt").read_text().strip().splitlines()[-6:]) == 6


def test_analyze_spectrum_feeds_the_fit(tmp_path):
    assert run(["analyze-spectrum", "--config", CONFIGS / "spectra.cfg", "--out", tmp_path, "-q"]) == 0
    data = parse_binding_energies([tmp_path / "binding_energies.csv"])
    by_key = {(d.n, d.v): d.e_b for d in data}
    # spectra were synthesised from the a = -18.5 model
    assert by_key[35, 0] == pytest.approx(-23.2, abs=0.1)
    assert by_key[36, 0] == pytest.approx(-19.3, abs=0.1)
    assert by_key[37, 0] == pytest.approx(-16.1, abs=0.1)
