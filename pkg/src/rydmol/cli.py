"""Command-line entry point: ``rydmol <subcommand> [options]``."""

from __future__ import annotations

import argparse
import datetime
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    BindingEnergyModel,
    FitError,
    ModelError,
    binding_energy,
    fit_lifetime,
    fit_line,
    fit_scattering_length,
    fit_stark,
    model_binding_energies,
    zeeman_correction,
)
from .constants import reduced_mass_rb2
from .io import (
    ConfigError,
    ParseError,
    RunConfig,
    dumps_json,
    fmt,
    header_lines,
    load_config,
    parse_binding_energies,
    parse_columns,
    parse_spectrum_csv,
    rounded,
    write_atomically,
)
from .potential import ScatteringModel, build_potential
from .vibrational import select_outer_well_levels, solve_bound_states
from .wavefunction import compute_wavefunction

log = logging.getLogger("rydmol")


def _csv(rows) -> list[str]:
    return [",".join(r) for r in rows]


def _finish(lines: list[str]) -> str:
    return "\n".join(lines) + "\n"


def _ext(fmt_name: str) -> str:
    return "json" if fmt_name == "json" else "csv"


# -- commands -----------------------------------------------------------------
# Each returns ({path: text}, stdout text).


def cmd_wavefunction(cfg: RunConfig, out: Path, fmt_name: str):
    files = {}
    for n in cfg.n_list:
        wf = compute_wavefunction(n, 0, cfg.defects(), cfg.grid())
        r, u = wf.r_grid[1:], wf.u_values[1:]
        dens = (u / r) ** 2 / (4.0 * np.pi)
        if fmt_name == "json":
            text = dumps_json({
                "metadata": {k: (rounded(v) if isinstance(v, float) else v) for k, v in wf.metadata.items()},
                "n_nodes": wf.n_nodes,
                "r_bohr": [rounded(x) for x in r],
                "u": [rounded(x) for x in u],
                "density_bohr3": [rounded(x) for x in dens],
            })
        else:
            lines = header_lines(f"wavefunction n={n}", cfg)
            lines += [f"# {k} = {v}" for k, v in wf.metadata.items()]
            lines.append(f"# n_nodes = {wf.n_nodes}")
            lines.append("r_bohr,u,density_bohr3")
            lines += _csv((fmt(a), fmt(b), fmt(c)) for a, b, c in zip(r, u, dens))
            text = _finish(lines)
        files[out / f"wavefunction_n{n}.{_ext(fmt_name)}"] = text
    return files, f"wrote {len(files)} wavefunction file(s) to {out}\n"


def cmd_potential(cfg: RunConfig, out: Path, fmt_name: str):
    files = {}
    c = cfg.constants()
    for n in cfg.n_list:
        wf = compute_wavefunction(n, 0, cfg.defects(), cfg.grid())
        pot = build_potential(wf, ScatteringModel(cfg.a_atom, cfg.alpha), r_min=cfg.r_min_potential,
                              momentum_uses_n_star=cfg.momentum_uses_n_star)
        v_mhz = pot.v_values * c.hartree_to_mhz
        if fmt_name == "json":
            text = dumps_json({
                "metadata": {k: (rounded(v) if isinstance(v, float) else v) for k, v in pot.metadata.items()},
                "r_bohr": [rounded(x) for x in pot.r_grid],
                "v_mhz": [rounded(x) for x in v_mhz],
            })
        else:
            lines = header_lines(f"potential n={n}", cfg)
            lines += [f"# {k} = {v}" for k, v in pot.metadata.items()]
            lines.append("r_bohr,v_mhz")
            lines += _csv((fmt(a), fmt(b)) for a, b in zip(pot.r_grid, v_mhz))
            text = _finish(lines)
        files[out / f"potential_n{n}.{_ext(fmt_name)}"] = text
    return files, f"wrote {len(files)} potential file(s) to {out}\n"


def _energy_window(cfg: RunConfig, pot):
    c = cfg.constants()
    lo = float(np.min(pot.v_values)) if cfg.e_window_lo_mhz is None else cfg.e_window_lo_mhz / c.hartree_to_mhz
    hi = 0.0 if cfg.e_window_hi_mhz is None else cfg.e_window_hi_mhz / c.hartree_to_mhz
    return lo, hi


def cmd_boundstates(cfg: RunConfig, out: Path, fmt_name: str):
    c = cfg.constants()
    mu = reduced_mass_rb2(c)
    report = []
    for n in cfg.n_list:
        wf = compute_wavefunction(n, 0, cfg.defects(), cfg.grid())
        pot = build_potential(wf, ScatteringModel(cfg.a_atom, cfg.alpha), r_min=cfg.r_min_potential,
                              momentum_uses_n_star=cfg.momentum_uses_n_star)
        levels = solve_bound_states(pot, mu, _energy_window(cfg, pot), cfg.max_levels, constants=c)
        sel = select_outer_well_levels(levels, pot, mu, cfg.outer_lobes, cfg.outer_overlap)
        outer = {}
        for lv in (sel.v0, sel.v1):
            if lv is not None:
                outer[lv.energy] = lv.v
        rows = []
        for i, lv in enumerate(levels):
            rows.append({
                "index": i,
                "outer_v": outer.get(lv.energy),
                "energy_mhz": lv.energy_mhz,
                "r_expect_bohr": lv.r_expect,
                "b_rot_khz": lv.b_rot_khz,
                "nodes": lv.n_nodes,
                "well_span_bohr": list(lv.well_span),
            })
        report.append({"n": n, "levels": rows, "outer_well_levels": len(outer), "diagnostics": sel.diagnostics})

    if fmt_name == "json":
        for entry in report:
            for row in entry["levels"]:
                for k in ("energy_mhz", "r_expect_bohr", "b_rot_khz"):
                    row[k] = rounded(row[k])
                row["well_span_bohr"] = [rounded(x) for x in row["well_span_bohr"]]
        text = dumps_json({"boundstates": report})
    else:
        lines = header_lines("bound states", cfg)
        for entry in report:
            lines.append(f"# n = {entry['n']}: {entry['outer_well_levels']} outer-well level(s); {entry['diagnostics']}")
        lines.append("n,level,outer_v,energy_mhz,r_expect_bohr,b_rot_khz,nodes,span_lo_bohr,span_hi_bohr")
        for entry in report:
            for row in entry["levels"]:
                ov = "-" if row["outer_v"] is None else str(row["outer_v"])
                lines.append(",".join([
                    str(entry["n"]), str(row["index"]), ov, fmt(row["energy_mhz"]), fmt(row["r_expect_bohr"]),
                    fmt(row["b_rot_khz"]), str(row["nodes"]), fmt(row["well_span_bohr"][0]),
                    fmt(row["well_span_bohr"][1]),
                ]))
        text = _finish(lines)
    return {out / f"boundstates.{'json' if fmt_name == 'json' else 'txt'}": text}, text


def cmd_model_curve(cfg: RunConfig, out: Path, fmt_name: str):
    c = cfg.constants()
    energies = model_binding_energies(cfg.n_list, ScatteringModel(cfg.a_atom, cfg.alpha), cfg.defects(),
                                      reduced_mass_rb2(c), cfg.model_options(), c)
    if fmt_name == "json":
        text = dumps_json({"model_curve": [
            {"n": n, "e_v0_mhz": rounded(e0), "e_v1_mhz": rounded(e1)} for n, (e0, e1) in energies.items()
        ]})
    else:
        lines = header_lines("model binding energies", cfg)
        lines.append("n,e_v0_mhz,e_v1_mhz")
        lines += [f"{n},{fmt(e0)},{fmt(e1)}" for n, (e0, e1) in energies.items()]
        text = _finish(lines)
    return {out / f"model_curve.{_ext(fmt_name)}": text}, text


def cmd_fit_scattering_length(cfg: RunConfig, out: Path, fmt_name: str, files=()):
    paths = tuple(files) or cfg.binding_energy_files
    if not paths:
        raise ConfigError("binding_energy_files: no input tables given")
    data = parse_binding_energies(paths)
    c = cfg.constants()
    fit = fit_scattering_length(
        data, cfg.defects(), cfg.alpha, reduced_mass_rb2(c), (cfg.a_min, cfg.a_max),
        step=cfg.a_step, tol=cfg.a_tol, options=cfg.model_options(), constants=c, workers=cfg.workers,
    )
    if fmt_name == "json":
        text = dumps_json({
            "a_best_bohr": rounded(fit.a_best),
            "a_interval_bohr": [rounded(x) for x in fit.a_interval],
            "chi2": rounded(fit.chi2),
            "unimodal": fit.unimodal,
            "notes": list(fit.notes),
            "data": [
                {"n": d.n, "v": d.v, "e_b_mhz": rounded(d.e_b), "sigma_mhz": rounded(d.sigma),
                 "model_mhz": rounded(m), "residual_mhz": rounded(r), "source": d.source}
                for d, m, r in zip(fit.data, fit.model, fit.residuals)
            ],
            "scan": [{"a_bohr": rounded(a), "chi2": rounded(x)} for a, x in zip(fit.scan_a, fit.scan_chi2)],
            "config": dict(cfg.echo(execution=False)),
            "constants_vintage": c.vintage,
        })
    else:
        lines = header_lines("scattering-length fit", cfg)
        lines += [
            f"a_best_bohr = {fmt(fit.a_best)}",
            f"a_interval_bohr = {fmt(fit.a_interval[0])}, {fmt(fit.a_interval[1])}",
            f"chi2 = {fmt(fit.chi2)}",
            f"n_data = {len(fit.data)}",
            f"unimodal = {fit.unimodal}",
        ]
        lines += [f"note = {note}" for note in fit.notes]
        lines.append("n,v,e_b_mhz,sigma_mhz,model_mhz,residual_mhz,source")
        for d, m, r in zip(fit.data, fit.model, fit.residuals):
            lines.append(f"{d.n},{d.v},{fmt(d.e_b)},{fmt(d.sigma)},{fmt(m)},{fmt(r)},{d.source}")
        text = _finish(lines)
    return {out / f"scattering_length_fit.{'json' if fmt_name == 'json' else 'txt'}": text}, text


def cmd_fit_stark(cfg: RunConfig, out: Path, fmt_name: str, files=()):
    paths = tuple(files) or cfg.stark_files
    if not paths:
        raise ConfigError("stark_files: no input series given")
    c = cfg.constants()
    results = []
    for path in paths:
        cols, meta = parse_columns(path, ["field_v_per_cm", "center_mhz", "sigma_mhz"], optional=1)
        fit = fit_stark(cols["field_v_per_cm"], cols["center_mhz"], cols.get("sigma_mhz"), c)
        results.append((Path(path).name, meta.get("label", Path(path).stem), fit))
    if fmt_name == "json":
        text = dumps_json({"stark": [
            {"file": f, "label": lab, "alpha_au": rounded(r.alpha_pol), "sigma_au": rounded(r.sigma),
             "zero_field_center_mhz": rounded(r.zero_field_center),
             "zero_field_sigma_mhz": rounded(r.zero_field_sigma), "chi2": rounded(r.chi2),
             "n_points": r.n_points, "systematic_fraction": r.systematic_fraction}
            for f, lab, r in results
        ]})
    else:
        lines = header_lines("Stark polarisability fit", cfg)
        lines.append("label,alpha_1e7_au,sigma_1e7_au,zero_field_center_mhz,zero_field_sigma_mhz,chi2,points,"
                     "systematic_fraction")
        for _, lab, r in results:
            lines.append(",".join([lab, fmt(r.alpha_pol / 1e7), fmt(r.sigma / 1e7), fmt(r.zero_field_center),
                                   fmt(r.zero_field_sigma), fmt(r.chi2), str(r.n_points),
                                   fmt(r.systematic_fraction)]))
        text = _finish(lines)
    return {out / f"stark_fit.{'json' if fmt_name == 'json' else 'txt'}": text}, text


def cmd_fit_lifetime(cfg: RunConfig, out: Path, fmt_name: str, files=()):
    paths = tuple(files) or cfg.lifetime_files
    if not paths:
        raise ConfigError("lifetime_files: no input decay curves given")
    results = []
    for path in paths:
        cols, meta = parse_columns(path, ["delay_us", "counts"])
        fit = fit_lifetime(cols["delay_us"], cols["counts"])
        results.append((meta.get("label", Path(path).stem), fit))
    if fmt_name == "json":
        text = dumps_json({"lifetimes": [
            {"label": lab, "tau_us": rounded(r.tau), "sigma_us": rounded(r.sigma),
             "amplitude": rounded(r.amplitude), "baseline": rounded(r.baseline), "chi2": rounded(r.chi2)}
            for lab, r in results
        ]})
    else:
        lines = header_lines("lifetime fit", cfg)
        lines.append("label,tau_us,sigma_us,amplitude,baseline,chi2")
        for lab, r in results:
            lines.append(",".join([lab, fmt(r.tau), fmt(r.sigma), fmt(r.amplitude), fmt(r.baseline), fmt(r.chi2)]))
        text = _finish(lines)
    return {out / f"lifetime_fit.{'json' if fmt_name == 'json' else 'txt'}": text}, text


def _label_to_v(label: str):
    return {"v0": 0, "v1": 1}.get(label.lower())


def cmd_analyze_spectrum(cfg: RunConfig, out: Path, fmt_name: str, files=()):
    paths = tuple(files) or cfg.spectrum_files
    if not paths:
        raise ConfigError("spectrum_files: no spectra given")
    c = cfg.constants()
    entries = []
    for path in paths:
        spec = parse_spectrum_csv(path)
        n = spec.meta.get("n")
        if n is None:
            raise ParseError(f"{path}: metadata line '# n = ...' is required")
        b0 = spec.meta.get("b0_gauss", cfg.b0_gauss)
        delta_b = zeeman_correction(b0, cfg.g_eff, c)
        windows = spec.meta.get("molecular_windows", cfg.molecular_windows)
        if not windows:
            raise ConfigError(f"molecular_windows: none configured and none in {path}")
        atomic = fit_line(spec, tuple(cfg.atomic_window), cfg.line_shape)
        for label, lo, hi in windows:
            mol = fit_line(spec, (lo, hi), cfg.line_shape)
            e_b, sigma = binding_energy(atomic, mol, delta_b)
            entries.append((Path(path).name, n, label, atomic, mol, delta_b, e_b, sigma))

    be_lines = ["n,v,e_b_mhz,sigma_mhz,source"]
    for name, n, label, _, _, _, e_b, sigma in entries:
        v = _label_to_v(label)
        be_lines.append(f"{n},{'unassigned' if v is None else v},{fmt(e_b)},{fmt(sigma)},{name}:{label}")
    if fmt_name == "json":
        text = dumps_json({"lines": [
            {"file": name, "n": n, "label": label, "atomic_center_mhz": rounded(a.center),
             "atomic_center_sigma_mhz": rounded(a.center_sigma), "molecular_center_mhz": rounded(m.center),
             "molecular_center_sigma_mhz": rounded(m.center_sigma), "molecular_width_mhz": rounded(m.width),
             "zeeman_mhz": rounded(db), "e_b_mhz": rounded(e), "sigma_mhz": rounded(s)}
            for name, n, label, a, m, db, e, s in entries
        ]})
    else:
        lines = header_lines("spectrum analysis", cfg)
        lines.append("file,n,label,atomic_center_mhz,atomic_sigma_mhz,molecular_center_mhz,molecular_sigma_mhz,"
                     "molecular_fwhm_mhz,zeeman_mhz,e_b_mhz,sigma_mhz")
        for name, n, label, a, m, db, e, s in entries:
            lines.append(",".join([name, str(n), label, fmt(a.center), fmt(a.center_sigma), fmt(m.center),
                                   fmt(m.center_sigma), fmt(m.width), fmt(db), fmt(e), fmt(s)]))
        text = _finish(lines)
    files_out = {
        out / f"line_fits.{'json' if fmt_name == 'json' else 'txt'}": text,
        out / "binding_energies.csv": _finish(be_lines),
    }
    return files_out, text


COMMANDS = {
    "wavefunction": (cmd_wavefunction, "tabulate Rydberg radial wavefunctions"),
    "potential": (cmd_potential, "tabulate the mean-field molecular potential"),
    "boundstates": (cmd_boundstates, "solve vibrational levels and report the outer-well states"),
    "model-curve": (cmd_model_curve, "model binding energies versus n"),
    "fit-scattering-length": (cmd_fit_scattering_length, "fit a_atom to measured binding energies"),
    "fit-stark": (cmd_fit_stark, "fit quadratic Stark shifts"),
    "fit-lifetime": (cmd_fit_lifetime, "fit exponential decay curves"),
    "analyze-spectrum": (cmd_analyze_spectrum, "fit line centres and form binding energies"),
}
TAKES_FILES = {"fit-scattering-length", "fit-stark", "fit-lifetime", "analyze-spectrum"}


def _n_list(text: str):
    from .io import _ints

    return _ints(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rydmol", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value run configuration")
        p.add_argument("--out", help="output directory (default: out_dir from config)")
        p.add_argument("--n", type=_n_list, help="principal quantum numbers, e.g. 35 or 34-40 or 34,36")
        p.add_argument("--a-atom", type=float, help="zero-energy scattering length in bohr")
        p.add_argument("--workers", type=int, help="processes for per-n model evaluation")
        p.add_argument("--format", choices=("table", "json"), default="table")
        p.add_argument("-q", "--quiet", action="store_true", help="do not echo the report")
        if name in TAKES_FILES:
            p.add_argument("files", nargs="*", help="input files (override the config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, n_list=args.n, a_atom=args.a_atom, out_dir=args.out, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    func, _ = COMMANDS[args.command]
    out = Path(cfg.out_dir)
    try:
        if args.command in TAKES_FILES:
            files, report = func(cfg, out, args.format, args.files)
        else:
            files, report = func(cfg, out, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, ValueError, ModelError, FitError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    meta = {
        "command": args.command,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
        "outputs": sorted(p.name for p in files),
        "config": dict(cfg.echo()),
    }
    files = dict(files)
    files[out / f"{args.command}.meta.json"] = dumps_json(meta)
    try:
        write_atomically(files)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        sys.stdout.write(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
