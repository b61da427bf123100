"""Run configuration, input parsing and report formatting."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import DEFAULT_G_EFF, BindingEnergyDatum, ModelOptions, Spectrum
from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .wavefunction import RB_NS_DEFECTS, QuantumDefectModel, RadialGrid


class ConfigError(ValueError):
    pass


class ParseError(ValueError):
    pass


def fmt(x) -> str:
    """Fixed scientific notation, 9 significant digits."""
    if x is None:
        return "nan"
    return f"{float(x):.8e}"


def rounded(x):
    return None if x is None or not math.isfinite(x) else float(fmt(x))


# -- configuration ------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    out = []
    for tok in text.replace(",", " ").split():
        if "-" in tok[1:]:
            lo, hi = tok.split("-", 1) if not tok.startswith("-") else (tok, tok)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(tok))
    return tuple(out)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _optional_int(text: str):
    return None if text.strip().lower() in ("", "none", "all") else int(text)


def _paths(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _windows(text: str) -> tuple[tuple[str, float, float], ...]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        label, lo, hi = item.split(":")
        out.append((label.strip(), float(lo), float(hi)))
    return tuple(out)


@dataclass(frozen=True)
class RunConfig:
    delta0: float = RB_NS_DEFECTS.delta0
    delta2: float = RB_NS_DEFECTS.delta2
    delta4: float = RB_NS_DEFECTS.delta4
    defect_source: str = RB_NS_DEFECTS.source
    alpha: float = 319.0
    a_atom: float = -18.5
    a_min: float = -30.0
    a_max: float = -5.0
    a_step: float = 0.1
    a_tol: float = 1e-3
    n_list: tuple[int, ...] = (35,)
    b0_gauss: float = 0.8
    g_eff: float = DEFAULT_G_EFF
    mesh_step: float = 0.005
    r_out: float | None = None
    r_min_potential: float = 100.0
    momentum_uses_n_star: bool = True
    e_window_lo_mhz: float | None = None
    e_window_hi_mhz: float | None = None
    max_levels: int | None = None
    outer_lobes: int = 2
    outer_overlap: float = 0.25
    validity_threshold: float = 10.0
    workers: int = 1
    line_shape: str = "gaussian"
    atomic_window: tuple[float, ...] = (-2.0, 2.0)
    molecular_windows: tuple = ()
    hartree_to_mhz: float = DEFAULT_CONSTANTS.hartree_to_mhz
    bohr_magneton_mhz_per_gauss: float = DEFAULT_CONSTANTS.bohr_magneton_mhz_per_gauss
    amu_to_me: float = DEFAULT_CONSTANTS.amu_to_me
    mass_rb87_amu: float = DEFAULT_CONSTANTS.mass_rb87_amu
    field_au_to_v_per_cm: float = DEFAULT_CONSTANTS.field_au_to_v_per_cm
    binding_energy_files: tuple[str, ...] = ()
    spectrum_files: tuple[str, ...] = ()
    stark_files: tuple[str, ...] = ()
    lifetime_files: tuple[str, ...] = ()
    out_dir: str = "out"

    def __post_init__(self):
        for n in self.n_list:
            if not 20 <= n <= 80:
                raise ConfigError(f"n_list: n={n} outside [20, 80]")
        for name in ("mesh_step", "r_min_potential", "a_step", "a_tol", "alpha", "outer_overlap"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be positive")
        if self.outer_overlap > 1:
            raise ConfigError("outer_overlap: must not exceed 1")
        if self.r_out is not None and not self.r_out > 0:
            raise ConfigError("r_out: must be positive")
        if self.a_min >= self.a_max:
            raise ConfigError("a_min/a_max: a_min must be below a_max")
        if self.workers < 1 or self.outer_lobes < 1:
            raise ConfigError("workers/outer_lobes: must be at least 1")
        if len(self.atomic_window) != 2:
            raise ConfigError("atomic_window: expected two numbers")
        if self.line_shape not in ("gaussian", "lorentzian"):
            raise ConfigError(f"line_shape: unknown shape {self.line_shape!r}")
        paths = [os.path.abspath(p) for p in self.input_paths()] + [os.path.abspath(self.out_dir)]
        if len(set(paths)) != len(paths):
            raise ConfigError("paths: input files and out_dir must all be distinct")
        try:
            self.constants()
        except ValueError as exc:
            raise ConfigError(f"constants: {exc}") from exc

    def input_paths(self) -> tuple[str, ...]:
        return self.binding_energy_files + self.spectrum_files + self.stark_files + self.lifetime_files

    def defects(self) -> QuantumDefectModel:
        return QuantumDefectModel(self.delta0, self.delta2, self.delta4, self.defect_source)

    def constants(self) -> PhysicalConstants:
        overrides = {
            k: getattr(self, k)
            for k in ("hartree_to_mhz", "bohr_magneton_mhz_per_gauss", "amu_to_me", "mass_rb87_amu",
                      "field_au_to_v_per_cm")
            if getattr(self, k) != getattr(DEFAULT_CONSTANTS, k)
        }
        return DEFAULT_CONSTANTS.with_overrides(**overrides) if overrides else DEFAULT_CONSTANTS

    def grid(self) -> RadialGrid:
        return RadialGrid(step=self.mesh_step, r_out=self.r_out)

    def model_options(self) -> ModelOptions:
        return ModelOptions(
            grid=self.grid(),
            r_min=self.r_min_potential,
            momentum_uses_n_star=self.momentum_uses_n_star,
            outer_lobes=self.outer_lobes,
            outer_overlap=self.outer_overlap,
            max_levels=self.max_levels,
            validity_threshold=self.validity_threshold,
        )

    def echo(self, execution: bool = True) -> list[tuple[str, str]]:
        """Settings as (key, text) pairs.

        ``execution=False`` drops settings that cannot change a result
        (worker count, output directory) so report bodies stay identical
        across them.
        """
        out = []
        for f in dataclasses.fields(self):
            if not execution and f.name in EXECUTION_KEYS:
                continue
            value = getattr(self, f.name)
            if isinstance(value, float):
                text = fmt(value)
            elif isinstance(value, tuple):
                text = ", ".join(":".join(map(str, v)) if isinstance(v, tuple) else str(v) for v in value)
            else:
                text = str(value)
            out.append((f.name, text))
        return out


EXECUTION_KEYS = ("workers", "out_dir")

_PARSERS = {
    "n_list": _ints,
    "momentum_uses_n_star": _bool,
    "r_out": _optional_float,
    "e_window_lo_mhz": _optional_float,
    "e_window_hi_mhz": _optional_float,
    "max_levels": _optional_int,
    "outer_lobes": int,
    "workers": int,
    "defect_source": str,
    "line_shape": str,
    "out_dir": str,
    "atomic_window": _floats,
    "molecular_windows": _windows,
    "binding_energy_files": _paths,
    "spectrum_files": _paths,
    "stark_files": _paths,
    "lifetime_files": _paths,
}


def parse_config_text(text: str, base_dir: str | os.PathLike | None = None, **overrides) -> RunConfig:
    """Parse flat ``key = value`` text (``#`` comments) into a :class:`RunConfig`.

    Relative paths are resolved against ``base_dir``.  Keyword ``overrides``
    (already typed) win over the file.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    known = {f.name for f in dataclasses.fields(RunConfig)}
    values = {}
    for key, raw in parser["run"].items():
        if key not in known:
            raise ConfigError(f"{key}: unknown config key")
        conv = _PARSERS.get(key, float)
        try:
            values[key] = conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from exc
    if base_dir is not None:
        for key in ("binding_energy_files", "spectrum_files", "stark_files", "lifetime_files"):
            if key in values:
                values[key] = tuple(os.path.normpath(Path(base_dir, p)) for p in values[key])
        if "out_dir" in values:
            values["out_dir"] = os.path.normpath(Path(base_dir, values["out_dir"]))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, **overrides) -> RunConfig:
    if path is None:
        return parse_config_text("", **overrides)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    return parse_config_text(text, base_dir=path.parent, **overrides)


# -- input files --------------------------------------------------------------


def _read_rows(path, header: list[str], optional: int = 0):
    """Yield (line number, cells) after checking the header; '#' lines are metadata."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    meta = {}
    rows = []
    with path.open(newline="") as fh:
        seen_header = False
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                body = stripped.lstrip("#").strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            cells = next(csv.reader([stripped]))
            cells = [c.strip() for c in cells]
            if not seen_header:
                required = header[: len(header) - optional]
                if cells[: len(required)] != required:
                    raise ParseError(f"{path}:{lineno}: expected header {','.join(header)}")
                seen_header = True
                continue
            rows.append((lineno, cells))
    if not seen_header:
        raise ParseError(f"{path}: missing header {','.join(header)}")
    return rows, meta


def _number(path, lineno, cell, what):
    try:
        x = float(cell)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: {what} {cell!r} is not a number") from None
    if not math.isfinite(x):
        raise ParseError(f"{path}:{lineno}: {what} is {cell!r}")
    return x


def parse_spectrum_csv(path) -> Spectrum:
    """Read ``detuning_mhz,signal`` rows; ``# key = value`` lines become metadata.

    Recognised keys: ``n``, ``averages``, ``b0_gauss`` and ``molecular_windows``
    (same syntax as the config key, overriding it for this file).
    """
    rows, meta = _read_rows(path, ["detuning_mhz", "signal"])
    det, sig = [], []
    for lineno, cells in rows:
        if len(cells) < 2:
            raise ParseError(f"{path}:{lineno}: expected 2 columns")
        d = _number(path, lineno, cells[0], "detuning")
        s = _number(path, lineno, cells[1], "signal")
        if det and d <= det[-1]:
            raise ParseError(f"{path}:{lineno}: detuning not strictly increasing")
        det.append(d)
        sig.append(s)
    if len(det) < 8:
        raise ParseError(f"{path}: spectrum has {len(det)} points; need at least 8")
    typed = {}
    for k, v in meta.items():
        try:
            if k in ("n", "averages"):
                typed[k] = int(v)
            elif k == "b0_gauss":
                typed[k] = float(v)
            elif k == "molecular_windows":
                typed[k] = _windows(v)
            else:
                typed[k] = v
        except ValueError:
            raise ParseError(f"{path}: metadata {k} = {v!r} malformed") from None
    return Spectrum(np.array(det), np.array(sig), typed)


def parse_binding_energies(paths) -> list[BindingEnergyDatum]:
    """Read one or more ``n,v,e_b_mhz,sigma_mhz[,source]`` tables.

    Problems in every file are collected and raised together.
    """
    data, errors = [], []
    for path in paths:
        try:
            rows, _ = _read_rows(path, ["n", "v", "e_b_mhz", "sigma_mhz", "source"], optional=1)
        except ParseError as exc:
            errors.append(str(exc))
            continue
        for lineno, cells in rows:
            try:
                if len(cells) < 4:
                    raise ParseError(f"{path}:{lineno}: expected at least 4 columns")
                try:
                    n = int(cells[0])
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: n {cells[0]!r} is not an integer") from None
                v_text = cells[1].lower()
                if v_text in ("unassigned", "u", "?", ""):
                    v = None
                elif v_text in ("0", "1"):
                    v = int(v_text)
                else:
                    raise ParseError(f"{path}:{lineno}: v must be 0, 1 or unassigned, got {cells[1]!r}")
                e_b = _number(path, lineno, cells[2], "e_b_mhz")
                sigma = _number(path, lineno, cells[3], "sigma_mhz")
                if sigma <= 0:
                    raise ParseError(f"{path}:{lineno}: sigma_mhz must be positive")
                source = cells[4] if len(cells) > 4 else Path(path).name
                data.append(BindingEnergyDatum(n, v, e_b, sigma, source))
            except ParseError as exc:
                errors.append(str(exc))
    if errors:
        raise ParseError("\n".join(errors))
    return data


def parse_columns(path, header: list[str], optional: int = 0) -> tuple[dict[str, np.ndarray], dict]:
    """Read a numeric CSV with the given header into column arrays plus ``#`` metadata."""
    rows, meta = _read_rows(path, header, optional=optional)
    width = None
    cols = {h: [] for h in header}
    for lineno, cells in rows:
        if width is None:
            width = len(cells)
            if width < len(header) - optional:
                raise ParseError(f"{path}:{lineno}: expected {len(header) - optional} columns")
        elif len(cells) != width:
            raise ParseError(f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
        for h, c in zip(header, cells):
            cols[h].append(_number(path, lineno, c, h))
    return {h: np.array(v) for h, v in cols.items() if v}, meta


# -- output -------------------------------------------------------------------


def write_atomically(files: dict[Path, str]) -> None:
    """Write all files or none: everything goes to temporaries first."""
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def header_lines(title: str, config: RunConfig) -> list[str]:
    lines = [f"# {title}"]
    lines += [f"# {k} = {v}" for k, v in config.echo(execution=False)]
    lines.append(f"# constants_vintage = {config.constants().vintage}")
    return lines


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
