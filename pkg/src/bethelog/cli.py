"""Command-line front end.

Every output embeds the resolved run configuration and the package
version; numbers carry 12 significant digits, so identical
configurations give byte-identical files regardless of worker count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .constants import DEFAULT_CUTOFF
from .errors import AccuracyError, BetheLogError, ConsistencyError, ConvergenceError, PreconditionError
from .polarizability import DampingModel, Sign, TabulatedSpectralFunction, kk_real_from_imag
from .spectrum import Spectrum, load_spectrum, sum_rule_shares
from .hydrogen import build_hydrogen, default_grid, DEFAULT_OMEGA_MAX

COMMANDS = ("bethe-log", "cancellation-sweep", "kk-transform", "trk-check", "mode-energy", "correlation")
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
SIG_DIGITS = 12


@dataclass(frozen=True)
class RunConfig:
    command: str
    spectrum: Optional[str] = None
    hydrogen: Optional[str] = None
    nmax: int = 20
    continuum_nodes: int = 400
    gamma: float = 1e-4
    sign: str = "plus"
    omega_cutoff: tuple = (DEFAULT_CUTOFF,)
    format: str = "json"
    output: Optional[str] = None
    input: Optional[str] = None
    number_density: float = 1e-9
    volume: float = 1.0
    tau_max: float = 10.0
    tau_count: int = 11

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise PreconditionError(f"command: unknown {self.command!r}")
        if not self.omega_cutoff:
            raise PreconditionError("--omega-cutoff: need at least one value")
        for W in self.omega_cutoff:
            if not (math.isfinite(W) and W > 0):
                raise PreconditionError(f"--omega-cutoff: must be > 0, got {W}")
        for name in ("spectrum", "input"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise PreconditionError(f"--{name}: file not found: {p}")
        if self.spectrum is not None and self.hydrogen is not None:
            raise PreconditionError("--spectrum and --hydrogen are mutually exclusive")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise PreconditionError(f"--gamma: must be finite and >= 0, got {self.gamma}")
        if self.format not in ("csv", "json"):
            raise PreconditionError(f"--format: must be csv or json, got {self.format!r}")
        if self.tau_count < 1:
            raise PreconditionError("--tau-count: must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["omega_cutoff"] = list(self.omega_cutoff)
        return d


# numeric formatting


def fmt(x) -> object:
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.{SIG_DIGITS}g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return fmt(obj)


def render(config: RunConfig, rows: list, extra: Optional[dict] = None) -> str:
    preamble = {"artifact": "bethelog", "version": __version__, "config": config.to_dict()}
    if config.format == "json":
        doc = {"preamble": _clean(preamble), "rows": _clean(rows)}
        if extra:
            doc.update(_clean(extra))
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(_clean(preamble), sort_keys=True) + "\n")
    if extra:
        buf.write("# " + json.dumps(_clean(extra), sort_keys=True) + "\n")
    if rows:
        cols = list(rows[0].keys())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_csv_cell(r[c]) for c in cols])
    return buf.getvalue()


def _csv_cell(v):
    v = fmt(v)
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    return v


# inputs


def _spectrum(cfg: RunConfig, energy_use: bool) -> Spectrum:
    if cfg.spectrum is not None:
        return load_spectrum(cfg.spectrum)
    if cfg.hydrogen is not None:
        top = DEFAULT_OMEGA_MAX
        if energy_use:
            # every line must stay well below the smallest cutoff
            top = min(top, 0.1 * min(cfg.omega_cutoff))
        grid = None
        if cfg.continuum_nodes >= 2:
            grid = default_grid(cfg.hydrogen, cfg.continuum_nodes, top)
        return build_hydrogen(cfg.hydrogen, cfg.nmax, grid)
    raise PreconditionError("one of --spectrum or --hydrogen is required")


def _damping(cfg: RunConfig, spectrum: Spectrum) -> DampingModel:
    return DampingModel.relative(spectrum, cfg.gamma, Sign(cfg.sign))


def _workers() -> int:
    from .energies import worker_count

    return worker_count()


# commands


def cmd_bethe_log(cfg: RunConfig):
    from .energies import Route, breakdown, bethe_log_mean

    spec = _spectrum(cfg, energy_use=True)
    damp = _damping(cfg, spec)
    jobs = [(W, r) for W in cfg.omega_cutoff for r in (Route.FEYNMAN, Route.SELF_INTERACTION)]
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(lambda j: breakdown(spec, damp, j[1], j[0]), jobs))
    rows = [b.to_dict() for b in results]
    summary = [{"route": b.route.value, "omega_cutoff": b.omega_cutoff, "delta_e_mhz": b.delta_e_mhz}
               for b in results]
    extra = {"summary": summary}
    if len(spec):
        extra["ln_k0_over_ry"] = bethe_log_mean(spec)
    return rows, extra


def cmd_cancellation_sweep(cfg: RunConfig):
    from .energies import route_comparison

    spec = _spectrum(cfg, energy_use=True)
    rows = [r._asdict() for r in route_comparison(spec, _damping(cfg, spec), list(cfg.omega_cutoff))]
    return rows, None


def cmd_kk_transform(cfg: RunConfig):
    if cfg.input is None:
        raise PreconditionError("--input: kk-transform needs a spectral CSV")
    tab = TabulatedSpectralFunction.from_csv(cfg.input)
    rows = []
    for w in tab.omegas[:-1]:
        r = kk_real_from_imag(tab, float(w))
        rows.append({"omega": float(w), "alpha_real": r.value, "tail_bound": r.tail_bound})
    return rows, None


def cmd_trk_check(cfg: RunConfig):
    spec = _spectrum(cfg, energy_use=False)
    shares = sum_rule_shares(spec)
    return [dict(atom=spec.atom_label, lines=len(spec), **shares)], None


def cmd_mode_energy(cfg: RunConfig):
    from . import modesum as ms

    if cfg.input is not None:
        model = ms.load_model(cfg.input)
    else:
        spec = _spectrum(cfg, energy_use=True)
        model = ms.RefractiveModel(spec, _damping(cfg, spec), cfg.number_density)
    V = cfg.volume

    def row(W):
        rep = ms.partial_integration_report(model, W)
        cont = ms.mode_energy_continuum(model, W, V)
        dens = ms.density_route_energy(model, W, V)
        return {
            "omega_cutoff": W,
            "u": ms.u_dispersive(model, W, V),
            "u_power": ms.u_power(model, W, V),
            "mode_energy_shift": ms.mode_energy_shift(model, W, V),
            "boundary_term": rep.boundary,
            "partial_integration_residual": rep.residual,
            "partial_integration_relative": rep.relative,
            "density_route_relative": (dens / cont - 1.0) if cont else 0.0,
            "max_delta_n": model.max_delta_n(),
        }

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rows = list(pool.map(row, cfg.omega_cutoff))
    return rows, None


def cmd_correlation(cfg: RunConfig):
    from .energies import dipole_correlation, position_correlation

    spec = _spectrum(cfg, energy_use=False)
    damp = _damping(cfg, spec)
    taus = np.linspace(0.0, cfg.tau_max, cfg.tau_count) if cfg.tau_count > 1 else np.array([0.0])
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        vals = list(pool.map(lambda t: (dipole_correlation(spec, damp, t), position_correlation(spec, damp, t)),
                             taus.tolist()))
    rows = [{"tau": t, "dipole_correlation": d, "position_correlation": p} for t, (d, p) in zip(taus, vals)]
    return rows, None


HANDLERS = {
    "bethe-log": cmd_bethe_log,
    "cancellation-sweep": cmd_cancellation_sweep,
    "kk-transform": cmd_kk_transform,
    "trk-check": cmd_trk_check,
    "mode-energy": cmd_mode_energy,
    "correlation": cmd_correlation,
}


def run(config: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        config.validate()
        rows, extra = HANDLERS[config.command](config)
        text = render(config, rows, extra)
    except (ConvergenceError, AccuracyError, ConsistencyError) as exc:
        print(f"bethelog {config.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (BetheLogError, ValueError, OSError) as exc:
        where = getattr(exc, "field", None)
        tag = f" [{where}]" if where else ""
        print(f"bethelog {config.command}:{tag} invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if config.output in (None, "-"):
        stdout.write(text)
    else:
        Path(config.output).write_text(text)
    return EXIT_OK


def parse_cutoffs(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part == "default":
            out.append(DEFAULT_CUTOFF)
        else:
            try:
                out.append(float(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a cutoff: {part!r}") from None
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bethelog", description="Bethe-log level shift workbench (hartree a.u.)")
    p.add_argument("--version", action="version", version=f"bethelog {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--spectrum", help="spectrum JSON file")
        s.add_argument("--hydrogen", choices=["1s", "2s"], help="use the built-in hydrogen spectrum")
        s.add_argument("--nmax", type=int, default=20)
        s.add_argument("--continuum-nodes", type=int, default=400, help="0 disables the continuum")
        s.add_argument("--gamma", type=float, default=1e-4, help="damping rate relative to each line frequency")
        s.add_argument("--sign", choices=["plus", "minus"], default="plus")
        s.add_argument("--omega-cutoff", type=parse_cutoffs, default=(DEFAULT_CUTOFF,),
                       help="float, 'default' (c^2), or a comma-separated list")
        s.add_argument("--output", help="output path (default stdout)")
        s.add_argument("--format", choices=["csv", "json"], default="json")
        s.add_argument("--input", help="kk-transform: omega,value CSV; mode-energy: model JSON")
        s.add_argument("--number-density", type=float, default=1e-9)
        s.add_argument("--volume", type=float, default=1.0)
        s.add_argument("--tau-max", type=float, default=10.0)
        s.add_argument("--tau-count", type=int, default=11)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=ns.command,
        spectrum=ns.spectrum,
        hydrogen=ns.hydrogen,
        nmax=ns.nmax,
        continuum_nodes=ns.continuum_nodes,
        gamma=ns.gamma,
        sign=ns.sign,
        omega_cutoff=tuple(ns.omega_cutoff),
        format=ns.format,
        output=ns.output,
        input=ns.input,
        number_density=ns.number_density,
        volume=ns.volume,
        tau_max=ns.tau_max,
        tau_count=ns.tau_count,
    )


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
