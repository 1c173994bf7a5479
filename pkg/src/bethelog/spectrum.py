"""Atomic spectra: upward transitions from the ground state.

``d2`` is the squared dipole matrix element summed over the degenerate
final sublevels, so the oscillator strength is ``f = (2/3) omega d2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .constants import UNITS_TAG
from .errors import InvariantError, SchemaError, UnitError

SPACING_RULES = ("geometric", "linear")


@dataclass(frozen=True)
class Transition:
    label: str
    omega: float
    d2: float

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise InvariantError(f"transition {self.label!r}: omega must be finite and > 0, got {self.omega}")
        if not (math.isfinite(self.d2) and self.d2 >= 0):
            raise InvariantError(f"transition {self.label!r}: d2 must be finite and >= 0, got {self.d2}")

    @property
    def oscillator_strength(self) -> float:
        return 2.0 * self.omega * self.d2 / 3.0


@dataclass(frozen=True)
class ContinuumGrid:
    omega_threshold: float
    omega_max: float
    nodes: int
    spacing_rule: str = "geometric"

    def __post_init__(self):
        if not (0 < self.omega_threshold < self.omega_max):
            raise InvariantError(
                f"continuum grid needs 0 < threshold < max, got {self.omega_threshold}, {self.omega_max}"
            )
        if self.nodes < 2:
            raise InvariantError(f"continuum grid needs >= 2 nodes, got {self.nodes}")
        if self.spacing_rule not in SPACING_RULES:
            raise InvariantError(f"spacing_rule must be one of {SPACING_RULES}, got {self.spacing_rule!r}")

    def frequencies(self) -> np.ndarray:
        if self.spacing_rule == "geometric":
            return np.geomspace(self.omega_threshold, self.omega_max, self.nodes)
        return np.linspace(self.omega_threshold, self.omega_max, self.nodes)

    def weights(self) -> np.ndarray:
        """Trapezoid weights in omega (geometric grids: trapezoid in ln omega)."""
        w = self.frequencies()
        if self.spacing_rule == "geometric":
            t = np.log(w)
            dt = np.diff(t)
            tw = np.zeros_like(w)
            tw[:-1] += 0.5 * dt
            tw[1:] += 0.5 * dt
            return tw * w
        dw = np.diff(w)
        out = np.zeros_like(w)
        out[:-1] += 0.5 * dw
        out[1:] += 0.5 * dw
        return out


@dataclass(frozen=True)
class Spectrum:
    atom_label: str
    transitions: tuple = ()
    continuum: Optional[ContinuumGrid] = None
    units_tag: str = UNITS_TAG
    _omega: np.ndarray = field(init=False, repr=False, compare=False)
    _d2: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if self.units_tag != UNITS_TAG:
            raise UnitError(f"units must be {UNITS_TAG!r}, got {self.units_tag!r}", field="units")
        for t in self.transitions:
            if not isinstance(t, Transition):
                raise InvariantError(f"expected Transition, got {type(t).__name__}")
        omega = np.array([t.omega for t in self.transitions], dtype=float)
        d2 = np.array([t.d2 for t in self.transitions], dtype=float)
        omega.setflags(write=False)
        d2.setflags(write=False)
        object.__setattr__(self, "_omega", omega)
        object.__setattr__(self, "_d2", d2)
        if not math.isfinite(float(np.sum(omega * d2))):
            raise InvariantError("TRK partial sum is not finite")

    @property
    def omegas(self) -> np.ndarray:
        return self._omega

    @property
    def d2s(self) -> np.ndarray:
        return self._d2

    @property
    def oscillator_strengths(self) -> np.ndarray:
        return 2.0 * self._omega * self._d2 / 3.0

    def __len__(self):
        return len(self.transitions)

    @property
    def max_omega(self) -> float:
        return float(self._omega.max()) if len(self) else 0.0

    def with_transition(self, t: Transition) -> "Spectrum":
        return Spectrum(self.atom_label, self.transitions + (t,), self.continuum)

    def scaled(self, d2_factor: float = 1.0, omega_factor: float = 1.0) -> "Spectrum":
        ts = tuple(Transition(t.label, t.omega * omega_factor, t.d2 * d2_factor) for t in self.transitions)
        return Spectrum(self.atom_label, ts, None if omega_factor != 1.0 else self.continuum)

    def continuum_mask(self) -> np.ndarray:
        if self.continuum is None:
            return np.zeros(len(self), dtype=bool)
        # bound lines sit strictly below threshold
        return self._omega >= self.continuum.omega_threshold * (1 - 1e-12)


def trk_sum(spectrum: Spectrum) -> float:
    """Thomas-Reiche-Kuhn total: the sum of oscillator strengths."""
    return float(math.fsum(spectrum.oscillator_strengths.tolist()))


def static_polarizability(spectrum: Spectrum) -> float:
    """alpha(0) = (2/3) sum d2/omega, a.u. (bohr^3)."""
    return float(math.fsum((2.0 * spectrum.d2s / spectrum.omegas / 3.0).tolist()))


def sum_rule_shares(spectrum: Spectrum) -> dict:
    f = spectrum.oscillator_strengths
    mask = spectrum.continuum_mask()
    return {
        "trk_total": trk_sum(spectrum),
        "bound": float(math.fsum(f[~mask].tolist())),
        "continuum": float(math.fsum(f[mask].tolist())),
        "static_polarizability": static_polarizability(spectrum),
    }


# JSON round trip


def spectrum_to_dict(spectrum: Spectrum) -> dict:
    out = {
        "units": spectrum.units_tag,
        "atom": spectrum.atom_label,
        "transitions": [{"label": t.label, "omega": t.omega, "d2": t.d2} for t in spectrum.transitions],
    }
    if spectrum.continuum is not None:
        g = spectrum.continuum
        out["continuum"] = {
            "threshold": g.omega_threshold,
            "max": g.omega_max,
            "nodes": g.nodes,
            "rule": g.spacing_rule,
        }
    return out


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise SchemaError(f"missing field {where}{key}", field=f"{where}{key}")
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise SchemaError(f"field {where}{key} must be a number", field=f"{where}{key}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise SchemaError(f"field {where}{key} must be an integer", field=f"{where}{key}")
        return val
    if not isinstance(val, kind):
        raise SchemaError(f"field {where}{key} has the wrong type", field=f"{where}{key}")
    return val


def spectrum_from_dict(obj: dict) -> Spectrum:
    if not isinstance(obj, dict):
        raise SchemaError("spectrum must be a JSON object", field="")
    if "units" not in obj:
        raise UnitError("missing units tag", field="units")
    if obj["units"] != UNITS_TAG:
        raise UnitError(f"units must be {UNITS_TAG!r}, got {obj['units']!r}", field="units")
    atom = _require(obj, "atom", str, "")
    rows = _require(obj, "transitions", list, "")
    transitions = []
    for i, row in enumerate(rows):
        where = f"transitions[{i}]."
        if not isinstance(row, dict):
            raise SchemaError(f"{where[:-1]} must be an object", field=where[:-1])
        transitions.append(
            Transition(
                _require(row, "label", str, where),
                _require(row, "omega", float, where),
                _require(row, "d2", float, where),
            )
        )
    grid = None
    if obj.get("continuum") is not None:
        c = _require(obj, "continuum", dict, "")
        rule = _require(c, "rule", str, "continuum.")
        grid = ContinuumGrid(
            _require(c, "threshold", float, "continuum."),
            _require(c, "max", float, "continuum."),
            _require(c, "nodes", int, "continuum."),
            rule,
        )
    return Spectrum(atom, tuple(transitions), grid)


def save_spectrum(spectrum: Spectrum, path) -> None:
    Path(path).write_text(json.dumps(spectrum_to_dict(spectrum), indent=1) + "\n")


def load_spectrum(path) -> Spectrum:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})", field="") from exc
    return spectrum_from_dict(obj)


def single_line(omega: float, d2: float, label: str = "line") -> Spectrum:
    return Spectrum("toy", (Transition(label, omega, d2),))


def from_lines(lines: Iterable[tuple], atom: str = "toy") -> Spectrum:
    return Spectrum(atom, tuple(Transition(f"line{i}", w, d) for i, (w, d) in enumerate(lines)))
