"""Experiment configuration: JSON document <-> ExperimentConfig.

Unknown keys are rejected and every validation error names the offending
key path (for example ``sde.dt``).  Defaults that depend on the experiment
kind are resolved at parse time so the parsed config is fully explicit.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from .field import DEGREE_CAP, HolomorphicField
from .superpotential import Superpotential, oscillator_superpotential

KINDS = ("mc_vs_pde", "schrodinger_check", "spectrum", "bath_correlation", "validate")


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _fraction(v):
    return 0 <= v < 0.5


@dataclass(frozen=True)
class GridSpec:
    x_min: float = -8.0
    x_max: float = 8.0
    dx: float = 0.01
    pad_fraction: float = 0.25
    peclet_max: float = 0.5
    margin_fraction: float = 0.1

    _checks = {"dx": (_positive, "must be positive"), "pad_fraction": (_nonneg, "must be >= 0"),
               "peclet_max": (lambda v: 0 < v <= 1, "must be in (0, 1]"),
               "margin_fraction": (_fraction, "must be in [0, 0.5)")}

    def _extra(self):
        if not self.x_max > self.x_min:
            yield "x_max", "must exceed x_min"


@dataclass(frozen=True)
class SdeSpec:
    dt: float = 1e-3
    t_final: float = 0.5
    n_paths: int = 200000
    starts: tuple = (-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
    noise: str = "white"
    escape_radius: float = 50.0
    n_sigma: float = 4.0
    abs_tol: float = 0.02
    max_escape_fraction: float = 0.01

    _checks = {"dt": (_positive, "must be positive"), "t_final": (_positive, "must be positive"),
               "n_paths": (lambda v: v >= 2, "must be >= 2"),
               "noise": (lambda v: v in ("white", "bath"), "must be 'white' or 'bath'"),
               "escape_radius": (_positive, "must be positive"), "n_sigma": (_positive, "must be positive"),
               "abs_tol": (_positive, "must be positive"),
               "max_escape_fraction": (lambda v: 0 <= v <= 1, "must be in [0, 1]")}

    def _extra(self):
        if len(self.starts) == 0:
            yield "starts", "must be non-empty"
        steps = self.t_final / self.dt
        if self.dt > 0 and abs(steps - round(steps)) > 1e-9 * steps:
            yield "t_final", "must be a whole number of dt steps"


@dataclass(frozen=True)
class PdeSpec:
    dt: float = 1e-4
    t_final: float = 1.0
    tol: float = 1e-3
    zero_mode_tol: float = 1e-4
    norm_tol: float = 1e-8

    _checks = {"dt": (_positive, "must be positive"), "t_final": (_positive, "must be positive"),
               "tol": (_positive, "must be positive"), "zero_mode_tol": (_positive, "must be positive"),
               "norm_tol": (_positive, "must be positive")}


@dataclass(frozen=True)
class BathSpec:
    n_modes: int = 4096
    d_omega: float = 0.0625
    n_realizations: int = 2000
    tau_max: float = 0.5
    tau_step: float = 1e-3
    n_ref: int = 256
    ref_spacing: float = 0.1
    n_sigma: float = 3.0
    c0_rtol: float = 0.03
    integral_rtol: float = 0.05
    tail_tau: float = 0.1
    tail_ratio: float = 0.1

    _checks = {"n_modes": (lambda v: v >= 1, "must be >= 1"), "d_omega": (_positive, "must be positive"),
               "n_realizations": (lambda v: v >= 2, "must be >= 2"), "tau_max": (_positive, "must be positive"),
               "tau_step": (_positive, "must be positive"), "n_ref": (lambda v: v >= 1, "must be >= 1"),
               "ref_spacing": (_positive, "must be positive"), "n_sigma": (_positive, "must be positive"),
               "c0_rtol": (_positive, "must be positive"), "integral_rtol": (_positive, "must be positive"),
               "tail_tau": (_nonneg, "must be >= 0"), "tail_ratio": (_positive, "must be positive")}

    def _extra(self):
        if self.tau_step > self.tau_max:
            yield "tau_step", "must not exceed tau_max"


@dataclass(frozen=True)
class SpectrumSpec:
    t_record: float = 200.0
    dt_sample: float = 0.05
    substeps: int = 20
    threshold: float = 0.05
    tol: float = 0.05

    _checks = {"t_record": (_positive, "must be positive"), "dt_sample": (_positive, "must be positive"),
               "substeps": (lambda v: v >= 1, "must be >= 1"),
               "threshold": (lambda v: 0 < v < 1, "must be in (0, 1)"), "tol": (_positive, "must be positive")}

    def _extra(self):
        if self.dt_sample > 0 and self.t_record / self.dt_sample < 16:
            yield "t_record", "must hold at least 16 samples"


@dataclass(frozen=True)
class SuperpotentialSpec:
    """Either the oscillator frequency ``omega`` or real coefficients c_0..c_M of S."""

    omega: Optional[float] = None
    coeffs: Optional[tuple] = None

    def build(self) -> Superpotential:
        if self.coeffs is not None:
            return Superpotential.from_coeffs(self.coeffs)
        return oscillator_superpotential(self.omega)

    @property
    def oscillator_omega(self) -> Optional[float]:
        """omega when S is exactly omega z^2 / 2, else None."""
        if self.coeffs is None:
            return self.omega
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if len(c) == 3 and c[0] == 0 and c[1] == 0 and c[2] > 0:
            return 2.0 * c[2]
        return None


_DEFAULT_FIELDS = {
    "mc_vs_pde": ((0.0, 0.0), (1.0, 0.0)),
    "schrodinger_check": ((1.0, 0.0), (1.0, 0.0)),
    "spectrum": ((1.0, 0.0), (1.0, 0.0), (1.0, 0.0)),
    "bath_correlation": ((0.0, 0.0), (1.0, 0.0)),
    "validate": ((0.0, 0.0), (1.0, 0.0)),
}
_DEFAULT_DX = {"spectrum": 0.05}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    hbar: float = 1.0
    superpotential: SuperpotentialSpec = SuperpotentialSpec(omega=1.0)
    initial_field: tuple = ((0.0, 0.0), (1.0, 0.0))
    master_seed: int = 0
    output_dir: str = "out"
    grid: GridSpec = GridSpec()
    sde: SdeSpec = SdeSpec()
    pde: PdeSpec = PdeSpec()
    bath: BathSpec = BathSpec()
    spectrum: SpectrumSpec = SpectrumSpec()

    def superpotential_obj(self) -> Superpotential:
        return self.superpotential.build()

    def field_obj(self) -> HolomorphicField:
        return HolomorphicField.from_pairs(self.initial_field)


_SECTIONS = {"grid": GridSpec, "sde": SdeSpec, "pde": PdeSpec, "bath": BathSpec, "spectrum": SpectrumSpec}


def _coerce(path, value, default):
    """Convert a JSON value to the type of ``default``."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, "must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not (isinstance(value, int) or (isinstance(value, float) and value.is_integer())):
            raise ConfigError(path, "must be an integer")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "must be a number")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(path, "must be finite")
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, "must be a string")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(path, "must be a list")
        return tuple(_coerce(f"{path}[{i}]", v, 0.0) for i, v in enumerate(value))
    raise TypeError(default)


def _parse_section(name, cls, data, defaults_used):
    if not isinstance(data, dict):
        raise ConfigError(name, "must be an object")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
    base = cls()
    values = {}
    for key, f in known.items():
        default = getattr(base, key)
        if key in data:
            values[key] = _coerce(f"{name}.{key}", data[key], default)
        else:
            values[key] = default
            defaults_used.append((f"{name}.{key}", default))
    obj = cls(**values)
    for key, (pred, msg) in getattr(cls, "_checks", {}).items():
        if not pred(getattr(obj, key)):
            raise ConfigError(f"{name}.{key}", msg)
    if hasattr(obj, "_extra"):
        for key, msg in obj._extra():
            raise ConfigError(f"{name}.{key}", msg)
    return obj


def _parse_superpotential(doc, defaults_used) -> SuperpotentialSpec:
    if "omega" in doc and "superpotential" in doc:
        raise ConfigError("omega", "give either omega or superpotential, not both")
    if "omega" in doc:
        sp = {"omega": doc["omega"]}
        where = "omega"
    elif "superpotential" in doc:
        sp = doc["superpotential"]
        where = "superpotential"
        if not isinstance(sp, dict):
            raise ConfigError(where, "must be an object")
        for key in sp:
            if key not in ("omega", "coeffs"):
                raise ConfigError(f"{where}.{key}", "unknown key")
        if len(sp) != 1:
            raise ConfigError(where, "needs exactly one of omega or coeffs")
    else:
        defaults_used.append(("superpotential.omega", 1.0))
        return SuperpotentialSpec(omega=1.0)
    if "omega" in sp:
        path = "omega" if where == "omega" else "superpotential.omega"
        omega = _coerce(path, sp["omega"], 0.0)
        if not omega > 0:
            raise ConfigError(path, "must be positive")
        return SuperpotentialSpec(omega=omega)
    coeffs = _coerce("superpotential.coeffs", sp["coeffs"], ())
    if not coeffs:
        raise ConfigError("superpotential.coeffs", "must be non-empty")
    if len(coeffs) - 1 > DEGREE_CAP:
        raise ConfigError("superpotential.coeffs", f"degree exceeds cap {DEGREE_CAP}")
    return SuperpotentialSpec(coeffs=coeffs)


def _parse_field(value) -> tuple:
    path = "initial_field"
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "must be a non-empty list of [re, im] pairs")
    out = []
    for i, pair in enumerate(value):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ConfigError(f"{path}[{i}]", "must be a [re, im] pair")
        out.append(tuple(_coerce(f"{path}[{i}]", v, 0.0) for v in pair))
    try:
        HolomorphicField.from_pairs(out)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
    return tuple(out)


_TOP_KEYS = {"kind", "hbar", "omega", "superpotential", "initial_field", "master_seed", "output_dir"} | set(_SECTIONS)


def config_from_dict(doc: dict, kind: Optional[str] = None):
    """Build a config from a parsed document.  Returns (config, defaults_used)."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown key")
    doc_kind = doc.get("kind")
    if doc_kind is not None and doc_kind not in KINDS:
        raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
    if kind is not None and doc_kind is not None and kind != doc_kind:
        raise ConfigError("kind", f"config kind {doc_kind!r} does not match subcommand {kind!r}")
    kind = kind or doc_kind
    if kind is None:
        raise ConfigError("kind", "missing")
    defaults_used = []

    def top(key, default):
        if key in doc:
            return _coerce(key, doc[key], default)
        defaults_used.append((key, default))
        return default

    hbar = top("hbar", 1.0)
    if not hbar > 0:
        raise ConfigError("hbar", "must be positive")
    seed = top("master_seed", 0)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("master_seed", "must be a 64-bit unsigned integer")
    out_dir = top("output_dir", "out")
    sp = _parse_superpotential(doc, defaults_used)
    if "initial_field" in doc:
        init = _parse_field(doc["initial_field"])
    else:
        init = _DEFAULT_FIELDS[kind]
        defaults_used.append(("initial_field", [list(p) for p in init]))
    sections = {}
    for name, cls in _SECTIONS.items():
        data = dict(doc.get(name, {})) if isinstance(doc.get(name, {}), dict) else doc[name]
        if name == "grid" and isinstance(data, dict) and "dx" not in data and kind in _DEFAULT_DX:
            data["dx"] = _DEFAULT_DX[kind]
            defaults_used.append(("grid.dx", data["dx"]))
        sections[name] = _parse_section(name, cls, data, defaults_used)
    cfg = ExperimentConfig(kind=kind, hbar=hbar, superpotential=sp, initial_field=init, master_seed=seed,
                           output_dir=out_dir, **sections)
    return cfg, defaults_used


def parse_config(text: str, kind: Optional[str] = None):
    """Parse a JSON document.  Returns (config, defaults_used)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"malformed JSON: {exc}") from None
    return config_from_dict(doc, kind)


def to_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    sp = d.pop("superpotential")
    d["superpotential"] = {"coeffs": list(sp["coeffs"])} if sp["coeffs"] is not None else {"omega": sp["omega"]}
    d["initial_field"] = [list(p) for p in cfg.initial_field]
    d["sde"]["starts"] = list(cfg.sde.starts)
    return d


def serialize(cfg: ExperimentConfig) -> str:
    """Fully explicit JSON; parse_config(serialize(cfg)) == cfg."""
    return json.dumps(to_dict(cfg), indent=2, sort_keys=True)


def with_overrides(cfg: ExperimentConfig, **sections) -> ExperimentConfig:
    """Replace fields inside sections, e.g. with_overrides(cfg, sde={"n_paths": 100})."""
    changes = {}
    for name, upd in sections.items():
        cur = getattr(cfg, name)
        changes[name] = replace(cur, **upd) if isinstance(upd, dict) else upd
    return replace(cfg, **changes)
