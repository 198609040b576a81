"""Flat ``section.key = value`` configuration files.

Example::

    # heat-limit run
    physics.kappa = 0.1
    grid.n = 32
    time.t_end = 0.5
    ic.T.base = 1.0
    ic.T.kind = single_mode
    ic.T.amplitude = 0.1
    ic.T.wavevector = 0, 0, 1

Lists are comma separated, booleans are ``true``/``false``, ``#`` starts a
comment. Unknown keys are rejected. Initial-condition fields are ``c1`` ..
``cN``, ``T``, ``u1``, ``u2``, ``u3``; a field takes either one component
(``ic.T.kind = ...``) or several numbered ones (``ic.T.1.kind = ...``,
``ic.T.2.kind = ...``) on top of ``ic.<field>.base``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from npb.errors import ConfigError
from npb.spectral import Grid
from npb.state import NONNEG_TOL, FieldIC, ICSpec, PhysParams, RandomSmooth, SingleMode
from npb.timestepper import MODES, StepControl


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# key -> (type, default, check, check description, help)
SCHEMA = {
    "physics.D": (float, 0.1, _pos, "> 0", "ionic diffusivity (equal for all species)"),
    "physics.nu": (float, 0.1, _pos, "> 0", "kinematic viscosity"),
    "physics.kappa": (float, 0.1, _pos, "> 0", "thermal diffusivity"),
    "physics.epsilon": (float, 1.0, _pos, "> 0", "dielectric permittivity"),
    "physics.e_charge": (float, 1.0, _pos, "> 0", "elementary charge"),
    "physics.k_B": (float, 1.0, _pos, "> 0", "Boltzmann constant"),
    "physics.N_A": (float, 1.0, _pos, "> 0", "Avogadro constant"),
    "physics.units": (str, "nondimensional", lambda v: v in ("nondimensional", "si"),
                      "one of nondimensional, si", "si overrides e_charge, k_B, N_A"),
    "physics.g": (float, 1.0, _nonneg, ">= 0", "gravitational acceleration"),
    "physics.alpha_T": (float, 0.0, _nonneg, ">= 0", "thermal expansion coefficient"),
    "physics.alpha_S": (float, 0.0, _nonneg, ">= 0", "haline expansion coefficient"),
    "physics.valences": (list, [1.0, -1.0], lambda v: len(v) >= 1, "non-empty", "valences z_i"),
    "physics.molar_masses": (list, [1.0, 1.0], lambda v: all(m > 0 for m in v), "all > 0",
                             "molar masses M_i"),
    "physics.T_star": (float, 1.0, _pos, "> 0", "temperature floor T*"),
    "physics.eta": (float, 0.0, _nonneg, ">= 0", "mollification parameter"),
    "physics.smallness_C": (float, 1.0, _pos, "> 0", "domain constant of the decay gate"),
    "grid.n": (int, 32, lambda v: v >= 8 and v % 2 == 0, "even and >= 8", "points per dimension"),
    "time.dt": (float, 1e-3, _pos, "> 0", "initial / fixed step"),
    "time.dt_min": (float, None, _pos, "> 0", "smallest adaptive step (default: dt)"),
    "time.dt_max": (float, None, _pos, "> 0", "largest adaptive step (default: dt)"),
    "time.cfl_target": (float, 0.4, lambda v: 0 < v <= 1, "in (0, 1]", "CFL number"),
    "time.mode": (str, "imex_rk2", lambda v: v in MODES, "one of imex_rk2, picard",
                  "time integrator"),
    "time.picard_tol": (float, 1e-10, _pos, "> 0", "Picard convergence tolerance"),
    "time.picard_max_iter": (int, 50, lambda v: v >= 1, ">= 1", "Picard sweep limit"),
    "time.t_end": (float, 1.0, _nonneg, ">= 0", "final time"),
    "time.nonneg_tol": (float, NONNEG_TOL, _nonneg, ">= 0",
                        "tolerated undershoot of c_i >= 0 and T >= T*"),
    "ic.seed": (int, 0, _nonneg, ">= 0", "seed for random_smooth components"),
    "ic.mollify": (bool, False, None, "", "apply J_eta to the initial data"),
    "output.every": (int, 10, lambda v: v >= 1, ">= 1", "diagnostics cadence in steps"),
    "output.snapshot_every": (int, 0, _nonneg, ">= 0", "snapshot cadence in steps (0: final only)"),
    "study.eta_ladder": (list, [0.4, 0.2, 0.1, 0.05], lambda v: len(v) >= 2 and all(x > 0 for x in v),
                         "at least two positive values", "eta values for eta-study"),
    "study.window_start": (float, 0.1, lambda v: 0 <= v < 1, "in [0, 1)",
                           "fraction of the horizon skipped before decay fits"),
}

IC_KEYS = {
    "base": float,
    "kind": str,
    "amplitude": float,
    "wavevector": list,
    "phase": float,
    "k0": float,
}
IC_KINDS = ("constant", "single_mode", "random_smooth")
_IC_RE = re.compile(r"^ic\.(c[1-9]\d*|T|u[123])(?:\.(\d+))?\.(\w+)$")


@dataclass
class OutputSpec:
    every: int = 10
    snapshot_every: int = 0


@dataclass
class StudySpec:
    eta_ladder: tuple = (0.4, 0.2, 0.1, 0.05)
    window_start: float = 0.1


@dataclass
class RunConfig:
    params: PhysParams
    n: int
    ctrl: StepControl
    t_end: float
    ic: ICSpec
    mollify_ic: bool = False
    output: OutputSpec = field(default_factory=OutputSpec)
    study: StudySpec = field(default_factory=StudySpec)

    @property
    def grid(self):
        return Grid(self.n)


def _convert(key, typ, raw):
    try:
        if typ is float:
            return float(raw)
        if typ is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if typ is bool:
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError
            return low == "true"
        if typ is list:
            return [float(x) for x in raw.split(",") if x.strip()]
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None


def parse_text(text, source="<config>"):
    """Parse config text into ``{key: raw string}``, rejecting malformed lines."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (x.strip() for x in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{key}: duplicate key ({source}:{lineno})")
        out[key] = val
    return out


def _field_ic(name, entries, key_prefix):
    base = 0.0
    comps = {}
    for (idx, attr), value in entries.items():
        if idx is None and attr == "base":
            base = value
        else:
            comps.setdefault(idx, {})[attr] = value
    if None in comps and len(comps) > 1:
        raise ConfigError(f"{key_prefix}: mix of numbered and unnumbered components")
    components = []
    for idx in sorted(comps, key=lambda i: -1 if i is None else int(i)):
        d = comps[idx]
        where = key_prefix if idx is None else f"{key_prefix}.{idx}"
        kind = d.get("kind", "constant")
        if kind not in IC_KINDS:
            raise ConfigError(f"{where}.kind must be one of {', '.join(IC_KINDS)}")
        allowed = {"constant": {"kind"},
                   "single_mode": {"kind", "amplitude", "wavevector", "phase"},
                   "random_smooth": {"kind", "amplitude", "k0"}}[kind]
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"{where}.{sorted(extra)[0]} is not valid for kind {kind}")
        if kind == "single_mode":
            wv = d.get("wavevector", [1.0, 0.0, 0.0])
            if len(wv) != 3 or any(w != int(w) for w in wv):
                raise ConfigError(f"{where}.wavevector must be three integers")
            components.append(SingleMode(d.get("amplitude", 0.0), tuple(int(w) for w in wv),
                                         d.get("phase", 0.0)))
        elif kind == "random_smooth":
            k0 = d.get("k0", 2.0)
            if not k0 > 0:
                raise ConfigError(f"{where}.k0 must be > 0")
            components.append(RandomSmooth(d.get("amplitude", 0.0), k0))
    return FieldIC(base, tuple(components))


def build_config(raw, overrides=None):
    """Validate a ``{key: raw}`` mapping and assemble a :class:`RunConfig`."""
    raw = dict(raw)
    if overrides:
        raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    vals = {k: spec[1] for k, spec in SCHEMA.items()}
    ic_entries = {}
    for key, text in raw.items():
        if key in SCHEMA:
            typ, _, check, desc, _ = SCHEMA[key]
            v = _convert(key, typ, text)
            if check is not None and not check(v):
                raise ConfigError(f"{key} must be {desc}")
            vals[key] = v
            continue
        m = _IC_RE.match(key)
        if m and m.group(3) in IC_KEYS and not (m.group(2) is not None and m.group(3) == "base"):
            name, idx, attr = m.groups()
            ic_entries.setdefault(name, {})[(idx, attr)] = _convert(key, IC_KEYS[attr], text)
            continue
        raise ConfigError(f"{key}: unknown key")

    n_sp = len(vals["physics.valences"])
    if len(vals["physics.molar_masses"]) != n_sp:
        raise ConfigError("physics.molar_masses must have the same length as physics.valences")
    for name in ic_entries:
        if name.startswith("c") and int(name[1:]) > n_sp:
            raise ConfigError(f"ic.{name}: only {n_sp} species configured")

    try:
        params = PhysParams(
            D=vals["physics.D"], nu=vals["physics.nu"], kappa=vals["physics.kappa"],
            epsilon=vals["physics.epsilon"], e_charge=vals["physics.e_charge"],
            k_B=vals["physics.k_B"], N_A=vals["physics.N_A"], g=vals["physics.g"],
            alpha_T=vals["physics.alpha_T"], alpha_S=vals["physics.alpha_S"],
            valences=tuple(vals["physics.valences"]),
            molar_masses=tuple(vals["physics.molar_masses"]),
            T_star=vals["physics.T_star"], eta=vals["physics.eta"],
            smallness_C=vals["physics.smallness_C"])
    except ValueError as exc:
        raise ConfigError(f"physics: {exc}") from None
    if vals["physics.units"] == "si":
        params = params.with_si_constants()

    dt = vals["time.dt"]
    dt_min = vals["time.dt_min"] if vals["time.dt_min"] is not None else dt
    dt_max = vals["time.dt_max"] if vals["time.dt_max"] is not None else dt
    try:
        ctrl = StepControl(dt=dt, dt_min=dt_min, dt_max=dt_max,
                           cfl_target=vals["time.cfl_target"], mode=vals["time.mode"],
                           picard_tol=vals["time.picard_tol"],
                           picard_max_iter=vals["time.picard_max_iter"],
                           nonneg_tol=vals["time.nonneg_tol"])
    except ValueError as exc:
        raise ConfigError(f"time: {exc}") from None

    def fic(name, default_base):
        entries = ic_entries.get(name, {})
        f = _field_ic(name, entries, f"ic.{name}")
        if (None, "base") not in entries:
            f = replace(f, base=default_base)
        return f

    ic = ICSpec(
        c=tuple(fic(f"c{i + 1}", 1.0) for i in range(n_sp)),
        T=fic("T", params.T_star),
        u=tuple(fic(f"u{j}", 0.0) for j in (1, 2, 3)),
        seed=vals["ic.seed"],
    )
    return RunConfig(
        params=params, n=vals["grid.n"], ctrl=ctrl, t_end=vals["time.t_end"], ic=ic,
        mollify_ic=vals["ic.mollify"],
        output=OutputSpec(vals["output.every"], vals["output.snapshot_every"]),
        study=StudySpec(tuple(vals["study.eta_ladder"]), vals["study.window_start"]),
    )


def parse_config(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return build_config(parse_text(text, str(path)), overrides)


def describe_defaults():
    """One line per key, used for ``--help``."""
    lines = []
    for key, (typ, default, _, desc, help_) in SCHEMA.items():
        d = ", ".join(f"{x:g}" for x in default) if isinstance(default, list) else default
        cons = f" [{desc}]" if desc else ""
        lines.append(f"  {key} = {d}{cons}  {help_}")
    lines.append("  ic.<c1..cN|T|u1..u3>[.<m>].<base|kind|amplitude|wavevector|phase|k0>"
                 "  kind in constant, single_mode, random_smooth; c_i base 1, T base T*")
    return "\n".join(lines)
