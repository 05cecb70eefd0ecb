"""Flat INI-style run configuration: parsing, validation, serialization.

Every parameter is a scalar, vector, or small matrix, so the format is flat
sections of `key = value` lines. Vectors are comma lists; matrices are
row-major comma lists with the dimension declared by `d`; terrace bands are
`x_lo, x_hi, level...` groups separated by `;`. Lines starting with `#` are
comments. Unknown sections or keys are hard errors. `serialize_config` and
`parse_config` round-trip bit-exactly (floats are written with repr).
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigParseError, ConfigValidationError
from .kinetics import (
    LotkaVolterra,
    Separated,
    SystemSpec,
    check_hypotheses,
    decompose_two_species,
    normalize_mutation,
    two_species_spec,
)
from . import diagnostics as diag
from . import pde
from .scenarios import Scenario

_SCHEMA = {
    "system": {"d", "L", "r", "eta", "m", "law", "C", "a", "b"},
    "grid": {"dx", "nx", "x_left"},
    "init": {"kind", "level", "interface", "width", "center", "height", "bands"},
    "time": {"T", "snapshot_every", "u_cap", "method"},
    "window": {"policy", "component", "level", "margin"},
    "diagnostics": {
        "front_component",
        "front_level",
        "edge_lo",
        "edge_hi",
        "back_fraction",
        "speed_fit_fraction",
    },
    "output": {"dir"},
}

DEFAULTS_HELP = """\
config sections and defaults:
  [system]       d (required); either L (row-major) or r/eta/m; law = lotka_volterra|separated;
                 C (row-major, for lotka_volterra); a, b (for separated)
  [grid]         dx (required), nx (required), x_left = 0
  [init]         kind = front_step (level, interface, width = 2)
                 | compact_bump (center, width, height)
                 | terrace (bands = "x_lo, x_hi, level... ; ...", width = 0.5)
  [time]         T (required), snapshot_every (required), u_cap = auto, method = euler
  [window]       policy = off | follow_front (component = total, level = 0.5, margin = 0.2)
  [diagnostics]  front_component = total, front_level = 0.5, edge_lo = 1e-8, edge_hi = 1e-4,
                 back_fraction = 0.1, speed_fit_fraction = 0.5
  [output]       dir = runs/config
"""


@dataclass(frozen=True)
class RunConfig:
    """Validated run description with plain-python field values (so equality
    is field-by-field and serialization round-trips exactly)."""

    d: tuple
    law: str
    L: tuple | None = None
    r: tuple | None = None
    eta: float | None = None
    m: tuple | None = None
    C: tuple | None = None
    a: tuple | None = None
    b: tuple | None = None
    dx: float = 0.1
    nx: int = 256
    x_left: float = 0.0
    init_kind: str = "front_step"
    level: tuple | None = None
    interface: float | None = None
    width: float = 2.0
    center: float | None = None
    height: tuple | None = None
    bands: tuple | None = None
    T: float = 10.0
    snapshot_every: float = 1.0
    u_cap: float | None = None
    method: str = "euler"
    window_policy: str = "off"
    window_component: str = "total"
    window_level: float = 0.5
    window_margin: float = 0.2
    front_component: str = "total"
    front_level: float = 0.5
    edge_lo: float = diag.EDGE_LO
    edge_hi: float = diag.EDGE_HI
    back_fraction: float = 0.1
    speed_fit_fraction: float = 0.5
    outdir: str = "runs/config"

    @property
    def n(self):
        return len(self.d)

    # -- builders ------------------------------------------------------------

    def system_spec(self) -> SystemSpec:
        if self.law == "lotka_volterra":
            law = LotkaVolterra(np.array(self.C, float).reshape(self.n, self.n))
        else:
            law = Separated(np.array(self.a, float), np.array(self.b, float))
        if self.r is not None:
            return two_species_spec(np.array(self.d), np.array(self.r), self.eta, np.array(self.m), law)
        L = np.array(self.L, float).reshape(self.n, self.n)
        spec = SystemSpec(d=np.array(self.d), L=L, law=law)
        if self.n == 2 and np.all(L - np.diag(np.diag(L)) > 0):
            mut = decompose_two_species(L)
            if np.array_equal(mut.build_matrix(), L):
                spec = SystemSpec(d=spec.d, L=L, law=law, mutation=mut)
        return spec

    def initial_data(self) -> pde.InitialData:
        if self.init_kind == "front_step":
            return pde.FrontStep(level=np.array(self.level, float), interface=self.interface, width=self.width)
        if self.init_kind == "compact_bump":
            return pde.CompactBump(center=self.center, width=self.width, height=np.array(self.height, float))
        return pde.Terrace(
            bands=tuple((b[0], b[1], tuple(b[2:])) for b in self.bands),
            width=self.width,
        )

    def window(self) -> pde.WindowPolicy:
        if self.window_policy == "off":
            return None
        comp = self.window_component
        return pde.FollowFront(
            component="total" if comp == "total" else int(comp),
            level=self.window_level,
            margin=self.window_margin,
        )

    def to_scenario(self, name: str = "config") -> Scenario:
        front = self.front_component
        return Scenario(
            name=name,
            spec=self.system_spec(),
            grid=pde.Grid1D(x_left=self.x_left, dx=self.dx, nx=self.nx),
            init=self.initial_data(),
            T=self.T,
            snapshot_every=self.snapshot_every,
            window=self.window(),
            u_cap=self.u_cap,
            method=self.method,
            front_component="total" if front == "total" else int(front),
            front_level=self.front_level,
            edge_thresholds=(self.edge_lo, self.edge_hi),
            back_fraction=self.back_fraction,
            speed_fit_window=self.speed_fit_fraction,
        )


# --- parsing -----------------------------------------------------------------

def _parse_floats(text, lineno):
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigParseError(f"line {lineno}: bad numeric list {text!r}: {exc}") from None


def _parse_sections(text):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SCHEMA:
                raise ConfigParseError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected key = value, got {raw!r}")
        if current is None:
            raise ConfigParseError(f"line {lineno}: key outside any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA[current]:
            raise ConfigParseError(f"line {lineno}: unknown key {key!r} in section [{current}]")
        if key in sections[current]:
            raise ConfigParseError(f"line {lineno}: duplicate key {key!r}")
        sections[current][key] = (value, lineno)
    return sections


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config; unknown keys are hard errors.

    Raises ConfigParseError (with line numbers) on malformed text and
    ConfigValidationError (with the hypothesis report) on semantic problems.
    """
    sections = _parse_sections(text)

    def get(section, key, default=None):
        return sections.get(section, {}).get(key, (default, 0))

    def need(section, key):
        value, lineno = get(section, key)
        if value is None:
            raise ConfigValidationError(f"missing required key {key!r} in section [{section}]")
        return value, lineno

    kw = {}
    d_text, d_line = need("system", "d")
    kw["d"] = _parse_floats(d_text, d_line)
    n = len(kw["d"])

    law, _ = get("system", "law", "lotka_volterra")
    if law not in ("lotka_volterra", "separated"):
        raise ConfigValidationError(f"law must be lotka_volterra or separated, got {law!r}")
    kw["law"] = law
    if law == "lotka_volterra":
        c_text, c_line = need("system", "C")
        kw["C"] = _parse_floats(c_text, c_line)
        if len(kw["C"]) != n * n:
            raise ConfigValidationError(f"C needs {n * n} entries (row-major), got {len(kw['C'])}")
    else:
        a_text, a_line = need("system", "a")
        b_text, b_line = need("system", "b")
        kw["a"] = _parse_floats(a_text, a_line)
        kw["b"] = _parse_floats(b_text, b_line)
        if len(kw["a"]) != n or len(kw["b"]) != n:
            raise ConfigValidationError("a and b must have the same dimension as d")

    has_matrix = get("system", "L")[0] is not None
    has_decomp = get("system", "r")[0] is not None
    if has_matrix == has_decomp:
        raise ConfigValidationError("give exactly one of L or the (r, eta, m) decomposition")
    if has_matrix:
        l_text, l_line = need("system", "L")
        kw["L"] = _parse_floats(l_text, l_line)
        if len(kw["L"]) != n * n:
            raise ConfigValidationError(f"L needs {n * n} entries (row-major), got {len(kw['L'])}")
    else:
        if n != 2:
            raise ConfigValidationError("the (r, eta, m) decomposition requires N = 2")
        r_text, r_line = need("system", "r")
        m_text, m_line = need("system", "m")
        eta_text, eta_line = need("system", "eta")
        kw["r"] = _parse_floats(r_text, r_line)
        kw["m"] = _parse_floats(m_text, m_line)
        kw["eta"] = _parse_floats(eta_text, eta_line)[0]
        if len(kw["r"]) != 2 or len(kw["m"]) != 2:
            raise ConfigValidationError("r and m must have 2 components")

    for key, cast in (("dx", float), ("nx", int)):
        text_val, lineno = need("grid", key)
        kw[key] = cast(_parse_floats(text_val, lineno)[0])
    if get("grid", "x_left")[0] is not None:
        kw["x_left"] = _parse_floats(*get("grid", "x_left"))[0]

    kind, _ = get("init", "kind", "front_step")
    if kind not in ("front_step", "compact_bump", "terrace"):
        raise ConfigValidationError(f"unknown init kind {kind!r}")
    kw["init_kind"] = kind
    if get("init", "width")[0] is not None:
        kw["width"] = _parse_floats(*get("init", "width"))[0]
    else:
        kw["width"] = 2.0 if kind == "front_step" else 0.5
    if kind == "front_step":
        kw["level"] = _parse_floats(*need("init", "level"))
        kw["interface"] = _parse_floats(*need("init", "interface"))[0]
    elif kind == "compact_bump":
        kw["center"] = _parse_floats(*need("init", "center"))[0]
        kw["height"] = _parse_floats(*need("init", "height"))
    else:
        bands_text, bands_line = need("init", "bands")
        bands = []
        for chunk in bands_text.split(";"):
            values = _parse_floats(chunk.strip(), bands_line)
            if len(values) != 2 + n:
                raise ConfigValidationError(
                    f"each band needs x_lo, x_hi and {n} level components"
                )
            bands.append(values)
        kw["bands"] = tuple(bands)

    for key in ("T", "snapshot_every"):
        kw[key] = _parse_floats(*need("time", key))[0]
    if get("time", "u_cap")[0] is not None:
        kw["u_cap"] = _parse_floats(*get("time", "u_cap"))[0]
    method, _ = get("time", "method", "euler")
    if method not in ("euler", "imex"):
        raise ConfigValidationError(f"method must be euler or imex, got {method!r}")
    kw["method"] = method

    policy, _ = get("window", "policy", "off")
    if policy not in ("off", "follow_front"):
        raise ConfigValidationError(f"window policy must be off or follow_front, got {policy!r}")
    kw["window_policy"] = policy
    comp, _ = get("window", "component", "total")
    kw["window_component"] = comp
    if get("window", "level")[0] is not None:
        kw["window_level"] = _parse_floats(*get("window", "level"))[0]
    if get("window", "margin")[0] is not None:
        kw["window_margin"] = _parse_floats(*get("window", "margin"))[0]

    if get("diagnostics", "front_component")[0] is not None:
        kw["front_component"] = get("diagnostics", "front_component")[0]
    for key, target in (
        ("front_level", "front_level"),
        ("edge_lo", "edge_lo"),
        ("edge_hi", "edge_hi"),
        ("back_fraction", "back_fraction"),
        ("speed_fit_fraction", "speed_fit_fraction"),
    ):
        if get("diagnostics", key)[0] is not None:
            kw[target] = _parse_floats(*get("diagnostics", key))[0]

    if get("output", "dir")[0] is not None:
        kw["outdir"] = get("output", "dir")[0]

    config = RunConfig(**kw)
    _validate(config)
    return config


def _validate(config: RunConfig):
    if any(x <= 0 for x in config.d):
        raise ConfigValidationError("diffusion rates d must be positive")
    if config.dx <= 0 or config.nx < 16:
        raise ConfigValidationError("need dx > 0 and nx >= 16")
    if config.T < 0 or config.snapshot_every <= 0:
        raise ConfigValidationError("need T >= 0 and snapshot_every > 0")
    try:
        spec = config.system_spec()
    except (ValueError, KeyError) as exc:
        raise ConfigValidationError(f"system block invalid: {exc}") from None
    report = check_hypotheses(spec)
    if not report.ok:
        raise ConfigValidationError(f"system fails validation:\n{report}")
    try:
        config.initial_data()
        config.window()
    except (TypeError, ValueError) as exc:
        raise ConfigValidationError(f"init/window block invalid: {exc}") from None


# --- serialization --------------------------------------------------------------

def _num(x) -> str:
    return repr(float(x))


def _vec(v) -> str:
    return ", ".join(_num(x) for x in v)


def serialize_config(config: RunConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    out = ["[system]", f"d = {_vec(config.d)}"]
    if config.L is not None:
        out.append(f"L = {_vec(config.L)}")
    else:
        out.append(f"r = {_vec(config.r)}")
        out.append(f"eta = {_num(config.eta)}")
        out.append(f"m = {_vec(config.m)}")
    out.append(f"law = {config.law}")
    if config.law == "lotka_volterra":
        out.append(f"C = {_vec(config.C)}")
    else:
        out.append(f"a = {_vec(config.a)}")
        out.append(f"b = {_vec(config.b)}")

    out += [
        "",
        "[grid]",
        f"dx = {_num(config.dx)}",
        f"nx = {config.nx}",
        f"x_left = {_num(config.x_left)}",
        "",
        "[init]",
        f"kind = {config.init_kind}",
    ]
    if config.init_kind == "front_step":
        out.append(f"level = {_vec(config.level)}")
        out.append(f"interface = {_num(config.interface)}")
    elif config.init_kind == "compact_bump":
        out.append(f"center = {_num(config.center)}")
        out.append(f"height = {_vec(config.height)}")
    else:
        out.append("bands = " + " ; ".join(_vec(band) for band in config.bands))
    out.append(f"width = {_num(config.width)}")

    out += ["", "[time]", f"T = {_num(config.T)}", f"snapshot_every = {_num(config.snapshot_every)}"]
    if config.u_cap is not None:
        out.append(f"u_cap = {_num(config.u_cap)}")
    out.append(f"method = {config.method}")

    out += ["", "[window]", f"policy = {config.window_policy}"]
    if config.window_policy == "follow_front":
        out.append(f"component = {config.window_component}")
        out.append(f"level = {_num(config.window_level)}")
        out.append(f"margin = {_num(config.window_margin)}")

    out += [
        "",
        "[diagnostics]",
        f"front_component = {config.front_component}",
        f"front_level = {_num(config.front_level)}",
        f"edge_lo = {_num(config.edge_lo)}",
        f"edge_hi = {_num(config.edge_hi)}",
        f"back_fraction = {_num(config.back_fraction)}",
        f"speed_fit_fraction = {_num(config.speed_fit_fraction)}",
        "",
        "[output]",
        f"dir = {config.outdir}",
    ]
    return "\n".join(out) + "\n"


def config_from_scenario(s: Scenario, outdir: str | None = None) -> RunConfig:
    """RunConfig equivalent of a scenario (normalized parameters)."""
    spec = s.spec
    kw = {"d": tuple(spec.d)}
    if spec.mutation is not None:
        mut = spec.mutation
        kw.update(r=tuple(mut.r), eta=float(mut.eta), m=tuple(mut.m))
    else:
        kw.update(L=tuple(spec.L.reshape(-1)))
    if isinstance(spec.law, LotkaVolterra):
        kw.update(law="lotka_volterra", C=tuple(spec.law.C.reshape(-1)))
    else:
        kw.update(law="separated", a=tuple(spec.law.a), b=tuple(spec.law.b))

    init = s.init
    if isinstance(init, pde.FrontStep):
        kw.update(
            init_kind="front_step",
            level=tuple(np.atleast_1d(init.level)),
            interface=float(init.interface),
            width=float(init.width),
        )
    elif isinstance(init, pde.CompactBump):
        kw.update(
            init_kind="compact_bump",
            center=float(init.center),
            height=tuple(np.atleast_1d(init.height)),
            width=float(init.width),
        )
    else:
        kw.update(
            init_kind="terrace",
            bands=tuple(
                (float(lo), float(hi)) + tuple(float(v) for v in np.atleast_1d(lv))
                for lo, hi, lv in init.bands
            ),
            width=float(init.width),
        )

    if isinstance(s.window, pde.FollowFront):
        kw.update(
            window_policy="follow_front",
            window_component=str(s.window.component),
            window_level=float(s.window.level),
            window_margin=float(s.window.margin),
        )
    kw.update(
        dx=s.grid.dx,
        nx=s.grid.nx,
        x_left=s.grid.x_left,
        T=s.T,
        snapshot_every=s.snapshot_every,
        u_cap=s.u_cap,
        method=s.method,
        front_component=str(s.front_component),
        front_level=s.front_level,
        edge_lo=s.edge_thresholds[0],
        edge_hi=s.edge_thresholds[1],
        back_fraction=s.back_fraction,
        speed_fit_fraction=s.speed_fit_window,
        outdir=outdir if outdir is not None else f"runs/{s.name}",
    )
    return RunConfig(**kw)
