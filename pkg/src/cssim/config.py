"""Sectioned key = value run configuration: parsing, printing and validation."""
from __future__ import annotations

from . import geometry as geo
from .model import ModelParams
from .solver import DataConfig, GridConfig, HypConfig, OutputConfig, RunConfig, TimeConfig

MODELS = ("csh_abelian", "csh_adjoint_su2", "csh_adjoint_su3", "csd_abelian")
SECTIONS = ("model", "params", "data", "grid", "time", "hyperboloid", "output", "seed")

# (section, key) -> parser; the required subset is checked separately
_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}
KEYS = {
    ("model", "model"): str,
    ("params", "kappa"): float,
    ("params", "v"): float,
    ("params", "m"): float,
    ("params", "coupled"): "bool",
    ("data", "epsilon"): float,
    ("data", "radius_R"): float,
    ("data", "profile"): str,
    ("data", "omega"): float,
    ("grid", "n"): int,
    ("grid", "half_width"): float,
    ("grid", "margin_cells"): int,
    ("time", "t_end"): float,
    ("time", "cfl_safety"): float,
    ("time", "diag_every"): int,
    ("time", "escape_tol"): float,
    ("hyperboloid", "taus"): "floats",
    ("hyperboloid", "n_y"): int,
    ("hyperboloid", "n_theta"): int,
    ("hyperboloid", "stride"): int,
    ("output", "out_dir"): str,
    ("output", "dump_state"): "bool",
    ("seed", "rng"): int,
}
REQUIRED = [("model", "model"), ("params", "kappa"), ("data", "epsilon"), ("data", "radius_R"),
            ("grid", "n"), ("grid", "half_width"), ("time", "t_end")]


class ConfigError(ValueError):
    pass


def _convert(kind, raw: str, where: str):
    try:
        if kind == "bool":
            return _BOOL[raw.lower()]
        if kind == "floats":
            return tuple(float(x) for x in raw.replace(",", " ").split())
        return kind(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values: dict = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        where = f"{source}:{lineno}"
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"{where}: malformed section header {s!r}")
            section = s[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"{where}: unknown section [{section}]")
            continue
        if "=" not in s:
            raise ConfigError(f"{where}: expected key = value")
        if section is None:
            raise ConfigError(f"{where}: key outside any section")
        key, raw = (x.strip() for x in s.split("=", 1))
        kind = KEYS.get((section, key))
        if kind is None:
            raise ConfigError(f"{where}: unknown key {key!r} in [{section}]")
        if (section, key) in values:
            raise ConfigError(f"{where}: duplicate key {key!r} in [{section}]")
        values[(section, key)] = _convert(kind, raw, where)
    missing = [f"[{s}] {k}" for s, k in REQUIRED if (s, k) not in values]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")
    return _build(values, source)


def _build(v: dict, source: str) -> RunConfig:
    model = v[("model", "model")]
    if model not in MODELS:
        raise ConfigError(f"{source}: unknown model {model!r} (expected one of {', '.join(MODELS)})")
    mass_key = "m" if model.startswith("csd") else "v"
    other = "v" if mass_key == "m" else "m"
    if ("params", mass_key) not in v:
        raise ConfigError(f"{source}: missing required keys: [params] {mass_key}")
    if ("params", other) in v:
        raise ConfigError(f"{source}: [params] {other} does not apply to {model}")
    d, g, t, hy, o = DataConfig(), GridConfig(), TimeConfig(), HypConfig(), OutputConfig()
    get = lambda sec, key, default: v.get((sec, key), default)
    try:
        params = ModelParams(model, v[("params", "kappa")], v[("params", mass_key)], get("params", "coupled", True))
    except ValueError as e:
        raise ConfigError(f"{source}: {e}") from None
    cfg = RunConfig(
        model=model,
        params=params,
        data=DataConfig(get("data", "epsilon", d.epsilon), get("data", "radius_R", d.radius_R),
                        get("data", "profile", d.profile), get("data", "omega", d.omega)),
        grid=GridConfig(get("grid", "n", g.n), get("grid", "half_width", g.half_width)),
        time=TimeConfig(get("time", "t_end", t.t_end), get("time", "cfl_safety", t.cfl_safety),
                        get("time", "diag_every", t.diag_every)),
        hyperboloid=HypConfig(get("hyperboloid", "taus", hy.taus), get("hyperboloid", "n_y", hy.n_y),
                              get("hyperboloid", "n_theta", hy.n_theta), get("hyperboloid", "stride", hy.stride)),
        output=OutputConfig(get("output", "out_dir", o.out_dir), get("output", "dump_state", o.dump_state)),
        seed=get("seed", "rng", 0),
        margin_cells=get("grid", "margin_cells", RunConfig.margin_cells),
        escape_tol=get("time", "escape_tol", RunConfig.escape_tol),
    )
    return validate(cfg, source)


def validate(cfg: RunConfig, source: str = "<config>") -> RunConfig:
    try:
        cfg.validate()
    except ValueError as e:
        raise ConfigError(f"{source}: {e}") from None
    if cfg.data.profile not in ("bump", "charged"):
        raise ConfigError(f"{source}: profile must be 'bump' or 'charged'")
    R = cfg.data.radius_R
    for tau in cfg.hyperboloid.taus:
        if tau <= R:
            raise ConfigError(f"{source}: hyperboloid tau={tau} must exceed radius_R={R}")
        t_last = geo.hyperboloid_t_max(tau, R) - 2 * R
        if t_last > cfg.time.t_end:
            raise ConfigError(f"{source}: hyperboloid tau={tau} needs t_end >= {t_last:.6g}")
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), str(path))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, tuple):
        return ", ".join(repr(float(y)) for y in x)
    return str(x)


def format_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config_text(format_config(c)) == c."""
    p = cfg.params
    mass_key = "m" if p.dirac else "v"
    sections = [
        ("model", [("model", cfg.model)]),
        ("params", [("kappa", p.kappa), (mass_key, p.v_or_m), ("coupled", p.coupled)]),
        ("data", [("epsilon", cfg.data.epsilon), ("radius_R", cfg.data.radius_R),
                  ("profile", cfg.data.profile), ("omega", cfg.data.omega)]),
        ("grid", [("n", cfg.grid.n), ("half_width", cfg.grid.half_width), ("margin_cells", cfg.margin_cells)]),
        ("time", [("t_end", cfg.time.t_end), ("cfl_safety", cfg.time.cfl_safety),
                  ("diag_every", cfg.time.diag_every), ("escape_tol", cfg.escape_tol)]),
        ("hyperboloid", [("taus", tuple(cfg.hyperboloid.taus)), ("n_y", cfg.hyperboloid.n_y),
                         ("n_theta", cfg.hyperboloid.n_theta), ("stride", cfg.hyperboloid.stride)]),
        ("output", [("out_dir", cfg.output.out_dir), ("dump_state", cfg.output.dump_state)]),
        ("seed", [("rng", cfg.seed)]),
    ]
    lines = []
    for name, items in sections:
        lines.append(f"[{name}]")
        for k, val in items:
            if k == "taus" and not val:
                continue
            lines.append(f"{k} = {_fmt(val)}")
        lines.append("")
    return "\n".join(lines)
