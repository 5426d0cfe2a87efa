"""Run configuration files, presets and serialization.

Files are plain text with one ``key = value`` per line.  Keys carry a
dotted section prefix (``run.``, ``grid.``, ``sgs.``); ``#`` starts a
comment.  Numeric values may use ``pi`` and the operators ``+ - * /``,
so ``grid.Lx = 4*pi`` is accepted.
"""

import ast
from dataclasses import asdict, replace
import hashlib
import json
import math
import operator

from .errors import ConfigurationError
from .filters import FilterParams
from .grid import GridConfig
from .sgs import MODELS, SgsConfig
from .solver import RunConfig


def _parse_number(text):
    """Evaluate a numeric literal or a small arithmetic expression in ``pi``."""
    ops = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name) and node.id in ("pi", "inf"):
            return math.pi if node.id == "pi" else math.inf
        if isinstance(node, ast.BinOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.operand))
        raise ValueError(text)

    try:
        return ev(ast.parse(text.strip(), mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError):
        raise ValueError(f"not a number: {text!r}") from None


def _to_float(text):
    return float(_parse_number(text))


def _to_int(text):
    value = _parse_number(text)
    if isinstance(value, float) and not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _to_optional_float(text):
    if text.strip().lower() in ("none", "off"):
        return None
    return _to_float(text)


def _to_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _to_model(text):
    t = text.strip().lower()
    if t not in MODELS:
        raise ValueError(f"unknown model {text!r}; expected one of {MODELS}")
    return t


# key -> (parser, type name)
KEYS = {
    "run.dt": (_to_float, "float"),
    "run.n_steps": (_to_int, "int"),
    "run.transient_steps": (_to_int, "int"),
    "run.checkpoint_every": (_to_int, "int"),
    "run.u_m": (_to_optional_float, "float or none"),
    "run.re": (_to_float, "float"),
    "run.stabilizer_alpha": (_to_float, "float"),
    "run.seed": (_to_int, "int"),
    "run.perturbation": (_to_float, "float"),
    "run.dealias": (_to_bool, "bool"),
    "grid.Lx": (_to_float, "float"),
    "grid.Lz": (_to_float, "float"),
    "grid.Nx": (_to_int, "int"),
    "grid.Ny": (_to_int, "int"),
    "grid.Nz": (_to_int, "int"),
    "grid.stretch_beta": (_to_float, "float"),
    "sgs.model": (_to_model, "model name"),
    "sgs.cs": (_to_float, "float"),
    "sgs.gamma": (_to_float, "float"),
}
REQUIRED = ("run.dt",)

PRESETS = {
    "re180": {
        "grid.Lx": 4.0 * math.pi, "grid.Lz": 4.0 * math.pi / 3.0,
        "grid.Nx": 36, "grid.Ny": 37, "grid.Nz": 36,
        "run.u_m": 15.63, "run.dt": 2e-4, "run.re": 180.0,
        # 15 + 5 flow-through times H/u_tau with u_tau = 1 in these units
        "run.transient_steps": 75000, "run.n_steps": 25000,
        "run.perturbation": 0.1, "run.stabilizer_alpha": 0.02, "run.checkpoint_every": 5000,
    },
    "re395": {
        "grid.Lx": 2.0 * math.pi, "grid.Lz": math.pi,
        "grid.Nx": 72, "grid.Ny": 55, "grid.Nz": 54,
        "run.u_m": 17.54, "run.dt": 2.5e-4, "run.re": 395.0,
        "run.transient_steps": 60000, "run.n_steps": 20000,
        "run.perturbation": 0.1, "run.stabilizer_alpha": 0.02, "run.checkpoint_every": 4000,
    },
}


def _unknown(key):
    return ConfigurationError(key, "unknown key; valid keys are " + ", ".join(sorted(KEYS)))


def parse_value(key, text, line=None):
    """Convert the text of one entry, citing ``line`` in any error."""
    if key not in KEYS:
        raise _unknown(key)
    parser, kind = KEYS[key]
    try:
        return parser(text)
    except ValueError as exc:
        where = f"line {line}: " if line is not None else ""
        raise ConfigurationError(key, f"{where}expected {kind}, got {text.strip()!r} ({exc})") from None


def read_config_file(path):
    """Parse a ``key = value`` file into a dict of typed values."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
            key, text = (s.strip() for s in line.split("=", 1))
            values[key] = parse_value(key, text, lineno)
    return values


def config_from_values(values):
    """Build a :class:`RunConfig` from a flat dotted-key dict."""
    for key in values:
        if key not in KEYS:
            raise _unknown(key)
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigurationError(missing[0], "required but not set in the file, preset or flags")
    section = {p: {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith(p + ".")}
               for p in ("run", "grid", "sgs")}
    grid = GridConfig(**section["grid"])
    sgs_vals = dict(section["sgs"])
    gamma = sgs_vals.pop("gamma", FilterParams().gamma)
    sgs = SgsConfig(filter=FilterParams(gamma=gamma), **sgs_vals)
    return RunConfig(grid=grid, sgs=sgs, **section["run"])


def parse_config(path=None, overrides=None, preset=None):
    """Resolve a run configuration.

    Precedence, lowest first: preset, file, ``overrides`` (CLI flags).
    ``overrides`` maps dotted keys to typed values or strings.
    """
    values = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigurationError("preset", f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    if path is not None:
        values.update(read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        values[key] = parse_value(key, value) if isinstance(value, str) else value
    return config_from_values(values)


def config_to_values(config):
    """Flat dotted-key dict of every setting in ``config``."""
    out = {f"run.{k}": getattr(config, k) for k in
           ("dt", "n_steps", "transient_steps", "checkpoint_every", "u_m", "re",
            "stabilizer_alpha", "seed", "perturbation", "dealias")}
    out.update({f"grid.{k}": v for k, v in asdict(config.grid).items()})
    out["sgs.model"] = config.sgs.model
    out["sgs.cs"] = config.sgs.cs
    out["sgs.gamma"] = config.sgs.filter.gamma
    return out


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    return repr(value)


def format_config(config):
    """Text in the input file format; reading it back gives an equal config."""
    return "".join(f"{k} = {_format(v)}\n" for k, v in sorted(config_to_values(config).items()))


def config_to_json(config):
    vals = config_to_values(config)
    # json cannot carry inf
    return {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in vals.items()}


def config_from_json(data):
    vals = {k: (_to_float(v) if isinstance(v, str) and k not in ("sgs.model",) else v)
            for k, v in data.items()}
    return config_from_values(vals)


def config_digest(config):
    """SHA-256 of the canonical JSON form of ``config``."""
    text = json.dumps(config_to_json(config), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def with_steps(config, n_steps=None, transient_steps=None):
    kw = {}
    if n_steps is not None:
        kw["n_steps"] = n_steps
    if transient_steps is not None:
        kw["transient_steps"] = transient_steps
    return replace(config, **kw)
