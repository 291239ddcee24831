"""``key = value`` configuration files with a fixed schema.

Sections and keys (unknown sections or keys are errors)::

    [dataset]  path | generator (sbm, er, regular), blocks, intra_p, inter_p,
               n, p, d, features, seed, train_fraction, split_seed
    [model]    loss (mse, ce), h, kappa, activation_scale
    [train]    eta (float or "theoretical"), max_iters, target_loss, eval_every,
               loss_every, clock (model, wall), compute, bandwidth,
               normalization (sampled, full), nested
    [sweep]    b, beta, eta, seeds        (comma-separated lists)
    [metrics]  loss_target, acc_target    ("derived" or a number), window

List values are comma separated. ``GNNLAB_SEED`` in the environment replaces
every seed list with that single seed.
"""

import configparser
import os

from gnnlab.errors import InputError

SCHEMA = {
    "dataset": {
        "path": str, "generator": str, "blocks": "intlist", "intra_p": float, "inter_p": float,
        "n": int, "p": float, "d": int, "features": int, "seed": int,
        "train_fraction": float, "split_seed": int,
    },
    "model": {"loss": str, "h": int, "kappa": float, "activation_scale": float},
    "train": {
        "eta": "eta", "max_iters": int, "target_loss": float, "eval_every": int,
        "loss_every": int, "clock": str, "compute": float, "bandwidth": float,
        "normalization": str, "nested": "bool",
    },
    "sweep": {"b": "intlist", "beta": "intlist", "eta": "etalist", "seeds": "intlist"},
    "metrics": {"loss_target": "target", "acc_target": "target", "window": int},
}

DEFAULTS = {
    "dataset": {"features": 16, "seed": 0, "train_fraction": 0.8, "split_seed": 0},
    "model": {"loss": "mse", "kappa": 0.1, "activation_scale": 1.0},
    "train": {"eta": "theoretical", "max_iters": 1000, "eval_every": 10, "loss_every": 1,
              "clock": "model", "compute": 1e6, "bandwidth": 1e6,
              "normalization": "sampled", "nested": True},
    "sweep": {"seeds": [0]},
    "metrics": {"loss_target": "derived", "acc_target": "derived", "window": 100},
}

SEED_ENV = "GNNLAB_SEED"


def _convert(kind, raw, where):
    raw = raw.strip()
    try:
        if kind is str:
            return raw
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if kind == "eta":
            return raw if raw == "theoretical" else float(raw)
        if kind == "target":
            return raw if raw == "derived" else float(raw)
        if kind == "intlist":
            return [int(x) for x in raw.split(",") if x.strip()]
        if kind == "etalist":
            return [x.strip() if x.strip() == "theoretical" else float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{where}: cannot parse {raw!r}") from None
    raise AssertionError(kind)


def parse_config(text, source="<config>"):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise InputError(f"{source}: {exc}") from None
    out = {section: dict(values) for section, values in DEFAULTS.items()}
    for section in parser.sections():
        if section not in SCHEMA:
            raise InputError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise InputError(f"{source}: unknown key '{key}' in [{section}]")
            out[section][key] = _convert(SCHEMA[section][key], raw, f"{source} [{section}] {key}")
    _validate(out, source)
    return out


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def _validate(cfg, source):
    ds = cfg["dataset"]
    if "path" in ds and "generator" in ds:
        raise InputError(f"{source}: [dataset] takes either path or generator, not both")
    if "generator" in ds and ds["generator"] not in ("sbm", "er", "regular"):
        raise InputError(f"{source}: unknown generator {ds['generator']!r}")
    if cfg["model"]["loss"] not in ("mse", "ce"):
        raise InputError(f"{source}: loss must be mse or ce")
    if cfg["train"]["clock"] not in ("model", "wall"):
        raise InputError(f"{source}: clock must be model or wall")
    if cfg["train"]["normalization"] not in ("sampled", "full"):
        raise InputError(f"{source}: normalization must be sampled or full")
    for key in ("b", "beta", "eta", "seeds"):
        if key in cfg["sweep"] and not cfg["sweep"][key]:
            raise InputError(f"{source}: [sweep] {key} is empty")


def apply_seed_override(cfg, environ=None):
    """Replace every seed with GNNLAB_SEED when it is set."""
    environ = os.environ if environ is None else environ
    raw = environ.get(SEED_ENV)
    if raw is None or raw == "":
        return cfg
    try:
        seed = int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}") from None
    cfg = {section: dict(values) for section, values in cfg.items()}
    cfg["sweep"]["seeds"] = [seed]
    return cfg


def dump_config(cfg):
    """Canonical text form (sorted keys) that parse_config reads back."""
    lines = []
    for section in SCHEMA:
        lines.append(f"[{section}]")
        for key in sorted(cfg.get(section, {})):
            value = cfg[section][key]
            if isinstance(value, list):
                value = ", ".join(str(v) if not isinstance(v, float) else repr(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)
