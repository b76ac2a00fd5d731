"""INI run configurations with a fixed schema per command.

Unknown sections or keys are rejected; values are parsed before any computation.
List values are comma separated. See README for the full schema.
"""

import configparser

from .augment import DeformBounds
from .errors import InvalidInputError
from .fvr import FvrParams
from .regressor import MODES, REPRESENTATIONS, TrainConfig


def _floats(s):
    return [float(x) for x in s.replace(",", " ").split()]


def _ints(s):
    return [int(x) for x in s.replace(",", " ").split()]


def _names(s):
    return [x.strip() for x in s.split(",") if x.strip()]


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


TRAIN_KEYS = {
    "lr": float,
    "halving_period": int,
    "max_epochs": int,
    "batch_size": int,
    "template_points": int,
    "noise": float,
    "n_train": int,
    "n_test": int,
    "hidden": lambda s: tuple(_ints(s)),
    "loss": str.strip,
}

SCHEMAS = {
    "bench-rep": {
        "experiment": {
            "id": str.strip,
            "representations": _names,
            "modes": _names,
            "seeds": _ints,
            "workers": int,
            "symmetric": _bool,
        },
        "train": TRAIN_KEYS,
        "fvr": {"theta_g_deg": float, "theta_r_deg": float, "l_g": float, "l_r": float},
        "output": {"dir": str.strip},
    },
    "grid-search": {
        "grid": {
            "id": str.strip,
            "mode": str.strip,
            "symmetric": _bool,
            "seed": int,
            "l_values": _floats,
            "angles_deg": _floats,
            "workers": int,
        },
        "train": TRAIN_KEYS,
        "output": {"dir": str.strip},
    },
    "augment": {
        "augment": {"count": int, "seed": int, "input_kind": str.strip},
        "pose": {"rotation": _floats, "translation": _floats, "size": _floats},
        "bounds": {"offset_min": float, "offset_max": float, "taper_min": float, "taper_max": float},
        "boxes": {"gt": _ints, "aug": _ints},
    },
}


def load_config(path, command):
    """Parse ``path`` against the schema of ``command`` into nested dicts."""
    schema = SCHEMAS[command]
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        with open(path) as f:
            cp.read_file(f)
    except (OSError, configparser.Error) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None
    out = {}
    for section in cp.sections():
        if section not in schema:
            raise InvalidInputError(f"unknown section [{section}]")
        out[section] = {}
        for key, raw in cp.items(section):
            if key not in schema[section]:
                raise InvalidInputError(f"unknown key {key!r} in [{section}]")
            try:
                out[section][key] = schema[section][key](raw)
            except ValueError as exc:
                raise InvalidInputError(f"bad value for {section}.{key}: {exc}") from None
    return out


def train_config(cfg, seed):
    try:
        return TrainConfig(seed=seed, **cfg.get("train", {}))
    except TypeError as exc:
        raise InvalidInputError(str(exc)) from None


def fvr_params(cfg):
    f = cfg.get("fvr", {})
    return FvrParams.from_degrees(f.get("theta_g_deg", 0.0), f.get("theta_r_deg", 0.0),
                                  f.get("l_g", 1.0), f.get("l_r", f.get("l_g", 1.0)))


def bench_settings(cfg):
    exp = cfg.get("experiment", {})
    reps = exp.get("representations", list(REPRESENTATIONS))
    modes = exp.get("modes", ["whole"])
    for r in reps:
        if r not in REPRESENTATIONS:
            raise InvalidInputError(f"unknown representation {r!r}")
    for m in modes:
        if m not in MODES:
            raise InvalidInputError(f"unknown mode {m!r}")
    seeds = exp.get("seeds", [0])
    if not reps or not modes or not seeds:
        raise InvalidInputError("representations, modes and seeds must be non-empty")
    train_config(cfg, seeds[0])
    fvr_params(cfg)
    return exp.get("id", "bench"), reps, modes, seeds, max(1, exp.get("workers", 1)), exp.get("symmetric", False)


def deform_bounds(cfg, half_extents):
    b = DeformBounds(**cfg.get("bounds", {}))
    b.validate(half_extents)
    return b
