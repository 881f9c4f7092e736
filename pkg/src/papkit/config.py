"""Run-configuration parsing with strict schema validation.

Every block is checked against its allowed key set before any computation;
unknown keys are rejected with the offending path in the message.
"""

import json

from .convolution import Kernel
from .errors import ConfigError
from .evolution import EvolutionProblem
from .limits import Schedule
from .signals import PAPFunction
from .weights import Weight

_WEIGHT_KEYS = {
    "constant": {"kind", "c"},
    "power": {"kind", "N", "scale"},
    "polynomial": {"kind", "coeffs"},
    "exp_abs": {"kind", "c"},
    "tabulated": {"kind", "grid", "values"},
}
_KERNEL_KEYS = {
    "two_sided_exp": {"kind", "c", "a"},
    "gaussian": {"kind", "c"},
    "compact": {"kind", "grid", "values"},
}
_ERGODIC_KEYS = {
    "bump": {"kind", "dim", "amp", "center", "radius", "height"},
    "rational": {"kind", "dim", "amp", "c", "p"},
    "gaussian": {"kind", "dim", "amp", "c"},
    "tabulated": {"kind", "dim", "amp", "grid", "values"},
    "zero": {"kind", "dim", "amp"},
}
_SCHEDULE_KEYS = {"t0", "doublings", "rtol", "atol", "window"}


def _check_keys(spec, allowed, path):
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _kinded(spec, table, path):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{path}: expected an object with a 'kind'")
    kind = spec["kind"]
    if kind not in table:
        raise ConfigError(f"{path}: unknown kind {kind!r}")
    _check_keys(spec, table[kind], path)


def parse_weight(spec, path="weight"):
    _kinded(spec, _WEIGHT_KEYS, path)
    try:
        return Weight.from_json(spec)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_kernel(spec, path="kernel"):
    _kinded(spec, _KERNEL_KEYS, path)
    try:
        return Kernel.from_json(spec)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_signal(spec, path="signal"):
    _check_keys(spec, {"dim", "trig", "ergodic"}, path)
    trig = spec.get("trig", {})
    _check_keys(trig, {"dim", "terms"}, f"{path}.trig")
    for i, term in enumerate(trig.get("terms", [])):
        _check_keys(term, {"freq", "amp"}, f"{path}.trig.terms[{i}]")
    erg = spec.get("ergodic")
    if erg is not None:
        _kinded(erg, _ERGODIC_KEYS, f"{path}.ergodic")
    try:
        return PAPFunction.from_json(spec)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_schedule(spec, path="schedule", default=None):
    if spec is None:
        return default or Schedule()
    _check_keys(spec, _SCHEDULE_KEYS, path)
    try:
        return Schedule(**{k: spec[k] for k in spec})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_problem(spec, path="problem"):
    _check_keys(spec, {"stable", "unstable", "dichotomy", "forcing"}, path)
    for blk in ("stable", "unstable"):
        b = spec.get(blk)
        if b is not None:
            _check_keys(b, {"dim", "terms"}, f"{path}.{blk}")
            for i, term in enumerate(b.get("terms", [])):
                _check_keys(term, {"freq", "matrix"}, f"{path}.{blk}.terms[{i}]")
    dich = spec.get("dichotomy", {})
    _check_keys(dich, {"N", "delta"}, f"{path}.dichotomy")
    forcing = spec.get("forcing")
    if forcing is None:
        raise ConfigError(f"{path}: forcing block required")
    _check_keys(forcing, {"signal", "coupling", "nonlinearity"}, f"{path}.forcing")
    parse_signal(forcing["signal"], f"{path}.forcing.signal")
    try:
        return EvolutionProblem.from_json(spec)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
