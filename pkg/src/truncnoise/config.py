"""Strict loader for optimization run files (JSON)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InvalidArgument, SchemaError
from .learner import TrainConfig
from .model import UtilitySchedule

NUMBER = (int, float)

# key -> (accepted types, TrainConfig field or None)
TOP_LEVEL = {
    "half_width": (NUMBER, "half_width"),
    "half_points": ((int,), "half_points"),
    "bias": (NUMBER, "bias"),
    "k": ((int,), "k"),
    "slope": (NUMBER, "slope"),
    "accountant": ((str,), "accountant"),
    "utility_order": ((int,), "utility_order"),
    "eps": (NUMBER, "eps"),
    "n": ((int,), "n"),
    "epochs": ((int,), "epochs"),
    "lr": (NUMBER, "lr"),
    "lr_decay": (NUMBER, "lr_decay"),
    "h": ((int,), "h"),
    "f": (NUMBER, "f"),
    "seed": ((int,), "seed"),
    "direction": ((str,), "direction"),
    "grad_mode": ((str,), "grad_mode"),
    "lam_sq_init": (NUMBER, "lam_sq_init"),
    "utility_weight": ((dict,), None),
    "scenario": ((dict,), None),
    "output_dir": ((str,), None),
    "report": ((dict,), None),
}
WEIGHT_KEYS = {"start": NUMBER, "half_life": NUMBER, "min": NUMBER, "decay": (bool,)}
REPORT_KEYS = {"eps_list": (list,), "n_list": (list,), "accountants": (list,)}


@dataclass
class ReportOptions:
    eps_list: list = field(default_factory=lambda: [round(0.1 * i, 10) for i in range(0, 11)])
    n_list: list | None = None  # defaults to the trained n
    accountants: list = field(default_factory=lambda: ["adp", "pdp"])


@dataclass
class RunConfig:
    train: TrainConfig
    output_dir: str
    report: ReportOptions


def _typed(where, value, types):
    # bool is an int subclass; never accept it where a number is expected
    if isinstance(value, bool) and bool not in types:
        raise SchemaError(where, f"expected {'/'.join(t.__name__ for t in types)}, got bool")
    if not isinstance(value, types):
        raise SchemaError(where, f"expected {'/'.join(t.__name__ for t in types)}, got {type(value).__name__}")
    return value


def _strict(where, obj, allowed):
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise SchemaError(f"{where}{unknown[0]}", "unknown key")
    for key, value in obj.items():
        _typed(f"{where}{key}", value, allowed[key])


def _scenario(obj):
    kind = obj.get("kind")
    if kind == "sensitivity":
        _strict("scenario.", obj, {"kind": (str,), "s": NUMBER})
        return {"scenario": "sensitivity", "sensitivity": float(obj.get("s", 1.0))}
    if kind == "dpsgd":
        _strict("scenario.", obj, {"kind": (str,), "q": NUMBER, "C": NUMBER})
        return {"scenario": "dpsgd", "q": float(obj.get("q", 0.1)), "clip": float(obj.get("C", 1.0))}
    raise SchemaError("scenario.kind", f"expected 'sensitivity' or 'dpsgd', got {kind!r}")


def parse_run_config(data) -> RunConfig:
    """Validate a decoded run file. Unknown keys and wrong types raise :class:`SchemaError`;
    values out of range raise :class:`InvalidArgument`."""
    if not isinstance(data, dict):
        raise SchemaError("<root>", "expected an object")
    _strict("", data, {k: v[0] for k, v in TOP_LEVEL.items()})
    kwargs = {TOP_LEVEL[k][1]: v for k, v in data.items() if TOP_LEVEL[k][1] is not None}
    if "scenario" in data:
        kwargs.update(_scenario(data["scenario"]))
    weights = data.get("utility_weight", {})
    _strict("utility_weight.", weights, WEIGHT_KEYS)
    defaults = UtilitySchedule()
    kwargs["schedule"] = UtilitySchedule(float(weights.get("start", defaults.start)),
                                         float(weights.get("half_life", defaults.half_life)),
                                         float(weights.get("min", defaults.floor)),
                                         bool(weights.get("decay", defaults.decay)))
    train = TrainConfig(**kwargs)
    report_in = data.get("report", {})
    _strict("report.", report_in, REPORT_KEYS)
    report = ReportOptions()
    if "eps_list" in report_in:
        report.eps_list = [float(_typed("report.eps_list", e, NUMBER)) for e in report_in["eps_list"]]
    if "n_list" in report_in:
        report.n_list = [int(_typed("report.n_list", v, (int,))) for v in report_in["n_list"]]
    if "accountants" in report_in:
        report.accountants = [str(_typed("report.accountants", v, (str,))) for v in report_in["accountants"]]
        bad = [a for a in report.accountants if a not in ("adp", "pdp", "ma")]
        if bad:
            raise InvalidArgument(f"unknown accountant {bad[0]!r} in report.accountants")
    if report.n_list is None:
        report.n_list = [train.n]
    return RunConfig(train, data.get("output_dir", "."), report)


def load_run_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("<root>", f"invalid JSON: {exc}") from exc
    return parse_run_config(data)
