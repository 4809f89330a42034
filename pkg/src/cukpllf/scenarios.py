"""Built-in scenarios and JSON configuration loading."""
from __future__ import annotations

import hashlib
import json
import numbers
from dataclasses import dataclass, field, replace
from pathlib import Path

from .controller import PolytopeSpec, coefficients_from_spec
from .converter import ConverterParams, OperatingSpec
from .errors import ConfigError, ParameterError
from .sim import SimConfig

BASE_PARAMS = ConverterParams(L1=1e-3, L2=1e-3, C1=1e-6, C2=20e-6, R=5.0, v_in=10.0)
BASE_OP = OperatingSpec(d=0.5, T_s=10e-6)
STARTUP_DURATION = 5e-3

SIM_KEYS = ("duration", "x0", "max_step", "event_tol", "min_dwell", "sample_stride")


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ConverterParams
    op_spec: OperatingSpec
    J: tuple
    k2_fraction: float
    k4_fraction: float
    sim: SimConfig
    # Raw coefficients replacing the designed ones, keyed by index.
    k_override: dict = field(default_factory=dict)

    def polytope(self) -> PolytopeSpec:
        poly = coefficients_from_spec(
            self.params, self.op_spec, self.J, self.k2_fraction, self.k4_fraction
        )
        if not self.k_override:
            return poly
        k = tuple(self.k_override.get(j, kj) for j, kj in zip(poly.J, poly.k))
        return PolytopeSpec(J=poly.J, k=k, rho=poly.rho)

    def with_duration(self, duration):
        sim = replace(self.sim, duration=duration, max_step=min(self.sim.max_step, duration))
        return replace(self, sim=sim)

    def to_dict(self):
        p, op, s = self.params, self.op_spec, self.sim
        out = {
            "name": self.name,
            "params": {"L1": p.L1, "L2": p.L2, "C1": p.C1, "C2": p.C2, "R": p.R, "v_in": p.v_in},
            "op": {"d": op.d, "T_s": op.T_s},
            "polytope": {
                "J": list(self.J),
                "k2_fraction": self.k2_fraction,
                "k4_fraction": self.k4_fraction,
            },
            "sim": {key: (list(getattr(s, key)) if key == "x0" else getattr(s, key)) for key in SIM_KEYS},
        }
        if self.k_override:
            out["polytope"]["k"] = {str(j): v for j, v in sorted(self.k_override.items())}
        return out


def _preset(name, J, k2_fraction, k4_fraction=0.0):
    return Scenario(
        name=name,
        params=BASE_PARAMS,
        op_spec=BASE_OP,
        J=J,
        k2_fraction=k2_fraction,
        k4_fraction=k4_fraction,
        sim=SimConfig.defaults(BASE_OP.T_s, duration=STARTUP_DURATION),
    )


PRESETS = {
    "fig2": _preset("fig2", (1, 2), -0.5),
    "fig3": _preset("fig3", (1, 2), 0.5),
    "fig4": _preset("fig4", (1, 2, 3), -0.5),
    "fig5": _preset("fig5", (1, 2, 3, 4), -0.75, -1.0 / 800.0),
}

PRESET_DESCRIPTIONS = {
    "fig2": "controlled i_L1, i_L2 with k2 < 0",
    "fig3": "controlled i_L1, i_L2 with k2 > 0",
    "fig4": "controlled i_L1, i_L2, v_C1",
    "fig5": "controlled i_L1, i_L2, v_C1, v_C2",
}


def preset_digest(scenario):
    blob = json.dumps(scenario.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _section(data, name):
    if name not in data:
        raise ConfigError(name, "missing section")
    section = data[name]
    if not isinstance(section, dict):
        raise ConfigError(name, "must be a JSON object")
    return section


def _number(section, prefix, key, default=None):
    if key not in section:
        if default is not None:
            return default
        raise ConfigError(f"{prefix}.{key}", "missing key")
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigError(f"{prefix}.{key}", f"expected a number, got {value!r}")
    return float(value)


def _build(prefix, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ParameterError as err:
        raise ConfigError(f"{prefix}.{err.field}", str(err)) from err


def scenario_from_dict(data, name="config"):
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    name = str(data.get("name", name))

    params_s = _section(data, "params")
    params = _build(
        "params",
        ConverterParams,
        **{key: _number(params_s, "params", key) for key in ("L1", "L2", "C1", "C2", "R", "v_in")},
    )
    op_s = _section(data, "op")
    op = _build("op", OperatingSpec, d=_number(op_s, "op", "d"), T_s=_number(op_s, "op", "T_s"))

    poly_s = _section(data, "polytope")
    if "J" not in poly_s:
        raise ConfigError("polytope.J", "missing key")
    J = poly_s["J"]
    if not isinstance(J, list) or not all(isinstance(j, int) and not isinstance(j, bool) for j in J):
        raise ConfigError("polytope.J", f"expected a list of integers, got {J!r}")
    k2 = _number(poly_s, "polytope", "k2_fraction", 0.0)
    k4 = _number(poly_s, "polytope", "k4_fraction", 0.0)
    override = {}
    if "k" in poly_s:
        raw = poly_s["k"]
        if not isinstance(raw, dict):
            raise ConfigError("polytope.k", "expected an object mapping index to coefficient")
        for key in raw:
            if key not in ("1", "2", "3", "4"):
                raise ConfigError(f"polytope.k.{key}", "index must be one of 1..4")
            override[int(key)] = _number(raw, "polytope.k", key)

    sim_s = data.get("sim", {})
    if not isinstance(sim_s, dict):
        raise ConfigError("sim", "must be a JSON object")
    unknown = set(sim_s) - set(SIM_KEYS)
    if unknown:
        raise ConfigError(f"sim.{sorted(unknown)[0]}", "unknown key")
    overrides = {key: _number(sim_s, "sim", key) for key in SIM_KEYS if key in sim_s and key != "x0"}
    if "x0" in sim_s:
        x0 = sim_s["x0"]
        if (
            not isinstance(x0, list)
            or len(x0) != 4
            or not all(isinstance(v, numbers.Real) and not isinstance(v, bool) for v in x0)
        ):
            raise ConfigError("sim.x0", f"expected a list of 4 numbers, got {x0!r}")
        overrides["x0"] = tuple(float(v) for v in x0)
    duration = overrides.pop("duration", STARTUP_DURATION)
    sim = _build("sim", SimConfig.defaults, T_s=op.T_s, duration=duration, **overrides)

    scenario = Scenario(name, params, op, tuple(J), k2, k4, sim, override)
    _build("polytope", scenario.polytope)
    return scenario


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(str(path), f"cannot read file: {err.strerror}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(str(path), f"invalid JSON: {err}") from err
    return scenario_from_dict(data, name=path.stem)


def resolve(ref) -> Scenario:
    """A preset name or a path to a JSON configuration."""
    if ref in PRESETS:
        return PRESETS[ref]
    return load_config(ref)
