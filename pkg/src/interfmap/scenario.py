"""Scenario files: JSON documents describing a network or a synthetic mapping.

A network file carries the load-model data::

    {"num_bs": 2, "num_users": 2, "assignment": [0, 1],
     "pathloss": {"units": "db", "values": [[-60, -70], [-70, -60]]},
     "demands_bps": [1e6, 1e6], "resource_blocks": 50, "bandwidth_hz": 180e3,
     "noise_psd_dbm_hz": -154, "power_w": [1, 1]}

Synthetic files instead set ``"kind"`` to ``"affine"`` (``matrix``,
``offset``) or ``"two_user"`` (``alpha``). ``builtin:NAME`` refers to a
fixture shipped with the package.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

from .core import InterferenceMapping, affine_mapping
from .families import two_user_concave_mapping
from .loadmodel import NetworkScenario, ScenarioError, db_to_linear, noise_from_psd

BUILTIN_PREFIX = "builtin:"


class ScenarioFileError(ValueError):
    """A scenario file could not be parsed or validated."""


@dataclass
class SyntheticScenario:
    """A mapping given directly rather than through a network."""

    kind: str
    mapping: InterferenceMapping
    params: dict = field(default_factory=dict)


Scenario = Union[NetworkScenario, SyntheticScenario]


def builtin_names() -> list:
    root = resources.files("interfmap") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_text(path) -> tuple:
    path = str(path)
    if path.startswith(BUILTIN_PREFIX):
        name = path[len(BUILTIN_PREFIX):]
        res = resources.files("interfmap") / "fixtures" / f"{name}.json"
        if not res.is_file():
            raise ScenarioFileError(f"unknown builtin scenario {name!r}; available: {', '.join(builtin_names())}")
        return res.read_text(encoding="utf-8"), path
    try:
        return Path(path).read_text(encoding="utf-8"), path
    except OSError as exc:
        raise ScenarioFileError(f"cannot read scenario {path}: {exc.strerror}") from exc


def _parse(text, source):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioFileError(f"{source}: top level must be an object")
    return doc


def _field(doc, name, source, required=True, default=None):
    if name not in doc:
        if required:
            raise ScenarioFileError(f"{source}: missing field {name!r}")
        return default
    return doc[name]


def _array(doc, name, source, shape=None, required=True, dtype=float):
    raw = _field(doc, name, source, required)
    if raw is None:
        return None
    try:
        a = np.asarray(raw, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise ScenarioFileError(f"{source}: field {name!r}: {exc}") from exc
    if dtype is int and not np.array_equal(a, np.asarray(raw, dtype=float)):
        raise ScenarioFileError(f"{source}: field {name!r}: entries must be integers")
    if shape is not None and a.shape != shape:
        raise ScenarioFileError(f"{source}: field {name!r}: expected shape {shape}, got {a.shape}")
    return a


def _network_from_doc(doc, source) -> NetworkScenario:
    M = _field(doc, "num_bs", source)
    N = _field(doc, "num_users", source)
    for name, v in (("num_bs", M), ("num_users", N)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ScenarioFileError(f"{source}: field {name!r}: must be a positive integer")
    pl = _field(doc, "pathloss", source)
    if not isinstance(pl, dict):
        raise ScenarioFileError(f"{source}: field 'pathloss': must be an object with 'units' and 'values'")
    units = pl.get("units")
    if units not in ("db", "linear"):
        raise ScenarioFileError(f"{source}: field 'pathloss.units': must be 'db' or 'linear', got {units!r}")
    values = _array(pl, "values", f"{source}: pathloss", (M, N))
    gains = db_to_linear(values) if units == "db" else values

    bandwidth = float(_field(doc, "bandwidth_hz", source))
    has_w, has_psd = "noise_power_w" in doc, "noise_psd_dbm_hz" in doc
    if has_w == has_psd:
        raise ScenarioFileError(f"{source}: give exactly one of 'noise_power_w' and 'noise_psd_dbm_hz'")
    noise = float(doc["noise_power_w"]) if has_w else noise_from_psd(float(doc["noise_psd_dbm_hz"]), bandwidth)

    if not noise > 0:
        raise ScenarioFileError(f"{source}: noise power must be positive")
    load = _array(doc, "target_load", source, (M,), required=False)
    cap = doc.get("rate_cap_bps")
    try:
        return NetworkScenario(
            gains=gains,
            assignment=_array(doc, "assignment", source, (N,), dtype=int),
            demands=_array(doc, "demands_bps", source, (N,)),
            resource_blocks=_field(doc, "resource_blocks", source),
            bandwidth=bandwidth,
            noise=noise,
            power=_array(doc, "power_w", source, (M,), required=False),
            load=np.ones(M) if load is None else load,
            rate_cap=None if cap is None else float(cap),
        )
    except ScenarioError as exc:
        raise ScenarioFileError(f"{source}: {exc}") from exc


def _synthetic_from_doc(doc, source) -> SyntheticScenario:
    kind = doc["kind"]
    if kind == "affine":
        X = _array(doc, "matrix", source)
        u = _array(doc, "offset", source)
        if X.ndim != 2 or X.shape[0] != X.shape[1] or u.shape != (X.shape[0],):
            raise ScenarioFileError(f"{source}: affine 'matrix' must be square and match 'offset'")
        if np.any(X < 0) or np.any(u <= 0):
            raise ScenarioFileError(f"{source}: affine mapping needs nonnegative 'matrix' and positive 'offset'")
        return SyntheticScenario(kind, affine_mapping(X, u), {"matrix": X.tolist(), "offset": u.tolist()})
    if kind == "two_user":
        alpha = float(_field(doc, "alpha", source))
        if alpha < 0:
            raise ScenarioFileError(f"{source}: field 'alpha': must be nonnegative")
        return SyntheticScenario(kind, two_user_concave_mapping(alpha), {"alpha": alpha})
    raise ScenarioFileError(f"{source}: unknown scenario kind {kind!r}")


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    doc = _parse(text, source)
    if doc.get("kind", "network") != "network":
        return _synthetic_from_doc(doc, source)
    return _network_from_doc(doc, source)


def load_input(path) -> Scenario:
    """Read a network or synthetic scenario from a file or ``builtin:NAME``."""
    text, source = _read_text(path)
    return parse_scenario(text, source)


def load_scenario(path) -> NetworkScenario:
    """Read and validate a network scenario file."""
    s = load_input(path)
    if not isinstance(s, NetworkScenario):
        raise ScenarioFileError(f"{path}: expected a network scenario, got kind {s.kind!r}")
    return s


def scenario_to_dict(s: Scenario) -> dict:
    """JSON-ready representation; :func:`parse_scenario` inverts it exactly."""
    if isinstance(s, SyntheticScenario):
        return {"kind": s.kind, **s.params}
    doc = {
        "kind": "network",
        "num_bs": s.num_bs,
        "num_users": s.num_users,
        "assignment": s.assignment.tolist(),
        "pathloss": {"units": "linear", "values": s.gains.tolist()},
        "demands_bps": s.demands.tolist(),
        "resource_blocks": s.resource_blocks,
        "bandwidth_hz": s.bandwidth,
        "noise_power_w": s.noise,
    }
    if s.power is not None:
        doc["power_w"] = s.power.tolist()
    if s.load is not None:
        doc["target_load"] = s.load.tolist()
    if s.rate_cap is not None:
        doc["rate_cap_bps"] = s.rate_cap
    return doc


def dump_scenario(s: Scenario, path=None) -> str:
    text = json.dumps(scenario_to_dict(s), indent=1, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def scenario_digest(s: Scenario) -> str:
    """Short content hash of the canonical JSON form."""
    canon = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
