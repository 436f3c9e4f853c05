#!/usr/bin/env python3
"""
Scenario configuration: schema validation, defaults and overrides.

A scenario is a JSON document. Complex numbers are written as [re, im]
pairs. Every default is filled in so the validated config can be echoed
verbatim into output headers.
"""

import copy
import json
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .chain import Loss, Measurement, StepPolicy
from .electron import ElectronSpec, Window, default_window
from .errors import ConfigError, QpinemError
from .fockspace import (
    PhotonState,
    make_coherent,
    make_displaced_fock,
    make_fock,
    make_thermal,
    make_vacuum,
)
from .loader import load_document

INITIAL_KINDS = ("vacuum", "fock", "coherent", "thermal", "displaced_fock")

_INDEX = re.compile(r"^(?P<key>[^\[\]]*)((\[(?P<index>\d+)\])?)$")


def parse_complex(value: Any, path: str) -> complex:
    """Read a complex number from [re, im] or a plain real number."""
    if isinstance(value, bool):
        raise ConfigError("expected a number or [re, im] pair", path)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re_part, im_part = value
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
            return complex(re_part, im_part)
    raise ConfigError(f"expected a number or [re, im] pair, got {value!r}", path)


def complex_pair(value: complex) -> List[float]:
    return [float(value.real), float(value.imag)]


_REQUIRED = object()


def _get_int(
    doc: Dict[str, Any], key: str, path: str, default: Any = _REQUIRED, minimum: Optional[int] = None
) -> Any:
    if key not in doc and default is _REQUIRED:
        raise ConfigError("required field is missing", f"{path}{key}")
    value = doc.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", f"{path}{key}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", f"{path}{key}")
    return value


def _get_float(doc: Dict[str, Any], key: str, path: str, default: Optional[float] = None) -> Optional[float]:
    value = doc.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", f"{path}{key}")
    return float(value)


def _get_dict(doc: Dict[str, Any], key: str, path: str) -> Dict[str, Any]:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"expected an object, got {value!r}", f"{path}{key}")
    return value


@dataclass(frozen=True)
class InitialState:
    """Initial photon state recipe."""

    kind: str = "vacuum"
    n: int = 0
    alpha: complex = 0j
    theta: float = 1.0

    def build(self, n_max: int, allow_truncation: bool = False) -> PhotonState:
        match self.kind:
            case "vacuum":
                return make_vacuum(n_max)
            case "fock":
                return make_fock(self.n, n_max)
            case "coherent":
                return make_coherent(self.alpha, n_max, allow_truncation=allow_truncation)
            case "thermal":
                return make_thermal(self.theta, n_max)
            case "displaced_fock":
                return make_displaced_fock(self.n, self.alpha, n_max, allow_truncation=allow_truncation)
            case _:
                raise ConfigError(f"unknown initial state '{self.kind}'", "initial_state.kind")

    def to_dict(self) -> dict:
        match self.kind:
            case "vacuum":
                return {"kind": "vacuum"}
            case "fock":
                return {"kind": "fock", "n": self.n}
            case "coherent":
                return {"kind": "coherent", "alpha": complex_pair(self.alpha)}
            case "thermal":
                return {"kind": "thermal", "theta": self.theta}
            case _:
                return {"kind": self.kind, "n": self.n, "alpha": complex_pair(self.alpha)}


@dataclass(frozen=True)
class OutputPaths:
    """Where a scenario run writes its files."""

    directory: str = "out"
    trajectory: str = "trajectory.csv"
    snapshot: str = "state_snapshot.csv"

    def to_dict(self) -> dict:
        return {"directory": self.directory, "trajectory": self.trajectory, "snapshot": self.snapshot}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario.

    Attributes:
        n_max: photon truncation index
        electron_window: explicit electron window bounding every step's outcomes, or None
        g_qu: default coupling for every policy without its own
        initial: initial photon state recipe
        policies: step recipes, cycled in order
        n_steps: number of electrons
        seed: base seed; required when any policy samples
        ensemble_size: independent runs seeded seed + run_index
        ensemble_mode: evolve dominant eigenvectors instead of the full matrix
        allow_truncation: skip truncation adequacy checks on the initial state
        outputs: output file locations
        E0_eV: baseline electron energy, metadata only
        omega_rad_s: cavity frequency, metadata only
    """

    n_max: int
    g_qu: complex
    initial: InitialState = field(default_factory=InitialState)
    policies: Tuple[StepPolicy, ...] = (StepPolicy(),)
    n_steps: int = 0
    seed: Optional[int] = None
    electron_window: Optional[Window] = None
    ensemble_size: int = 1
    ensemble_mode: bool = False
    allow_truncation: bool = False
    outputs: OutputPaths = field(default_factory=OutputPaths)
    E0_eV: Optional[float] = None
    omega_rad_s: Optional[float] = None

    @property
    def window(self) -> Window:
        return self.electron_window if self.electron_window is not None else default_window(self.n_max)

    def build_initial(self) -> PhotonState:
        return self.initial.build(self.n_max, self.allow_truncation)

    def to_dict(self) -> dict:
        window = list(self.electron_window) if self.electron_window is not None else None
        return {
            "n_max": self.n_max,
            "electron_window": window,
            "g_qu": complex_pair(self.g_qu),
            "initial_state": self.initial.to_dict(),
            "policies": [policy.to_dict() for policy in self.policies],
            "n_steps": self.n_steps,
            "seed": self.seed,
            "ensemble_size": self.ensemble_size,
            "ensemble_mode": self.ensemble_mode,
            "allow_truncation": self.allow_truncation,
            "outputs": self.outputs.to_dict(),
            "E0_eV": self.E0_eV,
            "omega_rad_s": self.omega_rad_s,
        }


def _parse_initial(doc: Dict[str, Any], n_max: int) -> InitialState:
    path = "initial_state."
    kind = doc.get("kind", "vacuum")
    if kind not in INITIAL_KINDS:
        raise ConfigError(f"expected one of {INITIAL_KINDS}, got {kind!r}", f"{path}kind")

    n = _get_int(doc, "n", path, default=0, minimum=0)
    if n > n_max:
        raise ConfigError(f"Fock index {n} exceeds n_max={n_max}", f"{path}n")
    alpha = parse_complex(doc.get("alpha", 0), f"{path}alpha")
    theta = _get_float(doc, "theta", path, default=1.0)
    if kind == "thermal" and not theta > 0:
        raise ConfigError(f"theta must be positive, got {theta}", f"{path}theta")
    return InitialState(kind=kind, n=n, alpha=alpha, theta=theta)


def _parse_electron(doc: Any, path: str) -> ElectronSpec:
    if not isinstance(doc, dict):
        raise ConfigError(f"expected an object, got {doc!r}", path)
    kind = doc.get("kind", "delta")
    match kind:
        case "delta":
            return ElectronSpec.delta(_get_int(doc, "k0", f"{path}.", default=0))
        case "comb":
            beta = parse_complex(doc.get("beta", 1), f"{path}.beta")
            if abs(abs(beta) - 1.0) > 1e-12:
                raise ConfigError(f"comb phase must satisfy |beta| = 1, got {abs(beta)!r}", f"{path}.beta")
            return ElectronSpec.comb(
                _get_int(doc, "K", f"{path}.", default=0, minimum=0),
                _get_int(doc, "K_prime", f"{path}.", default=0, minimum=0),
                beta,
            )
        case _:
            raise ConfigError(f"expected 'delta' or 'comb', got {kind!r}", f"{path}.kind")


def _parse_policy(doc: Any, index: int, window: Window) -> StepPolicy:
    path = f"policies[{index}]"
    if not isinstance(doc, dict):
        raise ConfigError(f"expected an object, got {doc!r}", path)

    electron = _parse_electron(doc.get("electron", {}), f"{path}.electron")

    measurement_doc = _get_dict(doc, "measurement", f"{path}.")
    kind = measurement_doc.get("kind", "trace_out")
    if kind not in ("trace_out", "postselect", "sample"):
        raise ConfigError(
            f"expected 'trace_out', 'postselect' or 'sample', got {kind!r}", f"{path}.measurement.kind"
        )
    k = None
    if kind == "postselect":
        k = _get_int(measurement_doc, "k", f"{path}.measurement.")
        if not window[0] <= k <= window[1]:
            raise ConfigError(f"k={k} outside electron window {list(window)}", f"{path}.measurement.k")
    measurement = Measurement(kind=kind, k=k)

    loss = None
    loss_doc = doc.get("loss")
    if loss_doc is not None:
        if not isinstance(loss_doc, dict):
            raise ConfigError(f"expected an object or null, got {loss_doc!r}", f"{path}.loss")
        dt_over_tau = _get_float(loss_doc, "dt_over_tau", f"{path}.loss.", default=0.0)
        if dt_over_tau < 0:
            raise ConfigError("must be non-negative", f"{path}.loss.dt_over_tau")
        mode = loss_doc.get("mode", "euler")
        if mode not in ("euler", "exact_damping"):
            raise ConfigError(f"expected 'euler' or 'exact_damping', got {mode!r}", f"{path}.loss.mode")
        loss = Loss(
            dt_over_tau=dt_over_tau,
            substeps=_get_int(loss_doc, "substeps", f"{path}.loss.", default=1, minimum=1),
            mode=mode,
        )

    g_qu = parse_complex(doc["g_qu"], f"{path}.g_qu") if "g_qu" in doc else None
    return StepPolicy(electron=electron, measurement=measurement, loss=loss, g_qu=g_qu)


def build_config(doc: Dict[str, Any]) -> ScenarioConfig:
    """Validate a scenario document and materialize its defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a JSON object")

    n_max = _get_int(doc, "n_max", "", minimum=0)
    if "g_qu" not in doc:
        raise ConfigError("required field is missing", "g_qu")
    g_qu = parse_complex(doc["g_qu"], "g_qu")

    window_doc = doc.get("electron_window")
    window: Optional[Window] = None
    if window_doc is not None:
        if (
            not isinstance(window_doc, list)
            or len(window_doc) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in window_doc)
            or window_doc[0] > window_doc[1]
        ):
            raise ConfigError(f"expected [k_lo, k_hi] with k_lo <= k_hi, got {window_doc!r}", "electron_window")
        window = (window_doc[0], window_doc[1])
    effective_window = window if window is not None else default_window(n_max)

    initial = _parse_initial(_get_dict(doc, "initial_state", ""), n_max)

    policies_doc = doc.get("policies", [{}])
    if not isinstance(policies_doc, list) or not policies_doc:
        raise ConfigError("expected a non-empty list of policies", "policies")
    policies = tuple(_parse_policy(p, i, effective_window) for i, p in enumerate(policies_doc))

    seed = _get_int(doc, "seed", "", default=None)
    if seed is None and any(p.measurement.kind == "sample" for p in policies):
        raise ConfigError("a seed is required when any policy samples the electron", "seed")

    outputs_doc = _get_dict(doc, "outputs", "")
    for key, value in outputs_doc.items():
        if key not in ("directory", "trajectory", "snapshot"):
            raise ConfigError("unknown output field", f"outputs.{key}")
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", f"outputs.{key}")

    for flag in ("ensemble_mode", "allow_truncation"):
        if flag in doc and not isinstance(doc[flag], bool):
            raise ConfigError(f"expected true or false, got {doc[flag]!r}", flag)

    return ScenarioConfig(
        n_max=n_max,
        g_qu=g_qu,
        initial=initial,
        policies=policies,
        n_steps=_get_int(doc, "n_steps", "", default=0, minimum=0),
        seed=seed,
        electron_window=window,
        ensemble_size=_get_int(doc, "ensemble_size", "", default=1, minimum=1),
        ensemble_mode=doc.get("ensemble_mode", False),
        allow_truncation=doc.get("allow_truncation", False),
        outputs=OutputPaths(**outputs_doc),
        E0_eV=_get_float(doc, "E0_eV", ""),
        omega_rad_s=_get_float(doc, "omega_rad_s", ""),
    )


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _split_path(dotted: str) -> List[Any]:
    parts: List[Any] = []
    for piece in dotted.split("."):
        match = _INDEX.match(piece)
        if not piece or match is None:
            raise ConfigError(f"malformed override path '{dotted}'")
        if match.group("key"):
            key = match.group("key")
            parts.append(int(key) if key.isdigit() else key)
        if match.group("index") is not None:
            parts.append(int(match.group("index")))
    return parts


def apply_overrides(doc: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Return a copy of doc with each key=value override applied.

    Keys are dotted paths; list entries use [i] or a numeric segment,
    e.g. policies[0].measurement.k=2. Values are parsed as JSON when
    possible and kept as strings otherwise.
    """
    patched = copy.deepcopy(doc)
    for override in overrides:
        if "=" not in override:
            raise ConfigError(f"override '{override}' is not of the form key=value")
        dotted, text = override.split("=", 1)
        parts = _split_path(dotted.strip())
        target: Any = patched
        for depth, part in enumerate(parts[:-1]):
            if isinstance(part, int):
                if not isinstance(target, list) or part >= len(target):
                    raise ConfigError("no such list entry", ".".join(map(str, parts[: depth + 1])))
                target = target[part]
            else:
                if not isinstance(target, dict):
                    raise ConfigError("not an object", ".".join(map(str, parts[:depth])))
                nxt = parts[depth + 1]
                target = target.setdefault(part, [] if isinstance(nxt, int) else {})
        last = parts[-1]
        if isinstance(last, int):
            if not isinstance(target, list) or last >= len(target):
                raise ConfigError("no such list entry", dotted)
            target[last] = _parse_value(text)
        else:
            if not isinstance(target, dict):
                raise ConfigError("not an object", dotted)
            target[last] = _parse_value(text)
    return patched


def parse_config(path: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    """Load, patch and validate a scenario file."""
    try:
        doc = load_document(path)
    except QpinemError:
        raise
    except (OSError, ValueError) as e:
        raise ConfigError(str(e)) from e
    return build_config(apply_overrides(doc, overrides))


__all__ = [
    "INITIAL_KINDS",
    "InitialState",
    "OutputPaths",
    "ScenarioConfig",
    "parse_complex",
    "complex_pair",
    "build_config",
    "apply_overrides",
    "parse_config",
]
