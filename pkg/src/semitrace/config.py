"""Configuration loading and validation for the command line tools.

Configs are plain JSON.  Validation is eager and every failure carries
the dotted path of the offending entry, so a bad config dies with
"fhat.halfwidth: must be positive" instead of a traceback.

Top-level schema::

    {
      "system": {"type": "quadratic", "w": [...]}          (oscillator)
                {"type": "torus", "n": 2, "mu": [0, 0]}    (flat lattice)
                {"type": "action-angle", "coeffs": [[...]]}
      "E": 1.0,
      "epsilon": 0.3,
      "hs": [0.02, 0.01, 0.005],
      "fhat": {"type": "triangle" | "bump", "center": 6.28, "halfwidth": 0.5},
      "psi": {"halfwidth": 0.3, "plateau_halfwidth": 0.0},   (optional)
      "M_bound": 4,                                          (optional)
      "rational_bound": 1000000,                             (optional)
      "tolerances": {"count_cap": 50000000, ...}             (optional)
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .berrytabor import ActionAngleSystem, kinetic_actions, quadratic_actions
from .dynamics import QuadraticHamiltonian
from .errors import ConfigError
from .harness import BumpWindow, SpectralWindow, TriangleWindow

DEFAULT_M_BOUND = 4.0
DEFAULT_RATIONAL_BOUND = 10 ** 6
DEFAULT_COUNT_CAP = 50_000_000

KNOWN_TOLERANCES = {"count_cap", "newton_tol", "rank_tol", "rel_err",
                    "abs_err", "symplectic"}


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}" if path else key, "missing")
    return mapping[key]


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, "expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return value


def _as_positive(value, path: str) -> float:
    number = _as_number(value, path)
    if number <= 0:
        raise ConfigError(path, "must be positive")
    return number


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, "expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be at least {minimum}")
    return value


def _as_number_list(value, path: str, min_len: int = 1) -> list[float]:
    if not isinstance(value, list) or len(value) < min_len:
        raise ConfigError(path, f"expected a list of at least {min_len} numbers")
    return [_as_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs, already validated and constructed."""

    system: object
    system_kind: str
    energy: float
    epsilon: float
    psi_halfwidth: float
    psi_plateau: float
    window: SpectralWindow
    hs: tuple[float, ...]
    m_bound: float
    rational_bound: int
    count_cap: int
    torus_offsets: tuple[int, ...] | None
    tolerances: dict = field(default_factory=dict)


def _build_system(raw: dict) -> tuple[object, str, tuple[int, ...] | None]:
    kind = _require(raw, "type", "system")
    if kind == "quadratic":
        freqs = _as_number_list(_require(raw, "w", "system"), "system.w")
        for i, w in enumerate(freqs):
            if w <= 0:
                raise ConfigError(f"system.w[{i}]", "must be positive")
        return QuadraticHamiltonian(np.array(freqs)), "quadratic", None

    if kind == "torus":
        n = _as_int(_require(raw, "n", "system"), "system.n", minimum=1)
        offsets = None
        if "mu" in raw:
            mu = raw["mu"]
            if not isinstance(mu, list) or len(mu) != n:
                raise ConfigError("system.mu", f"expected {n} integers")
            offsets = tuple(_as_int(v, f"system.mu[{i}]")
                            for i, v in enumerate(mu))
        radius = _as_positive(raw.get("radius", 4.0), "system.radius")
        return kinetic_actions(n, radius=radius), "torus", offsets

    if kind == "action-angle":
        coeffs = raw.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError("system.coeffs", "expected a square matrix")
        rows = [
            _as_number_list(row, f"system.coeffs[{i}]", min_len=len(coeffs))
            for i, row in enumerate(coeffs)
        ]
        array = np.array(rows)
        if array.shape[0] != array.shape[1]:
            raise ConfigError("system.coeffs", "expected a square matrix")
        if not np.allclose(array, array.T):
            raise ConfigError("system.coeffs", "must be symmetric")
        radius = _as_positive(raw.get("radius", 4.0), "system.radius")
        domain = np.tile([-radius, radius], (array.shape[0], 1))
        return quadratic_actions(array, domain), "action-angle", None

    raise ConfigError("system.type", f"unknown system type {kind!r}")


def _build_window(raw: dict) -> SpectralWindow:
    kind = _require(raw, "type", "fhat")
    center = _as_number(_require(raw, "center", "fhat"), "fhat.center")
    halfwidth = _as_positive(_require(raw, "halfwidth", "fhat"),
                             "fhat.halfwidth")
    if kind == "triangle":
        return TriangleWindow(center=center, halfwidth=halfwidth)
    if kind == "bump":
        return BumpWindow(center=center, halfwidth=halfwidth)
    raise ConfigError("fhat.type", f"unknown window type {kind!r}")


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("", "top level must be an object")
    known = {"system", "E", "epsilon", "hs", "fhat", "psi", "M_bound",
             "rational_bound", "tolerances"}
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown key")

    system_raw = _require(raw, "system", "")
    if not isinstance(system_raw, dict):
        raise ConfigError("system", "expected an object")
    system, kind, offsets = _build_system(system_raw)

    energy = _as_positive(_require(raw, "E", ""), "E")
    epsilon = _as_positive(_require(raw, "epsilon", ""), "epsilon")
    if epsilon >= energy:
        raise ConfigError("epsilon", "must be smaller than E")

    window_raw = _require(raw, "fhat", "")
    if not isinstance(window_raw, dict):
        raise ConfigError("fhat", "expected an object")
    window = _build_window(window_raw)

    hs = _as_number_list(_require(raw, "hs", ""), "hs")
    for i, h in enumerate(hs):
        if h <= 0:
            raise ConfigError(f"hs[{i}]", "must be positive")

    psi_halfwidth = epsilon
    psi_plateau = 0.0
    if "psi" in raw:
        psi_raw = raw["psi"]
        if not isinstance(psi_raw, dict):
            raise ConfigError("psi", "expected an object")
        for key in psi_raw:
            if key not in {"halfwidth", "plateau_halfwidth"}:
                raise ConfigError(f"psi.{key}", "unknown key")
        if "halfwidth" in psi_raw:
            psi_halfwidth = _as_positive(psi_raw["halfwidth"], "psi.halfwidth")
        if psi_halfwidth > epsilon:
            raise ConfigError(
                "psi.halfwidth",
                "cutoff support must sit inside the epsilon shell")
        if "plateau_halfwidth" in psi_raw:
            psi_plateau = _as_number(psi_raw["plateau_halfwidth"],
                                     "psi.plateau_halfwidth")
            if not 0.0 <= psi_plateau < psi_halfwidth:
                raise ConfigError("psi.plateau_halfwidth",
                                  "must be a proper subinterval of psi")

    m_bound = _as_positive(raw.get("M_bound", DEFAULT_M_BOUND), "M_bound")
    rational_bound = _as_int(raw.get("rational_bound", DEFAULT_RATIONAL_BOUND),
                             "rational_bound", minimum=1)

    tolerances = raw.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ConfigError("tolerances", "expected an object")
    for key, value in tolerances.items():
        if key not in KNOWN_TOLERANCES:
            raise ConfigError(f"tolerances.{key}", "unknown tolerance")
        if key == "count_cap":
            _as_int(value, "tolerances.count_cap", minimum=1000)
        else:
            _as_positive(value, f"tolerances.{key}")
    count_cap = int(tolerances.get("count_cap", DEFAULT_COUNT_CAP))

    return RunConfig(
        system=system, system_kind=kind, energy=energy, epsilon=epsilon,
        psi_halfwidth=psi_halfwidth, psi_plateau=psi_plateau, window=window,
        hs=tuple(hs), m_bound=m_bound, rational_bound=rational_bound,
        count_cap=count_cap, torus_offsets=offsets,
        tolerances=dict(tolerances))
