"""Physical and dimensionless GSS models of a PLL-synchronized converter.

All electrical quantities are per unit. The PLL gains are the normalized
gains ``k_pn = k_p,pll * U_n`` and ``k_in = k_i,pll * U_n``, handled as bare
scalars.

Physical state: ``(delta, x_int)`` with time ``t`` in seconds.
Dimensionless state: ``(delta, x)`` with ``x = x_int / sqrt(k_in * U_g)``
and time ``tau = sigma * t``, ``sigma = sqrt(k_in * U_g) / (1 - gamma*h)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from .errors import ModelValidityError, ParameterError

SCHEMA_VERSION = 1
DEFAULT_F_G_HZ = 50.0


class State(NamedTuple):
    """Point on the dimensionless phase plane. Fields may be numpy arrays."""

    delta: Any
    x: Any


class PhysState(NamedTuple):
    delta: Any
    x_int: Any


@dataclass(frozen=True)
class PhysicalParams:
    """Per-unit grid, converter and PLL parameters.

    The defaults are the reference test case: SCR = 2, I_sd = 1 pu,
    I_sq = 0, k_pn = 20, k_in = 200, 50 Hz grid.
    """

    u_g_pu: float = 1.0
    x_g_pu: float = 0.5
    r_g_pu: float = 0.0
    i_sd_pu: float = 1.0
    i_sq_pu: float = 0.0
    k_pn: float = 20.0
    k_in: float = 200.0
    omega_g: float = 2 * math.pi * DEFAULT_F_G_HZ

    def __post_init__(self):
        values = (self.u_g_pu, self.x_g_pu, self.r_g_pu, self.i_sd_pu,
                  self.i_sq_pu, self.k_pn, self.k_in, self.omega_g)
        if not all(math.isfinite(v) for v in values):
            raise ParameterError("parameters must be finite")
        if self.k_pn <= 0 or self.k_in <= 0:
            raise ParameterError("PI gains k_pn and k_in must be positive")
        if self.omega_g <= 0:
            raise ParameterError("omega_g must be positive")
        if self.x_g_pu <= 0:
            raise ParameterError("x_g_pu must be positive")
        if self.u_g_pu < 0:
            raise ParameterError("u_g_pu must be non-negative")

    @property
    def gamma_h(self) -> float:
        """``k_pn * X_g * I_sd / omega_g``; independent of the grid voltage."""
        return self.k_pn * self.x_g_pu * self.i_sd_pu / self.omega_g

    @property
    def drive(self) -> float:
        """``X_g I_sd + R_g I_sq`` (pu voltage)."""
        return self.x_g_pu * self.i_sd_pu + self.r_g_pu * self.i_sq_pu

    def with_voltage(self, u_g_pu: float) -> PhysicalParams:
        return replace(self, u_g_pu=u_g_pu)


@dataclass(frozen=True)
class DimlessParams:
    """The triple ``(m, gamma, h)`` governing the dimensionless model.

    ``gamma = 0`` is admitted so the undamped swing limit can be integrated;
    everything Lyapunov-related requires ``gamma > 0``.
    """

    m: float
    gamma: float
    h: float
    gamma_h: float = field(init=False)

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.m, self.gamma, self.h)):
            raise ParameterError("dimensionless parameters must be finite")
        if self.gamma < 0:
            raise ParameterError("gamma must be non-negative")
        gh = self.gamma * self.h
        if abs(gh) >= 1:
            raise ModelValidityError(f"|gamma*h| = {abs(gh):.6g} >= 1")
        object.__setattr__(self, "gamma_h", gh)

    @property
    def has_sep(self) -> bool:
        return abs(self.m) < 1 and self.h < self.h_c

    @property
    def h_c(self) -> float:
        """Critical ``h`` for small-signal stability (NaN if ``|m| > 1``)."""
        if abs(self.m) > 1:
            return math.nan
        return self.gamma * math.sqrt(1 - self.m * self.m)

    @property
    def delta_s(self) -> float | None:
        """SEP angle ``arcsin m``, or None if no SEP exists."""
        return math.asin(self.m) if self.has_sep else None


def derive_dimless(p: PhysicalParams) -> DimlessParams:
    if p.u_g_pu <= 0:
        raise ParameterError("u_g_pu must be positive to nondimensionalize")
    if p.gamma_h >= 1:
        raise ModelValidityError(f"gamma*h = {p.gamma_h:.6g} >= 1")
    sqrt_u = math.sqrt(p.u_g_pu)
    m = p.drive / p.u_g_pu
    gamma = p.k_pn * sqrt_u / math.sqrt(p.k_in)
    h = math.sqrt(p.k_in) / p.omega_g * p.x_g_pu * p.i_sd_pu / sqrt_u
    return DimlessParams(m=m, gamma=gamma, h=h)


def vector_field_dimless(dp: DimlessParams, s) -> tuple:
    """Right-hand side ``(d delta/d tau, dx/d tau)``; broadcasts over arrays."""
    delta, x = s
    e = dp.m - np.sin(delta)
    return dp.gamma * e + x, e + dp.h * x


def vector_field_physical(p: PhysicalParams, s) -> tuple:
    """Right-hand side ``(d delta/dt, d x_int/dt)`` in physical time."""
    delta, x_int = s
    den = 1.0 - p.gamma_h
    if den == 0:
        raise ModelValidityError("1 - k_p,pll L_g I_sd vanishes")
    e = p.drive - p.u_g_pu * np.sin(delta)
    l_isd = p.x_g_pu * p.i_sd_pu / p.omega_g
    return (p.k_pn * e + x_int) / den, p.k_in * (e + l_isd * x_int) / den


def _x_scale(p: PhysicalParams) -> float:
    if p.u_g_pu <= 0:
        raise ParameterError("u_g_pu must be positive for the state scaling")
    return math.sqrt(p.k_in * p.u_g_pu)


def to_dimless_state(p: PhysicalParams, s) -> State:
    delta, x_int = s
    return State(delta, x_int / _x_scale(p))


def to_physical_state(p: PhysicalParams, s) -> PhysState:
    delta, x = s
    return PhysState(delta, x * _x_scale(p))


def time_scale(p: PhysicalParams) -> float:
    """``sigma`` such that ``tau = sigma * t``."""
    if abs(p.gamma_h) >= 1:
        raise ModelValidityError(f"|gamma*h| = {abs(p.gamma_h):.6g} >= 1")
    return _x_scale(p) / (1.0 - p.gamma_h)


_JSON_KEYS = {"schema", "u_g_pu", "scr", "x_g_pu", "r_g_pu", "i_sd_pu",
              "i_sq_pu", "k_pn", "k_in", "f_g_hz"}


def params_from_dict(d: dict) -> PhysicalParams:
    """Build parameters from a config mapping (see README for the schema).

    Unknown keys are rejected. Exactly one of ``scr`` / ``x_g_pu`` may be
    given; ``x_g_pu = 1/scr``.
    """
    if not isinstance(d, dict):
        raise ParameterError("parameter document must be a JSON object")
    unknown = sorted(set(d) - _JSON_KEYS)
    if unknown:
        raise ParameterError(f"unknown parameter keys: {', '.join(unknown)}")
    schema = d.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ParameterError(f"unsupported schema version {schema!r}")
    if "scr" in d and "x_g_pu" in d:
        raise ParameterError("give either scr or x_g_pu, not both")
    kw: dict[str, float] = {}
    try:
        for key in ("u_g_pu", "x_g_pu", "r_g_pu", "i_sd_pu", "i_sq_pu",
                    "k_pn", "k_in"):
            if key in d:
                kw[key] = float(d[key])
        if "scr" in d:
            scr = float(d["scr"])
            if scr <= 0:
                raise ParameterError("scr must be positive")
            kw["x_g_pu"] = 1.0 / scr
        if "f_g_hz" in d:
            kw["omega_g"] = 2 * math.pi * float(d["f_g_hz"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"non-numeric parameter value: {exc}") from exc
    return PhysicalParams(**kw)


def load_params(path: str | Path) -> PhysicalParams:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"invalid JSON in {path}: {exc}") from exc
    return params_from_dict(doc)
