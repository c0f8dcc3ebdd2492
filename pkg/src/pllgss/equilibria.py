"""Equilibrium points of the dimensionless model and their classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoSEPError, ParameterError
from .model import DimlessParams, State

_RANGE_TOL = 1e-12


class EquilibriumKind(str, enum.Enum):
    SEP = "SEP"
    SADDLE = "saddle"
    UNSTABLE = "unstable"
    # zero determinant or zero trace (boundary cases |m| = 1, h = h_c, gamma = h = 0)
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class EquilibriumPoint:
    delta: float
    x: float
    kind: EquilibriumKind
    eigenvalues: tuple[complex, complex]

    @property
    def state(self) -> State:
        return State(self.delta, self.x)


def jacobian(dp: DimlessParams, s) -> tuple[np.ndarray, tuple[complex, complex]]:
    """Jacobian of the dimensionless field and its eigenvalues.

    Eigenvalues are sorted by real part, then imaginary part.
    """
    c = math.cos(s[0])
    J = np.array([[-dp.gamma * c, 1.0], [-c, dp.h]])
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = complex(tr * tr - 4 * det)
    root = disc ** 0.5
    lam = sorted([(tr - root) / 2, (tr + root) / 2], key=lambda z: (z.real, z.imag))
    return J, (lam[0], lam[1])


def _classify(J: np.ndarray) -> EquilibriumKind:
    tr = J[0, 0] + J[1, 1]
    det = float(np.linalg.det(J))
    scale = max(1.0, float(np.abs(J).max()) ** 2)
    if abs(det) <= 1e-13 * scale:
        return EquilibriumKind.DEGENERATE
    if det < 0:
        return EquilibriumKind.SADDLE
    if abs(tr) <= 1e-13 * max(1.0, float(np.abs(J).max())):
        return EquilibriumKind.DEGENERATE
    return EquilibriumKind.SEP if tr < 0 else EquilibriumKind.UNSTABLE


def _make(dp: DimlessParams, delta: float) -> EquilibriumPoint:
    J, lam = jacobian(dp, (delta, 0.0))
    return EquilibriumPoint(delta, 0.0, _classify(J), lam)


def equilibria_in_range(dp: DimlessParams, delta_lo: float,
                        delta_hi: float) -> list[EquilibriumPoint]:
    """All equilibria ``sin(delta) = m, x = 0`` with delta in the closed range.

    Returns an empty list when ``|m| > 1`` (no equilibrium, e.g. fault-on).
    """
    if abs(dp.m) > 1 or delta_hi < delta_lo:
        return []
    a = math.asin(dp.m)
    branches = [a] if abs(dp.m) == 1 else [a, math.pi - a]
    found: list[float] = []
    for base in branches:
        k_lo = math.ceil((delta_lo - base) / (2 * math.pi) - 1e-9)
        k_hi = math.floor((delta_hi - base) / (2 * math.pi) + 1e-9)
        for k in range(k_lo, k_hi + 1):
            d = base + 2 * math.pi * k
            if delta_lo - _RANGE_TOL <= d <= delta_hi + _RANGE_TOL:
                found.append(d)
    return [_make(dp, d) for d in sorted(found)]


def h_critical(dp: DimlessParams) -> float:
    if abs(dp.m) > 1:
        raise ParameterError(f"h_c undefined for |m| = {abs(dp.m):.6g} > 1")
    return dp.gamma * math.sqrt(1 - dp.m * dp.m)


def sep(dp: DimlessParams) -> EquilibriumPoint:
    """The SEP ``(arcsin m, 0)``; raises NoSEPError naming the failed clause."""
    if not abs(dp.m) < 1:
        raise NoSEPError(f"no stable equilibrium: |m| = {abs(dp.m):.6g} is not < 1",
                         clause="|m| < 1")
    hc = h_critical(dp)
    if not dp.h < hc:
        raise NoSEPError(f"no stable equilibrium: h = {dp.h:.6g} is not < "
                         f"h_c = {hc:.6g}", clause="h < h_c")
    ep = _make(dp, math.asin(dp.m))
    if ep.kind is not EquilibriumKind.SEP:
        raise NoSEPError(f"equilibrium at arcsin(m) is {ep.kind.value}",
                         clause="gamma > 0")
    return ep


def adjacent_saddles(dp: DimlessParams) -> tuple[EquilibriumPoint, EquilibriumPoint]:
    """The two saddles bracketing the SEP: ``(-pi - delta_s, pi - delta_s)``."""
    s = sep(dp)
    return _make(dp, -math.pi - s.delta), _make(dp, math.pi - s.delta)
