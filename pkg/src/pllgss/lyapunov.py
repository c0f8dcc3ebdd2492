"""Lyapunov function, critical level set and stability criterion.

The Lyapunov candidate on the dimensionless plane is

    V(delta, x) = V0 + 1/2 (x - h (delta - delta_s))**2
                  - (1 - gamma h) (m delta + cos delta)

with ``V0`` chosen so that ``V(delta_s, 0) = 0``. Its time derivative
factors as ``-(1 - gamma h)/gamma * g1 * g2`` with

    g1(delta) = gamma (m - sin delta)
    g2(delta) = gamma (m - sin delta) + h (delta - delta_s)

Two energy-function baselines are provided next to it: the swing-form
equal-area energy (damping ignored in the second-order angle equation) and
the undamped-pendulum energy ``E = x**2/2 - m delta - cos delta``.

Every level function here has the shape ``1/2 (x - center(delta))**2 +
potential(delta)``, which the ROA module uses to trace exact boundaries.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .equilibria import adjacent_saddles, sep
from .errors import CriterionInapplicable, NumericalError
from .model import DimlessParams, State

SCAN_STEP = math.pi / 100
SCAN_SPAN = 6 * math.pi
ROOT_TOL = 1e-12


class Label(str, enum.Enum):
    GUARANTEED_STABLE = "GuaranteedStable"
    NOT_GUARANTEED = "NotGuaranteed"


@dataclass(frozen=True)
class Verdict:
    label: Label
    v_value: float
    v_cr: float
    in_window: bool
    method: str = "lf"

    @property
    def stable(self) -> bool:
        return self.label is Label.GUARANTEED_STABLE


def g1(dp: DimlessParams, delta):
    return dp.gamma * (dp.m - np.sin(delta))


def g2(dp: DimlessParams, delta_s: float, delta):
    return dp.gamma * (dp.m - np.sin(delta)) + dp.h * (delta - delta_s)


def _g1_zeros(delta_s: float) -> tuple[float, float]:
    """(closest, further) zeros of g1 next to delta_s; ties go to the right."""
    right, left = math.pi - delta_s, -math.pi - delta_s
    if abs(right - delta_s) <= abs(left - delta_s):
        return right, left
    return left, right


def _scan_zero(f, delta_s: float, direction: int) -> float:
    a = delta_s + direction * SCAN_STEP
    fa = f(a)
    n = int(SCAN_SPAN / SCAN_STEP)
    for k in range(2, n + 1):
        if fa == 0:
            return a
        b = delta_s + direction * k * SCAN_STEP
        fb = f(b)
        if np.sign(fa) != np.sign(fb):
            lo, hi = (a, b) if a < b else (b, a)
            root = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                          maxiter=200)
            if abs(f(root)) > ROOT_TOL:
                raise NumericalError("root refinement did not reach tolerance",
                                     {"bracket": [lo, hi], "residual": float(f(root))})
            return root
        a, fa = b, fb
    raise NumericalError(
        "no sign change of g2 found",
        {"side": "right" if direction > 0 else "left",
         "scanned": sorted([delta_s + direction * SCAN_STEP, a]),
         "step": SCAN_STEP})


def _g2_zeros(dp: DimlessParams, delta_s: float) -> tuple[float, float]:
    """(closest, further) nontrivial zeros of g2 on either side of delta_s."""
    if dp.h == 0:
        return _g1_zeros(delta_s)
    f = lambda d: float(g2(dp, delta_s, d))  # noqa: E731
    try:
        right = _scan_zero(f, delta_s, +1)
        left = _scan_zero(f, delta_s, -1)
    except NumericalError as exc:
        if dp.h < 0 and "sign change" in str(exc):
            # strong negative h makes g2 monotone on that side
            raise CriterionInapplicable(
                f"g2 has no zero on the {exc.diagnostics['side']} of the SEP; "
                "criterion window undefined") from exc
        raise
    if abs(right - delta_s) <= abs(left - delta_s):
        return right, left
    return left, right


def _sorted(pair) -> tuple[float, float]:
    a, b = pair
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class LyapunovContext:
    """Everything needed to evaluate and apply the criterion for one ``dp``."""

    dp: DimlessParams
    delta_s: float
    v0: float
    window: tuple[float, float]
    dissipative: tuple[float, float]
    tangent: State
    v_cr: float
    g1_zeros: tuple[float, float]
    g2_zeros: tuple[float, float] | None
    diagnostics: tuple[str, ...] = ()

    def center(self, delta):
        return self.dp.h * (delta - self.delta_s)

    def potential(self, delta):
        """V restricted to the line ``x = center(delta)``."""
        dp = self.dp
        return self.v0 - (1 - dp.gamma_h) * (dp.m * delta + np.cos(delta))

    @property
    def level(self) -> float:
        return self.v_cr

    @property
    def seed(self) -> State:
        return State(self.delta_s, 0.0)


def lyapunov_context(dp: DimlessParams) -> LyapunovContext:
    """Build the criterion for ``dp``.

    Raises NoSEPError when no SEP exists and CriterionInapplicable when
    ``gamma <= 0``.
    """
    if not dp.gamma > 0:
        raise CriterionInapplicable("the criterion requires gamma > 0")
    ds = sep(dp).delta
    eps = 1 - dp.gamma_h
    v0 = eps * (dp.m * ds + math.cos(ds))
    z1 = _g1_zeros(ds)
    need_g2 = dp.h > 0 or dp.m < 0
    z2 = _g2_zeros(dp, ds) if need_g2 else None

    if dp.h > 0:
        dissipative, star = _sorted(z2), z2[0]
    else:
        dissipative, star = _sorted(z1), z1[0]
    window = _sorted(z1) if dp.m >= 0 else _sorted(z2)
    v_cr = v0 - eps * (dp.m * star + math.cos(star))
    tangent = State(star, dp.h * (star - ds))

    diags = []
    if window[0] < dissipative[0] or window[1] > dissipative[1]:
        diags.append(
            f"criterion window [{window[0]:.6g}, {window[1]:.6g}] extends beyond "
            f"the dissipative interval ({dissipative[0]:.6g}, {dissipative[1]:.6g})")
    ctx = LyapunovContext(dp, ds, v0, window, dissipative, tangent, v_cr, z1, z2)
    for u in adjacent_saddles(dp):
        vu = float(v(ctx, u.state))
        if not vu > v_cr:
            diags.append(f"saddle at delta={u.delta:.6g} has V={vu:.6g} <= V_cr")
    if not v_cr > 0:
        diags.append(f"V_cr = {v_cr:.6g} is not positive")
    if diags:
        ctx = LyapunovContext(ctx.dp, ds, v0, window, dissipative, tangent, v_cr,
                              z1, z2, tuple(diags))
    return ctx


def v(ctx: LyapunovContext, s):
    delta, x = s
    dp = ctx.dp
    q = x - dp.h * (delta - ctx.delta_s)
    return ctx.v0 + 0.5 * q * q - (1 - dp.gamma_h) * (dp.m * delta + np.cos(delta))


def v_dot(ctx: LyapunovContext, s):
    """Closed-form dV/dtau; depends on delta only."""
    dp = ctx.dp
    delta = s[0]
    return -(1 - dp.gamma_h) / dp.gamma * g1(dp, delta) * g2(dp, ctx.delta_s, delta)


def hessian_at_sep(ctx: LyapunovContext) -> np.ndarray:
    dp = ctx.dp
    return np.array([[dp.h ** 2 + (1 - dp.gamma_h) * math.cos(ctx.delta_s), -dp.h],
                     [-dp.h, 1.0]])


def dissipative_region(ctx: LyapunovContext) -> tuple[float, float]:
    return ctx.dissipative


def tangent_point(ctx: LyapunovContext) -> State:
    return ctx.tangent


def critical_level(ctx: LyapunovContext) -> float:
    return ctx.v_cr


def criterion_window(ctx: LyapunovContext) -> tuple[float, float]:
    return ctx.window


def in_estimate(ctx: LyapunovContext, s):
    """Vectorized membership ``in_window and V <= V_cr``."""
    delta = np.asarray(s[0])
    lo, hi = ctx.window
    return (delta >= lo) & (delta <= hi) & (v(ctx, s) <= ctx.v_cr)


def assess(ctx: LyapunovContext, s) -> Verdict:
    """Sufficient-condition test; NotGuaranteed does not mean unstable."""
    val = float(v(ctx, s))
    lo, hi = ctx.window
    inside = bool(lo <= s[0] <= hi)
    ok = inside and val <= ctx.v_cr
    return Verdict(Label.GUARANTEED_STABLE if ok else Label.NOT_GUARANTEED,
                   val, ctx.v_cr, inside, "lf")


# --- energy-function baselines ---------------------------------------------

def energy_function(dp: DimlessParams, s):
    delta, x = s
    return 0.5 * x * x - dp.m * delta - np.cos(delta)


def energy_dot(dp: DimlessParams, s):
    delta, x = s
    e = dp.m - np.sin(delta)
    return dp.h * x * x - dp.gamma * e * e


def swing_energy(dp: DimlessParams, s, delta_s: float | None = None):
    """Equal-area energy of ``d2delta/dtau2 = (1 - gamma h)(m - sin delta)``.

    Uses the angle rate ``omega = d delta/d tau = x + gamma (m - sin delta)``
    and ignores the state-dependent damping ``(h - gamma cos delta) omega``.
    Zero at the SEP.
    """
    delta, x = s
    ds = math.asin(dp.m) if delta_s is None else delta_s
    omega = x + dp.gamma * (dp.m - np.sin(delta))
    k = dp.m * ds + math.cos(ds)
    return 0.5 * omega * omega + (1 - dp.gamma_h) * (k - (dp.m * delta + np.cos(delta)))


def swing_energy_dot(dp: DimlessParams, s):
    """Exact derivative of swing_energy along the model: ``(h - gamma cos delta) omega**2``."""
    delta, x = s
    omega = x + dp.gamma * (dp.m - np.sin(delta))
    return (dp.h - dp.gamma * np.cos(delta)) * omega * omega


@dataclass(frozen=True)
class EnergyBaseline:
    """Energy criterion with its critical level at the lower adjacent saddle.

    ``form="swing"`` is the equal-area baseline, ``form="pendulum"`` the
    undamped-pendulum energy.
    """

    dp: DimlessParams
    form: str
    delta_s: float
    window: tuple[float, float]
    saddle: State
    level: float

    def energy(self, s):
        if self.form == "swing":
            return swing_energy(self.dp, s, self.delta_s)
        ref = energy_function(self.dp, (self.delta_s, 0.0))
        return energy_function(self.dp, s) - ref

    def center(self, delta):
        if self.form == "swing":
            return -self.dp.gamma * (self.dp.m - np.sin(delta))
        return np.zeros_like(np.asarray(delta, dtype=float))

    def potential(self, delta):
        zero = np.zeros_like(np.asarray(delta, dtype=float))
        if self.form == "swing":
            return swing_energy(self.dp, (delta, self.center(delta)), self.delta_s) + zero
        return self.energy((delta, zero))

    @property
    def seed(self) -> State:
        return State(self.delta_s, 0.0)


def eac_baseline(dp: DimlessParams, form: str = "swing") -> EnergyBaseline:
    if form not in ("swing", "pendulum"):
        raise ValueError(f"unknown baseline form {form!r}")
    try:
        left, right = adjacent_saddles(dp)
    except Exception as exc:
        raise CriterionInapplicable(f"baseline needs an SEP: {exc}") from exc
    ds = math.asin(dp.m)
    proto = EnergyBaseline(dp, form, ds, (left.delta, right.delta), State(0.0, 0.0), 0.0)
    levels = [(float(proto.energy(u.state)), u) for u in (left, right)]
    level, u = min(levels, key=lambda t: t[0])
    return EnergyBaseline(dp, form, ds, (left.delta, right.delta), u.state, level)


def eac_assess(dp: DimlessParams, s, form: str = "swing",
               baseline: EnergyBaseline | None = None) -> Verdict:
    b = baseline or eac_baseline(dp, form)
    val = float(b.energy(s))
    lo, hi = b.window
    inside = bool(lo <= s[0] <= hi)
    ok = inside and val <= b.level
    return Verdict(Label.GUARANTEED_STABLE if ok else Label.NOT_GUARANTEED,
                   val, b.level, inside, "eac" if b.form == "swing" else "energy")


def energy_assess(dp: DimlessParams, s) -> Verdict:
    """Critical-energy criterion on the undamped-pendulum energy."""
    return eac_assess(dp, s, form="pendulum")


# --- coefficient derivation ------------------------------------------------

@dataclass(frozen=True)
class LfCoefficients:
    a: float
    p: float
    epsilon: float
    residuals: tuple[float, float, float]


def lf_coefficients(gamma: float, h: float) -> LfCoefficients:
    """Coefficients of the quadratic-form ansatz that cancel the coupling terms.

    The ansatz is ``V0 + 1/2 z^T [[1, a], [a, p a^2]] z - eps (m delta + cos delta)``
    with ``z = [x, delta - delta_s]``. Residuals are ``1 + a gamma - eps``,
    ``a h + p a^2`` and ``h + a``.
    """
    if abs(gamma * h) >= 1:
        raise CriterionInapplicable("|gamma*h| must be < 1")
    a, p, eps = -h, 1.0, 1 - gamma * h
    res = (1 + a * gamma - eps, a * h + p * a * a, h + a)
    return LfCoefficients(a, p, eps, res)


def ansatz_derivative_terms(gamma: float, h: float, a: float, p: float,
                            eps: float) -> dict[str, float]:
    """Coefficients of dV/dtau for the ansatz, keyed by monomial.

    Monomials: ``x2`` = x^2, ``e2`` = (m - sin delta)^2, ``de`` =
    (delta - delta_s)(m - sin delta), ``ex`` = (m - sin delta) x and ``dx`` =
    (delta - delta_s) x. The last three are the coupling terms.
    """
    return {
        "x2": h + a,
        "e2": -eps * gamma,
        "de": a + p * a * a * gamma,
        "ex": 1 + a * gamma - eps,
        "dx": a * h + p * a * a,
    }
