"""Numerical integration, fault scenarios and ground-truth classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .equilibria import sep
from .errors import (GssError, NumericalError, ScenarioError, StiffnessError)
from .lyapunov import (EnergyBaseline, LyapunovContext, Verdict, assess,
                       eac_assess, eac_baseline, lyapunov_context)
from .model import (DimlessParams, PhysicalParams, PhysState, State,
                    derive_dimless, to_dimless_state, vector_field_dimless,
                    vector_field_physical)

UNSTABLE_SPAN = 4 * math.pi
CONVERGED_TOL = 1e-4


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-9
    atol: float = 1e-12
    output_step: float | None = None
    method: str = "RK45"
    max_step: float = math.inf
    divergence_bound: float = 1e8

    def halved(self) -> IntegratorOptions:
        return replace(self, rtol=self.rtol / 2, atol=self.atol / 2)


@dataclass
class Trajectory:
    """Time-stamped samples; ``y[:, 1]`` is ``x`` or ``x_int`` per ``coords``."""

    coords: str
    t: np.ndarray
    y: np.ndarray
    events: list[tuple[float, str]] = field(default_factory=list)
    status: str = "ok"
    scenario: str | None = None

    @property
    def delta(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def second(self) -> np.ndarray:
        return self.y[:, 1]

    @property
    def columns(self) -> tuple[str, str, str]:
        return ("t", "delta", "x_int" if self.coords == "physical" else "x")

    @property
    def final(self):
        d, s = float(self.y[-1, 0]), float(self.y[-1, 1])
        return PhysState(d, s) if self.coords == "physical" else State(d, s)

    def __len__(self) -> int:
        return len(self.t)


def _output_times(t0: float, t1: float, step: float) -> np.ndarray:
    n = int(math.floor((t1 - t0) / step + 1e-9))
    t = t0 + step * np.arange(n + 1)
    if t1 - t[-1] > step * 1e-9:
        t = np.append(t, t1)
    else:
        t[-1] = t1
    return t


def integrate(field: Callable, s0, t_span, options: IntegratorOptions | None = None,
              coords: str = "dimensionless",
              stop: Callable | None = None) -> Trajectory:
    """Integrate an autonomous planar field ``field(state) -> (d0, d1)``.

    Dormand-Prince 5(4) by default. ``stop(state)`` is an optional signed
    function; integration ends when it crosses zero upward. Non-finite or
    unbounded states end the run with ``status="diverged"``.
    """
    opt = options or IntegratorOptions()
    t0, t1 = float(t_span[0]), float(t_span[1])
    y0 = np.asarray(s0, dtype=float)

    def rhs(_t, y):
        return field((y[0], y[1]))

    def blowup(_t, y):
        return opt.divergence_bound - np.max(np.abs(y))

    blowup.terminal = True
    events = [blowup]
    if stop is not None:
        def stopper(_t, y):
            return stop((y[0], y[1]))
        stopper.terminal = True
        stopper.direction = 1
        events.append(stopper)

    t_eval = _output_times(t0, t1, opt.output_step) if opt.output_step else None
    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(rhs, (t0, t1), y0, method=opt.method, t_eval=t_eval,
                        rtol=opt.rtol, atol=opt.atol, max_step=opt.max_step,
                        events=events)
    if sol.status == -1:
        if "step size" in (sol.message or ""):
            raise StiffnessError(f"integration failed: {sol.message}",
                                 {"t": float(sol.t[-1]) if sol.t.size else t0})
        raise NumericalError(f"integration failed: {sol.message}")

    t, y = sol.t, sol.y.T
    status = "ok"
    finite = np.all(np.isfinite(y), axis=1)
    if not finite.all():
        keep = int(np.argmin(finite))
        t, y = t[:keep], y[:keep]
        status = "diverged"
    if sol.status == 1:
        if sol.t_events[0].size:
            status = "diverged"
        elif stop is not None and sol.t_events[1].size:
            status = "stopped"
            te, ye = float(sol.t_events[1][0]), sol.y_events[1][0]
            if t.size == 0 or te > t[-1]:
                t = np.append(t, te)
                y = np.vstack([y, ye]) if y.size else ye[None, :]
    if t.size == 0:
        t, y = np.array([t0]), y0[None, :]
    return Trajectory(coords, np.asarray(t, dtype=float), np.asarray(y, dtype=float),
                      status=status)


def dimless_field(dp: DimlessParams, reverse: bool = False) -> Callable:
    sign = -1.0 if reverse else 1.0

    def f(s):
        a, b = vector_field_dimless(dp, s)
        return sign * a, sign * b
    return f


def physical_field(p: PhysicalParams) -> Callable:
    return lambda s: vector_field_physical(p, s)


def concat(a: Trajectory, b: Trajectory) -> Trajectory:
    """Join two trajectories sharing a boundary sample."""
    if a.coords != b.coords:
        raise ValueError("cannot join trajectories in different coordinates")
    tb, yb = b.t, b.y
    if len(a) and len(b) and tb[0] <= a.t[-1]:
        tb, yb = tb[1:], yb[1:]
    status = b.status if b.status != "ok" else a.status
    return Trajectory(a.coords, np.concatenate([a.t, tb]), np.vstack([a.y, yb]),
                      a.events + b.events, status, a.scenario or b.scenario)


def to_dimless_trajectory(traj: Trajectory, p: PhysicalParams) -> Trajectory:
    """Rescale the states with ``p``'s voltage; time stays physical."""
    if traj.coords != "physical":
        raise ValueError("trajectory is not in physical coordinates")
    d, x = to_dimless_state(p, (traj.y[:, 0], traj.y[:, 1]))
    return Trajectory("dimensionless", traj.t.copy(), np.column_stack([d, x]),
                      list(traj.events), traj.status, traj.scenario)


class Outcome(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


def classify_converged(traj: Trajectory, target_sep, tol: float = CONVERGED_TOL,
                       horizon: float | None = None) -> Outcome:
    """Label a dimensionless trajectory relative to one SEP (no 2*pi wrap).

    Samples after ``horizon`` (same time unit as ``traj.t``) are ignored.
    """
    t, y = traj.t, traj.y
    if horizon is not None:
        keep = t <= horizon
        t, y = t[keep], y[keep]
    ds, xs = float(target_sep[0]), float(target_sep[1])
    if traj.status == "diverged" or not np.all(np.isfinite(y)):
        return Outcome.UNSTABLE
    if np.any(np.abs(y[:, 0] - ds) > UNSTABLE_SPAN):
        return Outcome.UNSTABLE
    d_end, x_end = y[-1]
    if math.hypot(d_end - ds, x_end - xs) <= tol:
        return Outcome.STABLE
    k = round((d_end - ds) / (2 * math.pi))
    if k != 0 and math.hypot(d_end - ds - 2 * math.pi * k, x_end - xs) <= tol:
        return Outcome.UNSTABLE
    return Outcome.INCONCLUSIVE


@dataclass(frozen=True)
class FaultScenario:
    """Voltage dip from ``t = 0`` to ``t = fct``; observation until ``t_end``.

    ``t_end`` defaults to ``fct + 2 s``.
    """

    fct: float
    fault_u_g_pu: float = 0.2
    pre_u_g_pu: float = 1.0
    post_u_g_pu: float = 1.0
    t_end: float | None = None

    def __post_init__(self):
        if self.t_end is None:
            object.__setattr__(self, "t_end", self.fct + 2.0)
        if not self.fct >= 0:
            raise ScenarioError("fct must be non-negative")
        if min(self.fault_u_g_pu, self.pre_u_g_pu, self.post_u_g_pu) < 0:
            raise ScenarioError("voltages must be non-negative")
        if not self.t_end > self.fct:
            raise ScenarioError("t_end must exceed fct")

    @property
    def key(self) -> str:
        return f"fct_{self.fct * 1e3:g}ms"


@dataclass
class ScenarioResult:
    scenario: FaultScenario
    trajectory: Trajectory
    clearing_state: PhysState
    clearing_state_dimless: State
    v_at_clearing: float
    verdict_lf: Verdict
    verdict_eac: Verdict
    verdict_sim: Outcome
    dp_post: DimlessParams
    ctx: LyapunovContext


def run_fault_scenario(p: PhysicalParams, fs: FaultScenario,
                       options: IntegratorOptions | None = None,
                       baseline: EnergyBaseline | None = None) -> ScenarioResult:
    opt = options or IntegratorOptions(output_step=1e-4)
    try:
        ep = sep(derive_dimless(p.with_voltage(fs.pre_u_g_pu)))
        p_fault = p.with_voltage(fs.fault_u_g_pu)
        p_post = p.with_voltage(fs.post_u_g_pu)
        dp_post = derive_dimless(p_post)
        ctx = lyapunov_context(dp_post)
        base = baseline or eac_baseline(dp_post)
    except GssError as exc:
        raise ScenarioError(f"scenario {fs.key}: {exc}") from exc

    s0 = PhysState(ep.delta, 0.0)
    on = Trajectory("physical", np.array([0.0]), np.array([[s0[0], s0[1]]]))
    if fs.fct > 0:
        on = integrate(physical_field(p_fault), s0, (0.0, fs.fct), opt, "physical")
    on.events = [(0.0, "fault_on"), (fs.fct, "fault_cleared")]
    clearing = on.final
    cs = to_dimless_state(p_post, clearing)

    ds = ctx.delta_s
    target = State(ds, 0.0)
    # stop just past the unstable threshold so the last sample exceeds it
    stop = lambda s: abs(s[0] - ds) - UNSTABLE_SPAN - 0.1  # noqa: E731
    field_post = physical_field(p_post)
    if on.status == "diverged":
        # runaway during the fault: report the last finite sample, no post-fault run
        on.events = [(0.0, "fault_on"), (float(on.t[-1]), "diverged")]
        post = Trajectory("physical", on.t[-1:], on.y[-1:], status="diverged")
        outcome = Outcome.UNSTABLE
    else:
        post = integrate(field_post, clearing, (fs.fct, fs.t_end), opt, "physical", stop)
        outcome = classify_converged(to_dimless_trajectory(post, p_post), target)
    if outcome is Outcome.INCONCLUSIVE and post.status == "ok":
        t_last = float(post.t[-1])
        extra = integrate(field_post, post.final,
                          (t_last, t_last + 4 * (fs.t_end - fs.fct)), opt,
                          "physical", stop)
        post = concat(post, extra)
        outcome = classify_converged(to_dimless_trajectory(post, p_post), target)

    traj = concat(on, post)
    traj.scenario = fs.key
    return ScenarioResult(fs, traj, clearing, State(float(cs[0]), float(cs[1])),
                          float(assess(ctx, cs).v_value), assess(ctx, cs),
                          eac_assess(dp_post, cs, baseline=base), outcome,
                          dp_post, ctx)


def fct_sweep(p: PhysicalParams, fcts, options: IntegratorOptions | None = None,
              **scenario_kw) -> list[ScenarioResult]:
    """Run one scenario per clearing time (seconds), in the given order."""
    return [run_fault_scenario(p, FaultScenario(fct=float(f), **scenario_kw), options)
            for f in fcts]
