"""Region-of-attraction boundaries, brute-force oracle and containment checks.

Boundaries are closed polygons in the dimensionless ``(delta, x)`` plane.
Three kinds are produced:

* the real ROA, from stable manifolds of the two saddles next to the SEP,
  closed along the plot window edge;
* level-set estimates (Lyapunov function or an energy baseline), either
  traced exactly from their quadratic-in-x structure or contoured by
  marching squares on a sampled field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from skimage import measure

from .equilibria import jacobian
from .errors import NumericalError
from .model import DimlessParams, State
from .sim import CONVERGED_TOL, UNSTABLE_SPAN, IntegratorOptions, Outcome

DEFAULT_WINDOW = (-4.5, 3.5, -1.5, 1.5)
DEFAULT_RESOLUTION = 201
MANIFOLD_EPS = 1e-6
ARC_CAP = 100.0

REAL_ROA, LF_ESTIMATE, EAC_ESTIMATE = "RealROA", "LFEstimate", "EACEstimate"


@dataclass
class Boundary:
    label: str
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def delta(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def area(self) -> float:
        return polygon_area(self.points)


def polygon_area(poly: np.ndarray) -> float:
    d, x = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(d, np.roll(x, -1)) - np.dot(x, np.roll(d, -1))))


def points_in_polygon(points: np.ndarray, poly: np.ndarray,
                      edge_tol: float = 1e-12) -> np.ndarray:
    """Winding-number inclusion; points on an edge count as inside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(poly, dtype=float)
    if len(poly) > 1 and np.array_equal(poly[0], poly[-1]):
        poly = poly[:-1]
    px, py = pts[:, 0][:, None], pts[:, 1][:, None]
    if len(poly) < 3:
        dist = np.hypot(px - poly[:, 0], py - poly[:, 1]).min(axis=1)
        return dist <= edge_tol
    ax, ay = poly[:, 0][None, :], poly[:, 1][None, :]
    bx, by = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    cross = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
    up = (ay <= py) & (by > py) & (cross > 0)
    down = (ay > py) & (by <= py) & (cross < 0)
    winding = up.sum(axis=1) - down.sum(axis=1)

    ex, ey = bx - ax, by - ay
    seg2 = ex * ex + ey * ey
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.clip(((px - ax) * ex + (py - ay) * ey) / np.where(seg2 > 0, seg2, 1), 0, 1)
    dist = np.hypot(ax + u * ex - px, ay + u * ey - py).min(axis=1)
    return (winding != 0) | (dist <= edge_tol)


# --- exact level-set tracing -------------------------------------------------

def _interval_end(f: Callable, start: float, limit: float, step: float) -> tuple[float, bool]:
    """Walk from ``start`` toward ``limit`` while ``f <= 0``; return (end, clipped)."""
    direction = 1.0 if limit >= start else -1.0
    a = start
    while True:
        b = a + direction * step
        if direction * (b - limit) >= 0:
            b = limit
        if f(b) > 0:
            lo, hi = (a, b) if a < b else (b, a)
            return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps), False
        if b == limit:
            return limit, True
        a = b


def estimate_boundary(fn, label: str, n: int = 801) -> Boundary:
    """Exact boundary of ``{window, 1/2 (x - c)^2 + P <= level}`` around the SEP.

    ``fn`` provides ``center``, ``potential``, ``level``, ``window`` and
    ``seed`` (a LyapunovContext or an EnergyBaseline). The sublevel set is a
    single delta interval ``[a, b]`` containing the seed; the boundary is
    ``x = c(delta) +- sqrt(2 (level - P(delta)))`` over it.
    """
    seed = float(fn.seed[0])
    lo, hi = fn.window
    f = lambda d: float(fn.potential(d)) - fn.level  # noqa: E731
    if f(seed) > 0:
        raise NumericalError("seed lies outside the sublevel set", {"seed": seed})
    step = math.pi / 200
    b, clip_hi = _interval_end(f, seed, hi, step)
    a, clip_lo = _interval_end(f, seed, lo, step)
    theta = np.linspace(0.0, math.pi, n)
    d = a + (b - a) * (1 - np.cos(theta)) / 2
    d[0], d[-1] = a, b
    r = np.sqrt(np.maximum(0.0, 2 * (fn.level - fn.potential(d))))
    if not clip_lo:
        r[0] = 0.0
    if not clip_hi:
        r[-1] = 0.0
    c = fn.center(d)
    upper = np.column_stack([d, c + r])
    lower = np.column_stack([d, c - r])[::-1]
    pts = [upper]
    pts.append(lower[1:] if r[-1] == 0 else lower)
    poly = np.vstack(pts)
    if r[0] == 0:
        poly = poly[:-1]
    poly = np.vstack([poly, poly[:1]])
    return Boundary(label, poly, {"level": float(fn.level),
                                  "delta_range": [float(a), float(b)],
                                  "clipped": [bool(clip_lo), bool(clip_hi)]})


# --- marching squares ---------------------------------------------------------

def _axes(window, resolution: int):
    if resolution < 2:
        raise ValueError("resolution must be >= 2 per axis")
    dlo, dhi, xlo, xhi = window
    return np.linspace(dlo, dhi, resolution), np.linspace(xlo, xhi, resolution)


def level_set_boundary(evaluator: Callable, critical_value: float, window,
                       resolution: int, seed, label: str = LF_ESTIMATE,
                       mask: Callable | None = None) -> Boundary:
    """Marching-squares contour of ``evaluator == critical_value``.

    ``evaluator(delta, x)`` is sampled on a ``resolution`` square grid over
    ``window``; cells with ``mask(delta, x)`` False and the window border are
    treated as outside so contours close. Vertices on edges between two
    real samples are refined onto the level set by bracketed root finding.
    The closed contour enclosing ``seed`` (innermost if nested) is returned.
    """
    dax, xax = _axes(window, resolution)
    D, X = np.meshgrid(dax, xax, indexing="ij")
    F = np.asarray(evaluator(D, X), dtype=float)
    inside = np.isfinite(F)
    if mask is not None:
        inside &= np.asarray(mask(D, X), dtype=bool)
    big = critical_value + 1.0 + float(np.nanmax(np.abs(F[inside]))) if inside.any() else critical_value + 1.0
    G = np.pad(np.where(inside, F, big), 1, constant_values=big)
    valid = np.pad(inside, 1, constant_values=False)
    raw = measure.find_contours(G, critical_value)

    dd, dx = dax[1] - dax[0], xax[1] - xax[0]
    to_plane = lambda rc: np.column_stack([dax[0] + (rc[:, 0] - 1) * dd,  # noqa: E731
                                           xax[0] + (rc[:, 1] - 1) * dx])
    best = None
    for rc in raw:
        if len(rc) < 4 or not np.allclose(rc[0], rc[-1]):
            continue
        poly = to_plane(rc)
        if not points_in_polygon(np.array([seed[:2]]), poly)[0]:
            continue
        area = polygon_area(poly)
        if best is None or area < best[0]:
            best = (area, rc, poly)
    if best is None:
        raise NumericalError("empty contour around the seed; window too small?",
                             {"window": list(window), "level": critical_value,
                              "n_contours": len(raw)})
    _, rc, poly = best
    refined = np.zeros(len(poly), dtype=bool)
    g = lambda d, x: float(evaluator(d, x)) - critical_value  # noqa: E731
    for k, (r, c) in enumerate(rc):
        ri, ci = round(r), round(c)
        if abs(r - ri) < 1e-9 and valid[ri, math.floor(c)] and valid[ri, math.ceil(c)]:
            c0, c1 = math.floor(c), math.ceil(c)
            d0 = dax[ri - 1]
            x0, x1 = xax[c0 - 1], xax[c1 - 1]
            if c0 != c1 and g(d0, x0) * g(d0, x1) < 0:
                poly[k] = (d0, brentq(lambda x: g(d0, x), x0, x1, xtol=1e-14))
                refined[k] = True
        elif abs(c - ci) < 1e-9 and valid[math.floor(r), ci] and valid[math.ceil(r), ci]:
            r0, r1 = math.floor(r), math.ceil(r)
            x0 = xax[ci - 1]
            d0, d1 = dax[r0 - 1], dax[r1 - 1]
            if r0 != r1 and g(d0, x0) * g(d1, x0) < 0:
                poly[k] = (brentq(lambda d: g(d, x0), d0, d1, xtol=1e-14), x0)
                refined[k] = True
    poly[-1] = poly[0]
    return Boundary(label, poly, {"level": float(critical_value), "refined": refined,
                                  "resolution": resolution, "window": list(window)})


# --- stable manifolds -----------------------------------------------------------

def stable_direction(dp: DimlessParams, saddle) -> np.ndarray:
    """Unit stable eigenvector at a saddle, oriented with ``x >= 0``."""
    J, _ = jacobian(dp, saddle)
    w, vecs = np.linalg.eig(J)
    k = int(np.argmin(w.real))
    if not w[k].real < 0 or not w[1 - k].real > 0:
        raise NumericalError("equilibrium is not a saddle",
                             {"delta": float(saddle[0]), "eigenvalues": [str(z) for z in w]})
    v = np.real(vecs[:, k])
    v = v / np.linalg.norm(v)
    if v[1] < 0 or (v[1] == 0 and v[0] < 0):
        v = -v
    return v


def _trace(dp: DimlessParams, start: np.ndarray, window, arc_cap: float,
           options: IntegratorOptions) -> tuple[np.ndarray, bool]:
    dlo, dhi, xlo, xhi = window

    def rhs(_t, y):
        e = dp.m - math.sin(y[0])
        f0, f1 = dp.gamma * e + y[1], e + dp.h * y[1]
        return [-f0, -f1, math.hypot(f0, f1)]

    walls = [lambda t, y: y[0] - dlo, lambda t, y: dhi - y[0],
             lambda t, y: y[1] - xlo, lambda t, y: xhi - y[1],
             lambda t, y: arc_cap - y[2]]
    for w in walls:
        w.terminal, w.direction = True, -1
    sol = solve_ivp(rhs, (0.0, 1e4), [start[0], start[1], 0.0], method=options.method,
                    rtol=options.rtol, atol=options.atol, max_step=0.02, events=walls)
    pts = sol.y[:2].T
    for k in range(4):
        if sol.t_events[k].size:
            exit_pt = sol.y_events[k][0][:2].copy()
            exit_pt[k // 2] = window[k]
            return np.vstack([pts, exit_pt]), True
    return pts, False


def trace_stable_manifold(dp: DimlessParams, saddle, window=DEFAULT_WINDOW,
                          eps: float = MANIFOLD_EPS, arc_cap: float = ARC_CAP,
                          options: IntegratorOptions | None = None) -> dict:
    """Both stable-manifold branches of a saddle, traced in reverse time.

    Each branch starts at the saddle itself and ends where it first leaves
    ``window`` (or where the arc-length cap was hit). Returns ``{"upper": (pts, exited),
    "lower": (pts, exited)}``; "upper" starts on the ``x > 0`` side.
    """
    opt = options or IntegratorOptions()
    s = np.array([float(saddle[0]), float(saddle[1])])
    v = stable_direction(dp, s)
    out = {}
    for name, sign in (("upper", 1.0), ("lower", -1.0)):
        pts, exited = _trace(dp, s + sign * eps * v, window, arc_cap, opt)
        out[name] = (np.vstack([s, pts]), exited)
    return out


def _expanded(window, factor: float) -> tuple[float, float, float, float]:
    dlo, dhi, xlo, xhi = window
    W, H = dhi - dlo, xhi - xlo
    return (dlo - factor * W, dhi + factor * W, xlo - factor * H, xhi + factor * H)


def real_roa_boundary(dp: DimlessParams, window=DEFAULT_WINDOW,
                      eps: float = MANIFOLD_EPS, arc_cap: float = ARC_CAP,
                      options: IntegratorOptions | None = None,
                      trace_margin: float = 1.0) -> Boundary:
    """ROA boundary of the SEP from the stable manifolds of its two saddles.

    Branches are traced in the window enlarged by ``trace_margin`` times its
    size on every side, because a branch may leave the plot window and come
    back. The returned polygon is the face containing the SEP of the
    arrangement formed by the clipped branches and the window frame. It need
    not pass through both saddles: with a tilted potential, one saddle's
    upper branch can shield the SEP from the other saddle.
    """
    from shapely.geometry import LineString, Point, box
    from shapely.ops import polygonize, unary_union

    from .equilibria import adjacent_saddles, sep

    ep = sep(dp)
    left, right = adjacent_saddles(dp)
    dlo, dhi, xlo, xhi = window
    for u in (left, right):
        if not (dlo < u.delta < dhi and xlo < 0 < xhi):
            raise NumericalError("empty contour: saddle outside the plot window; "
                                 "window too small?",
                                 {"saddle": u.delta, "window": list(window)})
    ext = _expanded(window, trace_margin)
    branches = {}
    for side, u in (("left", left), ("right", right)):
        for name, (pts, exited) in trace_stable_manifold(dp, u.state, ext, eps,
                                                         arc_cap, options).items():
            branches[f"{side}_{name}"] = pts
    frame = box(dlo, xlo, dhi, xhi)
    lines = [LineString(p).intersection(frame) for p in branches.values()]
    faces = list(polygonize(unary_union(lines + [frame.exterior])))
    seed = Point(ep.delta, 0.0)
    face = next((f for f in faces if f.contains(seed)), None)
    if face is None:
        raise NumericalError("no face of the manifold arrangement encloses the SEP",
                             {"window": list(window), "n_faces": len(faces)})
    poly = np.asarray(face.exterior.coords, dtype=float)
    on_frame = ((np.abs(poly[:, 0] - dlo) < 1e-12) | (np.abs(poly[:, 0] - dhi) < 1e-12)
                | (np.abs(poly[:, 1] - xlo) < 1e-12) | (np.abs(poly[:, 1] - xhi) < 1e-12))
    return Boundary(REAL_ROA, poly, {
        "saddles": [[left.delta, 0.0], [right.delta, 0.0]],
        "on_manifold": ~on_frame,
        "branches": branches,
        "trace_window": list(ext),
    })


# --- brute-force oracle ---------------------------------------------------------

@dataclass
class ClassificationGrid:
    delta: np.ndarray
    x: np.ndarray
    labels: np.ndarray  # (len(delta), len(x)) of Outcome values
    sep: State

    @property
    def resolution(self) -> tuple[int, int]:
        return self.labels.shape

    def points(self) -> np.ndarray:
        D, X = np.meshgrid(self.delta, self.x, indexing="ij")
        return np.column_stack([D.ravel(), X.ravel()])

    def flat_labels(self) -> np.ndarray:
        return self.labels.ravel()

    def count(self, outcome: Outcome) -> int:
        return int((self.labels == outcome.value).sum())


def classify_points(dp: DimlessParams, d0: np.ndarray, x0: np.ndarray,
                    horizon: float = 200.0, chunk: float = 10.0,
                    tol: float = CONVERGED_TOL,
                    options: IntegratorOptions | None = None) -> np.ndarray:
    """Forward-simulate many initial states at once and label each one.

    Same rules as ``sim.classify_converged``, checked at the end of every
    ``chunk`` of dimensionless time; decided states leave the batch.
    Undecided states get a second pass up to ``4 * horizon``.
    """
    opt = options or IntegratorOptions(rtol=1e-8, atol=1e-10)
    ds = math.asin(dp.m)
    d = np.asarray(d0, dtype=float).ravel().copy()
    x = np.asarray(x0, dtype=float).ravel().copy()
    labels = np.full(d.size, Outcome.INCONCLUSIVE.value, dtype="<U12")
    active = np.arange(d.size)

    def decide(idx, dd, xx):
        bad = ~(np.isfinite(dd) & np.isfinite(xx))
        far = np.abs(dd - ds) > UNSTABLE_SPAN
        near = np.hypot(dd - ds, xx) <= tol
        k = np.round((dd - ds) / (2 * math.pi))
        other = (k != 0) & (np.hypot(dd - ds - 2 * math.pi * k, xx) <= tol)
        labels[idx[near & ~bad]] = Outcome.STABLE.value
        labels[idx[bad | far | other]] = Outcome.UNSTABLE.value
        return ~(near | bad | far | other)

    keep = decide(active, d, x)
    active = active[keep]
    t = 0.0
    while active.size and t < 4 * horizon:
        n = active.size

        def rhs(_t, y, n=n):
            e = dp.m - np.sin(y[:n])
            return np.concatenate([dp.gamma * e + y[n:], e + dp.h * y[n:]])

        with np.errstate(over="ignore", invalid="ignore"):
            sol = solve_ivp(rhs, (t, t + chunk), np.concatenate([d[active], x[active]]),
                            method=opt.method, rtol=opt.rtol, atol=opt.atol,
                            t_eval=[t + chunk])
        if sol.status != 0 or sol.y.shape[1] == 0:
            raise NumericalError(f"batched integration failed: {sol.message}",
                                 {"t": t, "active": int(n)})
        d[active], x[active] = sol.y[:n, -1], sol.y[n:, -1]
        t += chunk
        keep = decide(active, d[active], x[active])
        active = active[keep]
    return labels


def grid_oracle(dp: DimlessParams, window=DEFAULT_WINDOW,
                resolution: int = DEFAULT_RESOLUTION, horizon: float = 200.0,
                options: IntegratorOptions | None = None) -> ClassificationGrid:
    from .equilibria import sep

    ep = sep(dp)
    dax, xax = _axes(window, resolution)
    D, X = np.meshgrid(dax, xax, indexing="ij")
    labels = classify_points(dp, D, X, horizon=horizon, options=options)
    return ClassificationGrid(dax, xax, labels.reshape(D.shape), ep.state)


@dataclass
class ContainmentReport:
    violations: list[State]
    fraction_contained: float
    n_inside: int
    n_inconclusive_inside: int = 0


def containment_report(inner: Boundary, oracle: ClassificationGrid) -> ContainmentReport:
    """Oracle-Unstable grid points lying inside ``inner``."""
    pts = oracle.points()
    lab = oracle.flat_labels()
    inside = points_in_polygon(pts, inner.points)
    bad = inside & (lab == Outcome.UNSTABLE.value)
    unk = inside & (lab == Outcome.INCONCLUSIVE.value)
    n_in = int(inside.sum())
    stable_in = int((inside & (lab == Outcome.STABLE.value)).sum())
    frac = stable_in / n_in if n_in else 1.0
    return ContainmentReport([State(float(a), float(b)) for a, b in pts[bad]],
                             frac, n_in, int(unk.sum()))


TABLE1_FCTS = (0.080, 0.110, 0.130, 0.140)


@dataclass
class Fig4Result:
    ctx: object
    baseline: object
    boundaries: list[Boundary]
    grid: ClassificationGrid | None
    containment: dict[str, ContainmentReport]
    trajectories: dict  # scenario key -> dimensionless Trajectory
    scenarios: list


def fig4_bundle(p, window=DEFAULT_WINDOW, resolution: int = DEFAULT_RESOLUTION,
                fcts=TABLE1_FCTS, oracle: bool = True,
                baseline_form: str = "swing") -> Fig4Result:
    """Real ROA, both estimates, optional oracle grid and fault trajectories.

    Trajectories are expressed in the post-fault dimensionless coordinates
    over their whole length (fault-on part included), with physical time.
    """
    from .lyapunov import eac_baseline, lyapunov_context
    from .model import derive_dimless
    from .sim import FaultScenario, run_fault_scenario, to_dimless_trajectory

    dp = derive_dimless(p)
    ctx = lyapunov_context(dp)
    base = eac_baseline(dp, baseline_form)
    real = real_roa_boundary(dp, window)
    lf = estimate_boundary(ctx, LF_ESTIMATE)
    eac = estimate_boundary(base, EAC_ESTIMATE)
    grid = grid_oracle(dp, window, resolution) if oracle else None
    contain = {}
    if grid is not None:
        contain = {b.label: containment_report(b, grid) for b in (lf, eac)}
    trajs, results = {}, []
    for f in fcts:
        res = run_fault_scenario(p, FaultScenario(fct=float(f), pre_u_g_pu=p.u_g_pu,
                                                  post_u_g_pu=p.u_g_pu))
        results.append(res)
        trajs[res.scenario.key] = to_dimless_trajectory(res.trajectory, p)
    return Fig4Result(ctx, base, [real, lf, eac], grid, contain, trajs, results)
