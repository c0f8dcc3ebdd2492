import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from shapely.geometry import Point, Polygon

from pllgss.errors import NumericalError
from pllgss.lyapunov import eac_baseline, lyapunov_context, v
from pllgss.model import DimlessParams
from pllgss.roa import (DEFAULT_WINDOW, EAC_ESTIMATE, LF_ESTIMATE, Boundary,
                        classify_points, containment_report, estimate_boundary,
                        grid_oracle, level_set_boundary, points_in_polygon,
                        polygon_area, real_roa_boundary, trace_stable_manifold)
from pllgss.sim import Outcome


@pytest.fixture(scope="module")
def real(dp):
    return real_roa_boundary(dp)


@pytest.fixture(scope="module")
def lf(ctx):
    return estimate_boundary(ctx, LF_ESTIMATE)


@pytest.fixture(scope="module")
def eac(dp):
    return estimate_boundary(eac_baseline(dp), EAC_ESTIMATE)


@pytest.fixture(scope="module")
def coarse_grid(dp):
    return grid_oracle(dp, DEFAULT_WINDOW, 51)


def _window_mask(lo, hi):
    return lambda d, x: (d >= lo) & (d <= hi)


@st.composite
def polygons(draw):
    n = draw(st.integers(3, 9))
    ang = np.sort(draw(st.lists(st.floats(0, 2 * math.pi), min_size=n, max_size=n,
                                unique=True)))
    rad = draw(st.lists(st.floats(0.3, 2.0), min_size=n, max_size=n))
    return np.column_stack([np.cos(ang) * rad, np.sin(ang) * rad])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # shapely on degenerate draws
@given(polygons(), st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
def test_point_in_polygon_matches_shapely(poly, px, py):
    shape = Polygon(poly)
    if not shape.is_valid or shape.area < 1e-6:
        return
    pt = Point(px, py)
    if shape.exterior.distance(pt) < 1e-9:
        return
    assert bool(points_in_polygon([[px, py]], poly)[0]) == shape.contains(pt)


@given(polygons())
def test_area_matches_shapely(poly):
    shape = Polygon(poly)
    if shape.is_valid:
        assert polygon_area(poly) == pytest.approx(shape.area, rel=1e-9, abs=1e-12)


def test_edge_points_count_inside():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    assert points_in_polygon([[0.5, 0.0], [1.0, 1.0], [0.5, 0.5]], sq).all()
    assert not points_in_polygon([[1.5, 0.5]], sq)[0]


def test_estimate_boundaries_lie_on_level(ctx, dp, lf, eac):
    assert np.abs(v(ctx, (lf.delta, lf.x)) - ctx.v_cr).max() <= 1e-8
    b = eac_baseline(dp)
    assert np.abs(b.energy((eac.delta, eac.x)) - b.level).max() <= 1e-8
    assert np.isfinite(lf.points).all() and len(lf.points) >= 2


def test_lf_boundary_touches_tangent_point(ctx, lf):
    d = np.hypot(lf.delta - ctx.tangent[0], lf.x - ctx.tangent[1]).min()
    assert d < 1e-6
    assert ctx.tangent == pytest.approx((2.5798, 0.04628), abs=1e-4)


def test_marching_squares_contours(ctx, dp):
    lo, hi = ctx.window
    res = 201
    step = (DEFAULT_WINDOW[1] - DEFAULT_WINDOW[0]) / (res - 1)
    ms = level_set_boundary(lambda d, x: v(ctx, (d, x)), ctx.v_cr, DEFAULT_WINDOW, res,
                            ctx.seed, LF_ESTIMATE, mask=_window_mask(lo, hi))
    assert np.hypot(ms.delta - ctx.tangent[0], ms.x - ctx.tangent[1]).min() < step
    refined = ms.meta["refined"]
    assert np.abs(v(ctx, (ms.delta[refined], ms.x[refined])) - ctx.v_cr).max() <= 1e-8
    b = eac_baseline(dp)
    ms_e = level_set_boundary(lambda d, x: b.energy((d, x)), b.level, DEFAULT_WINDOW, res,
                              b.seed, EAC_ESTIMATE, mask=_window_mask(*b.window))
    assert np.hypot(ms_e.delta - b.saddle[0], ms_e.x - b.saddle[1]).min() < 2 * step


def test_empty_contour_diagnostic(ctx):
    with pytest.raises(NumericalError, match="window too small"):
        level_set_boundary(lambda d, x: v(ctx, (d, x)), -1.0, (0, 1, -0.1, 0.1), 11,
                           ctx.seed)


def test_h_zero_lf_matches_pendulum_energy_contour():
    dp = DimlessParams(m=0.2, gamma=1.0, h=0.0)
    lf = estimate_boundary(lyapunov_context(dp), LF_ESTIMATE)
    en = estimate_boundary(eac_baseline(dp, "pendulum"), EAC_ESTIMATE)
    np.testing.assert_allclose(lf.points, en.points, atol=1e-9)


def test_h_zero_m_zero_lf_is_separatrix():
    lf = estimate_boundary(lyapunov_context(DimlessParams(0.0, 1.0, 0.0)), LF_ESTIMATE)
    err = np.abs(np.abs(lf.x) - 2 * np.abs(np.cos(lf.delta / 2)))
    assert err.max() <= 1e-3


def test_pendulum_stable_manifold_is_separatrix(pendulum):
    window = (-3.5, 3.5, -2.5, 2.5)
    sep_x = lambda d: 2 * np.abs(np.cos(d / 2))  # noqa: E731
    for saddle in ((math.pi, 0.0), (-math.pi, 0.0)):
        for pts, _ in trace_stable_manifold(pendulum, saddle, window).values():
            assert np.abs(np.abs(pts[:, 1]) - sep_x(pts[:, 0])).max() <= 1e-5
            # reverse direction: separatrix samples are close to the branch
            d = np.linspace(pts[:, 0].min(), pts[:, 0].max(), 50)
            ref = np.column_stack([d, np.sign(pts[len(pts) // 2, 1]) * sep_x(d)])
            dist = np.hypot(ref[:, None, 0] - pts[None, :, 0],
                            ref[:, None, 1] - pts[None, :, 1]).min(axis=1)
            assert dist.max() <= 1e-2


def test_real_roa_branches_start_at_saddles(real):
    for name, pts in real.meta["branches"].items():
        saddle = real.meta["saddles"][0 if name.startswith("left") else 1]
        assert np.hypot(*(pts[0] - saddle)) <= 1e-4
    right = real.meta["saddles"][1]
    assert np.hypot(real.delta - right[0], real.x - right[1]).min() <= 1e-4


def test_areas(real, lf, eac):
    assert lf.area <= real.area
    assert 0.5 <= lf.area / eac.area <= 1.5


def test_real_boundary_offsets(dp, real):
    # inward offsets converge to the SEP, outward ones do not
    pts = real.points
    on = real.meta["on_manifold"]
    saddles = np.array(real.meta["saddles"])
    idx = [i for i in range(1, len(pts) - 1)
           if on[i] and on[i - 1] and on[i + 1]
           and np.hypot(*(pts[i] - saddles).T).min() > 0.1]
    idx = idx[:: max(1, len(idx) // 60)]
    inner, outer = [], []
    for i in idx:
        t = pts[i + 1] - pts[i - 1]
        nrm = np.array([-t[1], t[0]]) / np.hypot(*t)
        a, b = pts[i] + 1e-2 * nrm, pts[i] - 1e-2 * nrm
        if points_in_polygon([a], pts)[0]:
            inner.append(a); outer.append(b)
        else:
            inner.append(b); outer.append(a)
    inner, outer = np.array(inner), np.array(outer)
    lab_in = classify_points(dp, inner[:, 0], inner[:, 1])
    lab_out = classify_points(dp, outer[:, 0], outer[:, 1])
    assert (lab_in == Outcome.STABLE.value).all()
    assert (lab_out == Outcome.UNSTABLE.value).all()


def test_lf_boundary_samples_are_stable(dp, lf):
    pts = lf.points[::8]
    lab = classify_points(dp, pts[:, 0], pts[:, 1])
    assert (lab == Outcome.STABLE.value).all()


def test_oracle_simple_cells(dp):
    lab = classify_points(dp, np.array([dp.delta_s, dp.delta_s]), np.array([0.0, 10.0]))
    assert lab.tolist() == ["Stable", "Unstable"]


def test_grid_oracle_labels_every_cell(coarse_grid):
    assert coarse_grid.resolution == (51, 51)
    assert set(np.unique(coarse_grid.labels)) <= {"Stable", "Unstable", "Inconclusive"}
    assert coarse_grid.count(Outcome.INCONCLUSIVE) == 0


def test_containment_coarse(coarse_grid, lf, eac):
    rep = containment_report(lf, coarse_grid)
    assert rep.violations == [] and rep.fraction_contained == 1.0
    assert containment_report(eac, coarse_grid).violations
    dot = Boundary(LF_ESTIMATE, np.array([list(coarse_grid.sep)]))
    assert containment_report(dot, coarse_grid).violations == []


def test_real_roa_matches_oracle(real, coarse_grid):
    inside = points_in_polygon(coarse_grid.points(), real.points)
    stable = coarse_grid.flat_labels() == "Stable"
    # cells within one spacing of the boundary may go either way
    step = coarse_grid.delta[1] - coarse_grid.delta[0]
    near = np.array([np.hypot(real.delta - a, real.x - b).min() < step
                     for a, b in coarse_grid.points()])
    assert np.all((inside == stable) | near)
