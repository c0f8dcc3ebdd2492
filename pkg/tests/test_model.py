import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pllgss.errors import ModelValidityError, ParameterError
from pllgss.model import (DimlessParams, PhysicalParams, derive_dimless, load_params,
                          params_from_dict, time_scale, to_dimless_state,
                          to_physical_state, vector_field_dimless,
                          vector_field_physical)

phys_params = st.builds(
    PhysicalParams,
    u_g_pu=st.floats(0.3, 1.5),
    x_g_pu=st.floats(0.1, 1.0),
    r_g_pu=st.floats(0.0, 0.2),
    i_sd_pu=st.floats(-1.2, 1.2),
    i_sq_pu=st.floats(-0.5, 0.5),
    k_pn=st.floats(1.0, 60.0),
    k_in=st.floats(10.0, 2000.0),
)
angles = st.floats(-6.0, 6.0)
small = st.floats(-200.0, 200.0)


def test_reference_reduction(dp):
    assert dp.m == 0.5
    assert dp.gamma == pytest.approx(math.sqrt(2), abs=1e-12)
    assert dp.h == pytest.approx(math.sqrt(200) * 0.5 / (100 * math.pi), rel=1e-12)
    assert dp.gamma_h == pytest.approx(20 * 0.5 / (100 * math.pi), rel=1e-12)
    assert dp.delta_s == pytest.approx(math.pi / 6, abs=1e-15)


def test_low_voltage_variant_has_no_equilibrium(phys):
    dp = derive_dimless(phys.with_voltage(0.2))
    assert dp.m == pytest.approx(2.5)
    assert dp.gamma == pytest.approx(20 * math.sqrt(0.2) / math.sqrt(200))
    assert dp.h == pytest.approx(math.sqrt(200) * 0.5 / (100 * math.pi * math.sqrt(0.2)))
    # gamma*h does not depend on the grid voltage
    assert dp.gamma_h == pytest.approx(derive_dimless(phys).gamma_h, rel=1e-12)
    assert not dp.has_sep and dp.delta_s is None and math.isnan(dp.h_c)


def test_zero_current_gives_origin_sep():
    dp = derive_dimless(PhysicalParams(i_sd_pu=0.0))
    assert dp.m == 0 and dp.h == 0 and dp.delta_s == 0


@given(phys_params)
def test_gamma_h_invariant(p):
    if p.gamma_h >= 1:
        return
    dp = derive_dimless(p)
    assert dp.gamma * dp.h == pytest.approx(p.k_pn * p.x_g_pu * p.i_sd_pu / p.omega_g,
                                            rel=1e-10, abs=1e-15)


@given(phys_params, angles, st.floats(-50.0, 50.0))
def test_state_map_roundtrip(p, d, xi):
    s = to_dimless_state(p, (d, xi))
    back = to_physical_state(p, s)
    assert back[0] == d
    assert back[1] == pytest.approx(xi, rel=1e-12, abs=1e-12)


@given(phys_params, angles, st.floats(-50.0, 50.0))
def test_physical_field_is_rescaled_dimless_field(p, d, xi):
    # d/dt = sigma * d/dtau, with x = x_int / sqrt(k_in U_g)
    if p.gamma_h >= 1:
        return
    dp = derive_dimless(p)
    sigma = time_scale(p)
    scale = math.sqrt(p.k_in * p.u_g_pu)
    fd, fx = vector_field_physical(p, (d, xi))
    gd, gx = vector_field_dimless(dp, to_dimless_state(p, (d, xi)))
    assert fd == pytest.approx(sigma * gd, rel=1e-9, abs=1e-9)
    assert fx == pytest.approx(sigma * gx * scale, rel=1e-9, abs=1e-9)


def test_physical_field_matches_pll_equations(phys):
    # direct evaluation of the PI loop with the algebraic frequency coupling
    d, xi = 0.7, 3.0
    e = phys.drive - phys.u_g_pu * math.sin(d)
    k = 1 - phys.gamma_h
    fd, fx = vector_field_physical(phys, (d, xi))
    assert fd == pytest.approx((phys.k_pn * e + xi) / k, rel=1e-13)
    assert fx == pytest.approx(
        phys.k_in * (e + phys.x_g_pu * phys.i_sd_pu / phys.omega_g * xi) / k, rel=1e-13)


def test_vector_field_broadcasts(dp):
    d = np.linspace(-3, 3, 7)
    a, b = vector_field_dimless(dp, (d, np.zeros_like(d)))
    assert a.shape == b.shape == (7,)
    np.testing.assert_allclose(np.asarray(a), dp.gamma * np.asarray(b))


@pytest.mark.parametrize("kw", [dict(k_pn=0.0), dict(k_in=-1.0), dict(x_g_pu=0.0),
                                dict(u_g_pu=-0.1), dict(k_pn=math.nan)])
def test_invalid_physical(kw):
    with pytest.raises(ParameterError):
        PhysicalParams(**kw)


def test_model_validity():
    with pytest.raises(ModelValidityError):
        DimlessParams(m=0.1, gamma=2.0, h=0.5)
    with pytest.raises(ParameterError):
        DimlessParams(m=0.1, gamma=-1.0, h=0.0)
    with pytest.raises(ParameterError):
        derive_dimless(PhysicalParams(u_g_pu=0.0))


def test_params_from_dict_scr(phys):
    p = params_from_dict({"schema": 1, "scr": 2, "u_g_pu": 1, "i_sd_pu": 1,
                          "i_sq_pu": 0, "k_pn": 20, "k_in": 200, "f_g_hz": 50})
    assert p == phys


@pytest.mark.parametrize("doc", [{"scr": 2, "x_g_pu": 0.5}, {"scr": 0},
                                 {"typo_key": 1}, {"schema": 2}, {"k_pn": "abc"}, [1]])
def test_params_from_dict_rejects(doc):
    with pytest.raises(ParameterError):
        params_from_dict(doc)


def test_load_params(tmp_path, phys):
    good = tmp_path / "p.json"
    good.write_text(json.dumps({"scr": 2}))
    assert load_params(good) == phys
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParameterError):
        load_params(bad)
