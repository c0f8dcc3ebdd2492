import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from pllgss.equilibria import (EquilibriumKind, adjacent_saddles, equilibria_in_range,
                               h_critical, jacobian, sep)
from pllgss.errors import NoSEPError, ParameterError
from pllgss.model import DimlessParams, vector_field_dimless

from conftest import finite_diff



@st.composite
def dimless(draw):
    gamma = draw(st.floats(0.05, 5.0))
    bound = min(0.5, 0.9 / gamma)
    return DimlessParams(draw(st.floats(-0.95, 0.95)), gamma, draw(st.floats(-bound, bound)))


def test_reference_equilibria(dp):
    eps = equilibria_in_range(dp, -4.5, 3.5)
    assert [e.kind for e in eps] == [EquilibriumKind.SADDLE, EquilibriumKind.SEP,
                                     EquilibriumKind.SADDLE]
    np.testing.assert_allclose([e.delta for e in eps],
                               [-7 * math.pi / 6, math.pi / 6, 5 * math.pi / 6], atol=1e-12)
    s = sep(dp)
    assert s.delta == pytest.approx(0.5235988, abs=1e-7) and s.x == 0
    left, right = adjacent_saddles(dp)
    assert left.delta == pytest.approx(-math.pi - s.delta)
    assert right.delta == pytest.approx(math.pi - s.delta)


@given(dimless())
def test_equilibria_are_zeros(dp):
    for e in equilibria_in_range(dp, -7.0, 7.0):
        a, b = vector_field_dimless(dp, e.state)
        assert abs(a) < 1e-12 and abs(b) < 1e-12


@given(dimless(), st.floats(-4, 4), st.floats(-2, 2))
def test_jacobian_matches_finite_differences(dp, d, x):
    J, _ = jacobian(dp, (d, x))
    fd_a = finite_diff(lambda s: vector_field_dimless(dp, s)[0], (d, x))
    fd_b = finite_diff(lambda s: vector_field_dimless(dp, s)[1], (d, x))
    np.testing.assert_allclose(J, [fd_a, fd_b], atol=1e-6)


@given(dimless())
def test_sep_exists_iff_below_h_c(dp):
    hc = h_critical(dp)
    assume(abs(dp.h - hc) > 1e-6)
    if dp.h < hc:
        e = sep(dp)
        assert e.kind is EquilibriumKind.SEP
        assert all(ev.real < 0 for ev in e.eigenvalues)
    else:
        with pytest.raises(NoSEPError) as info:
            sep(dp)
        assert info.value.clause == "h < h_c"


@given(dimless())
def test_saddles_have_real_eigenvalues_of_opposite_sign(dp):
    assume(dp.has_sep)
    for u in adjacent_saddles(dp):
        lo, hi = sorted(ev.real for ev in u.eigenvalues)
        assert lo < 0 < hi
        assert all(abs(ev.imag) < 1e-12 for ev in u.eigenvalues)


def test_no_equilibria_for_large_m():
    dp = DimlessParams(m=2.5, gamma=0.63, h=0.05)
    assert equilibria_in_range(dp, -10, 10) == []
    with pytest.raises(NoSEPError) as info:
        sep(dp)
    assert info.value.clause == "|m| < 1"
    with pytest.raises(ParameterError):
        h_critical(dp)


def test_undamped_has_no_sep(pendulum):
    with pytest.raises(NoSEPError) as info:
        sep(pendulum)
    # h_c = gamma sqrt(1 - m^2) = 0, so h < h_c already fails
    assert info.value.clause in ("gamma > 0", "h < h_c")
