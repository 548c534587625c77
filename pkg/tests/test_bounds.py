import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soba.bounds import (CUBE_ROOT_CASE, SQRT_CASE, TuningInput, fallback_case_bound,
                         fallback_gamma, selfconfident_check, selfconfident_gammas,
                         selfconfident_sides, regret_tuned_gamma, tuning_objective)
from soba.errors import ConfigurationError


def test_regret_tuned_gamma():
    assert regret_tuned_gamma(9, 400, 1) == 1.0
    assert regret_tuned_gamma(9, 400, 10**5) == 1.0
    assert regret_tuned_gamma(2, 1, 10**6) == pytest.approx(math.sqrt(4 * math.log(1e6) / 1e6))
    values = [regret_tuned_gamma(3, 2, T) for T in (10**3, 10**4, 10**5, 10**6)]
    assert values == sorted(values, reverse=True)


def test_tuning_input_validation():
    with pytest.raises(ConfigurationError):
        TuningInput(-1.0, 10, 1, 1)
    with pytest.raises(ConfigurationError):
        TuningInput(1.0, 0, 1, 1)
    inp = TuningInput.from_problem(5.0, 100, 3, 2, 2.0, 3.0)
    assert inp.H == pytest.approx(2 * 9 * 4 * math.log(100))
    assert inp.U == pytest.approx(9.0)


def test_fallback_cases():
    g, case = fallback_gamma(TuningInput(0.0, 1e4, 1.0, 1.0))
    assert case == SQRT_CASE and g == pytest.approx(0.01)
    g, case = fallback_gamma(TuningInput(1e9, 10.0, 1e3, 0.0))
    assert case == CUBE_ROOT_CASE and g == 1.0
    # threshold itself falls in the square-root case
    T, H, U = 100.0, 4.0, 1.0
    assert fallback_gamma(TuningInput((U + 1) * math.sqrt(H * T), T, H, U))[1] == SQRT_CASE


@settings(max_examples=300)
@given(L=st.floats(0, 1e8), T=st.floats(1, 1e8), H=st.floats(1e-3, 1e7), U=st.floats(0, 100))
def test_fallback_gamma_meets_its_case_bound(L, T, H, U):
    inp = TuningInput(L, T, H, U)
    g, case = fallback_gamma(inp)
    assert 0.0 < g <= 1.0
    assert tuning_objective(inp, g) <= fallback_case_bound(inp, case) * (1 + 1e-12)


def test_selfconfident_gammas():
    np.testing.assert_allclose(selfconfident_gammas([0.0, 0.0, 0.0], 1.0),
                               [1.0, math.sqrt(1 / 2), math.sqrt(1 / 3)])
    np.testing.assert_allclose(selfconfident_gammas([1.0, 1.0], 1.0), [1.0, 1.0])


def test_selfconfident_edge_sequences():
    b, T = 2.0, 300
    assert selfconfident_check(np.zeros(T), b, 1.0)
    lhs, _ = selfconfident_sides(np.zeros(T), b, 1.0)
    assert lhs <= 2 * math.sqrt(b * T)
    assert selfconfident_check(np.full(T, b), b, 0.5)
    assert selfconfident_check(np.array([b]), b, 3.0)


@settings(max_examples=200)
@given(c=st.lists(st.floats(0, 1), min_size=1, max_size=500),
       b=st.floats(0.01, 100), a=st.floats(1e-3, 1e3))
def test_selfconfident_inequality_holds(c, b, a):
    assert selfconfident_check(np.asarray(c) * b, b, a)


def test_selfconfident_validation():
    with pytest.raises(ConfigurationError):
        selfconfident_check([0.5, 2.0], 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        selfconfident_check([0.5], 0.0, 1.0)
    with pytest.raises(ConfigurationError):
        selfconfident_check([0.5], 1.0, 0.0)
