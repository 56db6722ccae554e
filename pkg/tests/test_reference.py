import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import OMEGA60
from hybrid_inverter.plant import NOMINAL_PARAMS, InverterParams, build_state_matrices
from hybrid_inverter.reference import (
    ReferenceSpec,
    initial_osc,
    make_gamma,
    make_pi,
    make_theta,
    osc_step,
    reference_state,
    set_amplitude,
    stability_margin,
)

# Independent derivation of the feed-forward row: the second row of
# Pi Theta = A Pi + B Gamma reads  (1/R, wC) Theta = (-1/L, 0) Pi + (V_dc/2L) Gamma,
# so Gamma = (2L/V_dc) [ (1/R, wC) Theta + (1/L) (1, 0) ].
def gamma_oracle(p, w):
    row = np.array([1 / p.R, w * p.C]) @ make_theta(w) + np.array([1 / p.L, 0.0])
    return 2 * p.L / p.V_dc * row


def test_osc_quarter_period():
    np.testing.assert_allclose(osc_step([0.0, 177.0], OMEGA60, 1 / 240), [177.0, 0.0], atol=1e-12)


def test_osc_zero_step():
    z = np.array([3.0, -4.0])
    assert np.array_equal(osc_step(z, OMEGA60, 0.0), z)


def test_osc_matches_closed_form():
    t = 0.0123
    z = osc_step(initial_osc(177.0), OMEGA60, t)
    np.testing.assert_allclose(z, [177 * math.sin(OMEGA60 * t), 177 * math.cos(OMEGA60 * t)], rtol=1e-12)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(1, 1e4), st.floats(0, 1))
def test_osc_preserves_norm(z1, z2, w, h):
    z = np.array([z1, z2])
    n0 = np.linalg.norm(z)
    assert abs(np.linalg.norm(osc_step(z, w, h)) - n0) <= 1e-12 * max(n0, 1e-300)


@given(st.integers(1, 200), st.floats(1e-7, 1e-3))
def test_osc_composition(n, h):
    z0 = initial_osc(177.0)
    z = z0
    for _ in range(n):
        z = osc_step(z, OMEGA60, h)
    np.testing.assert_allclose(z, osc_step(z0, OMEGA60, n * h), rtol=0, atol=1e-12 * 177 * n)


def test_pi_nominal():
    pi = make_pi(NOMINAL_PARAMS, OMEGA60)
    np.testing.assert_allclose(pi, [[1, 0], [0.02, 0.94248]], rtol=1e-5)
    assert pi[0, 0] == 1.0 and pi[0, 1] == 0.0


def test_reference_state_examples():
    pi = make_pi(NOMINAL_PARAMS, OMEGA60)
    np.testing.assert_allclose(reference_state([177.0, 0.0], pi), [177.0, 3.54])
    np.testing.assert_array_equal(reference_state([0.0, 0.0], pi), [0.0, 0.0])
    np.testing.assert_allclose(reference_state([0.0, 177.0], pi), [0.0, OMEGA60 * 2.5e-3 * 177])


def test_reference_current_formula():
    # i_ref(t) = wC V cos(wt) + V/R sin(wt)
    pi = make_pi(NOMINAL_PARAMS, OMEGA60)
    for t in np.linspace(0, 1 / 60, 13):
        z = osc_step(initial_osc(177.0), OMEGA60, t)
        want = OMEGA60 * NOMINAL_PARAMS.C * 177 * math.cos(OMEGA60 * t) + 177 / NOMINAL_PARAMS.R * math.sin(OMEGA60 * t)
        assert reference_state(z, pi)[1] == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_gamma_nominal():
    g = make_gamma(NOMINAL_PARAMS, OMEGA60)
    np.testing.assert_allclose(g.as_array(), gamma_oracle(NOMINAL_PARAMS, OMEGA60), rtol=1e-14)
    # sin coefficient first, then the cos coefficient
    np.testing.assert_allclose([g.g1, g.g2], [1.4002e-3, 5.655e-6], rtol=1e-4)


def test_gamma_zero_frequency():
    g = make_gamma(NOMINAL_PARAMS, 0.0)
    assert (g.g1, g.g2) == (2 / 1200, 0.0)


def test_gamma_at_resonance():
    w0 = 1 / math.sqrt(NOMINAL_PARAMS.L * NOMINAL_PARAMS.C)
    assert w0 == pytest.approx(942.8, rel=1e-4)
    assert abs(make_gamma(NOMINAL_PARAMS, w0).g1) < 1e-18


def identity_residual(p, w):
    a, b = build_state_matrices(p)
    pi = make_pi(p, w)
    lhs = pi @ make_theta(w)
    rhs = a @ pi + np.outer(b, make_gamma(p, w).as_array())
    return np.abs(lhs - rhs).max(), max(np.abs(lhs).max(), np.abs(a @ pi).max())


def test_identity_nominal():
    res, scale = identity_residual(NOMINAL_PARAMS, OMEGA60)
    assert res <= 1e-12 * scale


def test_identity_fails_with_swapped_gamma():
    # the other entry ordering does not reproduce the reference dynamics
    a, b = build_state_matrices(NOMINAL_PARAMS)
    pi = make_pi(NOMINAL_PARAMS, OMEGA60)
    g = make_gamma(NOMINAL_PARAMS, OMEGA60)
    swapped = np.array([g.g2, g.g1])
    assert np.abs(pi @ make_theta(OMEGA60) - a @ pi - np.outer(b, swapped)).max() > 1.0


def test_identity_random_parameters():
    rng = np.random.default_rng(3)
    for _ in range(10_000):
        p = InverterParams(rng.uniform(1, 1000), rng.uniform(1e-6, 1e-2), rng.uniform(1e-7, 1e-2),
                           rng.uniform(10, 5000))
        res, scale = identity_residual(p, rng.uniform(1, 1e4))
        assert res <= 1e-12 * scale


def test_margin_nominal():
    m = stability_margin(NOMINAL_PARAMS, ReferenceSpec(177.0, OMEGA60))
    assert m == pytest.approx(0.7522, abs=1e-4)
    assert stability_margin(NOMINAL_PARAMS, ReferenceSpec(0.0, OMEGA60)) == 1.0
    cutoff = 1 / make_gamma(NOMINAL_PARAMS, OMEGA60).norm
    assert cutoff == pytest.approx(714.2, abs=0.05)
    assert abs(stability_margin(NOMINAL_PARAMS, ReferenceSpec(cutoff, OMEGA60))) < 1e-12


def test_gamma_bound_over_period():
    g = make_gamma(NOMINAL_PARAMS, OMEGA60)
    v_m = 177.0
    ts = np.linspace(0, 2 * math.pi / OMEGA60, 200_001)
    vals = np.abs(g.g1 * v_m * np.sin(OMEGA60 * ts) + g.g2 * v_m * np.cos(OMEGA60 * ts))
    bound = v_m * g.norm
    assert vals.max() <= bound * (1 + 1e-12)
    assert vals.max() >= bound * (1 - 1e-6)


@given(st.floats(0, 1000), st.floats(0.1, 500))
def test_margin_decreasing_in_amplitude(v, dv):
    lo = stability_margin(NOMINAL_PARAMS, ReferenceSpec(v, OMEGA60))
    hi = stability_margin(NOMINAL_PARAMS, ReferenceSpec(v + dv, OMEGA60))
    assert hi < lo


@given(st.floats(1000, 1e5), st.floats(1, 1e4))
def test_margin_decreasing_above_resonance(w, dw):
    lo = stability_margin(NOMINAL_PARAMS, ReferenceSpec(177.0, w))
    hi = stability_margin(NOMINAL_PARAMS, ReferenceSpec(177.0, w + dw))
    assert hi < lo


def test_set_amplitude_examples():
    np.testing.assert_allclose(set_amplitude([0.0, 177.0], 185.0), [0.0, 185.0])
    np.testing.assert_allclose(set_amplitude([3.0, 4.0], 10.0), [6.0, 8.0])
    np.testing.assert_array_equal(set_amplitude([0.0, 0.0], 0.0), [0.0, 0.0])
    with pytest.raises(ValueError):
        set_amplitude([0.0, 0.0], 5.0)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
def test_set_amplitude_keeps_phase(z1, z2, v):
    if math.hypot(z1, z2) < 1e-6:
        return
    out = set_amplitude([z1, z2], v)
    assert math.atan2(out[0], out[1]) == pytest.approx(math.atan2(z1, z2), abs=1e-12)
    assert np.linalg.norm(out) == pytest.approx(v, rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        ReferenceSpec(-1.0, OMEGA60)
    with pytest.raises(ValueError):
        ReferenceSpec(177.0, 0.0)
    assert ReferenceSpec.from_hz(177, 60).period == pytest.approx(1 / 60)
