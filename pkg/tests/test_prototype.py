import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from purcell_bpf.errors import DomainError
from purcell_bpf.prototype import (
    FilterSpec,
    PrototypeCoefficients,
    butterworth_closed_form,
    coupling_rates,
    synth_maximally_flat,
)

orders = st.integers(min_value=1, max_value=10)
losses = st.floats(min_value=0.0, max_value=60.0, allow_nan=False)


def test_single_pole_zero_loss():
    assert np.allclose(synth_maximally_flat(1, 0.0).products, [2.0, 2.0], atol=1e-14)


def test_products_for_20db_sixth_order():
    got = synth_maximally_flat(6, 20.0).products
    want = [618.3135, 2.73433, 2.73434, 1.86759, 0.911446, 0.196317, 0.258927]
    assert np.allclose(got, want, rtol=1e-5)


@given(orders, losses)
@settings(max_examples=40, deadline=None)
def test_transducer_gain_matches_target(n, il):
    proto = synth_maximally_flat(n, il)
    w = np.array([0.0, 0.3, 1.0, 1.7])
    target = 10 ** (-il / 10) / (1 + w ** (2 * n))
    assert np.allclose(proto.transducer_gain(w), target, rtol=1e-8, atol=1e-14)


@given(orders)
@settings(max_examples=10, deadline=None)
def test_zero_loss_is_palindromic(n):
    p = synth_maximally_flat(n, 0.0).products
    assert np.allclose(p, p[::-1], rtol=1e-12)


@given(orders)
@settings(max_examples=10, deadline=None)
def test_closed_form_matches_synthesis(n):
    assert np.allclose(synth_maximally_flat(n, 0.0).g_values, butterworth_closed_form(n).g_values, atol=1e-12)


def test_first_product_scales_with_linear_loss():
    # once the input is weak, g0 g1 is proportional to 10^(IL/10)
    a = synth_maximally_flat(5, 30.0).products[0]
    b = synth_maximally_flat(5, 40.0).products[0]
    assert b / a == pytest.approx(10.0, rel=2e-3)


def test_interior_products_saturate():
    a = synth_maximally_flat(6, 50.0).products[1:]
    b = synth_maximally_flat(6, 80.0).products[1:]
    assert np.allclose(a, b, rtol=1e-4)


def test_extreme_cases_converge():
    p = synth_maximally_flat(12, 100.0)
    assert np.all(np.isfinite(p.g_values)) and np.all(p.g_values > 0)


@pytest.mark.parametrize("n,il", [(0, 0.0), (-1, 3.0), (2, -1.0), (2, math.nan), (2, 101.0)])
def test_invalid_inputs(n, il):
    with pytest.raises(DomainError):
        synth_maximally_flat(n, il)


def test_from_products_round_trip():
    p = synth_maximally_flat(4, 10.0)
    q = PrototypeCoefficients.from_products(p.products)
    assert np.allclose(q.products, p.products, rtol=1e-14)


def test_coefficients_are_read_only():
    p = synth_maximally_flat(3, 0.0)
    with pytest.raises(ValueError):
        p.g_values[0] = 2.0


def test_coupling_rates():
    bw = 2 * math.pi * 600e6
    p = synth_maximally_flat(6, 0.0)
    c, k_in, k_out = coupling_rates(p, bw)
    g = p.products
    assert k_in == pytest.approx(bw / g[0])
    assert k_out == pytest.approx(bw / g[-1])
    assert np.allclose(c, bw / (2 * np.sqrt(g[1:-1])))


def test_filter_spec_validation():
    with pytest.raises(DomainError):
        FilterSpec(3, 0.0, 1.0, 5.0)
    with pytest.raises(DomainError):
        FilterSpec(3, 0.0, 10.0, 0.0)
    spec = FilterSpec(3, 10.0, 10.0, 1.0)
    assert np.allclose(spec.prototype().products, synth_maximally_flat(3, 10.0).products)
