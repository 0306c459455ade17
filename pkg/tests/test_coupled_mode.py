import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from purcell_bpf.coupled_mode import (
    FILTER_STAGE,
    QUBIT,
    READOUT_RESONATOR,
    CoupledModeNetwork,
    DecayRecord,
    Spectrum,
    attach_mode,
    build_filter_network,
    calibrate_coupling,
    fit_exponential_decay,
    golden_rule_rate,
    kappa_from_q,
    ldos,
    ldos_all,
    near_zero_points,
    s_parameters,
    time_evolve,
)
from purcell_bpf.errors import (
    BroadeningRequiredError,
    CalibrationError,
    DomainError,
    FitError,
    SingularityError,
    StabilityError,
)
from purcell_bpf.prototype import synth_maximally_flat

from conftest import DW, TWO_PI, W0


def _filter(n, il, w0=W0, dw=DW):
    return build_filter_network(synth_maximally_flat(n, il), w0, dw)


def test_network_layout():
    net = _filter(4, 20.0)
    assert net.n_modes == 4
    assert net.port_labels == ("input", "output")
    assert list(net.port_modes) == [0, 3]
    assert net.mode_roles == (FILTER_STAGE,) * 4
    assert net.external_decay[1] == net.external_decay[2] == 0


def test_single_stage_carries_both_ports():
    net = _filter(1, 10.0)
    assert list(net.port_modes) == [0, 0]
    assert sum(net.port_rates) == pytest.approx(net.external_decay[0])
    s = s_parameters(net, [W0]).values[0]
    assert abs(s[1, 0]) ** 2 == pytest.approx(0.1, rel=1e-9)


def test_network_validation():
    with pytest.raises(DomainError):
        CoupledModeNetwork([1.0, 1.0], [[0, 1], [0.5, 0]], [1.0, 0.0], ((0, "a"),), ("x", "x"))
    with pytest.raises(DomainError):
        CoupledModeNetwork([1.0], [[0.0]], [1.0], (), ("x",))
    with pytest.raises(DomainError):
        CoupledModeNetwork([1.0], [[0.0]], [1.0], ((0, "a"), (0, "b")), ("x",), (0.3, 0.3))


@given(st.integers(1, 8), st.floats(0.0, 40.0))
@settings(max_examples=25, deadline=None)
def test_scattering_unitary(n, il):
    net = _filter(n, il)
    grid = np.linspace(W0 - 2 * DW, W0 + 2 * DW, 301)
    s = s_parameters(net, grid).values
    eye = np.eye(s.shape[1])
    err = np.abs(np.einsum("fji,fjk->fik", s.conj(), s) - eye).max()
    assert err < 1e-9
    # reciprocity
    assert np.allclose(s, np.transpose(s, (0, 2, 1)), atol=1e-12)


def test_response_is_maximally_flat():
    # |S21|^2 of the bandpass should follow the prototype response
    net = _filter(5, 10.0)
    grid = np.linspace(W0 - DW, W0 + DW, 41)
    s = s_parameters(net, grid).values[:, 1, 0]
    x = 2 * (grid - W0) / DW
    assert np.allclose(np.abs(s) ** 2, 0.1 / (1 + x**10), rtol=5e-3, atol=1e-6)


def test_ldos_sum_rule_and_positivity():
    net = _filter(3, 0.0)
    # the end stages are Lorentzian-like with width ~DW, so the window is wide
    half = 400 * DW
    grid = np.linspace(W0 - half, W0 + half, 400001)
    rho = ldos_all(net, grid).values
    assert np.all(rho >= 0)
    area = np.trapezoid(rho, grid, axis=0) if hasattr(np, "trapezoid") else np.trapz(rho, grid, axis=0)
    assert np.allclose(area, 1.0, atol=2e-3)


def test_ldos_single_mode_lorentzian():
    net = CoupledModeNetwork([10.0], [[0.0]], [2.0], ((0, "p"),), ("x",))
    w = np.array([9.0, 10.0, 11.5])
    expected = (1.0 / math.pi) * 1.0 / ((w - 10.0) ** 2 + 1.0)
    assert np.allclose(ldos(net, 0, w).values, expected)


def test_lossless_needs_broadening():
    net = CoupledModeNetwork([1.0, 1.2], [[0, 0.1], [0.1, 0]], [0.0, 0.0], (), ("x", "x"))
    with pytest.raises(BroadeningRequiredError):
        ldos(net, 0, [1.0])
    assert ldos(net, 0, [1.0], kappa_floor=1e-3).values[0] > 0


def test_singular_resolvent():
    # a lossless, uncoupled mode probed exactly at its frequency
    net = CoupledModeNetwork([1.0, 2.0], [[0, 0], [0, 0]], [0.0, 1.0], ((1, "p"),), ("x", "y"))
    with pytest.raises(SingularityError):
        s_parameters(net, [1.0])


def test_grid_must_increase():
    net = _filter(2, 0.0)
    with pytest.raises(DomainError):
        s_parameters(net, [W0, W0])
    with pytest.raises(DomainError):
        Spectrum([2.0, 1.0], [0, 0])


def test_near_zero_points():
    f = np.linspace(0, 1, 11)
    rho = np.ones(11)
    rho[3] = 0.001
    rho[7] = 0.5
    assert list(near_zero_points(f, rho)) == [f[3]]


def test_golden_rule_and_calibration_round_trip():
    net = _filter(4, 20.0)
    c = calibrate_coupling(net, 0, W0 + 0.1 * DW, TWO_PI * 15e6)
    assert golden_rule_rate(net, 0, W0 + 0.1 * DW, c) == pytest.approx(TWO_PI * 15e6, rel=1e-12)
    assert calibrate_coupling(net, 0, W0, 0.0) == 0.0


def test_calibration_fails_on_dark_mode():
    # a mode with no path to any port has zero LDOS
    net = CoupledModeNetwork([1.0, 1.0], [[0, 0], [0, 0]], [0.1, 0.0], ((0, "p"),), ("x", "x"))
    with pytest.raises(CalibrationError):
        calibrate_coupling(net, 1, 1.05, 0.01)


def test_attach_mode():
    net = attach_mode(_filter(3, 0.0), W0 + 1e8, 1, 5e6, READOUT_RESONATOR)
    assert net.n_modes == 4
    assert net.coupling[3, 1] == net.coupling[1, 3] == 5e6
    assert net.mode_roles[-1] == READOUT_RESONATOR
    with pytest.raises(DomainError):
        attach_mode(net, W0, 9, 1.0, QUBIT)


def _resonator_on(stage, c=TWO_PI * 20e6, il=20.0):
    return attach_mode(_filter(6, il), W0, stage - 1, c, READOUT_RESONATOR)


def test_time_evolution_conserves_energy():
    net = _resonator_on(1)
    rec = time_evolve(net, 6, 3e-7, 2.5e-11)
    assert np.max(np.abs(rec.total() - 1)) < 1e-9
    assert rec.mode_energy[0, 6] == 1.0
    assert rec.times[-1] == pytest.approx(3e-7)


def test_time_evolution_matches_matrix_exponential():
    # independent oracle: eigendecomposition of the generator
    net = _resonator_on(2, c=TWO_PI * 40e6, il=0.0)
    rec = time_evolve(net, 6, 1e-7, 2.5e-11)
    h = net.effective_hamiltonian() - np.mean(net.mode_frequencies) * np.eye(7)
    lam, v = np.linalg.eig(-1j * h)
    a0 = np.zeros(7, complex)
    a0[6] = 1
    coef = np.linalg.solve(v, a0)
    t = rec.times[-1]
    exact = v @ (coef * np.exp(lam * t))
    assert np.allclose(rec.mode_energy[-1], np.abs(exact) ** 2, atol=1e-9)


def test_stability_rule():
    net = _resonator_on(1)
    with pytest.raises(StabilityError):
        time_evolve(net, 6, 1e-7, 1e-9)


def test_time_evolve_validation():
    net = _resonator_on(1)
    with pytest.raises(DomainError):
        time_evolve(net, 10, 1e-7, 1e-11)
    with pytest.raises(DomainError):
        time_evolve(net, 0, -1.0, 1e-11)


def test_fit_exponential_decay_exact():
    t = np.linspace(0, 10, 201)
    energy = np.exp(-0.7 * t)[:, None]
    rec = DecayRecord(t, energy, np.zeros((201, 0)), ())
    fit = fit_exponential_decay(rec, 0)
    assert fit.rate == pytest.approx(0.7, rel=1e-12)
    assert fit.residual < 1e-12


def test_fit_rejects_short_or_oscillating_records():
    t = np.linspace(0, 1, 50)
    with pytest.raises(FitError):
        fit_exponential_decay(DecayRecord(t, np.exp(-0.1 * t)[:, None], np.zeros((50, 0)), ()), 0)
    t = np.linspace(0, 20, 2001)
    wobbly = (np.exp(-0.3 * t) * (1.5 + np.cos(3 * t)) / 2.5)[:, None]
    with pytest.raises(FitError):
        fit_exponential_decay(DecayRecord(t, wobbly, np.zeros((2001, 0)), ()), 0)


def test_kappa_from_q():
    assert kappa_from_q(1e9, 100.0) == pytest.approx(1e7)
    with pytest.raises(DomainError):
        kappa_from_q(1e9, 0.0)
