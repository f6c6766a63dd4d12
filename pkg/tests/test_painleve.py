import math

import numpy as np
import pytest

from mkdvh import genairy
from mkdvh.painleve import (
    ASParams, FitDiverged, RhoOutOfRange, Trajectory, WindowTooShallow, as_solve,
    connection_fit, connection_predict, tail_model, wrap_phase,
)


@pytest.fixture(scope="module")
def half():
    return as_solve(ASParams(1, 0.5))


def test_zero_rho_is_trivial():
    t = as_solve(ASParams(2, 0.0))
    assert not np.any(t.jets)
    with pytest.raises(FitDiverged):
        connection_fit(t)


def test_rho_range():
    with pytest.raises(RhoOutOfRange):
        ASParams(1, 1.0)
    with pytest.raises(RhoOutOfRange):
        connection_predict(1, 0.0)


def test_initial_jet_is_scaled_airy(half):
    x0 = half.xs[0]
    t = genairy.ai_grid(1, [x0], 1)
    assert np.allclose(half.jets[0], 0.5 * t.values[0], rtol=1e-6, atol=1e-14)


def test_predicted_amplitude():
    d, _ = connection_predict(1, 0.5)
    assert d == pytest.approx(math.sqrt(-math.log(0.75) / math.pi), rel=1e-15)
    assert d == pytest.approx(0.3026087370504087, rel=1e-12)


def test_predicted_phase_shift_under_sign_flip():
    for n in (1, 2):
        dp, pp = connection_predict(n, 0.5)
        dm, pm = connection_predict(n, -0.5)
        assert dp == dm
        assert abs(wrap_phase(pm - pp + math.pi)) < 1e-12


def test_antisymmetry():
    a = as_solve(ASParams(1, 0.4, x_end=-20))
    b = as_solve(ASParams(1, -0.4, x_end=-20))
    assert np.max(np.abs(a.jets + b.jets)) < 1e-9


def test_connection_first_member(half):
    fit = connection_fit(half, (-40, -20))
    d, phi = connection_predict(1, 0.5)
    assert abs(fit.d_fit - d) / d < 0.01
    assert abs(wrap_phase(fit.phi_fit - phi)) < 0.05


def test_fit_recovers_synthetic_signal():
    xs = np.linspace(-8, -45, 3701)
    w = tail_model(1, xs, 0.41, 1.234)
    jets = np.stack([w, np.gradient(w, xs)], axis=1)
    dense = lambda x: np.vstack([tail_model(1, x, 0.41, 1.234), np.zeros_like(x)])  # noqa: E731
    traj = Trajectory(1, 0.5, xs, jets, 0.0, "synthetic", dense)
    fit = connection_fit(traj)
    assert fit.d_fit == pytest.approx(0.41, abs=1e-6)
    assert abs(wrap_phase(fit.phi_fit - 1.234)) < 1e-6


def test_shallow_window(half):
    with pytest.raises(WindowTooShallow):
        connection_fit(half, (-10, -8))


def test_fit_improves_deeper(half):
    d, _ = connection_predict(1, 0.5)
    shallow = connection_fit(half, (-25, -12))
    deep = connection_fit(half, (-44, -30))
    assert abs(deep.d_fit - d) < abs(shallow.d_fit - d)


def test_residual_small(half):
    assert half.residual_norm < 1e-5


def test_decay_side_relative_error_shrinks(half):
    xs = np.array([half.xs[0] - 2, half.xs[0]])
    ai = genairy.ai_values(1, xs)
    rel = np.abs(half.w(xs) - 0.5 * ai) / np.abs(ai)
    assert rel[1] < rel[0] < 1e-4


@pytest.mark.slow
def test_second_member_connection():
    t = as_solve(ASParams(2, 0.5))
    fit = connection_fit(t, (-40, -20))
    d, phi = connection_predict(2, 0.5)
    assert abs(fit.d_fit - d) / d < 0.02
    assert abs(wrap_phase(fit.phi_fit - phi)) < 0.1
    neg = as_solve(ASParams(2, -0.5))
    assert np.max(np.abs(neg.jets + t.jets)) < 1e-6
