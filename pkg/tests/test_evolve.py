import numpy as np
import pytest

from mkdvh.evolve import (
    EvolutionConfig, buffer_energy, check_config, conservation, evolve, flow_rhs,
    linear_evolution,
)
from oracles import hand_mkdv1


def _cfg(**kw):
    base = dict(n=1, half_width=50.0, modes=512, dt=0.01, t_final=1.0)
    base.update(kw)
    return EvolutionConfig(**base)


def test_zero_rhs_and_zero_run():
    cfg = _cfg(snapshot_times=[0.5, 1.0])
    assert not np.any(flow_rhs(np.zeros(cfg.modes), 1, cfg.half_width))
    for f in evolve(lambda x: 0 * x, cfg):
        assert not np.any(f.values)


def test_rhs_matches_hand_coded_first_member():
    cfg = _cfg()
    x = cfg.grid
    u = 0.4 / np.cosh(x - 3) - 0.2 * np.exp(-(x**2))
    got = flow_rhs(u, 1, cfg.half_width)
    k = 2 * np.pi * np.fft.fftfreq(cfg.modes, 2 * cfg.half_width / cfg.modes)
    assert np.max(np.abs(got - hand_mkdv1(u, k))) < 1e-12


@pytest.mark.parametrize("n", [1, 2])
def test_rhs_linearization_on_a_mode(n):
    L = 10 * np.pi
    modes = 256
    x = -L + 2 * L * np.arange(modes) / modes
    k = 3 / 10
    eps = 1e-5
    got = flow_rhs(eps * np.sin(k * x), n, L)
    # -d^(2n+1)/dx^(2n+1) sin(kx) = (-1)^(n+1) k^(2n+1) cos(kx)
    expected = (-1) ** (n + 1) * eps * k ** (2 * n + 1) * np.cos(k * x)
    assert np.max(np.abs(got - expected)) < 10 * eps**3


@pytest.mark.parametrize("n", [1, 2])
def test_small_data_follow_linear_flow(n):
    eps = 1e-3
    cfg = _cfg(n=n, dt=0.002 if n == 2 else 0.01, t_final=2.0)
    u0 = eps * np.exp(-(cfg.grid**2))
    got = evolve(u0, cfg)[0].values
    assert np.max(np.abs(got - linear_evolution(u0, cfg, 2.0))) < 10 * eps**3 * 2.0


def test_conservation_first_member():
    cfg = EvolutionConfig(1, 100.0, 2**11, 0.01, 100.0, [25, 50, 75, 100])
    u0 = 0.3 / np.cosh(cfg.grid)
    fields = evolve(u0, cfg)
    from mkdvh.evolve import Field

    drift = conservation([Field(0.0, u0)] + fields, cfg)
    assert drift["mass_drift"] < 1e-8
    assert drift["l2_drift"] < 1e-8


def test_fourth_order_in_time():
    u0 = lambda x: 0.5 / np.cosh(x)  # noqa: E731
    # large steps are not yet asymptotic: k^3 dt >> 1 for the top modes
    ref = evolve(u0, _cfg(dt=0.00125))[0].values
    errs = []
    for dt in (0.02, 0.01):
        errs.append(np.max(np.abs(evolve(u0, _cfg(dt=dt))[0].values - ref)))
    assert 12 < errs[0] / errs[1] < 20


def test_stiffness_guard():
    cfg = _cfg(n=2, modes=2048, dt=0.01)
    with pytest.raises(ValueError):
        check_config(0.2 / np.cosh(cfg.grid), cfg)


def test_decay_guard():
    cfg = _cfg(half_width=5.0)
    with pytest.raises(ValueError):
        check_config(1 / np.cosh(cfg.grid), cfg)


def test_sponge_absorbs_radiation():
    cfg = EvolutionConfig(1, 60.0, 1024, 0.02, 60.0, [60.0], sponge=True)
    bare = EvolutionConfig(1, 60.0, 1024, 0.02, 60.0, [60.0])
    u0 = lambda x: 0.3 * np.exp(-(x**2)) * np.cos(2 * x)  # noqa: E731
    damped = evolve(u0, cfg)[0]
    free = evolve(u0, bare)[0]
    assert buffer_energy(damped, cfg) < buffer_energy(free, bare)


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(n=3)
    with pytest.raises(ValueError):
        EvolutionConfig(modes=1000)
    with pytest.raises(ValueError):
        EvolutionConfig(t_final=1.0, snapshot_times=[2.0])
