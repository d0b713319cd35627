import warnings

import numpy as np
import pytest

from superhs.numerics import (
    BlowUpError,
    GridState,
    SolverConfig,
    conserved_quantities,
    dealias_23,
    evolve,
    grid,
    initial_state,
    level_product,
    residual_check,
    rhs_once_integrated,
    spectral_antiderivative,
    spectral_dx,
    step,
    write_series_csv,
    write_state_csv,
)


def bosonic_cos_state(n=256):
    state = GridState.zeros(n, 0)
    state.u[0][:] = np.cos(grid(n))
    return state


def fermionic_state(n=256):
    x = grid(n)
    state = GridState.zeros(n, 2)
    state.u[0][:] = np.cos(x)
    state.xi[0b01][:] = 0.1 * np.cos(x)
    state.xi[0b10][:] = 0.1 * np.sin(x)
    return state


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(n_modes=100)
    with pytest.raises(ValueError):
        SolverConfig(n_modes=8)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(gauge="fix_left_end")
    with pytest.raises(ValueError):
        SolverConfig(dt=50.0, t_end=0.5)  # would take zero steps


def test_spectral_helpers():
    x = grid(64)
    assert np.abs(spectral_dx(np.sin(x)) - np.cos(x)).max() < 1e-12
    assert np.abs(spectral_dx(np.cos(2 * x), 2) + 4 * np.cos(2 * x)).max() < 1e-11
    anti = spectral_antiderivative(np.cos(x))
    assert np.abs(anti - np.sin(x)).max() < 1e-12
    assert abs(anti.mean()) < 1e-15


def test_zero_state_is_fixed_point():
    cfg = SolverConfig(n_modes=32, dt=1e-2, t_end=0.1, n_grassmann=2)
    state = GridState.zeros(32, 2)
    du, dxi = rhs_once_integrated(state, cfg)
    assert all(np.abs(a).max() == 0.0 for a in du.values())
    assert all(np.abs(a).max() == 0.0 for a in dxi.values())
    stepped = step(state, cfg)
    assert all(np.abs(a).max() == 0.0 for a in stepped.u.values())


def test_cos_initial_velocity_closed_form():
    cfg = SolverConfig(n_modes=256, dt=1e-3, t_end=1.0, n_grassmann=0)
    state = bosonic_cos_state()
    du, _ = rhs_once_integrated(state, cfg)
    expected = 0.375 * np.sin(2 * grid(256))
    assert np.abs(du[0] - expected).max() < 1e-12


def test_single_fermion_level_is_inert():
    # with u = 0 and xi on one generator only, nothing moves: the fermion
    # backreaction needs two distinct generators
    cfg = SolverConfig(n_modes=64, dt=1e-3, t_end=0.1, n_grassmann=2)
    state = GridState.zeros(64, 2)
    state.xi[0b01][:] = 0.2 * np.cos(grid(64))
    du, dxi = rhs_once_integrated(state, cfg)
    assert all(np.abs(a).max() < 1e-15 for a in du.values())
    assert all(np.abs(a).max() < 1e-15 for a in dxi.values())


def test_one_step_matches_refined_reference():
    state = bosonic_cos_state()
    coarse = step(state, SolverConfig(n_modes=256, dt=1e-3, t_end=1e-3, n_grassmann=0))
    fine = state.copy()
    cfg_fine = SolverConfig(n_modes=256, dt=1e-5, t_end=1e-3, n_grassmann=0)
    for _ in range(100):
        fine = step(fine, cfg_fine)
    assert np.abs(coarse.u[0] - fine.u[0]).max() < 1e-9


def test_one_step_first_order_taylor():
    dt = 1e-3
    state = bosonic_cos_state()
    cfg = SolverConfig(n_modes=256, dt=dt, t_end=dt, n_grassmann=0)
    du, _ = rhs_once_integrated(state, cfg)
    stepped = step(state, cfg)
    taylor_err = np.abs(stepped.u[0] - state.u[0] - dt * du[0]).max()
    assert taylor_err < 1.0 * dt**2  # O(dt^2) remainder with a modest constant


def test_fourth_order_richardson_ratio():
    def advance(dt, n_steps):
        s = bosonic_cos_state()
        cfg = SolverConfig(n_modes=256, dt=dt, t_end=dt * n_steps, n_grassmann=0)
        for _ in range(n_steps):
            s = step(s, cfg)
        return s.u[0]

    interval = 0.02
    reference = advance(interval / 40, 40)
    err_one = np.abs(advance(interval, 1) - reference).max()
    err_two = np.abs(advance(interval / 2, 2) - reference).max()
    ratio = err_one / err_two
    assert 14.0 <= ratio <= 18.0


def test_gauge_zero_mean_velocities():
    cfg = SolverConfig(n_modes=128, dt=1e-3, t_end=0.1, n_grassmann=2)
    state = fermionic_state(128)
    du, dxi = rhs_once_integrated(state, cfg)
    for arr in list(du.values()) + list(dxi.values()):
        assert abs(arr.mean()) < 1e-13
        # mean-free right side of the once-integrated equation: solvability
        assert abs(spectral_dx(arr).mean()) < 1e-13
        assert arr.dtype == np.float64 and np.isfinite(arr).all()


def test_parity_structure_of_state():
    state = GridState.zeros(64, 2)
    assert set(state.u) == {0b00, 0b11}
    assert set(state.xi) == {0b01, 0b10}


def test_bosonic_consistency_across_truncations():
    # N = 2 with zero fermions must match the N = 0 solver to machine precision
    n = 128
    cfg0 = SolverConfig(n_modes=n, dt=2e-3, t_end=0.2, n_grassmann=0, sample_stride=10)
    cfg2 = SolverConfig(n_modes=n, dt=2e-3, t_end=0.2, n_grassmann=2, sample_stride=10)
    s0 = GridState.zeros(n, 0)
    s2 = GridState.zeros(n, 2)
    s0.u[0][:] = np.cos(grid(n))
    s2.u[0][:] = np.cos(grid(n))
    t0 = evolve(s0, cfg0)
    t2 = evolve(s2, cfg2)
    assert np.abs(t0.final.u[0] - t2.final.u[0]).max() < 1e-14
    assert np.abs(t2.final.u[0b11]).max() == 0.0


def _oracle_rhs(ub, x1, x2, us, dealias):
    """Independent right-hand side for the four coupled Lambda_2 components.

    body-u solves the bosonic flow, xi_1 and xi_2 the linear fermion equation
    against body-u, and the top u level is forced by the fermion pair.
    """

    def dsp(a, k=1):
        n = a.size
        kk = np.fft.rfftfreq(n, d=1.0 / n)
        return np.fft.irfft(np.fft.rfft(a) * (1j * kk) ** k, n)

    def anti(a):
        n = a.size
        kk = np.fft.rfftfreq(n, d=1.0 / n)
        spec = np.fft.rfft(a - a.mean())
        spec[0] = 0.0
        spec[1:] /= 1j * kk[1:]
        return np.fft.irfft(spec, n)

    def cut(a):
        if not dealias:
            return a
        n = a.size
        kk = np.fft.rfftfreq(n, d=1.0 / n)
        spec = np.fft.rfft(a)
        spec[kk > n / 3.0] = 0.0
        return np.fft.irfft(spec, n)

    w_body = -(ub * dsp(ub, 2) + 0.5 * dsp(ub) ** 2)
    w_top = -(
        ub * dsp(us, 2)
        + us * dsp(ub, 2)
        + dsp(ub) * dsp(us)
        + 0.5 * (dsp(x1) * dsp(x2, 2) - dsp(x2) * dsp(x1, 2))
    )
    v1 = -(ub * dsp(x1, 2) + 0.5 * dsp(ub) * dsp(x1))
    v2 = -(ub * dsp(x2, 2) + 0.5 * dsp(ub) * dsp(x2))
    return anti(cut(w_body)), anti(cut(v1)), anti(cut(v2)), anti(cut(w_top))


def test_rhs_matches_independent_component_oracle():
    n = 128
    x = grid(n)
    cfg = SolverConfig(n_modes=n, dt=1e-3, t_end=0.1, n_grassmann=2)
    state = GridState.zeros(n, 2)
    rng = np.random.default_rng(42)
    # smooth random trig data on every level
    state.u[0][:] = np.cos(x) + 0.3 * np.sin(2 * x)
    state.u[0b11][:] = 0.2 * np.sin(x) - 0.1 * np.cos(3 * x)
    state.xi[0b01][:] = 0.1 * np.cos(x) + 0.05 * np.sin(2 * x)
    state.xi[0b10][:] = 0.1 * np.sin(x) - 0.2 * np.cos(2 * x)
    du, dxi = rhs_once_integrated(state, cfg)
    ub_t, x1_t, x2_t, us_t = _oracle_rhs(
        state.u[0], state.xi[0b01], state.xi[0b10], state.u[0b11], cfg.dealias
    )
    assert np.abs(du[0] - ub_t).max() < 1e-13
    assert np.abs(dxi[0b01] - x1_t).max() < 1e-13
    assert np.abs(dxi[0b10] - x2_t).max() < 1e-13
    assert np.abs(du[0b11] - us_t).max() < 1e-13


def test_trajectory_matches_component_oracle():
    n = 64
    dt = 2e-3
    steps = 50
    cfg = SolverConfig(n_modes=n, dt=dt, t_end=dt * steps, n_grassmann=2, sample_stride=steps)
    state = fermionic_state(n)
    traj = evolve(state, cfg)

    ub = state.u[0].copy()
    x1 = state.xi[0b01].copy()
    x2 = state.xi[0b10].copy()
    us = state.u[0b11].copy()
    for _ in range(steps):
        k1 = _oracle_rhs(ub, x1, x2, us, cfg.dealias)
        k2 = _oracle_rhs(
            ub + dt / 2 * k1[0], x1 + dt / 2 * k1[1], x2 + dt / 2 * k1[2], us + dt / 2 * k1[3], cfg.dealias
        )
        k3 = _oracle_rhs(
            ub + dt / 2 * k2[0], x1 + dt / 2 * k2[1], x2 + dt / 2 * k2[2], us + dt / 2 * k2[3], cfg.dealias
        )
        k4 = _oracle_rhs(
            ub + dt * k3[0], x1 + dt * k3[1], x2 + dt * k3[2], us + dt * k3[3], cfg.dealias
        )
        ub = ub + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        x1 = x1 + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        x2 = x2 + dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        us = us + dt / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    final = traj.final
    assert np.abs(final.u[0] - ub).max() < 1e-12
    assert np.abs(final.xi[0b01] - x1).max() < 1e-12
    assert np.abs(final.xi[0b10] - x2).max() < 1e-12
    assert np.abs(final.u[0b11] - us).max() < 1e-12


def test_top_level_gets_excited():
    cfg = SolverConfig(n_modes=128, dt=1e-3, t_end=0.5, n_grassmann=2, sample_stride=100)
    traj = evolve(fermionic_state(128), cfg)
    assert np.abs(traj.final.u[0b11]).max() > 1e-5


def test_conserved_quantities_structure():
    state = fermionic_state(128)
    h1, h2 = conserved_quantities(state, 2)
    assert abs(h1.body() - np.pi / 2) < 1e-12
    assert abs(h1.coeffs.get(0b11, 0.0) + 0.01 * np.pi) < 1e-12
    # no odd levels can appear in either invariant
    assert all(m.bit_count() % 2 == 0 for m in h1.coeffs)
    assert all(m.bit_count() % 2 == 0 for m in h2.coeffs)


def test_level_product_merge_signs():
    a = {0b01: np.array([2.0]), 0b10: np.array([3.0])}
    b = {0b01: np.array([5.0]), 0b10: np.array([7.0])}
    out = level_product(a, b)
    # e1*e2 component: 2*7 - 3*5 = -1
    assert out.keys() == {0b11}
    assert np.allclose(out[0b11], [-1.0])


def test_blowup_detection():
    cfg = SolverConfig(n_modes=64, dt=50.0, t_end=500.0, n_grassmann=0)
    state = GridState.zeros(64, 0)
    state.u[0][:] = np.cos(grid(64))
    with pytest.raises(BlowUpError) as info:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            evolve(state, cfg)
    assert info.value.time > 0
    assert "max_abs_ux" in info.value.diagnostics


def test_cfl_warning():
    cfg = SolverConfig(n_modes=256, dt=0.5, t_end=0.5, n_grassmann=0)
    state = bosonic_cos_state()
    with pytest.warns(RuntimeWarning):
        step(state, cfg)


def test_residual_check_flags_corruption():
    cfg = SolverConfig(n_modes=128, dt=1e-3, t_end=0.05, n_grassmann=0, sample_stride=10)
    traj = evolve(bosonic_cos_state(128), cfg)
    clean = residual_check(traj)
    traj.states[2].u[0][7] += 0.1
    corrupted = residual_check(traj)
    assert corrupted > 100 * clean


def test_residual_check_needs_three_samples():
    cfg = SolverConfig(n_modes=64, dt=1e-3, t_end=2e-3, n_grassmann=0, sample_stride=5)
    traj = evolve(GridState.zeros(64, 0), cfg)
    with pytest.raises(ValueError):
        residual_check(traj)


def test_residual_check_zero_state_is_exact():
    cfg = SolverConfig(n_modes=64, dt=1e-3, t_end=0.01, n_grassmann=2, sample_stride=1)
    traj = evolve(GridState.zeros(64, 2), cfg)
    assert residual_check(traj) == 0.0


def test_initial_state_parsing_and_validation():
    cfg = SolverConfig(n_modes=64, dt=1e-3, t_end=0.1, n_grassmann=2)
    state = initial_state(
        {
            "u": [{"level": [], "cos": {"1": 1.0}, "sin": {"2": 0.5}}],
            "xi": [{"level": [1], "cos": {"1": 0.1}}],
        },
        cfg,
    )
    x = grid(64)
    assert np.abs(state.u[0] - (np.cos(x) + 0.5 * np.sin(2 * x))).max() < 1e-14
    assert np.abs(state.xi[0b01] - 0.1 * np.cos(x)).max() < 1e-14
    with pytest.raises(ValueError):
        initial_state({"u": [{"level": [1], "cos": {"1": 1.0}}]}, cfg)
    with pytest.raises(ValueError):
        initial_state({"xi": [{"level": [1, 2], "cos": {"1": 1.0}}]}, cfg)
    with pytest.raises(ValueError):
        initial_state({"xi": [{"level": [3], "cos": {"1": 1.0}}]}, cfg)


def test_csv_writers(tmp_path):
    cfg = SolverConfig(n_modes=32, dt=1e-2, t_end=0.05, n_grassmann=2, sample_stride=1)
    traj = evolve(fermionic_state(32), cfg)
    series = tmp_path / "series.csv"
    state_csv = tmp_path / "final.csv"
    write_series_csv(str(series), traj, 2)
    write_state_csv(str(state_csv), traj.final, 2)
    lines = series.read_text().strip().splitlines()
    assert lines[0] == "time,H1_body,H1_12,H2_body,H2_12,max_abs_ux"
    assert len(lines) == len(traj.samples) + 1
    header = state_csv.read_text().splitlines()[0]
    assert header == "x,u_body,u_12,xi_1,xi_2"


def test_dealias_cuts_top_third():
    x = grid(96)
    noisy = np.cos(40 * x)  # above the 2/3 cutoff for n = 96
    assert np.abs(dealias_23(noisy)).max() < 1e-12
    kept = np.cos(10 * x)
    assert np.abs(dealias_23(kept) - kept).max() < 1e-12
