import dataclasses

import numpy as np
import pytest

from fdiscc.config import desk_config
from fdiscc.channels import draw_channels
from fdiscc.powercomp import (PowerCoeffs, SensingInfeasibleError,
                              assemble_power_coeffs, optimize_power,
                              power_objective, solve_power_compute)
from fdiscc.wmmse import surrogate_com, surrogate_off, update_aux

from conftest import make_solution


@pytest.fixture()
def pc_sol(small_cfg, small_ch, rand_sol):
    # echo-aligned phases plus a radar-pointed sensing beam keep c8 positive
    from fdiscc.orchestrator import echo_aligned_phases
    phi = echo_aligned_phases(small_ch)
    cascade = (small_ch.g_s * phi[None, :]) @ small_ch.g_t
    radar_dir = np.linalg.eigh(cascade.conj().T @ cascade)[1][:, -1]
    w = rand_sol.w.copy()
    w[0] = radar_dir * np.sqrt(small_cfg.p_bs_watt / 2)
    w[1:] *= np.sqrt(small_cfg.p_bs_watt / 2 / max(np.sum(np.abs(w[1:]) ** 2), 1e-300))
    return rand_sol.copy_with(phi=phi, w=w)


@pytest.fixture()
def pc_setup(small_cfg, small_ch, pc_sol):
    aux = update_aux(pc_sol, small_ch, small_cfg)
    coeffs = assemble_power_coeffs(pc_sol, small_ch, aux, small_cfg)
    return aux, coeffs


class TestAssemble:
    def test_identity_vs_surrogates(self, small_cfg, small_ch, pc_sol, pc_setup):
        aux, coeffs = pc_setup
        rng = np.random.default_rng(0)
        for _ in range(5):
            p = rng.uniform(0, 5e-9, small_cfg.n_cp)
            sol2 = pc_sol.copy_with(p=p)
            direct = sum(surrogate_com(sol2, small_ch, small_cfg, aux, k)
                         for k in range(small_cfg.n_cm))
            direct += sum(surrogate_off(sol2, small_ch, small_cfg, aux, l)
                          for l in range(small_cfg.n_cp))
            lin = coeffs.b7 + coeffs.c1 @ coeffs.b11
            via = float(coeffs.b10.sum() + coeffs.b2.sum()
                        + np.sum(coeffs.b6 * np.sqrt(p) - lin * p))
            assert via == pytest.approx(direct, abs=1e-8)

    def test_zero_power_gives_constants(self, small_cfg, small_ch, pc_sol, pc_setup):
        aux, coeffs = pc_setup
        sol0 = pc_sol.copy_with(p=np.zeros(small_cfg.n_cp))
        direct = sum(surrogate_off(sol0, small_ch, small_cfg, aux, l)
                     for l in range(small_cfg.n_cp))
        assert float(coeffs.b2.sum()) == pytest.approx(direct, abs=1e-10)

    def test_single_user_b7(self):
        cfg = desk_config(m_passive=6, m_active=3, n_cm=0, n_cp=1, seed=17)
        ch = draw_channels(cfg)
        sol = make_solution(cfg, ch, np.random.default_rng(3))
        aux = update_aux(sol, ch, cfg)
        coeffs = assemble_power_coeffs(sol, ch, aux, cfg)
        from fdiscc.sysmodel import composite_channels
        from fdiscc.wmmse import LN2
        comp = composite_channels(ch, sol.phi)
        expected = abs(aux.beta2[0]) ** 2 * abs(np.vdot(sol.u[0], comp.g[0])) ** 2 / LN2
        assert coeffs.b7[0] == pytest.approx(expected, rel=1e-12)

    def test_nonnegative_coefficients(self, pc_setup):
        _, coeffs = pc_setup
        assert np.all(coeffs.b7 >= 0)
        assert np.all(coeffs.b9 >= 0)
        assert np.all(coeffs.c1 >= 0)
        assert np.all(coeffs.b11 >= 0)


def _grid_oracle(coeffs, cfg, rate_weight=1.0, n_p=200, n_mu=100):
    """Per-user 2-D grid + coupling-multiplier grid bounds.

    Returns (primal lower bound from feasible grid points, dual upper bound
    min over the mu grid), each refined once around the incumbent."""
    l_n = coeffs.b6.shape[0]
    e_max, t, zeta = cfg.e_max_array(), cfg.coherence_time_s, cfg.zeta
    f_coef = 1.0 / (cfg.eps_array() * cfg.bandwidth_hz)
    lin = rate_weight * (coeffs.b7 + coeffs.c1 @ coeffs.b11)
    b6w = rate_weight * coeffs.b6

    def user_obj(l, p):
        f = ((e_max[l] - t * p) / (t * zeta)) ** (1 / 3)
        return b6w[l] * np.sqrt(p) - lin[l] * p + f_coef[l] * f, f

    def user_best(l, mu, lo, hi, n):
        ps = np.linspace(lo, hi, n)
        vals = np.array([user_obj(l, p)[0] - mu * coeffs.b9[l] * p for p in ps])
        i = int(np.argmax(vals))
        return ps[i], vals[i]

    def dual_value(mu):
        total = mu * coeffs.c8
        for l in range(l_n):
            p1, _ = user_best(l, mu, 0.0, e_max[l] / t * (1 - 1e-12), n_p)
            step = e_max[l] / t / n_p
            p2, v2 = user_best(l, mu, max(0.0, p1 - 2 * step),
                               min(e_max[l] / t * (1 - 1e-12), p1 + 2 * step), n_p)
            total += v2
        return total

    mus = np.linspace(0.0, 2e3, n_mu)
    dvals = [dual_value(m) for m in mus]
    i = int(np.argmin(dvals))
    lo = mus[max(i - 1, 0)]
    hi = mus[min(i + 1, n_mu - 1)]
    mus2 = np.linspace(lo, hi, n_mu)
    dual = min(min(dvals), min(dual_value(m) for m in mus2))

    # primal candidate: best feasible grid point at the argmin multiplier
    best_mu = mus2[int(np.argmin([dual_value(m) for m in mus2]))]
    p = np.zeros(l_n)
    for l in range(l_n):
        p1, _ = user_best(l, best_mu, 0.0, e_max[l] / t * (1 - 1e-12), n_p)
        step = e_max[l] / t / n_p
        p[l], _ = user_best(l, best_mu, max(0.0, p1 - 2 * step),
                            min(e_max[l] / t * (1 - 1e-12), p1 + 2 * step), n_p)
    if float(p @ coeffs.b9) > coeffs.c8 and float(p @ coeffs.b9) > 0:
        p *= coeffs.c8 / float(p @ coeffs.b9)
    primal = sum(user_obj(l, p[l])[0] for l in range(l_n))
    return primal, dual


class TestSolve:
    def test_unconstrained_stationary_point(self, small_cfg, pc_setup):
        # huge energy, no sensing cap, no compute term: p* = (b6/(2B))^2
        _, coeffs = pc_setup
        cfg2 = desk_config(m_passive=8, m_active=4, seed=7,
                           e_max_joule=1e9, zeta=1e-26)
        free = dataclasses.replace(coeffs, c8=1e30)
        p, f, _ = solve_power_compute(free, cfg2, force_f_zero=True)
        lin = coeffs.b7 + coeffs.c1 @ coeffs.b11
        expected = (coeffs.b6 / (2 * lin)) ** 2
        assert np.allclose(p, expected, rtol=1e-12)

    def test_no_gain_all_energy_to_compute(self, small_cfg, pc_setup):
        _, coeffs = pc_setup
        dead = dataclasses.replace(coeffs, b6=np.zeros_like(coeffs.b6))
        p, f, _ = solve_power_compute(dead, small_cfg)
        e_max, t = small_cfg.e_max_array(), small_cfg.coherence_time_s
        assert np.allclose(p, 0.0)
        assert np.allclose(f, (e_max / (t * small_cfg.zeta)) ** (1 / 3), rtol=1e-12)

    def test_energy_constraint_active(self, small_cfg, pc_setup):
        _, coeffs = pc_setup
        p, f, _ = solve_power_compute(coeffs, small_cfg)
        t = small_cfg.coherence_time_s
        used = t * p + t * small_cfg.zeta * f ** 3
        assert np.allclose(used, small_cfg.e_max_array(), rtol=1e-9)

    def test_coupling_constraint_respected(self, small_cfg, pc_setup):
        _, coeffs = pc_setup
        tight = dataclasses.replace(coeffs, c8=coeffs.c8 * 1e-3)
        p, f, info = solve_power_compute(tight, small_cfg)
        assert float(p @ tight.b9) <= tight.c8 * (1 + 1e-9)

    def test_infeasible_budget_raises(self, small_cfg, pc_setup):
        _, coeffs = pc_setup
        bad = dataclasses.replace(coeffs, c8=-1.0)
        with pytest.raises(SensingInfeasibleError):
            solve_power_compute(bad, small_cfg)

    def test_matches_grid_oracle(self, small_cfg, small_ch):
        # solver sits between the primal (feasible grid) and dual (mu grid)
        # bounds within 1e-5 relative
        from fdiscc.orchestrator import echo_aligned_phases
        rng = np.random.default_rng(5)
        phi = echo_aligned_phases(small_ch)
        cascade = (small_ch.g_s * phi[None, :]) @ small_ch.g_t
        radar_dir = np.linalg.eigh(cascade.conj().T @ cascade)[1][:, -1]
        for trial in range(3):
            sol = make_solution(small_cfg, small_ch, rng, p_scale=1e-6)
            w = sol.w.copy()
            w[0] = radar_dir * np.sqrt(small_cfg.p_bs_watt / 2)
            sol = sol.copy_with(phi=phi, w=w)
            aux = update_aux(sol, small_ch, small_cfg)
            coeffs = assemble_power_coeffs(sol, small_ch, aux, small_cfg)
            # make the coupling active for at least one trial
            if trial == 2:
                coeffs = dataclasses.replace(coeffs, c8=coeffs.c8 * 1e-4)
            p, f, _ = solve_power_compute(coeffs, small_cfg)
            val = power_objective(coeffs, small_cfg, p, f)
            primal, dual = _grid_oracle(coeffs, small_cfg)
            scale = max(abs(val), 1.0)
            assert val >= primal - 1e-5 * scale
            assert val <= dual + 1e-5 * scale

    def test_stationarity_conditions(self, small_cfg, pc_setup):
        # interior p: b6/(2 sqrt p) = B + mu b9 + nu T with nu from the
        # f-stationarity 1/(eps B) = 3 nu T zeta f^2
        _, coeffs = pc_setup
        p, f, info = solve_power_compute(coeffs, small_cfg)
        t, zeta = small_cfg.coherence_time_s, small_cfg.zeta
        eps = small_cfg.eps_array()
        lin = coeffs.b7 + coeffs.c1 @ coeffs.b11
        for l in range(small_cfg.n_cp):
            if p[l] <= 0:
                continue
            nu = 1.0 / (eps[l] * small_cfg.bandwidth_hz * 3 * t * zeta * f[l] ** 2)
            lhs = coeffs.b6[l] / (2 * np.sqrt(p[l]))
            rhs = lin[l] + info["mu"] * coeffs.b9[l] + nu * t
            assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_force_f_zero(self, small_cfg, pc_setup):
        _, coeffs = pc_setup
        p, f, _ = solve_power_compute(coeffs, small_cfg, force_f_zero=True)
        assert np.allclose(f, 0.0)

    def test_empty_users(self, small_cfg):
        coeffs = PowerCoeffs(b2=np.zeros(0), b6=np.zeros(0), b7=np.zeros(0),
                             b9=np.zeros(0), b10=np.zeros(0),
                             b11=np.zeros((small_cfg.n_cm, 0)), c1=np.zeros(small_cfg.n_cm),
                             c8=1.0)
        p, f, _ = solve_power_compute(coeffs, small_cfg)
        assert p.size == 0 and f.size == 0

    def test_monotone_vs_incumbent(self, small_cfg, small_ch, pc_sol):
        aux = update_aux(pc_sol, small_ch, small_cfg)
        p, f, info = optimize_power(pc_sol, small_ch, aux, small_cfg)
        coeffs = assemble_power_coeffs(pc_sol, small_ch, aux, small_cfg)
        new_val = power_objective(coeffs, small_cfg, p, f)
        old_val = power_objective(coeffs, small_cfg, pc_sol.p, pc_sol.f)
        assert new_val >= old_val - 1e-12 * (1 + abs(old_val))

    def test_dual_bisection_iteration_budget(self, small_cfg, pc_setup):
        _, coeffs = pc_setup
        tight = dataclasses.replace(coeffs, c8=coeffs.c8 * 1e-4)
        _, _, info = solve_power_compute(tight, small_cfg)
        assert info["iterations"] <= 100
