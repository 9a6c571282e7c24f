import numpy as np
import pytest

from fdiscc.channels import draw_channels
from fdiscc.config import desk_config
from fdiscc.sysmodel import (Solution, backhaul_cost, composite_channels,
                             downlink_sinr, local_rate_energy, offload_sinr,
                             radar_sinr, residuals, utility)

from conftest import make_solution


class TestCompositeChannels:
    def test_matches_naive_products(self, small_cfg, small_ch, rand_sol):
        comp = composite_channels(small_ch, rand_sol.phi)
        phi_mat = np.diag(rand_sol.phi)
        for k in range(small_cfg.n_cm):
            direct = small_ch.h_pu[k].conj() @ phi_mat @ small_ch.g_t
            assert np.allclose(comp.h[k], direct, atol=1e-12)
            for l in range(small_cfg.n_cp):
                e = small_ch.e_direct[l, k] + small_ch.h_pu[k].conj() @ phi_mat @ small_ch.g_pu[l]
                assert abs(comp.ebar[l, k] - e) < 1e-12
        for l in range(small_cfg.n_cp):
            g = small_ch.g_r.conj().T @ phi_mat @ small_ch.g_pu[l]
            assert np.allclose(comp.g[l], g, atol=1e-12)

    def test_identity_phases_single_element(self):
        cfg = desk_config(m_passive=1, m_active=1, seed=3)
        ch = draw_channels(cfg)
        comp = composite_channels(ch, np.ones(1, complex))
        for k in range(cfg.n_cm):
            assert np.allclose(comp.h[k], ch.h_pu[k].conj() * ch.g_t[0])

    def test_zero_uplink_channel_leaves_direct_term(self, small_cfg, small_ch, rand_sol):
        comp = composite_channels(small_ch, rand_sol.phi)
        # additive structure: subtracting the cascaded part leaves e_direct
        cascade = (small_ch.h_pu.conj() * rand_sol.phi[None, :]) @ small_ch.g_pu.T
        assert np.allclose(comp.ebar - cascade.T, small_ch.e_direct, atol=1e-14)

    def test_dimension_mismatch_rejected(self, small_ch):
        with pytest.raises(ValueError):
            composite_channels(small_ch, np.ones(3, complex))


def _mc_downlink_sinr(sol, ch, cfg, k, n_sym=400_000, seed=0):
    """Symbol-level Monte-Carlo estimate of the CM-UE SINR."""
    rng = np.random.default_rng(seed)
    comp = composite_channels(ch, sol.phi)
    amps = sol.w @ comp.h[k]                   # h_k w_j per beam
    def syms(n):
        return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    desired = amps[k + 1] * syms(n_sym)
    interf = np.zeros(n_sym, complex)
    for j, a in enumerate(amps):
        if j != k + 1:
            interf += a * syms(n_sym)
    for l in range(cfg.n_cp):
        interf += np.sqrt(sol.p[l]) * comp.ebar[l, k] * syms(n_sym)
    num = float(np.mean(np.abs(desired) ** 2))
    den = float(np.mean(np.abs(interf) ** 2)) + cfg.noise_ue_watt
    return num / den


class TestSinrs:
    def test_downlink_no_interference_closed_form(self):
        cfg = desk_config(m_passive=4, m_active=2, n_cm=1, n_cp=0, seed=5)
        ch = draw_channels(cfg)
        rng = np.random.default_rng(0)
        sol = make_solution(cfg, ch, rng)
        w = sol.w.copy()
        w[0] = 0.0                              # no sensing beam
        sol = sol.copy_with(w=w)
        comp = composite_channels(ch, sol.phi)
        expected = abs(comp.h[0] @ sol.w[1]) ** 2 / cfg.noise_ue_watt
        assert downlink_sinr(sol, ch, cfg, 0) == pytest.approx(expected, rel=1e-12)

    def test_downlink_zero_beam(self, small_cfg, small_ch, rand_sol):
        w = rand_sol.w.copy()
        w[1] = 0.0
        sol = rand_sol.copy_with(w=w)
        assert downlink_sinr(sol, small_ch, small_cfg, 0) == 0.0

    def test_downlink_monte_carlo(self, small_cfg, small_ch, rand_sol):
        exact = downlink_sinr(rand_sol, small_ch, small_cfg, 0)
        mc = _mc_downlink_sinr(rand_sol, small_ch, small_cfg, 0)
        assert mc == pytest.approx(exact, rel=0.01)

    def test_radar_single_beam(self):
        cfg = desk_config(m_passive=4, m_active=2, n_cm=0, n_cp=0, seed=5)
        ch = draw_channels(cfg)
        rng = np.random.default_rng(1)
        w0 = rng.normal(size=cfg.n_tx) + 1j * rng.normal(size=cfg.n_tx)
        phi = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        sol = Solution(w=w0[None, :], u=np.zeros((0, cfg.n_rx), complex), phi=phi,
                       f=np.zeros(0), p=np.zeros(0), e=np.zeros(cfg.cache.n_files))
        expected = np.linalg.norm((ch.g_s * phi[None, :]) @ ch.g_t @ w0) ** 2 / cfg.noise_irs_watt
        assert radar_sinr(sol, ch, cfg) == pytest.approx(expected, rel=1e-12)

    def test_radar_zero_beams(self, small_cfg, small_ch, rand_sol):
        sol = rand_sol.copy_with(w=np.zeros_like(rand_sol.w))
        assert radar_sinr(sol, small_ch, small_cfg) == 0.0

    def test_radar_monte_carlo(self, small_cfg, small_ch, rand_sol):
        rng = np.random.default_rng(3)
        n_sym = 400_000
        cascade = (small_ch.g_s * rand_sol.phi[None, :]) @ small_ch.g_t
        acc = 0.0
        for j in range(rand_sol.w.shape[0]):
            s = (rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym)) / np.sqrt(2)
            acc += np.mean(np.abs(s) ** 2) * np.linalg.norm(cascade @ rand_sol.w[j]) ** 2
        den = float(rand_sol.p @ (np.abs(small_ch.g_au) ** 2).sum(axis=1)) + small_cfg.noise_irs_watt
        mc = acc / den
        assert mc == pytest.approx(radar_sinr(rand_sol, small_ch, small_cfg), rel=0.01)

    def test_offload_no_downlink(self):
        cfg = desk_config(m_passive=4, m_active=2, n_cm=0, n_cp=1, seed=6)
        ch = draw_channels(cfg)
        sol = make_solution(cfg, ch, np.random.default_rng(2))
        sol = sol.copy_with(w=np.zeros_like(sol.w))
        comp = composite_channels(ch, sol.phi)
        u = sol.u[0]
        expected = sol.p[0] * abs(np.vdot(u, comp.g[0])) ** 2 / (
            np.vdot(u, u).real * cfg.noise_bs_watt)
        assert offload_sinr(sol, ch, cfg, 0) == pytest.approx(expected, rel=1e-12)

    def test_offload_orthogonal_combiner(self):
        cfg = desk_config(m_passive=4, m_active=2, n_cm=0, n_cp=1, seed=6)
        ch = draw_channels(cfg)
        sol = make_solution(cfg, ch, np.random.default_rng(2), p_scale=1e-3)
        comp = composite_channels(ch, sol.phi)
        g = comp.g[0]
        u = np.zeros(cfg.n_rx, complex)
        u[0], u[1] = g[1].conj(), -g[0].conj()   # orthogonal to g
        sol = sol.copy_with(u=u[None, :])
        assert offload_sinr(sol, ch, cfg, 0) == pytest.approx(0.0, abs=1e-20)

    def test_offload_monte_carlo(self, small_cfg, small_ch, rand_sol):
        cfg, ch, sol = small_cfg, small_ch, rand_sol
        rng = np.random.default_rng(4)
        comp = composite_channels(ch, sol.phi)
        n_sym = 400_000
        u = sol.u[0]
        amps = comp.g @ u.conj()
        def syms(n):
            return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        desired = np.sqrt(sol.p[0]) * amps[0] * syms(n_sym)
        interf = np.zeros(n_sym, complex)
        for lp in range(1, cfg.n_cp):
            interf += np.sqrt(sol.p[lp]) * amps[lp] * syms(n_sym)
        v = ch.h_si.conj().T @ u
        for j in range(sol.w.shape[0]):
            interf += (sol.w[j] @ v.conj()) * syms(n_sym)
        num = float(np.mean(np.abs(desired) ** 2))
        den = float(np.mean(np.abs(interf) ** 2)) + np.vdot(u, u).real * cfg.noise_bs_watt
        assert num / den == pytest.approx(offload_sinr(sol, ch, cfg, 0), rel=0.01)

    def test_common_phase_rotation_invariance(self, small_cfg, small_ch, rand_sol):
        rot = np.exp(1j * 1.234)
        sol2 = rand_sol.copy_with(w=rot * rand_sol.w)
        for k in range(small_cfg.n_cm):
            assert downlink_sinr(sol2, small_ch, small_cfg, k) == pytest.approx(
                downlink_sinr(rand_sol, small_ch, small_cfg, k), rel=1e-12)
        assert radar_sinr(sol2, small_ch, small_cfg) == pytest.approx(
            radar_sinr(rand_sol, small_ch, small_cfg), rel=1e-12)
        for l in range(small_cfg.n_cp):
            assert offload_sinr(sol2, small_ch, small_cfg, l) == pytest.approx(
                offload_sinr(rand_sol, small_ch, small_cfg, l), rel=1e-12)


class TestLocalAndCost:
    def test_zero_frequency(self):
        assert local_rate_energy(0.0, 1000.0, 1.0, 1e-26) == (0.0, 0.0)

    def test_direct_arithmetic(self):
        rate, energy = local_rate_energy(1e9, 1000.0, 1.0, 1e-26)
        assert rate == pytest.approx(1e6)
        assert energy == pytest.approx(1e-26 * 1e27)

    def test_unit_ratio(self):
        rate, _ = local_rate_energy(1000.0, 1000.0, 1.0, 1e-26)
        assert rate == pytest.approx(1.0)

    def test_backhaul_all_cached(self, small_cfg):
        e = np.ones(small_cfg.cache.n_files)
        assert backhaul_cost(e, small_cfg.cache, 1.0, small_cfg.n_cp) == 0.0

    def test_backhaul_single_file(self):
        from dataclasses import replace
        from fdiscc.config import CacheConfig
        cache = CacheConfig(n_files=1, capacity=1.0, lengths=1.0,
                            backhaul_price=1.0, skew=1.2, backhaul_rate=123.0)
        assert backhaul_cost(np.zeros(1), cache, 1.0, 1) == pytest.approx(123.0)

    def test_backhaul_hand_zipf(self):
        from fdiscc.config import CacheConfig
        cache = CacheConfig(n_files=3, capacity=10.0, lengths=1.0,
                            backhaul_price=1.0, skew=1.0, backhaul_rate=1.0)
        # popularity 6/11, 3/11, 2/11; cache only the first file
        e = np.array([1.0, 0.0, 0.0])
        expected = (3 / 11 + 2 / 11) * 2.0     # two CP-UEs
        assert backhaul_cost(e, cache, 1.0, 2) == pytest.approx(expected)


class TestUtility:
    def test_zero_solution_full_cache(self, small_cfg, small_ch):
        cfg, ch = small_cfg, small_ch
        sol = Solution(w=np.zeros((cfg.n_cm + 1, cfg.n_tx), complex),
                       u=np.eye(cfg.n_rx, dtype=complex)[:cfg.n_cp],
                       phi=np.ones(cfg.m_passive, complex),
                       f=np.zeros(cfg.n_cp), p=np.zeros(cfg.n_cp),
                       e=np.ones(cfg.cache.n_files))
        m = utility(sol, ch, cfg)
        assert m.utility == 0.0
        assert m.sum_bits == 0.0

    def test_additive_reconstruction(self, small_cfg, small_ch, rand_sol):
        m = utility(rand_sol, small_ch, small_cfg)
        t = small_cfg.coherence_time_s
        rebuilt = t * (m.rate_com.sum() + m.rate_off.sum() + m.rate_loc.sum()) - m.d_total
        assert m.utility == pytest.approx(rebuilt, rel=1e-12)
        assert np.all(m.r_com >= 0) and np.all(m.r_off >= 0) and m.r_tar >= 0

    def test_duplicate_path_evaluation(self, small_cfg, small_ch, rand_sol):
        # independent re-evaluation from raw channels
        cfg, ch, sol = small_cfg, small_ch, rand_sol
        m = utility(sol, ch, cfg)
        b, t = cfg.bandwidth_hz, cfg.coherence_time_s
        total = 0.0
        for k in range(cfg.n_cm):
            total += t * b * np.log2(1 + downlink_sinr(sol, ch, cfg, k))
        eps = cfg.eps_array()
        for l in range(cfg.n_cp):
            total += t * (b * np.log2(1 + offload_sinr(sol, ch, cfg, l)) + sol.f[l] / eps[l])
        total -= backhaul_cost(sol.e, cfg.cache, t, cfg.n_cp)
        assert m.utility == pytest.approx(total, rel=1e-12)

    def test_hd_halves_throughput_terms(self, small_cfg, small_ch, rand_sol):
        sol = rand_sol.copy_with(p=np.zeros(small_cfg.n_cp))
        fd = utility(sol, small_ch, small_cfg, hd=False)
        hd = utility(sol, small_ch, small_cfg, hd=True)
        # with p = 0 there is no CCI, so the downlink SINR coincides and the
        # HD rate is exactly half
        assert np.allclose(hd.rate_com, 0.5 * fd.rate_com)
        assert np.allclose(hd.rate_loc, fd.rate_loc)

    def test_residual_signs(self, small_cfg, small_ch, rand_sol):
        res = residuals(rand_sol, small_ch, small_cfg)
        assert res["power"] <= 0.0       # built inside the budget
        assert res["energy"] <= 1e-9
        assert res["modulus"] <= 1e-12
        assert res["cache"] <= 0.0
