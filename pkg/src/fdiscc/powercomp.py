"""CP-UE transmit power and local CPU allocation.

A separable concave maximization with one coupling constraint (the sensing
interference budget).  The energy constraint is always active at an optimum
because residual energy is worth strictly positive computation rate, so each
user reduces to a 1-D concave problem in p after substituting
f(p) = ((E - T p) / (T zeta))^{1/3}; the coupling multiplier is found by outer
bisection on the monotone interference total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .config import SystemConfig
from .sysmodel import Solution, composite_channels, si_power
from .wmmse import LN2, AuxVars


class SensingInfeasibleError(Exception):
    """Even zero uplink power violates the sensing floor (c8 < 0)."""


@dataclass(frozen=True)
class PowerCoeffs:
    """Objective data (log2 scaled) and the unscaled sensing budget row.

    Offload surrogate of user l:  b2[l] + sqrt(p_l) b6[l] - p_l b7[l];
    downlink surrogate of user k: b10[k] - c1[k] sum_l p_l b11[k, l];
    sensing budget: sum_l p_l b9[l] <= c8.
    """

    b2: np.ndarray
    b6: np.ndarray
    b7: np.ndarray
    b9: np.ndarray
    b10: np.ndarray
    b11: np.ndarray
    c1: np.ndarray
    c8: float


def assemble_power_coeffs(sol: Solution, ch: ChannelSet, aux: AuxVars,
                          cfg: SystemConfig, hd: bool = False) -> PowerCoeffs:
    comp = composite_channels(ch, sol.phi)
    k_n, l_n = ch.h_pu.shape[0], ch.g_pu.shape[0]

    b10 = np.zeros(k_n)
    c1 = np.zeros(k_n)
    b11 = np.zeros((k_n, l_n))
    for k in range(k_n):
        a1, b1k = aux.alpha1[k], aux.beta1[k]
        bb = abs(b1k) ** 2
        amps = sol.w @ comp.h[k]
        b10[k] = (np.log(1.0 + a1) - a1
                  + 2.0 * np.sqrt(1.0 + a1) * (np.conj(b1k) * amps[k + 1]).real
                  - bb * (float(np.sum(np.abs(amps) ** 2)) + cfg.noise_ue_watt)) / LN2
        c1[k] = bb / LN2
        if not hd:
            b11[k] = np.abs(comp.ebar[:, k]) ** 2

    b2 = np.zeros(l_n)
    b6 = np.zeros(l_n)
    b7 = np.zeros(l_n)
    uamp = np.zeros((l_n, l_n), complex)     # uamp[l, l'] = u_l^H g_l'
    for l in range(l_n):
        uamp[l] = comp.g @ sol.u[l].conj()
    for l in range(l_n):
        a2, b2l = aux.alpha2[l], aux.beta2[l]
        si = 0.0 if hd else si_power(sol.u[l], ch, sol.w)
        b2[l] = (np.log(1.0 + a2) - a2
                 - abs(b2l) ** 2 * (si + float(np.vdot(sol.u[l], sol.u[l]).real)
                                    * cfg.noise_bs_watt)) / LN2
        b6[l] = 2.0 * np.sqrt(1.0 + a2) * (np.conj(b2l) * uamp[l, l]).real / LN2
        b7[l] = float(np.sum(np.abs(aux.beta2) ** 2 * np.abs(uamp[:, l]) ** 2)) / LN2

    cascade = (ch.g_s * sol.phi[None, :]) @ ch.g_t
    echo = float(np.sum(np.abs(cascade @ sol.w.T) ** 2))
    c8 = echo - cfg.noise_irs_watt * cfg.gamma_tar_linear
    b9 = cfg.gamma_tar_linear * (np.abs(ch.g_au) ** 2).sum(axis=1)
    return PowerCoeffs(b2=b2, b6=b6, b7=b7, b9=b9, b10=b10, b11=b11, c1=c1, c8=float(c8))


def power_objective(coeffs: PowerCoeffs, cfg: SystemConfig, p: np.ndarray,
                    f: np.ndarray, rate_weight: float = 1.0) -> float:
    """The separable concave objective at (p, f)."""
    lin = coeffs.b7 + coeffs.c1 @ coeffs.b11 if coeffs.b11.size else coeffs.b7
    off = float(np.sum(coeffs.b6 * np.sqrt(p) - lin * p))
    loc = float(np.sum(f / (cfg.eps_array() * cfg.bandwidth_hz)))
    return rate_weight * off + loc


def _user_solve(b6: float, lin: float, mu_b9: float, e_max: float, t: float,
                zeta: float, f_coef: float, force_f_zero: bool) -> tuple[float, float]:
    """Maximize b6 sqrt(p) - (lin + mu_b9) p + f_coef * f(p) on [0, E/T]."""
    p_hi = e_max / t
    slope = lin + mu_b9

    if force_f_zero:
        if b6 <= 0.0:
            return 0.0, 0.0
        if slope <= 0.0:
            return p_hi, 0.0
        p_star = min((b6 / (2.0 * slope)) ** 2, p_hi)
        return p_star, 0.0

    def f_of(p):
        return ((e_max - t * p) / (t * zeta)) ** (1.0 / 3.0)

    def deriv(p):
        d = -f_coef / (3.0 * zeta) * ((e_max - t * p) / (t * zeta)) ** (-2.0 / 3.0)
        d -= slope
        if p > 0.0:
            d += b6 / (2.0 * np.sqrt(p))
        return d

    if b6 <= 0.0 or deriv(p_hi * 1e-14) <= 0.0:
        return 0.0, f_of(0.0)
    lo, hi = p_hi * 1e-14, p_hi * (1.0 - 1e-14)
    if deriv(hi) >= 0.0:
        p_star = hi
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if deriv(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        p_star = 0.5 * (lo + hi)
    return p_star, f_of(p_star)


def solve_power_compute(coeffs: PowerCoeffs, cfg: SystemConfig,
                        rate_weight: float = 1.0, force_f_zero: bool = False
                        ) -> tuple[np.ndarray, np.ndarray, dict]:
    """Exact KKT point of the power/compute block.

    Raises SensingInfeasibleError when c8 < 0 (no uplink power level can
    restore the sensing margin; the caller must fix phase/beams first).
    """
    l_n = coeffs.b6.shape[0]
    if l_n == 0:
        return np.zeros(0), np.zeros(0), {"mu": 0.0, "iterations": 0}
    if coeffs.c8 < 0.0:
        raise SensingInfeasibleError(f"sensing budget c8 = {coeffs.c8:.3e} < 0")

    t, zeta = cfg.coherence_time_s, cfg.zeta
    e_max = cfg.e_max_array()
    eps = cfg.eps_array()
    f_coef = 1.0 / (eps * cfg.bandwidth_hz)
    lin = coeffs.b7 + (coeffs.c1 @ coeffs.b11 if coeffs.b11.size else 0.0)
    b6w = rate_weight * coeffs.b6
    linw = rate_weight * lin

    def all_users(mu):
        p = np.zeros(l_n)
        f = np.zeros(l_n)
        for l in range(l_n):
            p[l], f[l] = _user_solve(b6w[l], linw[l], mu * coeffs.b9[l],
                                     e_max[l], t, zeta, f_coef[l], force_f_zero)
        return p, f

    p, f = all_users(0.0)
    total = float(p @ coeffs.b9)
    iters = 0
    mu = 0.0
    if total > coeffs.c8:
        mu_lo, mu_hi = 0.0, 1.0
        while float(all_users(mu_hi)[0] @ coeffs.b9) > coeffs.c8 and mu_hi < 1e30:
            mu_hi *= 4.0
        for iters in range(1, 101):
            mu = 0.5 * (mu_lo + mu_hi)
            p, f = all_users(mu)
            total = float(p @ coeffs.b9)
            if total > coeffs.c8:
                mu_lo = mu
            else:
                mu_hi = mu
            if abs(total - coeffs.c8) <= 1e-12 * max(1.0, coeffs.c8):
                break
        mu = mu_hi
        p, f = all_users(mu)
        if float(p @ coeffs.b9) > coeffs.c8:
            # land exactly on the feasible side of the bracket
            scale = coeffs.c8 / float(p @ coeffs.b9) if float(p @ coeffs.b9) > 0 else 0.0
            p = p * scale

    # snap vanishing powers to an exact zero so downstream scale-sensitive
    # quantities (combiner weights ~ 1/sqrt(p)) cannot degenerate; the
    # caller-side monotonicity safeguard rejects the snap if it ever loses
    snap = e_max / t * 1e-14
    p = np.where(p < snap, 0.0, p)
    if not force_f_zero:
        f = ((e_max - t * p) / (t * zeta)) ** (1.0 / 3.0)
    else:
        f = np.zeros(l_n)
    return p, f, {"mu": mu, "iterations": iters}


def optimize_power(sol: Solution, ch: ChannelSet, aux: AuxVars, cfg: SystemConfig,
                   rate_weight: float = 1.0, force_f_zero: bool = False,
                   hd: bool = False) -> tuple[np.ndarray, np.ndarray, dict]:
    """Power/compute update with a monotonicity safeguard against the incumbent."""
    coeffs = assemble_power_coeffs(sol, ch, aux, cfg, hd)
    p, f, info = solve_power_compute(coeffs, cfg, rate_weight, force_f_zero)
    new_val = power_objective(coeffs, cfg, p, f, rate_weight)
    old_val = power_objective(coeffs, cfg, sol.p, sol.f, rate_weight)
    info["accepted"] = new_val >= old_val - 1e-12 * (1.0 + abs(old_val))
    if not info["accepted"]:
        return sol.p, sol.f, info
    return p, f, info
