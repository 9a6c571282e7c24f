"""Exact evaluation of the physical metrics.

Downlink and offloading SINRs, radar SINR, local computation rate/energy,
backhaul cost and the overall system utility (bits).  Rates use log2 so that
SINR = 1 gives exactly B bits/s.  Quadratic terms in the transmitted symbol
vector are evaluated in expectation (unit-variance independent symbols), i.e.
|a^H x|^2 -> sum_k |a^H w_k|^2 over all beams including the sensing beam.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channels import ChannelSet
from .config import SystemConfig
from .cacheopt import zipf_popularity


@dataclass(frozen=True)
class Solution:
    """Decision variables.  w has shape (K+1, N_t) with row 0 the sensing beam;
    u (L, N_r); phi (M,) unit modulus; f and p (L,); e (V,) in [0, 1]."""

    w: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    f: np.ndarray
    p: np.ndarray
    e: np.ndarray

    def copy_with(self, **changes) -> "Solution":
        return replace(self, **changes)


@dataclass(frozen=True)
class Metrics:
    r_com: np.ndarray      # downlink SINR per CM-UE
    rate_com: np.ndarray   # bit/s
    r_off: np.ndarray      # offloading SINR per CP-UE
    rate_off: np.ndarray   # bit/s
    r_tar: float           # radar SINR
    rate_loc: np.ndarray   # bit/s
    energy_loc: np.ndarray # J
    d_total: float         # backhaul cost, bits-equivalent
    sum_bits: float        # T * (sum rate_com + sum rate_off + sum rate_loc)
    utility: float         # sum_bits - d_total


@dataclass(frozen=True)
class Composite:
    """phi-dependent effective channels: h (K, N_t) rows h_k, ebar (L, K), g (L, N_r)."""

    h: np.ndarray
    ebar: np.ndarray
    g: np.ndarray


def composite_channels(ch: ChannelSet, phi: np.ndarray) -> Composite:
    """h_k = h_pu_k^H diag(phi) G_t,  ebar_lk = e_lk + h_pu_k^H diag(phi) g_pu_l,
    g_l = G_r^H diag(phi) g_pu_l."""
    m = ch.g_t.shape[0]
    phi = np.asarray(phi)
    if phi.shape != (m,):
        raise ValueError(f"phi must have shape ({m},), got {phi.shape}")
    hp = ch.h_pu.conj() * phi[None, :]              # rows h_pu_k^H diag(phi)
    h = hp @ ch.g_t                                  # (K, N_t)
    ebar = ch.e_direct + (hp @ ch.g_pu.T).T          # (L, K): e_lk + h_k^H Phi g_pu_l
    g = (ch.g_pu * phi[None, :]) @ ch.g_r.conj()     # (L, N_r): G_r^H diag(phi) g_pu_l
    return Composite(h=h, ebar=ebar, g=g)


def downlink_sinr(sol: Solution, ch: ChannelSet, cfg: SystemConfig, k: int,
                  comp: Composite | None = None, hd: bool = False) -> float:
    """SINR of CM-UE k (0-based).  In HD mode the uplink CCI term is absent."""
    if not 0 <= k < ch.h_pu.shape[0]:
        raise IndexError(f"CM-UE index {k} out of range")
    comp = comp or composite_channels(ch, sol.phi)
    gains = np.abs(sol.w @ comp.h[k]) ** 2        # |h_k w_j|^2 over all beams j
    sig = gains[k + 1]
    interf = gains.sum() - sig
    cci = 0.0 if hd else float(sol.p @ np.abs(comp.ebar[:, k]) ** 2)
    return float(sig / (interf + cci + cfg.noise_ue_watt))


def radar_sinr(sol: Solution, ch: ChannelSet, cfg: SystemConfig,
               p: np.ndarray | None = None) -> float:
    """Echo power through the cascaded BS->IRS->target->SE path over uplink
    interference plus sensing noise."""
    p = sol.p if p is None else np.asarray(p, float)
    echo_mat = (ch.g_s * sol.phi[None, :]) @ ch.g_t  # G_s diag(phi) G_t, (M_a, N_t)
    echo = float(np.sum(np.abs(echo_mat @ sol.w.T) ** 2))
    interf = float(p @ (np.abs(ch.g_au) ** 2).sum(axis=1)) if p.size else 0.0
    return echo / (interf + cfg.noise_irs_watt)


def offload_sinr(sol: Solution, ch: ChannelSet, cfg: SystemConfig, l: int,
                 comp: Composite | None = None, hd: bool = False) -> float:
    """Receive SINR of CP-UE l after combining with u_l.  In HD mode the
    residual-SI term is absent."""
    if not 0 <= l < ch.g_pu.shape[0]:
        raise IndexError(f"CP-UE index {l} out of range")
    comp = comp or composite_channels(ch, sol.phi)
    u = sol.u[l]
    gains = sol.p * np.abs(comp.g @ u.conj()) ** 2   # p_l' |u^H g_l'|^2
    sig = gains[l]
    interf = gains.sum() - sig
    si = 0.0 if hd else float(np.sum(np.abs(sol.w @ (ch.h_si.conj().T @ u).conj()) ** 2))
    noise = float(np.vdot(u, u).real) * cfg.noise_bs_watt
    den = interf + si + noise
    if den <= 0.0:            # all-zero combiner receives nothing
        return 0.0
    return float(sig / den)


def si_power(u_l: np.ndarray, ch: ChannelSet, w: np.ndarray) -> float:
    """Expected residual self-interference power sum_k |u^H H_SI w_k|^2."""
    v = ch.h_si.conj().T @ u_l
    return float(np.sum(np.abs(w @ v.conj()) ** 2))


def local_rate_energy(f_l: float, eps_l: float, t: float, zeta: float) -> tuple[float, float]:
    """Computation rate f/eps (bit/s) and energy T*zeta*f^3 (J)."""
    return f_l / eps_l, t * zeta * f_l ** 3


def backhaul_cost(e: np.ndarray, cache_cfg, t: float, n_cp: int) -> float:
    """D_total = T sum_v rho_v (1 - e_v) c_v sum_l R_0l."""
    c = zipf_popularity(cache_cfg.n_files, cache_cfg.skew)
    rho = cache_cfg.price_array()
    r0 = cache_cfg.rate_array(n_cp)
    return float(t * np.sum(rho * (1.0 - np.asarray(e, float)) * c) * r0.sum())


def utility(sol: Solution, ch: ChannelSet, cfg: SystemConfig, hd: bool = False) -> Metrics:
    """Evaluate every metric of the current solution.  HD halves both
    throughput terms (orthogonal equal-duration slots)."""
    comp = composite_channels(ch, sol.phi)
    k_n, l_n = ch.h_pu.shape[0], ch.g_pu.shape[0]
    b, t = cfg.bandwidth_hz, cfg.coherence_time_s
    duplex = 0.5 if hd else 1.0

    r_com = np.array([downlink_sinr(sol, ch, cfg, k, comp, hd) for k in range(k_n)])
    r_off = np.array([offload_sinr(sol, ch, cfg, l, comp, hd) for l in range(l_n)])
    rate_com = duplex * b * np.log2(1.0 + r_com)
    rate_off = duplex * b * np.log2(1.0 + r_off)
    eps = cfg.eps_array()
    rate_loc = sol.f / eps if l_n else np.zeros(0)
    energy_loc = t * cfg.zeta * sol.f ** 3 if l_n else np.zeros(0)
    r_tar = radar_sinr(sol, ch, cfg)
    d_total = backhaul_cost(sol.e, cfg.cache, t, l_n)
    sum_bits = t * (rate_com.sum() + rate_off.sum() + rate_loc.sum())
    return Metrics(
        r_com=r_com, rate_com=rate_com, r_off=r_off, rate_off=rate_off,
        r_tar=r_tar, rate_loc=rate_loc, energy_loc=energy_loc,
        d_total=d_total, sum_bits=sum_bits, utility=sum_bits - d_total,
    )


def residuals(sol: Solution, ch: ChannelSet, cfg: SystemConfig) -> dict[str, float]:
    """Signed constraint residuals; positive means violated."""
    t = cfg.coherence_time_s
    power = float(np.sum(np.abs(sol.w) ** 2) - cfg.p_bs_watt)
    gamma = cfg.gamma_tar_linear
    radar = float(gamma - radar_sinr(sol, ch, cfg)) / gamma
    modulus = float(np.max(np.abs(np.abs(sol.phi) - 1.0))) if sol.phi.size else 0.0
    if sol.p.size:
        energy = float(np.max(t * sol.p + t * cfg.zeta * sol.f ** 3 - cfg.e_max_array()))
    else:
        energy = 0.0
    cache = float(sol.e @ cfg.cache.lengths_array() - cfg.cache.capacity)
    return {
        "power": power, "radar": radar, "modulus": modulus,
        "energy": energy, "cache": cache,
    }


METRICS_CSV_COLUMNS = (
    "utility_bits", "sum_bits", "rate_com_bits", "rate_off_bits", "rate_loc_bits",
    "backhaul_cost_bits", "radar_sinr",
)


def metrics_csv_row(m: Metrics, t: float) -> list[float]:
    """Fixed-order CSV projection of a Metrics record (column names in
    METRICS_CSV_COLUMNS; all linear units)."""
    return [
        m.utility, m.sum_bits, t * m.rate_com.sum(), t * m.rate_off.sum(),
        t * m.rate_loc.sum(), m.d_total, m.r_tar,
    ]
