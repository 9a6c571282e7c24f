"""Transmit beamforming via semidefinite relaxation with Gaussian rank-one
recovery, and the closed-form receive combiners.

The transmit subproblem is lifted to one (N_t+1)-dimensional PSD block per
beam (corner entry pinned to 1 homogenizes the linear term); dropping the
rank-one constraint leaves a small SDP handled by the in-repo kernel, and the
relaxation value is a certified upper bound on any rank-one feasible point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic
from .channels import ChannelSet
from .config import SystemConfig
from .sysmodel import Solution, composite_channels, si_power
from .wmmse import LN2, AuxVars


class SdrInfeasibleError(Exception):
    """The sensing floor cannot be met under the power budget."""


@dataclass(frozen=True)
class TxCoeffs:
    """Per-beam objective data (log2 scaled) plus the unscaled sensing floor.

    omega: (K, N_t+1, N_t+1) Hermitian, linear-term lift per served user;
    s_mat: (N_t, N_t) PSD, combined interference+SI weight applied to every
    beam; omega0: (N_t, N_t) PSD echo-power matrix; b0: sensing floor.
    """

    omega: np.ndarray
    sqrt1a: np.ndarray
    s_mat: np.ndarray
    omega0: np.ndarray
    b3: np.ndarray
    b4: np.ndarray
    b0: float
    p_bs: float


@dataclass(frozen=True)
class RxCoeffs:
    """Per-user quadratic combiner data (log2 scaled): max 2Re{u^H t5} - u^H T5 u + b5."""

    t5: np.ndarray
    t5_mat: np.ndarray
    b5: np.ndarray


def assemble_tx_coeffs(sol: Solution, ch: ChannelSet, aux: AuxVars,
                       cfg: SystemConfig, hd: bool = False) -> TxCoeffs:
    comp = composite_channels(ch, sol.phi)
    k_n, l_n = ch.h_pu.shape[0], ch.g_pu.shape[0]
    nt = cfg.n_tx

    s_mat = np.zeros((nt, nt), complex)
    omega = np.zeros((k_n, nt + 1, nt + 1), complex)
    sqrt1a = np.sqrt(1.0 + aux.alpha1)
    b3 = np.zeros(k_n)
    for k in range(k_n):
        h = comp.h[k]
        bb = abs(aux.beta1[k]) ** 2
        s_mat += bb * np.outer(h.conj(), h)
        omega[k, :nt, nt] = aux.beta1[k] * h.conj()
        omega[k, nt, :nt] = aux.beta1[k].conj() * h
        cci = 0.0 if hd else float(sol.p @ np.abs(comp.ebar[:, k]) ** 2)
        b3[k] = (np.log(1.0 + aux.alpha1[k]) - aux.alpha1[k]
                 - bb * (cci + cfg.noise_ue_watt)) / LN2

    b4 = np.zeros(l_n)
    for l in range(l_n):
        u = sol.u[l]
        a2, b2l = aux.alpha2[l], aux.beta2[l]
        bb = abs(b2l) ** 2
        if not hd:
            v = ch.h_si.conj().T @ u
            s_mat += bb * np.outer(v, v.conj())
        amps = comp.g @ u.conj()
        b4[l] = (np.log(1.0 + a2) - a2
                 + 2.0 * np.sqrt(1.0 + a2) * (np.conj(b2l) * np.sqrt(sol.p[l]) * amps[l]).real
                 - bb * (float(sol.p @ np.abs(amps) ** 2)
                         + float(np.vdot(u, u).real) * cfg.noise_bs_watt)) / LN2

    cascade = (ch.g_s * sol.phi[None, :]) @ ch.g_t      # G_s diag(phi) G_t
    omega0 = cascade.conj().T @ cascade
    interf = float(sol.p @ (np.abs(ch.g_au) ** 2).sum(axis=1)) if l_n else 0.0
    b0 = cfg.gamma_tar_linear * (interf + cfg.noise_irs_watt)

    return TxCoeffs(
        omega=omega / LN2, sqrt1a=sqrt1a, s_mat=(s_mat + s_mat.conj().T) / 2.0 / LN2,
        omega0=(omega0 + omega0.conj().T) / 2.0, b3=b3, b4=b4, b0=float(b0),
        p_bs=cfg.p_bs_watt,
    )


def tx_objective(coeffs: TxCoeffs, w: np.ndarray) -> float:
    """Surrogate sum at a concrete beam set (matches the SDP objective on
    rank-one liftings)."""
    total = float(coeffs.b3.sum() + coeffs.b4.sum())
    for j in range(w.shape[0]):
        total -= float((w[j].conj() @ coeffs.s_mat @ w[j]).real)
    for k in range(coeffs.omega.shape[0]):
        nt = w.shape[1]
        wt = np.concatenate([w[k + 1], [1.0]])
        total += coeffs.sqrt1a[k] * float((wt.conj() @ coeffs.omega[k] @ wt).real)
    return total


def radar_power(coeffs: TxCoeffs, w: np.ndarray) -> float:
    """Expected echo power sum_j w_j^H Omega0 w_j."""
    return float(sum((w[j].conj() @ coeffs.omega0 @ w[j]).real for j in range(w.shape[0])))


def solve_tx_sdr(coeffs: TxCoeffs, cfg: SystemConfig) -> conic.SdpResult:
    """Relaxed lifted solve.  Raises SdrInfeasibleError when even the best
    eigen-direction at full power misses the sensing floor."""
    nt = cfg.n_tx
    n_beams = coeffs.omega.shape[0] + 1
    lam_max = float(np.linalg.eigvalsh(coeffs.omega0).max())
    if coeffs.p_bs * lam_max < coeffs.b0:
        raise SdrInfeasibleError(
            f"echo ceiling {coeffs.p_bs * lam_max:.3e} below floor {coeffs.b0:.3e}")

    dim = nt + 1
    top = np.zeros((dim, dim), complex)
    top[:nt, :nt] = coeffs.s_mat
    costs = []
    for j in range(n_beams):
        q = top.copy()
        if j >= 1:
            q = q - coeffs.sqrt1a[j - 1] * coeffs.omega[j - 1]
        costs.append(q)   # minimize Tr(q X) == maximize the surrogate part

    eye_tl = np.zeros((dim, dim), complex)
    eye_tl[:nt, :nt] = np.eye(nt)
    omega0_tl = np.zeros((dim, dim), complex)
    omega0_tl[:nt, :nt] = coeffs.omega0
    cons = [
        conic.SdpConstraint(tuple((j, eye_tl) for j in range(n_beams)), "<=", coeffs.p_bs),
        conic.SdpConstraint(tuple((j, omega0_tl) for j in range(n_beams)), ">=", coeffs.b0),
    ]
    cons += [conic.fix_diag_entry(j, dim, nt, 1.0) for j in range(n_beams)]
    prob = conic.SdpProblem(dims=(dim,) * n_beams, costs=tuple(costs),
                            constraints=tuple(cons))
    res = conic.solve_sdp(prob)
    if res.status == conic.INFEASIBLE:
        raise SdrInfeasibleError("lifted transmit problem infeasible")
    return res


def sdr_bound(coeffs: TxCoeffs, res: conic.SdpResult) -> float:
    """Certified upper bound on the surrogate objective: the dual value of the
    lifted minimization under-estimates its optimum regardless of the
    remaining interior-point gap."""
    return float(coeffs.b3.sum() + coeffs.b4.sum()) - res.dual_objective


def gaussian_randomize(wtilde: list, coeffs: TxCoeffs, cfg: SystemConfig,
                       n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Recover beams from the lifted blocks.

    Numerically rank-one blocks are collapsed by the corner-normalized
    principal eigenvector; otherwise candidates are sampled from the induced
    Gaussian, rescaled onto the power budget when that helps, filtered by the
    sensing floor and scored by the surrogate objective.
    """
    nt = cfg.n_tx
    n_beams = len(wtilde)
    eig = [np.linalg.eigh((x + x.conj().T) / 2.0) for x in wtilde]
    rank1 = all(vals[-2] <= 1e-8 * vals[-1] for vals, _ in eig)

    def corner_scale(vec: np.ndarray) -> np.ndarray:
        last = vec[nt]
        if abs(last) < 1e-12:
            return vec[:nt]
        return vec[:nt] / last

    principal = np.stack([
        corner_scale(vecs[:, -1] * np.sqrt(max(vals[-1], 0.0)))
        for vals, vecs in eig
    ])
    if rank1 and _feasible(principal, coeffs):
        return principal

    candidates = []
    roots = [vecs * np.sqrt(np.maximum(vals, 0.0))[None, :] for vals, vecs in eig]
    for _ in range(n_draws):
        draw = np.stack([
            corner_scale(root @ ((rng.standard_normal(nt + 1)
                                  + 1j * rng.standard_normal(nt + 1)) / np.sqrt(2.0)))
            for root in roots
        ])
        candidates.append(draw)
        power = float(np.sum(np.abs(draw) ** 2))
        if power > 0:
            candidates.append(draw * np.sqrt(coeffs.p_bs / power))
    candidates.append(principal)
    power = float(np.sum(np.abs(principal) ** 2))
    if power > 0:
        candidates.append(principal * np.sqrt(coeffs.p_bs / power))
    # sensing repair: mix power-budget candidates toward the best echo direction
    repaired = [_radar_repair(c, coeffs) for c in candidates]
    candidates += [c for c in repaired if c is not None]

    best, best_val = None, -np.inf
    for cand in candidates:
        if not _feasible(cand, coeffs):
            continue
        val = tx_objective(coeffs, cand)
        if val > best_val:
            best, best_val = cand, val
    if best is None:
        raise SdrInfeasibleError("no randomized beam met the sensing floor")
    return best


def _radar_repair(w: np.ndarray, coeffs: TxCoeffs) -> np.ndarray | None:
    """Shift power from the communication beams onto the echo-optimal sensing
    direction until the floor is met; linear in the shift fraction, so the
    smallest sufficient shift is closed form."""
    if _feasible(w, coeffs) or radar_power(coeffs, w) >= coeffs.b0:
        return None
    evals, evecs = np.linalg.eigh(coeffs.omega0)
    lam_max, v_max = float(evals[-1]), evecs[:, -1]
    com = w[1:]
    p_com = float(np.sum(np.abs(com) ** 2))
    p_res = max(coeffs.p_bs - p_com, 0.0)
    echo_com = radar_power(coeffs, np.vstack([np.zeros_like(w[0]), com]))
    target = coeffs.b0 * (1.0 + 1e-9)
    # echo(t) = (1-t) echo_com + (p_res + t p_com) lam_max over t in [0, 1]
    denom = p_com * lam_max - echo_com
    if p_com <= 0.0 or abs(denom) < 1e-300:
        t = 1.0
    else:
        t = (target - echo_com - p_res * lam_max) / denom
    if not np.isfinite(t) or t > 1.0:
        t = 1.0
    t = min(max(t, 0.0), 1.0)
    out = np.vstack([v_max * np.sqrt(p_res + t * p_com), np.sqrt(1.0 - t) * com])
    return out


def _feasible(w: np.ndarray, coeffs: TxCoeffs) -> bool:
    power_ok = float(np.sum(np.abs(w) ** 2)) <= coeffs.p_bs * (1.0 + 1e-9)
    radar_ok = radar_power(coeffs, w) >= coeffs.b0 * (1.0 - 1e-9)
    return power_ok and radar_ok


def optimize_tx(sol: Solution, ch: ChannelSet, aux: AuxVars, cfg: SystemConfig,
                n_draws: int, rng: np.random.Generator,
                hd: bool = False) -> tuple[np.ndarray, dict]:
    """Full transmit update with a monotonicity safeguard: the incumbent beams
    are kept whenever randomization fails to improve the surrogate."""
    coeffs = assemble_tx_coeffs(sol, ch, aux, cfg, hd)
    incumbent_val = tx_objective(coeffs, sol.w)
    res = solve_tx_sdr(coeffs, cfg)
    w_new = gaussian_randomize(res.blocks, coeffs, cfg, n_draws, rng)
    new_val = tx_objective(coeffs, w_new)
    info = {
        "sdp_status": res.status,
        "sdp_bound": sdr_bound(coeffs, res),
        "objective": new_val,
        "accepted": new_val >= incumbent_val - 1e-10 * (1.0 + abs(incumbent_val)),
    }
    if not info["accepted"]:
        return sol.w, info
    return w_new, info


def assemble_rx_coeffs(sol: Solution, ch: ChannelSet, aux: AuxVars,
                       cfg: SystemConfig, hd: bool = False) -> RxCoeffs:
    comp = composite_channels(ch, sol.phi)
    l_n = ch.g_pu.shape[0]
    nr = cfg.n_rx
    t5 = np.zeros((l_n, nr), complex)
    t5_mat = np.zeros((l_n, nr, nr), complex)
    b5 = np.zeros(l_n)
    base = sum(sol.p[lp] * np.outer(comp.g[lp], comp.g[lp].conj()) for lp in range(l_n)) \
        if l_n else np.zeros((nr, nr), complex)
    if not hd:
        si_cov = sum(np.outer(ch.h_si @ wj, (ch.h_si @ wj).conj()) for wj in sol.w)
    else:
        si_cov = np.zeros((nr, nr), complex)
    for l in range(l_n):
        a2, b2l = aux.alpha2[l], aux.beta2[l]
        bb = abs(b2l) ** 2
        t5[l] = np.sqrt(1.0 + a2) * np.conj(b2l) * np.sqrt(sol.p[l]) * comp.g[l] / LN2
        mat = bb * (base + si_cov + cfg.noise_bs_watt * np.eye(nr)) / LN2
        t5_mat[l] = (mat + mat.conj().T) / 2.0
        b5[l] = (np.log(1.0 + a2) - a2) / LN2
    return RxCoeffs(t5=t5, t5_mat=t5_mat, b5=b5)


def rx_objective(coeffs: RxCoeffs, u: np.ndarray, l: int) -> float:
    """b5 + 2Re{u^H t5} - u^H T5 u for CP-UE l."""
    lin = 2.0 * float((u.conj() @ coeffs.t5[l]).real)
    quad = float((u.conj() @ coeffs.t5_mat[l] @ u).real)
    return float(coeffs.b5[l]) + lin - quad


def solve_rx(coeffs: RxCoeffs) -> np.ndarray:
    """Closed-form stationary combiners u_l = T5_l^{-1} t5_l."""
    l_n, nr = coeffs.t5.shape
    u = np.zeros((l_n, nr), complex)
    for l in range(l_n):
        mat = coeffs.t5_mat[l]
        scale = float(np.abs(mat).max(initial=0.0))
        if scale < 1e-250 or np.linalg.cond(mat / scale) > 1e14:
            u[l, 0] = 1.0       # degenerate block (zero combiner weight)
            continue
        u[l] = np.linalg.solve(mat, coeffs.t5[l])
    return u


def optimize_rx(sol: Solution, ch: ChannelSet, aux: AuxVars, cfg: SystemConfig,
                hd: bool = False) -> np.ndarray:
    """Receive update; keeps the incumbent row where the block is degenerate
    (zero offload power makes the combiner irrelevant)."""
    if sol.u.shape[0] == 0:
        return sol.u
    coeffs = assemble_rx_coeffs(sol, ch, aux, cfg, hd)
    u_new = solve_rx(coeffs)
    out = sol.u.copy()
    for l in range(u_new.shape[0]):
        if abs(aux.beta2[l]) > 1e-120 and np.all(np.isfinite(u_new[l].view(float))):
            out[l] = u_new[l]
    return out
