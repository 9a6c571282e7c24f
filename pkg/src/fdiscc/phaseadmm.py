"""IRS phase-shift optimization.

The surrogate objective and the radar constraint are first collapsed to the
quadratic data (T12, t12, b12, T0, b0) of the reflection vector.  The unit
modulus constraint is split off onto a copy variable and handled by ADMM with
a geometrically decreasing penalty; the nonconvex side of the radar constraint
is linearized at the current iterate each pass (a tangent minorant of the echo
power, so any point feasible for the linearized constraint is feasible for the
true one).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conic
from .channels import ChannelSet
from .config import SystemConfig
from .sysmodel import Solution, composite_channels, si_power
from .wmmse import LN2, AuxVars


@dataclass(frozen=True)
class PhaseCoeffs:
    """Quadratic data of the reflection vector phi.

    Surrogate sum = -phi^H T12 phi + 2 Re{t12^H phi} + b12 (log2 units);
    radar constraint reads  b0 - phi^H T0 phi <= 0  (linear units).
    """

    t12_mat: np.ndarray
    t12_vec: np.ndarray
    b12: float
    t0_mat: np.ndarray
    b0: float


@dataclass
class AdmmState:
    phi: np.ndarray
    psi: np.ndarray
    lam: np.ndarray
    rho: float


@dataclass(frozen=True)
class LinearRadar:
    """Affine minorant constraint -2 Re{d^H phi} + e <= 0."""

    d: np.ndarray
    e: float


@dataclass(frozen=True)
class AdmmOptions:
    rho_init: float = 1.0
    rho_factor: float = 0.8
    rho_floor: float = 1e-6
    max_inner: int = 200
    consensus_tol: float = 1e-5


@dataclass
class PhaseInfo:
    iterations: int = 0
    consensus: float = float("inf")
    reverted: bool = False
    infeasible: bool = False
    trace: list = field(default_factory=list)   # (residual, surrogate, rho) rows


def assemble_phase_coeffs(sol: Solution, ch: ChannelSet, aux: AuxVars,
                          cfg: SystemConfig, hd: bool = False) -> PhaseCoeffs:
    """Collapse the surrogates and the echo power into quadratic coefficients."""
    m = ch.g_t.shape[0]
    k_n, l_n = ch.h_pu.shape[0], ch.g_pu.shape[0]
    gtw = sol.w @ ch.g_t.T                      # rows G_t w_j, shape (K+1, M)

    t1 = np.zeros(m, complex)
    t1_mat = np.zeros((m, m), complex)
    b1 = 0.0
    for k in range(k_n):
        a1, b1k, bb = aux.alpha1[k], aux.beta1[k], abs(aux.beta1[k]) ** 2
        # linear part from the desired-signal term
        t1 += np.sqrt(1.0 + a1) * b1k * (gtw[k + 1].conj() * ch.h_pu[k])
        # quadratic part from every beam through the cascaded link
        v = gtw.conj() * ch.h_pu[k][None, :]    # rows E_j^H h_pu_k; h_k w_j = v_j^H phi
        t1_mat += bb * (v.T @ v.conj())
        b1k_const = np.log(1.0 + a1) - a1 - bb * cfg.noise_ue_watt
        if not hd and l_n:
            arows = ch.h_pu[k].conj()[None, :] * ch.g_pu      # rows a_{1,k,l}
            t1 -= bb * (sol.p * ch.e_direct[:, k]) @ arows.conj()
            t1_mat += bb * (arows.conj().T * sol.p[None, :]) @ arows
            b1k_const -= bb * float(sol.p @ np.abs(ch.e_direct[:, k]) ** 2)
        b1 += b1k_const

    t2 = np.zeros(m, complex)
    t2_mat = np.zeros((m, m), complex)
    b2 = 0.0
    for l in range(l_n):
        a2, b2l, bb = aux.alpha2[l], aux.beta2[l], abs(aux.beta2[l]) ** 2
        u = sol.u[l]
        # u^H G_r^H diag(g_pu_l') rows for every interferer l'
        urows = (ch.g_r @ u).conj()[None, :] * ch.g_pu  # (L, M), row l' = u^H a_{2,l'}
        t2 += np.sqrt(1.0 + a2) * b2l * np.sqrt(sol.p[l]) * urows[l].conj()
        t2_mat += bb * (urows.conj().T * sol.p[None, :]) @ urows
        si = 0.0 if hd else si_power(u, ch, sol.w)
        b2 += (np.log(1.0 + a2) - a2
               - bb * (si + float(np.vdot(u, u).real) * cfg.noise_bs_watt))

    t12_mat = (t1_mat + t2_mat) / LN2
    t12_vec = (t1 + t2) / LN2
    b12 = (b1 + b2) / LN2

    # echo power: sum_j |G_s diag(phi) G_t w_j|^2 = phi^H T0 phi
    t0_mat = np.zeros((m, m), complex)
    for j in range(gtw.shape[0]):
        block = ch.g_s * gtw[j][None, :]        # G_s diag(G_t w_j)
        t0_mat += block.conj().T @ block
    interf = float(sol.p @ (np.abs(ch.g_au) ** 2).sum(axis=1)) if l_n else 0.0
    b0 = cfg.gamma_tar_linear * (interf + cfg.noise_irs_watt)

    t12_mat = (t12_mat + t12_mat.conj().T) / 2.0
    t0_mat = (t0_mat + t0_mat.conj().T) / 2.0
    return PhaseCoeffs(t12_mat=t12_mat, t12_vec=t12_vec, b12=float(b12),
                       t0_mat=t0_mat, b0=float(b0))


def surrogate_value(coeffs: PhaseCoeffs, phi: np.ndarray) -> float:
    """-phi^H T12 phi + 2 Re{t12^H phi} + b12."""
    quad = float((phi.conj() @ coeffs.t12_mat @ phi).real)
    lin = 2.0 * float((coeffs.t12_vec.conj() @ phi).real)
    return -quad + lin + coeffs.b12


def echo_power(coeffs: PhaseCoeffs, phi: np.ndarray) -> float:
    return float((phi.conj() @ coeffs.t0_mat @ phi).real)


def mm_linearize_radar(coeffs: PhaseCoeffs, phi0: np.ndarray) -> LinearRadar:
    """Tangent minorant of the echo power at phi0."""
    d = coeffs.t0_mat @ phi0
    e = float((phi0.conj() @ coeffs.t0_mat @ phi0).real) + coeffs.b0
    return LinearRadar(d=d, e=e)


def admm_phi_step(coeffs: PhaseCoeffs, state: AdmmState, lin: LinearRadar) -> np.ndarray:
    """Solve the per-pass convex reflection subproblem via the conic kernel."""
    m = state.phi.shape[0]
    prox = 1.0 / (2.0 * state.rho)
    target = state.psi - state.rho * state.lam
    prob = conic.QcqpProblem(
        a=coeffs.t12_mat + prox * np.eye(m),
        b=coeffs.t12_vec + prox * target,
        d=(-2.0 * lin.d)[None, :],
        e=np.array([lin.e]),
    )
    res = conic.solve_qcqp(prob)
    if res.status == conic.INFEASIBLE:
        raise PhaseStepInfeasible()
    return res.x


class PhaseStepInfeasible(Exception):
    """The linearized radar constraint admits no reflection vector."""


def psi_step(phi: np.ndarray, lam: np.ndarray, rho: float) -> np.ndarray:
    """Unit-modulus projection aligned with phi + rho*lambda."""
    return np.exp(1j * np.angle(phi + rho * lam))


def dual_step(state: AdmmState) -> np.ndarray:
    return state.lam + (state.phi - state.psi) / state.rho


def optimize_phase(sol: Solution, ch: ChannelSet, aux: AuxVars, cfg: SystemConfig,
                   opts: AdmmOptions = AdmmOptions(), hd: bool = False
                   ) -> tuple[np.ndarray, PhaseInfo]:
    """Full inner ADMM pass; returns a unit-modulus phi that never lowers the
    surrogate of the incoming one (reverts otherwise)."""
    coeffs = assemble_phase_coeffs(sol, ch, aux, cfg, hd)
    info = PhaseInfo()
    phi_in = sol.phi.copy()
    entry_val = surrogate_value(coeffs, phi_in)
    if echo_power(coeffs, phi_in) < coeffs.b0 * (1.0 - 1e-9):
        # entry violates the sensing floor: phases alone are not trusted to
        # restore it this round (the tangent minorant would force extreme
        # excursions); leave it to the beam/power blocks
        info.infeasible = True
        return phi_in, info

    m = phi_in.shape[0]
    state = AdmmState(phi=phi_in.copy(), psi=np.exp(1j * np.angle(phi_in)),
                      lam=np.zeros(m, complex), rho=opts.rho_init)

    # eigen split of T12 gives the unconstrained proximal solve in O(M^2)
    evals, evecs = np.linalg.eigh(coeffs.t12_mat)

    for it in range(1, opts.max_inner + 1):
        lin = mm_linearize_radar(coeffs, state.phi)
        prox = 1.0 / (2.0 * state.rho)
        rhs = coeffs.t12_vec + prox * (state.psi - state.rho * state.lam)
        phi_u = evecs @ ((evecs.conj().T @ rhs) / (evals + prox))
        slack = -2.0 * float((lin.d.conj() @ phi_u).real) + lin.e
        if slack <= 1e-12 * max(1.0, abs(lin.e)):
            state.phi = phi_u
        else:
            try:
                state.phi = admm_phi_step(coeffs, state, lin)
            except PhaseStepInfeasible:
                info.infeasible = True
                return phi_in, info
        state.psi = psi_step(state.phi, state.lam, state.rho)
        state.lam = dual_step(state)
        info.consensus = float(np.abs(state.phi - state.psi).max())
        info.iterations = it
        info.trace.append((info.consensus, surrogate_value(coeffs, state.phi), state.rho))
        if info.consensus <= opts.consensus_tol:
            break
        state.rho = max(state.rho * opts.rho_factor, opts.rho_floor)

    phi_out = state.psi
    exit_val = surrogate_value(coeffs, phi_out)
    radar_ok = echo_power(coeffs, phi_out) >= coeffs.b0 * (1.0 - 1e-6)
    if exit_val < entry_val - 1e-10 * (1.0 + abs(entry_val)) or not radar_ok:
        info.reverted = True
        return phi_in, info
    return phi_out, info
