"""Outer block-coordinate loop: cache solve, feasible initialization, and the
per-iteration cycle auxiliaries -> reflection phases (ADMM) -> transmit beams
(SDR) -> receive combiners (closed form) -> power/compute (dual bisection).

Every block carries a monotonicity safeguard, so the recorded surrogate
objective never decreases across accepted iterations; infeasible subproblems
skip their block for the iteration and keep the incumbent.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import beamforming, cacheopt, phaseadmm, powercomp, wmmse
from .channels import ChannelSet, draw_channels
from .config import SystemConfig
from .sysmodel import Metrics, Solution, residuals, utility

SCHEMES = ("proposed", "full-offloading", "fixed-phase", "hd",
           "random-caching", "no-caching")

CONVERGED = "converged"
MAX_ITER_STATUS = "max-iter"
INFEASIBLE_SENSING = "infeasible-sensing"


@dataclass(frozen=True)
class RunOptions:
    scheme: str = "proposed"
    max_iter: int = 50
    conv_tol: float = 1e-4
    conv_window: int = 3
    n_draws: int = 200
    admm: phaseadmm.AdmmOptions = field(default_factory=phaseadmm.AdmmOptions)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float        # surrogate BCA objective, log2 units per channel use
    utility: float          # bits
    res_power: float
    res_radar: float
    res_modulus: float
    res_energy: float
    res_cache: float
    wall_ms: float


@dataclass(frozen=True)
class RunResult:
    solution: Solution
    metrics: Metrics
    trace: tuple
    status: str
    scheme: str
    iterations: int


class SensingInfeasible(Exception):
    """Initialization cannot reach the radar threshold at full power."""


def _mrt_rows(comp_h: np.ndarray) -> np.ndarray:
    out = np.zeros_like(comp_h)
    for k in range(comp_h.shape[0]):
        norm = np.linalg.norm(comp_h[k])
        out[k] = comp_h[k].conj() / norm if norm > 0 else 0.0
    return out


def fixed_phase_heuristic(ch: ChannelSet, cfg: SystemConfig) -> np.ndarray:
    """Phases aligning the cascaded link of the strongest CM-UE under its
    matched-filter beam; all-ones when there are no CM-UEs."""
    m = cfg.m_passive
    if ch.h_pu.shape[0] == 0:
        return np.ones(m, complex)
    k_star = int(np.argmax(np.linalg.norm(ch.h_pu, axis=1)))
    h_flat = ch.h_pu[k_star].conj() @ ch.g_t
    w_mrt = h_flat.conj() / np.linalg.norm(h_flat)
    cascade = ch.h_pu[k_star].conj() * (ch.g_t @ w_mrt)
    return np.exp(-1j * np.angle(cascade))


def echo_aligned_phases(ch: ChannelSet) -> np.ndarray:
    """Phases that cohere the strongest transmit column through the target
    path (feasibility fallback for tight sensing thresholds)."""
    cascade = ch.a_passive.conj()[:, None] * ch.g_t   # rows of a_p^H diag(.) G_t
    j_star = int(np.argmax(np.abs(cascade).sum(axis=0)))
    return np.exp(-1j * np.angle(cascade[:, j_star]))


def _start_for_phi(cfg: SystemConfig, ch: ChannelSet, phi: np.ndarray) -> Solution | None:
    """Feasible start at the given phases, or None if the sensing threshold is
    out of reach there.

    The power split between the sensing beam (echo principal direction) and
    the matched-filter user beams is the smallest share meeting twice the
    sensing floor (margin for uplink power), bisected exactly from the linear
    echo-vs-share law; user beams always keep strictly positive power so the
    surrogate gradients never vanish."""
    k_n, l_n = cfg.n_cm, cfg.n_cp
    gamma, sig2 = cfg.gamma_tar_linear, cfg.noise_irs_watt
    comp_h = (ch.h_pu.conj() * phi[None, :]) @ ch.g_t
    cascade = (ch.g_s * phi[None, :]) @ ch.g_t
    omega0 = cascade.conj().T @ cascade
    radar_dir = np.linalg.eigh(omega0)[1][:, -1]
    mrt = _mrt_rows(comp_h)

    def beams(share0: float) -> np.ndarray:
        w = np.zeros((k_n + 1, cfg.n_tx), complex)
        w[0] = radar_dir * np.sqrt(share0 * cfg.p_bs_watt)
        if k_n:
            w[1:] = mrt * np.sqrt((1.0 - share0) * cfg.p_bs_watt / k_n)
        return w

    def echo(w: np.ndarray) -> float:
        return float(np.sum(np.abs(cascade @ w.T) ** 2))

    ceiling = echo(beams(1.0))                       # all power on the echo direction
    if ceiling < gamma * sig2 * (1.0 + 1e-12):
        return None
    if k_n == 0:
        share = 1.0
    else:
        base = echo(beams(0.0))
        target = min(2.0 * gamma * sig2, ceiling * (1.0 - 1e-9))
        target = max(target, gamma * sig2 * (1.0 + 1e-9))
        if base >= target:
            share_needed = 0.0
        else:
            share_needed = (target - base) / max(ceiling - base, 1e-300)
        share = min(max(1.0 / (k_n + 1), share_needed), 1.0 - 1e-6)
    w = beams(share)
    echo_val = echo(w)
    if echo_val < gamma * sig2:
        return None

    e_max, t = cfg.e_max_array(), cfg.coherence_time_s
    if l_n:
        g_au_norm2 = (np.abs(ch.g_au) ** 2).sum(axis=1)
        budget = max(0.0, echo_val / gamma - sig2)
        p_uni = budget / float(g_au_norm2.sum()) * (1.0 - 1e-9)
        p = np.minimum(e_max / (2.0 * t), p_uni)
        f = ((e_max - t * p) / (t * cfg.zeta)) ** (1.0 / 3.0)
        u = np.eye(cfg.n_rx, dtype=complex)[:l_n].copy()
    else:
        p, f = np.zeros(0), np.zeros(0)
        u = np.zeros((0, cfg.n_rx), complex)

    e = cacheopt.solve_caching(cfg.cache).e
    return Solution(w=w, u=u, phi=phi.copy(), f=f, p=p, e=e)


def initialize(cfg: SystemConfig, ch: ChannelSet, rng: np.random.Generator,
               phi: np.ndarray | None = None) -> Solution:
    """Feasible start.  With ``phi`` pinned (fixed-phase baseline) only that
    phase vector is tried; otherwise the best of the max-gain alignment, the
    echo alignment and a random draw is kept, scored by initial sum bits.
    Raises SensingInfeasible when no candidate can reach the threshold."""
    if phi is not None:
        candidates = [np.asarray(phi, complex)]
    else:
        candidates = [
            fixed_phase_heuristic(ch, cfg),
            echo_aligned_phases(ch),
            np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, cfg.m_passive)),
        ]
    best, best_score = None, -np.inf
    for cand in candidates:
        sol = _start_for_phi(cfg, ch, cand)
        if sol is None:
            continue
        score = utility(sol, ch, cfg).sum_bits
        if score > best_score:
            best, best_score = sol, score
    if best is None:
        raise SensingInfeasible(
            f"sensing threshold {cfg.gamma_tar_linear * cfg.noise_irs_watt:.3e} "
            "unreachable at full power for every candidate phase start")
    return best


def _cache_for_scheme(cfg: SystemConfig, scheme: str, rng: np.random.Generator) -> np.ndarray:
    if scheme == "no-caching":
        return np.zeros(cfg.cache.n_files)
    if scheme == "random-caching":
        return cacheopt.random_caching(cfg.cache, rng)
    return cacheopt.solve_caching(cfg.cache).e


def run(cfg: SystemConfig, ch: ChannelSet, opts: RunOptions = RunOptions()) -> RunResult:
    """Full solve of one scenario under the given scheme."""
    cfg.validate()
    hd = opts.scheme == "hd"
    rate_weight = 0.5 if hd else 1.0
    fixed_phase = opts.scheme == "fixed-phase"
    force_f_zero = opts.scheme == "full-offloading"

    rng_init = np.random.default_rng([cfg.seed, 101])
    rng_cache = np.random.default_rng([cfg.seed, 151])
    rng_draws = np.random.default_rng([cfg.seed, 202])

    # the fixed-phase baseline pins its heuristic phases; other schemes let
    # the initializer pick the best candidate start
    phi0 = fixed_phase_heuristic(ch, cfg) if fixed_phase else None
    try:
        sol = initialize(cfg, ch, rng_init, phi=phi0)
    except SensingInfeasible:
        sol = Solution(w=np.zeros((cfg.n_cm + 1, cfg.n_tx), complex),
                       u=np.zeros((cfg.n_cp, cfg.n_rx), complex),
                       phi=np.ones(cfg.m_passive, complex),
                       f=np.zeros(cfg.n_cp), p=np.zeros(cfg.n_cp),
                       e=_cache_for_scheme(cfg, opts.scheme, rng_cache))
        return RunResult(sol, utility(sol, ch, cfg, hd), (), INFEASIBLE_SENSING,
                         opts.scheme, 0)
    sol = sol.copy_with(e=_cache_for_scheme(cfg, opts.scheme, rng_cache))
    if force_f_zero:
        sol = sol.copy_with(f=np.zeros(cfg.n_cp))

    trace: list[TraceRow] = []
    status = MAX_ITER_STATUS
    prev_obj = None
    slow_count = 0
    t0 = time.perf_counter()
    n_done = 0

    for n in range(1, opts.max_iter + 1):
        # combiner scale is immaterial (SINRs are u-scale invariant) but must
        # stay bounded: the closed-form u grows like 1/sqrt(p) as p shrinks
        if sol.u.size:
            norms = np.linalg.norm(sol.u, axis=1, keepdims=True)
            sol = sol.copy_with(u=np.where(norms > 0, sol.u / np.maximum(norms, 1e-300), sol.u))
        aux = wmmse.update_aux(sol, ch, cfg, hd)

        if not fixed_phase and cfg.n_cm + cfg.n_cp > 0:
            phi_new, _ = phaseadmm.optimize_phase(sol, ch, aux, cfg, opts.admm, hd)
            sol = sol.copy_with(phi=phi_new)

        try:
            w_new, _ = beamforming.optimize_tx(sol, ch, aux, cfg, opts.n_draws,
                                               rng_draws, hd)
            sol = sol.copy_with(w=w_new)
        except beamforming.SdrInfeasibleError:
            pass

        if cfg.n_cp:
            sol = sol.copy_with(u=beamforming.optimize_rx(sol, ch, aux, cfg, hd))
            try:
                p_new, f_new, _ = powercomp.optimize_power(
                    sol, ch, aux, cfg, rate_weight, force_f_zero, hd)
                sol = sol.copy_with(p=p_new, f=f_new)
            except powercomp.SensingInfeasibleError:
                pass

        obj = wmmse.bca_objective(sol, ch, cfg, aux, hd, rate_weight)
        met = utility(sol, ch, cfg, hd)
        res = residuals(sol, ch, cfg)
        trace.append(TraceRow(
            iteration=n, objective=obj, utility=met.utility,
            res_power=res["power"], res_radar=res["radar"],
            res_modulus=res["modulus"], res_energy=res["energy"],
            res_cache=res["cache"], wall_ms=(time.perf_counter() - t0) * 1e3,
        ))
        n_done = n
        if prev_obj is not None:
            rel = (obj - prev_obj) / max(abs(prev_obj), 1e-12)
            slow_count = slow_count + 1 if rel < opts.conv_tol else 0
            if slow_count >= opts.conv_window:
                status = CONVERGED
                break
        prev_obj = obj
        if cfg.n_cm + cfg.n_cp == 0:
            status = CONVERGED
            break

    return RunResult(sol, utility(sol, ch, cfg, hd), tuple(trace), status,
                     opts.scheme, n_done)


def evaluate_baseline(cfg: SystemConfig, ch: ChannelSet, scheme: str,
                      max_iter: int = 50, n_draws: int = 200) -> RunResult:
    """Run one scheme from the comparison set."""
    return run(cfg, ch, RunOptions(scheme=scheme, max_iter=max_iter, n_draws=n_draws))


def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def result_to_json(result: RunResult) -> str:
    """Structured text dump of a run (solution, metrics, trace, status)."""
    payload = {
        "status": result.status,
        "scheme": result.scheme,
        "iterations": result.iterations,
        "solution": _to_jsonable(vars(result.solution)),
        "metrics": _to_jsonable(vars(result.metrics)),
        "trace": [_to_jsonable(asdict(row)) for row in result.trace],
    }
    return json.dumps(payload, indent=2)
