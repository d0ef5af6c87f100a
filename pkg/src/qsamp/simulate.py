"""Trajectory-level Monte Carlo and conditioned-evolution experiments.

Trajectories follow the minimal-process construction: hold at x for an
exponential time with the exit rate |L(x,x)|, then jump with probabilities
L(x,y)/|L(x,x)| over surviving states and the absorbing point.  Estimators
verify the stochastic representation of eigenvector ratios
(phi(x)/phi(y) = E[exp(lambda0 tau_y) 1{tau_y < tau_oo}]), the exponential
absorption law from the quasi-stationary start, and the two-sided transfer
inequality between conditioned evolution and the Doob-transformed chain.

Sampling is reproducible and block-parallel: a base seed is split into one
child stream per fixed-size block, and block results are merged in block
order, so estimates are bit-identical for a given seed regardless of the
worker count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import EventBudgetExceeded, HeavyTailWarning, InvalidParameter, UnderflowWarning
from .generators import AbsorbingGenerator
from .spectral import DirichletEigenpair, dirichlet_eigenpair, quasi_stationary_dist

EVENT_BUDGET = 100_000_000
BLOCK_SIZE = 16_384
ABSORBED = -1


@dataclass(frozen=True)
class TrajectoryOutcome:
    hit_target: bool
    elapsed: float
    absorbed: bool
    events: int


@dataclass(frozen=True)
class EstimateWithCI:
    """Monte Carlo estimate with its standard error and replay data."""

    mean: float
    std_error: float
    n_samples: int
    seed: int


def _jump_tables(gen: AbsorbingGenerator):
    """Exit rates and cumulative jump probabilities (absorption last)."""
    k = gen.k_matrix()
    rates = -np.diag(k).copy()
    probs = np.where(np.eye(gen.n_states, dtype=bool), 0.0, k)
    probs = np.concatenate([probs, gen.absorption_rates[:, None]], axis=1)
    probs /= rates[:, None]
    return rates, np.cumsum(probs, axis=1)


def sample_path(gen: AbsorbingGenerator, start: int, target: int | None,
                rng: np.random.Generator) -> TrajectoryOutcome:
    """Simulate one trajectory until the target is hit or the path is absorbed.

    start == target reports an immediate hit at elapsed time zero.
    """
    if not 1 <= start <= gen.n_states:
        raise InvalidParameter(f"start state {start} out of range")
    if target is not None and not 1 <= target <= gen.n_states:
        raise InvalidParameter(f"target state {target} out of range")
    if target is not None and start == target:
        return TrajectoryOutcome(True, 0.0, False, 0)
    rates, cum = _jump_tables(gen)
    n = gen.n_states
    state = start - 1
    elapsed = 0.0
    events = 0
    while True:
        if events >= EVENT_BUDGET:
            raise EventBudgetExceeded(f"{events} jumps without resolution")
        elapsed += rng.exponential(1.0 / rates[state])
        events += 1
        nxt = int(np.searchsorted(cum[state], rng.random(), side="right"))
        if nxt >= n:
            return TrajectoryOutcome(False, elapsed, True, events)
        if target is not None and nxt == target - 1:
            return TrajectoryOutcome(True, elapsed, False, events)
        state = nxt


def _simulate_block(rates, cum, starts, target0, rng):
    """Vectorized batch of trajectories; returns (elapsed, hit) arrays.

    target0 is a 0-based state index or None (run to absorption).
    """
    n = rates.shape[0]
    m = len(starts)
    state = starts.copy()
    elapsed = np.zeros(m)
    hit = np.zeros(m, dtype=bool)
    active = np.arange(m)
    if target0 is not None:
        immediate = state == target0
        hit[immediate] = True
        active = active[~immediate]
    total_events = 0
    while active.size:
        s = state[active]
        elapsed[active] += rng.exponential(1.0 / rates[s])
        u = rng.random(active.size)
        nxt = (u[:, None] > cum[s]).sum(axis=1)
        total_events += active.size
        if total_events > EVENT_BUDGET:
            raise EventBudgetExceeded(f"block exceeded {EVENT_BUDGET} jump events")
        absorbed = nxt >= n
        done = absorbed
        if target0 is not None:
            got = nxt == target0
            hit[active[got]] = True
            done = done | got
        state[active] = np.where(absorbed, ABSORBED, nxt)
        active = active[~done]
    return elapsed, hit


def _run_blocks(gen, starts, target, n, seed, n_jobs):
    rates, cum = _jump_tables(gen)
    blocks = []
    for lo in range(0, n, BLOCK_SIZE):
        blocks.append(np.arange(lo, min(lo + BLOCK_SIZE, n)))
    streams = np.random.SeedSequence(seed).spawn(len(blocks))
    target0 = None if target is None else target - 1

    def one(i):
        rng = np.random.default_rng(streams[i])
        return _simulate_block(rates, cum, starts[blocks[i]], target0, rng)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(one, range(len(blocks))))
    else:
        results = [one(i) for i in range(len(blocks))]
    elapsed = np.concatenate([r[0] for r in results])
    hit = np.concatenate([r[1] for r in results])
    return elapsed, hit


def _starts_array(gen, start, n, seed):
    if np.isscalar(start):
        if not 1 <= int(start) <= gen.n_states:
            raise InvalidParameter(f"start state {start} out of range")
        return np.full(n, int(start) - 1, dtype=np.int64)
    dist = np.asarray(start, dtype=float)
    if dist.shape != (gen.n_states,) or np.any(dist < 0) or abs(dist.sum() - 1) > 1e-9:
        raise InvalidParameter("start distribution must be a probability vector")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5747]))
    return rng.choice(gen.n_states, size=n, p=dist / dist.sum())


def _log_weight_stats(logw, n, seed):
    """EstimateWithCI from per-trajectory log weights (misses excluded)."""
    if logw.size == 0:
        return EstimateWithCI(0.0, 0.0, n, seed)
    log_sum = logsumexp(logw)
    mean = float(np.exp(log_sum - np.log(n)))
    log_sum2 = logsumexp(2.0 * logw)
    m2 = float(np.exp(log_sum2 - np.log(n)))
    var = max(m2 - mean * mean, 0.0) * n / max(n - 1, 1)
    return EstimateWithCI(mean, float(np.sqrt(var / n)), n, seed)


def estimate_ratio(gen: AbsorbingGenerator, lambda0: float, x: int, y: int,
                   n: int, seed: int, n_jobs: int = 1) -> EstimateWithCI:
    """Monte Carlo estimate of E[exp(lambda0 tau_y) 1{hit y before absorption}]
    starting from x; its expectation is phi(x)/phi(y)."""
    if x == y:
        return EstimateWithCI(1.0, 0.0, n, seed)
    starts = _starts_array(gen, x, n, seed)
    elapsed, hit = _run_blocks(gen, starts, y, n, seed, n_jobs)
    logw = lambda0 * elapsed[hit]
    return _log_weight_stats(logw, n, seed)


def estimate_psi(gen: AbsorbingGenerator, lam: float, start, n: int, seed: int,
                 n_jobs: int = 1) -> EstimateWithCI:
    """Monte Carlo estimate of E[exp(lam * absorption time)] from `start`.

    start may be a state label or a probability vector over states.  The
    moment is finite only for lam below lambda0; estimates near or past that
    threshold trigger warnings and are useful only as divergence
    demonstrations.
    """
    if lam < 0:
        raise InvalidParameter("lam must be nonnegative")
    lam0 = dirichlet_eigenpair(gen).lambda0
    if lam >= lam0:
        warnings.warn(
            f"lam = {lam} >= lambda0 = {lam0:.6g}: moment is infinite, "
            "estimate will not stabilise",
            HeavyTailWarning,
        )
    elif lam > 0.9 * lam0:
        warnings.warn(
            f"lam/lambda0 = {lam / lam0:.3f} > 0.9: heavy-tailed weights, "
            "variance may be unreliable",
            HeavyTailWarning,
        )
    starts = _starts_array(gen, start, n, seed)
    elapsed, _ = _run_blocks(gen, starts, None, n, seed, n_jobs)
    return _log_weight_stats(lam * elapsed, n, seed)


def absorption_times(gen: AbsorbingGenerator, start, n: int, seed: int,
                     n_jobs: int = 1) -> np.ndarray:
    """Raw absorption-time samples (for law checks and demos)."""
    starts = _starts_array(gen, start, n, seed)
    elapsed, _ = _run_blocks(gen, starts, None, n, seed, n_jobs)
    return elapsed


def doob_transform(gen: AbsorbingGenerator, eigenpair: DirichletEigenpair) -> np.ndarray:
    """Ergodic generator of the chain conditioned to survive forever.

    Rates are phi(y) L(x,y) / phi(x) off the diagonal and L(x,x) + lambda0 on
    it; rows sum to zero and the stationary law is proportional to nu * phi.
    """
    k = gen.k_matrix()
    phi = eigenpair.phi
    tilde = k * phi[None, :] / phi[:, None]
    np.fill_diagonal(tilde, np.diag(k) + eigenpair.lambda0)
    return tilde


def doob_stationary(gen: AbsorbingGenerator, eigenpair: DirichletEigenpair) -> np.ndarray:
    """Stationary law of the Doob transform: nu * phi normalized."""
    nu = quasi_stationary_dist(gen)
    out = nu * eigenpair.phi
    return out / out.sum()


def expm_action(q: np.ndarray, v: np.ndarray, t: float, tail: float = 1e-12) -> np.ndarray:
    """v exp(t Q) for a (sub-)Markovian generator Q by uniformization.

    P = I + Q/Theta is entrywise nonnegative, so the Poisson-weighted series
    preserves nonnegativity; it is truncated once the accumulated Poisson
    mass reaches 1 - tail.  Large Theta*t is split into segments to keep the
    leading Poisson weight representable.
    """
    if t < 0:
        raise InvalidParameter("time must be nonnegative")
    theta = float(np.abs(np.diag(q)).max())
    if t == 0 or theta == 0:
        return np.asarray(v, dtype=float).copy()
    segments = int(np.ceil(theta * t / 100.0))
    p = q / theta + np.eye(q.shape[0])
    out = np.asarray(v, dtype=float).copy()
    for _ in range(segments):
        out = _uniformized_segment(p, out, theta * t / segments, tail / segments)
    return out


def _uniformized_segment(p, v, theta_t, tail):
    weight = np.exp(-theta_t)
    acc = weight * v
    cum = weight
    term = v.copy()
    m = 0
    while cum < 1.0 - tail:
        m += 1
        term = term @ p
        weight *= theta_t / m
        acc += weight * term
        cum += weight
        if m > 10_000_000:  # defensive; segments keep theta_t <= 100
            break
    return acc


@dataclass(frozen=True)
class SandwichRow:
    t: float
    dist_conditioned: float
    dist_doob: float
    lower: float
    upper: float


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def sandwich_experiment(gen: AbsorbingGenerator, mu0, times,
                        eigenpair: DirichletEigenpair | None = None) -> list:
    """Two-sided comparison of conditioned evolution with the Doob chain.

    For each t, computes the total-variation distance of the surviving-
    conditioned law from the quasi-stationary law, the distance of the Doob
    chain (started from the phi-reweighted initial law) from its stationary
    law, and the transfer flanks

        (min phi / 2 max phi) * d_doob <= d_cond <= (2 max phi / min phi) * d_doob.
    """
    mu0 = np.asarray(mu0, dtype=float)
    if mu0.shape != (gen.n_states,) or np.any(mu0 < 0) or abs(mu0.sum() - 1) > 1e-9:
        raise InvalidParameter("mu0 must be a probability vector on the states")
    if eigenpair is None:
        eigenpair = dirichlet_eigenpair(gen)
    phi = eigenpair.phi
    k = gen.k_matrix()
    nu = quasi_stationary_dist(gen)
    tilde = doob_transform(gen, eigenpair)
    eta_tilde = doob_stationary(gen, eigenpair)
    mu0_tilde = mu0 * phi
    mu0_tilde /= mu0_tilde.sum()
    lo_c = phi.min() / (2.0 * phi.max())
    up_c = 2.0 * phi.max() / phi.min()
    rows = []
    for t in times:
        if t < 0:
            raise InvalidParameter("times must be nonnegative")
        raw = expm_action(k, mu0, float(t))
        mass = raw.sum()
        if mass < 1e-250:
            warnings.warn(
                f"survival mass {mass:.3e} at t={t}; conditioned law unreliable",
                UnderflowWarning,
            )
        mu_t = raw / mass
        doob_t = expm_action(tilde, mu0_tilde, float(t))
        d_cond = total_variation(mu_t, nu)
        d_doob = total_variation(doob_t, eta_tilde)
        rows.append(SandwichRow(
            t=float(t),
            dist_conditioned=float(d_cond),
            dist_doob=float(d_doob),
            lower=float(lo_c * d_doob),
            upper=float(up_c * d_doob),
        ))
    return rows
