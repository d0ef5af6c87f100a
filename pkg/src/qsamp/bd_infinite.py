"""Denumerable birth-death chains absorbed at 0, via reflecting truncations.

A rate family gives positive birth rates b_x and death rates d_x for every
x >= 1 (state 0 is absorbing, so b_0 = 0).  The boundary at infinity is an
entrance boundary when

    sum_x (pi_x b_x)^-1 sum_{y<=x} pi_y  diverges   (no explosion)       (R)
    sum_x (pi_x b_x)^-1 sum_{y>x}  pi_y  converges  (returns from infinity) (S)

with the product weights pi_1 = 1, pi_x = (b_1..b_{x-1})/(d_2..d_x).  Under
those conditions the spectrum of the killed operator is discrete, truncated
eigenvalues decrease monotonically to it as the reflecting cut grows, and the
eigenvector amplitude obeys a spectral-product bound whose infinite tail is
controlled through sum_n 1/lambda_n.

No finite computation decides series convergence in general; the entrance
check runs comparison diagnostics (geometric ratio, then a Raabe/Bertrand
exponent) on tail windows of the partial sums and reports `inconclusive`
whenever the statistics are unstable or sit in the boundary zone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import tridiag
from .errors import GapViolation, InvalidParameter, NotConverged
from .generators import AbsorbingGenerator, build_birth_death

INCONCLUSIVE = "inconclusive"
YES = "yes"
NO = "no"

#: Bertrand-exponent thresholds: |beta - 1| must clear this margin
BETA_MARGIN = 0.5
#: increments above this count as non-vanishing terms
FLAT_DLOG = -1e-9


@dataclass(frozen=True)
class RateFamily:
    """Callbacks x -> b_x, d_x for x >= 1; must be positive and deterministic."""

    b: Callable
    d: Callable
    name: str = "custom"

    def realize(self, n: int):
        """Rate arrays (b_1..b_{n-1}, d_1..d_n) for the n-state truncation."""
        if n < 1:
            raise InvalidParameter("need n >= 1")
        xs = np.arange(1, n + 1, dtype=float)
        try:
            b = np.broadcast_to(np.asarray(self.b(xs[:-1]), dtype=float), (n - 1,)).copy()
            d = np.broadcast_to(np.asarray(self.d(xs), dtype=float), (n,)).copy()
        except (TypeError, ValueError):
            b = np.array([float(self.b(int(x))) for x in xs[:-1]])
            d = np.array([float(self.d(int(x))) for x in xs])
        if np.any(b <= 0) or np.any(d <= 0):
            raise InvalidParameter(f"family {self.name!r} produced a non-positive rate")
        return b, d


def poisson_family() -> RateFamily:
    """b = 1, d_n = n; the weights pi are Poisson(1) restricted to n >= 1."""
    return RateFamily(lambda n: np.ones_like(np.asarray(n, dtype=float)),
                      lambda n: np.asarray(n, dtype=float), name="poisson")


def accelerated_poisson_family() -> RateFamily:
    """b_n = ln^2(e+n), d_n = n ln^2(e-1+n); same pi, sped up near infinity."""
    return RateFamily(
        lambda n: np.log(np.e + np.asarray(n, dtype=float)) ** 2,
        lambda n: np.asarray(n, dtype=float) * np.log(np.e - 1.0 + np.asarray(n, dtype=float)) ** 2,
        name="poisson-accelerated",
    )


def rho_family(rho: float) -> RateFamily:
    """Constant drift: b = rho, d = 1 on all of the state space."""
    if rho <= 0:
        raise InvalidParameter("rho must be positive")
    return RateFamily(
        lambda n, r=float(rho): np.full_like(np.asarray(n, dtype=float), r),
        lambda n: np.ones_like(np.asarray(n, dtype=float)),
        name=f"rho:{rho}",
    )


def parse_rate_family(spec: str) -> RateFamily:
    """Named family ('poisson', 'poisson-accelerated', 'rho:R') or an
    expression file: JSON with keys 'b' and 'd' holding expressions in n."""
    if spec == "poisson":
        return poisson_family()
    if spec == "poisson-accelerated":
        return accelerated_poisson_family()
    if spec.startswith("rho:"):
        return rho_family(float(spec.split(":", 1)[1]))
    with open(spec) as fh:
        obj = json.load(fh)
    ns = {
        "log": np.log, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs,
        "minimum": np.minimum, "maximum": np.maximum,
        "e": np.e, "pi": np.pi,
    }
    b_expr, d_expr = obj["b"], obj["d"]

    def make(expr):
        return lambda n: eval(expr, {"__builtins__": {}}, {**ns, "n": np.asarray(n, dtype=float)})

    return RateFamily(make(b_expr), make(d_expr), name=spec)


# -- pi measure and entrance diagnostics -------------------------------------


def log_pi_measure(rates: RateFamily, n: int) -> np.ndarray:
    b, d = rates.realize(n)
    return tridiag.log_pi(b, d)


def pi_measure(rates: RateFamily, n: int) -> np.ndarray:
    """pi_1..pi_n computed in log-space and exponentiated at the end."""
    lp = log_pi_measure(rates, n)
    if not np.all(np.isfinite(lp)):
        raise OverflowError("log pi left the double range")
    return np.exp(lp)


@dataclass(frozen=True)
class EntranceVerdict:
    r_series_diverges: str
    s_series_converges: str
    r_partial_sums: np.ndarray
    s_partial_sums: np.ndarray
    z_partial: float
    diagnostics: dict

    @property
    def is_entrance_boundary(self) -> bool | None:
        if self.r_series_diverges == YES and self.s_series_converges == YES:
            return True
        if NO in (self.r_series_diverges, self.s_series_converges):
            return False
        return None


def _log_prefix(a):
    return np.logaddexp.accumulate(a)


def _log_suffix_excl(a):
    """log of sum over strictly later indices; last entry is -inf."""
    rev = np.logaddexp.accumulate(a[::-1])[::-1]
    out = np.full_like(a, -np.inf)
    out[:-1] = rev[1:]
    return out


def _series_stats(logt, lo, hi):
    """Bertrand exponents beta_x = ln(x) (x (t_x/t_{x+1} - 1) - 1) over a window.

    For t_x ~ x^-p the exponent drifts to sign(p-1) * infinity, for
    t_x ~ 1/(x ln^q x) it settles at q, and for geometric decay it blows up
    positively, so thresholding beta around 1 decides all three scales at
    once.  Returns (10th percentile, 90th percentile, median log increment).
    """
    xs = np.arange(lo, hi, dtype=float)
    dl = logt[lo - 1 : hi - 1] - logt[lo:hi]
    rho = xs * np.expm1(dl)
    beta = np.log(xs) * (rho - 1.0)
    med_dlog = float(np.median(-dl))
    return float(np.percentile(beta, 10)), float(np.percentile(beta, 90)), med_dlog


def _classify(logt, lo, hi):
    """'converges' / 'diverges' / inconclusive for sum of exp(logt)."""
    if hi - lo < 8:
        return INCONCLUSIVE
    beta_10, beta_90, med_dlog = _series_stats(logt, lo, hi)
    if med_dlog >= FLAT_DLOG:
        return "diverges"
    if beta_10 > 1.0 + BETA_MARGIN:
        return "converges"
    if beta_90 < 1.0 - BETA_MARGIN:
        return "diverges"
    return INCONCLUSIVE


def entrance_check(rates: RateFamily, cutoff: int) -> EntranceVerdict:
    """Diagnose conditions (R) and (S) from the first `cutoff` states.

    The (R) terms use exact prefix sums; the (S) terms need the tail of pi,
    so they are computed from the truncated tail and accepted only when the
    verdict is stable under halving the cutoff (otherwise inconclusive).
    A non-summable pi forces (S) to fail outright: every true term is
    infinite.
    """
    if cutoff < 10:
        raise InvalidParameter("cutoff must be at least 10")
    m = int(cutoff)
    b, d = rates.realize(m)
    lp = tridiag.log_pi(b, d)
    logb = np.concatenate([np.log(b), [np.nan]])  # b_m unused below

    log_r = -lp[:-1] - np.log(b) + _log_prefix(lp)[:-1]
    log_s = -lp[:-1] - np.log(b) + _log_suffix_excl(lp)[:-1]

    with np.errstate(over="ignore"):
        r_partial = np.exp(_log_prefix(log_r))
        s_partial = np.exp(_log_prefix(log_s))
        z_partial = float(np.exp(_log_prefix(lp)[-1]))

    diagnostics = {}

    # (R): exact terms, analyse the latest window
    r_class = _classify(log_r, max(10, m // 2), m - 1)
    diagnostics["r_class"] = r_class
    r_verdict = {"diverges": YES, "converges": NO}.get(r_class, INCONCLUSIVE)

    # (S): pi must be summable for the truncated tails to mean anything
    pi_class = _classify(lp, max(10, m // 2), m)
    diagnostics["pi_class"] = pi_class
    if pi_class == "diverges":
        s_verdict = NO
    elif pi_class == INCONCLUSIVE:
        s_verdict = INCONCLUSIVE
    else:
        s_class = _classify(log_s, max(10, m // 4), m // 2)
        lp_half = lp[: m // 2]
        log_s_half = -lp_half[:-1] - np.log(b[: m // 2 - 1]) + _log_suffix_excl(lp_half)[:-1]
        s_class_half = _classify(log_s_half, max(10, m // 8), m // 4)
        diagnostics["s_class"] = s_class
        diagnostics["s_class_half_cutoff"] = s_class_half
        if s_class == s_class_half and s_class != INCONCLUSIVE:
            s_verdict = YES if s_class == "converges" else NO
        else:
            s_verdict = INCONCLUSIVE

    return EntranceVerdict(
        r_series_diverges=r_verdict,
        s_series_converges=s_verdict,
        r_partial_sums=r_partial,
        s_partial_sums=s_partial,
        z_partial=z_partial,
        diagnostics=diagnostics,
    )


# -- truncation pipeline ------------------------------------------------------


def truncate_neumann(rates: RateFamily, n: int) -> AbsorbingGenerator:
    """Reflecting truncation at n: interior rates from the family, absorption
    d_1 out of state 1, and a top row that only jumps down at rate d_n."""
    if n < 2:
        raise InvalidParameter("truncation needs n >= 2")
    b, d = rates.realize(n)
    return build_birth_death(b, d)


@dataclass(frozen=True)
class TruncationSeries:
    """Eigenvalue tables over a truncation schedule, plus declared limits."""

    ns: tuple
    lambda_table: np.ndarray        # shape (len(ns), n_max+1), +inf where n >= N
    lambda0_prime_table: np.ndarray
    phi_list: list
    limits: np.ndarray              # NaN where undeclared
    lambda0_prime_limit: float
    lambda_monotone: bool
    lambda0_prime_monotone: bool
    phi_nondecreasing: bool
    tol: float

    @property
    def lambda0_limit(self) -> float:
        return float(self.limits[0])

    def amplitudes(self) -> np.ndarray:
        return np.array([float(p.max() / p.min()) for p in self.phi_list])


MONOTONE_SLACK = 1e-12


def eigen_convergence(rates: RateFamily, n_max: int, schedule, tol: float) -> TruncationSeries:
    """lambda_{N,n} for n <= n_max over an increasing truncation schedule.

    Eigenvalues come from bisection and are refined through the Dirichlet-
    form Rayleigh quotient of an inverse-iterated vector, which keeps full
    relative accuracy; each column must be non-increasing in N (checked with
    slack 1e-12).  A column's limit is declared once the relative change
    between consecutive truncations drops below tol.  Failure to resolve the
    ground column raises NotConverged.
    """
    schedule = [int(n) for n in schedule]
    if len(schedule) < 2 or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidParameter("schedule must be increasing with >= 2 entries")
    if tol <= 0:
        raise InvalidParameter("tol must be positive")
    rows = []
    rows_prime = []
    phi_list = []
    for n in schedule:
        b, d = rates.realize(n)
        lam_row = np.full(n_max + 1, np.inf)
        hi = min(n_max, n - 1)
        for idx in range(hi + 1):
            lam, _ = tridiag.ground_state(b, d, eig_index=idx)
            lam_row[idx] = lam
        lam0p, _ = tridiag.ground_state(b[1:], d[1:], eig_index=0)
        _, phi = tridiag.ground_state(b, d, eig_index=0)
        phi = phi / phi[0]
        rows.append(lam_row)
        rows_prime.append(lam0p)
        phi_list.append(phi)
    table = np.array(rows)
    prime = np.array(rows_prime)

    def non_increasing(col):
        finite = np.isfinite(col)
        c = col[finite]
        return bool(np.all(np.diff(c) <= MONOTONE_SLACK * np.maximum(c[:-1], 1.0)))

    lambda_monotone = all(non_increasing(table[:, j]) for j in range(n_max + 1))
    prime_monotone = non_increasing(prime)
    phi_ok = all(
        np.all(np.diff(p) >= -MONOTONE_SLACK * p.max()) for p in phi_list
    )

    limits = np.full(n_max + 1, np.nan)
    for j in range(n_max + 1):
        a, bb = table[-2, j], table[-1, j]
        if np.isfinite(bb) and abs(bb - a) <= tol * abs(bb):
            limits[j] = bb
    prime_limit = float("nan")
    if abs(prime[-1] - prime[-2]) <= tol * abs(prime[-1]):
        prime_limit = float(prime[-1])
    if np.isnan(limits[0]):
        deltas = np.abs(np.diff(table[:, 0])) / table[1:, 0]
        raise NotConverged(
            f"ground eigenvalue not resolved at tol {tol}; last relative deltas "
            f"{deltas[-3:].tolist()}"
        )
    return TruncationSeries(
        ns=tuple(schedule),
        lambda_table=table,
        lambda0_prime_table=prime,
        phi_list=phi_list,
        limits=limits,
        lambda0_prime_limit=prime_limit,
        lambda_monotone=lambda_monotone,
        lambda0_prime_monotone=prime_monotone,
        phi_nondecreasing=phi_ok,
        tol=tol,
    )


@dataclass(frozen=True)
class TheoremBoundReport:
    """Amplitude bound with the infinite tail itemized."""

    bound: float
    lambda0: float
    lambda0_prime: float
    base_factors: tuple
    tail_factor: float
    tail_bound: float
    log_concavity_c: float
    tail_certified: bool

    def __float__(self):
        return self.bound


def theorem_bound(limits, n_used: int | None = None, tail_bound: float = 0.0,
                  tail_certified: bool = False) -> TheoremBoundReport:
    """Spectral amplitude bound for the denumerable chain.

    `limits` is either a TruncationSeries or a mapping with keys 'lambda0',
    'lambda0_prime' and 'lambdas' (the higher eigenvalue limits, ascending).
    The first n_used higher eigenvalues contribute exact factors
    (1 - lambda0/lambda_n); the remaining tail is controlled by a certified
    (or estimated) bound T on sum_{n > n_used} 1/lambda_n through

        prod_tail (1 - lambda0/lambda_n) >= exp(-c lambda0 T),

    with c chosen so -log(1-u) <= c u on the realized range u <= u_max.
    tail_bound = 0 reduces exactly to the finite spectral bound.
    """
    if isinstance(limits, TruncationSeries):
        lam = limits.limits[np.isfinite(limits.limits)]
        lam0 = float(lam[0])
        lambdas = lam[1:]
        lam0p = float(limits.lambda0_prime_limit)
    else:
        lam0 = float(limits["lambda0"])
        lam0p = float(limits["lambda0_prime"])
        lambdas = np.asarray(limits["lambdas"], dtype=float)
    if n_used is not None:
        if n_used > len(lambdas):
            raise InvalidParameter(f"only {len(lambdas)} higher eigenvalues available")
        lambdas = lambdas[:n_used]
    if tail_bound < 0:
        raise InvalidParameter("tail_bound must be nonnegative")
    if not math.isinf(lam0p) and lam0p <= lam0:
        raise GapViolation(f"lambda0' = {lam0p} <= lambda0 = {lam0}")
    factors = [1.0 - lam0 / lam0p if not math.isinf(lam0p) else 1.0]
    factors += [1.0 - lam0 / float(l) for l in lambdas]
    if min(factors) <= 0:
        raise GapViolation("an eigenvalue limit at or below lambda0")
    c = 1.0
    tail_factor = 1.0
    if tail_bound > 0:
        u_max = lam0 / float(lambdas[-1]) if len(lambdas) else lam0 / lam0p
        c = -math.log1p(-u_max) / u_max
        tail_factor = math.exp(-c * lam0 * tail_bound)
    bound = 1.0 / (float(np.prod(factors)) * tail_factor)
    return TheoremBoundReport(
        bound=bound,
        lambda0=lam0,
        lambda0_prime=lam0p,
        base_factors=tuple(factors),
        tail_factor=tail_factor,
        tail_bound=tail_bound,
        log_concavity_c=c,
        tail_certified=tail_certified,
    )


def tail_sum_estimate(rates: RateFamily, n: int, n_used: int) -> float:
    """sum_{k > n_used} 1/lambda_{N,k} over the full truncation spectrum.

    Exact for the truncated operator; as an estimate of the limiting tail it
    is uncertified (truncated eigenvalues only bound their limits from
    above, and the truncation carries finitely many modes).
    """
    b, d = rates.realize(n)
    ev = tridiag.eigenvalues(b, d)
    if n_used >= len(ev):
        return 0.0
    return float(np.sum(1.0 / np.sort(ev)[n_used + 1 :]))


def gap_identity_check(rates: RateFamily, n: int) -> float:
    """Relative residual of the gap identity at truncation n.

    The identity reads lambda0' - lambda0 = pi(1) b_1 phi'(2) phi(1) / pi[phi' phi]
    with phi' the minor eigenvector extended by phi'(1) = 0; it holds exactly
    for the truncated operators.
    """
    if n < 2:
        raise InvalidParameter("need n >= 2")
    b, d = rates.realize(n)
    lam0, phi = tridiag.ground_state(b, d, eig_index=0)
    lam0p, phip = tridiag.ground_state(b[1:], d[1:], eig_index=0)
    pis = tridiag.scaled_pi(b, d)
    phip_ext = np.concatenate([[0.0], phip / phip[0]])
    phi = phi / phi[0]
    rhs = pis[0] * b[0] * phip_ext[1] * phi[0] / float(np.sum(pis * phip_ext * phi))
    gap = lam0p - lam0
    if gap <= 0:
        raise GapViolation(f"lambda0' - lambda0 = {gap} <= 0 at truncation {n}")
    return abs(gap - rhs) / gap


def hitting_time_from(rates: RateFamily, x: int) -> float:
    """Expected time to reach state 1 from x:
    sum_{y=1}^{x-1} (pi_y b_y)^-1 sum_{z=y+1}^{x} pi_z; zero for x = 1."""
    if x < 1:
        raise InvalidParameter("x must be >= 1")
    if x == 1:
        return 0.0
    b, d = rates.realize(x)
    lp = tridiag.log_pi(b, d)
    log_tail = _log_suffix_excl(lp)  # log sum_{z > y} pi_z, z <= x
    log_terms = log_tail[:-1] - lp[:-1] - np.log(b)
    return float(np.exp(np.logaddexp.reduce(log_terms)))


def lyapunov_check(rates: RateFamily, phi, lam: float, n: int, tol: float = 1e-12):
    """Check K[phi](x) <= -lam phi(x) + tol on the interior x = 1..n-1.

    phi is given on 1..n with phi(0) = 0 implied; the row at n touches
    b_n and is excluded (one-sided boundary handling).  Returns
    (ok, worst_slack) with slack(x) = -lam phi(x) - K[phi](x).
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (n,) or np.any(phi <= 0):
        raise InvalidParameter("phi must be positive on 1..n")
    b, d = rates.realize(n)
    x = np.arange(0, n - 1)
    phi_prev = np.concatenate([[0.0], phi[:-2]]) if n > 2 else np.array([0.0])
    k_phi = d[x] * phi_prev - (b[x] + d[x]) * phi[x] + b[x] * phi[x + 1]
    slack = -lam * phi[x] - k_phi
    worst = float(slack.min())
    return worst >= -tol, worst


def dirichlet_form(rates: RateFamily, f, n: int) -> float:
    """Rayleigh quotient E(f)/eta(f^2) of the reflecting truncation at n.

    E(f) = eta(1) d_1 f(1)^2 + sum_{x<n} eta(x) b_x (f(x+1)-f(x))^2, with the
    Neumann convention f(n+1) = f(n).  The quotient is at least the ground
    eigenvalue, with equality on its eigenvector.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (n,):
        raise InvalidParameter(f"f must have length {n}")
    b, d = rates.realize(n)
    return tridiag.rayleigh_quotient(b, d, f)
