"""Tridiagonal numerics for birth-death chains.

The killed generator of a birth-death chain absorbed from state 1 is
tridiagonal and reversible with respect to the product weights

    pi_1 = 1,   pi_x = (b_1 ... b_{x-1}) / (d_2 ... d_x),

so -K is similar to the symmetric tridiagonal matrix with main diagonal
b_x + d_x (b_n absent at the reflecting top) and off-diagonal
-sqrt(b_x d_{x+1}).  Everything here works with the rate arrays directly;
the symmetrized entries are local, so no product weight is ever formed in
a way that can overflow.

Two accuracy regimes are served:

* a fast double-precision path (bisection eigenvalues, banded inverse
  iteration, Rayleigh quotients through the all-positive Dirichlet form),
  accurate whenever the eigenvector spread is moderate;
* an mpmath path (Sturm-count bisection plus the three-term ratio
  recursion) for chains whose eigenvector spans many orders of magnitude,
  where any fixed-precision global solve loses the small components.
  The working precision is validated by recomputing with extra digits.
"""

from __future__ import annotations

import warnings

import numpy as np
import mpmath as mp
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal, solve_banded

from .errors import NoConvergence

#: eigenvector spread beyond which the double path is considered unreliable
MP_AMPLITUDE_THRESHOLD = 1e6
#: largest chain the mp fallback is attempted on (cost grows linearly)
MP_MAX_STATES = 2048


def sym_tridiag(b: np.ndarray, d: np.ndarray):
    """Main and off diagonals of the symmetrized -K."""
    main = d + np.append(b, 0.0)
    off = -np.sqrt(b * d[1:]) if len(d) > 1 else np.zeros(0)
    return main, off


def log_pi(b: np.ndarray, d: np.ndarray) -> np.ndarray:
    """log pi_x for x = 1..n (natural log)."""
    if len(d) == 1:
        return np.zeros(1)
    return np.concatenate([[0.0], np.cumsum(np.log(b) - np.log(d[1:]))])


def scaled_pi(b: np.ndarray, d: np.ndarray) -> np.ndarray:
    """pi rescaled by its maximum; positive where representable, else 0."""
    lp = log_pi(b, d)
    return np.exp(lp - lp.max())


def eigenvalues(b, d, n_lo=0, n_hi=None):
    """Eigenvalues of -K with indices n_lo..n_hi (inclusive), ascending."""
    main, off = sym_tridiag(b, d)
    if len(d) == 1:
        return main[n_lo : (n_hi or 0) + 1]
    if n_hi is None:
        return eigvalsh_tridiagonal(main, off)
    return eigvalsh_tridiagonal(main, off, select="i", select_range=(n_lo, n_hi))


def rayleigh_quotient(b, d, v, pis=None) -> float:
    """Rayleigh quotient of -K at v through the Dirichlet form.

    All terms are nonnegative, so the quotient keeps full relative accuracy
    even when it is many orders of magnitude below the matrix norm.
    """
    if pis is None:
        pis = scaled_pi(b, d)
    energy = pis[0] * d[0] * v[0] ** 2
    if len(d) > 1:
        energy += np.sum(pis[:-1] * b * np.diff(v) ** 2)
    return float(energy / np.sum(pis * v * v))


def _banded(b, d, shift):
    n = len(d)
    ab = np.zeros((3, n))
    ab[1, :] = d + np.append(b, 0.0) - shift
    ab[0, 1:] = -b
    ab[2, : n - 1] = -d[1:]
    return ab


def ground_state(b, d, eig_index=0, iters=3):
    """Double-precision eigenpair (lam, v) of -K for the given eigenvalue index.

    Inverse iteration on the unsymmetrized banded matrix, started from the
    ones vector with a shift just below the bisection eigenvalue.  Shifts
    that make the solve singular fall back to small negative shifts, which
    still isolate the target direction whenever the eigenvalue is far below
    the matrix norm (the regime where the singular shift occurs).
    """
    n = len(d)
    if n == 1:
        return float(d[0]), np.ones(1)
    lam_hat = float(eigenvalues(b, d, eig_index, eig_index)[0])
    scale = float((d + np.append(b, 0.0)).max())
    shifts = [lam_hat * (1 - 1e-8), lam_hat - 1e-14 * scale]
    if eig_index == 0:
        shifts += [-1e-13 * scale, -1e-10 * scale]
    v = None
    for s in shifts:
        try:
            ab = _banded(b, d, s)
            w = np.ones(n)
            for _ in range(iters):
                w = solve_banded((1, 1), ab, w)
                nrm = np.abs(w).max()
                if not np.isfinite(nrm) or nrm == 0:
                    raise np.linalg.LinAlgError
                w = w / nrm
            if eig_index == 0 and np.any(w <= 0):
                if np.all(w >= 0) or np.all(w <= 0):
                    w = np.abs(w)
                else:
                    continue
            v = w
            break
        except np.linalg.LinAlgError:
            continue
    if v is None:
        # last resort: dense tridiagonal solve with vectors
        main, off = sym_tridiag(b, d)
        lam, vec = eigh_tridiagonal(main, off, select="i", select_range=(eig_index, eig_index))
        lp = log_pi(b, d)
        v = vec[:, 0] * np.exp(-(lp - lp.max()) / 2.0)
        v = v / np.abs(v).max()
        if v[np.abs(v).argmax()] < 0:
            v = -v
    # the Dirichlet-form quotient is valid for signed vectors too (summation
    # by parts against the reflecting top), and every summand is nonnegative
    lam = rayleigh_quotient(b, d, v)
    return lam, v


def apply_neg_k(b, d, v):
    """(-K) v for the birth-death killed generator."""
    n = len(d)
    out = (d + np.append(b, 0.0)) * v
    if n > 1:
        out[:-1] -= b * v[1:]
        out[1:] -= d[1:] * v[:-1]
    return out


def residual_inf(b, d, lam, v) -> float:
    return float(np.abs(apply_neg_k(b, d, v) - lam * v).max())


# -- mpmath path ------------------------------------------------------------


def _mp_rates(b, d):
    return [mp.mpf(float(x)) for x in b], [mp.mpf(float(x)) for x in d]


def _ldl_pivots(bm, dm, lam):
    """Pivots of the LDL' factorization of (symmetrized -K) - lam.

    The number of negative pivots equals the number of eigenvalues below
    lam (Sturm count).  Exact zero pivots are perturbed by the caller.
    """
    n = len(dm)
    pivots = []
    q = (bm[0] if n > 1 else mp.mpf(0)) + dm[0] - lam
    pivots.append(q)
    for x in range(1, n):
        off2 = bm[x - 1] * dm[x]
        main = (bm[x] if x < n - 1 else mp.mpf(0)) + dm[x]
        q = main - lam - off2 / q
        pivots.append(q)
    return pivots


def _sturm_below(bm, dm, lam):
    try:
        return sum(1 for q in _ldl_pivots(bm, dm, lam) if q < 0)
    except ZeroDivisionError:
        bump = lam * mp.mpf(10) ** (-mp.mp.dps + 3) or mp.mpf(10) ** (-mp.mp.dps)
        return sum(1 for q in _ldl_pivots(bm, dm, lam + bump) if q < 0)


_LAMBDA_CACHE: dict = {}      # (rates, index, dps) -> lam, for bitwise repeatability
_BRACKET_CACHE: dict = {}     # (rates, index) -> (dps, lo, hi), for warm starts
_CACHE_MAX = 256


def _bisect_key(b, d, eig_index):
    return (np.asarray(b, float).tobytes(), np.asarray(d, float).tobytes(), eig_index)


def _cache_put(cache, key, value):
    if len(cache) >= _CACHE_MAX:
        cache.pop(next(iter(cache)))
    cache[key] = value


def mp_lambda(b, d, eig_index=0, dps=60):
    """Eigenvalue of -K by Sturm-count bisection at dps decimal digits.

    Bisection runs until the bracket is relatively resolved (width below
    10^(3-dps) of the eigenvalue) or hits an absolute floor 10^(-dps-8) of
    the matrix scale, so eigenvalues many orders below the norm still come
    out with full relative precision.  Results are cached per (rates, index,
    dps) so repeated calls return identical values, and the tightest bracket
    found so far is reused as a warm start when more digits are requested
    (endpoints are exact binary numbers, re-verified before use).
    """
    key = _bisect_key(b, d, eig_index)
    hit = _LAMBDA_CACHE.get(key + (dps,))
    if hit is not None:
        return hit
    with mp.workdps(dps):
        bm, dm = _mp_rates(b, d)
        n = len(dm)
        lo = mp.mpf(0)
        top = max((bm[i] if i < n - 1 else mp.mpf(0)) + dm[i] for i in range(n)) * 2
        hi = top
        cached = _BRACKET_CACHE.get(key)
        if cached is not None:
            clo, chi = cached[1], cached[2]
            if (_sturm_below(bm, dm, chi) >= eig_index + 1
                    and (clo == 0 or _sturm_below(bm, dm, clo) <= eig_index)):
                lo, hi = mp.mpf(clo), mp.mpf(chi)
        floor_width = top * mp.mpf(10) ** (-dps - 8)
        rel_stop = mp.mpf(10) ** (-dps + 3)
        for _ in range(12 * dps + 80):
            mid = (lo + hi) / 2
            if _sturm_below(bm, dm, mid) >= eig_index + 1:
                hi = mid
            else:
                lo = mid
            width = hi - lo
            if width <= floor_width or (lo > 0 and width <= lo * rel_stop):
                break
        lam = (lo + hi) / 2
    _cache_put(_LAMBDA_CACHE, key + (dps,), lam)
    if cached is None or cached[0] < dps:
        _cache_put(_BRACKET_CACHE, key, (dps, lo, hi))
    return lam


def mp_ground_vector(b, d, lam_mp, dps=60):
    """Perron vector by the three-term ratio recursion, phi(1) = 1, in mp.

    Returns the list of mp values phi(1..n).  The recursion runs at the
    caller's precision; instability (for nearly flat vectors) costs digits,
    which the caller absorbs by validating against a higher-precision run.
    """
    with mp.workdps(dps):
        bm, dm = _mp_rates(b, d)
        n = len(dm)
        phi = [mp.mpf(1)]
        if n == 1:
            return phi
        r = (bm[0] + dm[0] - lam_mp) / bm[0]
        phi.append(r)
        for x in range(1, n - 1):
            r = (bm[x] + dm[x] - lam_mp - dm[x] / r) / bm[x]
            phi.append(phi[-1] * r)
        return phi


def mp_detratio_minor(b, d, lam_mp, dps=60):
    """prod_l (1 - lam/lam~_l) over the minor that removes state 1.

    Computed as det(T~ - lam) / det(T~) through LDL pivots of the minor's
    symmetrized matrix; O(n) and needs no individual eigenvalues.
    """
    with mp.workdps(dps):
        bm, dm = _mp_rates(b[1:], d[1:])
        num = _ldl_pivots(bm, dm, mp.mpf(lam_mp))
        den = _ldl_pivots(bm, dm, mp.mpf(0))
        out = mp.mpf(1)
        for qa, qb in zip(num, den):
            out *= qa / qb
        return out


def mp_eigenpair(b, d, base_dps=50):
    """(lam0, phi) with precision validated by a second run at higher dps.

    Raises NoConvergence if the two runs disagree beyond 1e-12 relative,
    which would indicate the instability budget was underestimated.
    """
    n = len(d)
    spread_guess = max(60, base_dps + int(n / 10))
    for dps in (spread_guess, spread_guess + 30):
        lam = mp_lambda(b, d, 0, dps=dps)
        phi = mp_ground_vector(b, d, lam, dps=dps)
        amp = max(phi) / min(phi)
        if dps == spread_guess:
            first = (lam, phi, amp)
        else:
            lam0_a, phi_a, amp_a = first
            ok_lam = abs(lam - lam0_a) <= 1e-10 * lam
            ok_amp = abs(amp - amp_a) <= 1e-10 * amp
            if not (ok_lam and ok_amp):
                raise NoConvergence(
                    "mp eigenpair did not stabilize: "
                    f"lam drift {float(abs(lam - lam0_a) / lam):.2e}, "
                    f"amp drift {float(abs(amp - amp_a) / amp):.2e}"
                )
    lam_f = float(lam)
    phi_f = np.array([float(p) for p in phi])
    if not np.all(np.isfinite(phi_f)):
        raise NoConvergence("eigenvector spread exceeds double range")
    return lam_f, phi_f, lam


def bd_eigenpair_auto(b, d):
    """Ground eigenpair with automatic escalation to the mp path.

    Returns (lam0, phi, residual).  The double path is kept only when two
    conditions hold: the eigenvector spread stays below
    MP_AMPLITUDE_THRESHOLD (beyond it the small components of any fixed-
    precision global solve are noise), and the residual is small against the
    spectral gap (the eigenvector error of an inverse-iteration solve is of
    order residual/gap, which clustered low eigenvalues can blow up).
    """
    lam, v = ground_state(b, d)
    v = v / v[0]
    res = residual_inf(b, d, lam, v)
    positive = bool(np.all(v > 0))
    spread = float(v.max() / v.min()) if positive else np.inf
    if len(d) > 1:
        ev = eigenvalues(b, d, 0, 1)
        gap = float(ev[-1] - min(lam, float(ev[0])))
    else:
        gap = np.inf
    shaky = not positive or spread > MP_AMPLITUDE_THRESHOLD or res > 1e-10 * gap
    if shaky and len(d) <= MP_MAX_STATES:
        lam, v, _ = mp_eigenpair(b, d)
        res = residual_inf(b, d, lam, v)
    elif shaky:
        warnings.warn(
            "double-precision eigenvector may lose componentwise accuracy "
            f"(residual/gap = {res / gap:.2e}, spread = {spread:.2e}); chain too "
            "large for the multi-precision fallback",
            UserWarning,
        )
    return lam, v, res
