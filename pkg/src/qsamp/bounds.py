"""Computable upper bounds on the eigenvector amplitude.

Four routes are provided:

* the path bound: for paths gamma from an exit state y to any state x, the
  weight P(gamma) multiplies jump-rate / (exit-rate - lambda0) factors along
  the edges, and max phi / min phi <= 1 / min P over the chosen paths;
* the rough bound max Q(gamma) over the same paths, where Q multiplies
  exit-rate / jump-rate factors and needs no eigenvalue;
* the degree-diameter bound (R d / r)^D for walks with rates in [r, R];
* the spectral bound ((1 - lambda0/lambda0') prod_k (1 - lambda0/lambda_k))^-1
  for reversible chains, and its exact birth-death sharpening, where the
  product over the state-1 minor spectrum equals the amplitude.

Path selection maximizes P per (y, x) pair with a Bellman-Ford relaxation on
edge costs -log(factor).  Cycle products never exceed one (each factor is at
most the corresponding eigenvector ratio), so genuine negative cycles cannot
occur; if rounding manufactures one, the search falls back to Dijkstra on
clipped costs and re-scores the simple path exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from . import tridiag
from .errors import (
    DegenerateGap,
    InvalidParameter,
    NotBirthDeath,
    NotReversible,
    SingularFactor,
)
from .generators import AbsorbingGenerator, Path
from .spectral import SpectrumReport, dirichlet_eigenpair

SINGULAR_RTOL = 1e-14
CYCLE_EPS = 1e-9


@dataclass(frozen=True)
class PathCertificate:
    path: tuple
    weight: float        # P(gamma)
    rough_weight: float  # Q(gamma)


@dataclass(frozen=True)
class PathBoundReport:
    """Per-pair chosen paths plus the resulting amplitude bounds."""

    pairs: dict
    bound: float
    rough_bound: float
    method: str

    def certificate(self, y: int, x: int) -> PathCertificate:
        return self.pairs[(y, x)]


@dataclass(frozen=True)
class SpectralBoundReport:
    bound: float
    factors: tuple


def _edge_factors(gen: AbsorbingGenerator, lambda0: float):
    """(u, v, rate, denom) per internal edge; denom = |L(u,u)| - lambda0."""
    exit_rates = -gen.diagonal
    denom = exit_rates - lambda0
    bad = denom <= SINGULAR_RTOL * exit_rates
    if np.any(bad):
        x = int(np.nonzero(bad)[0][0]) + 1
        raise SingularFactor(
            f"|L({x},{x})| - lambda0 = {denom[x - 1]:.3e} is not safely positive"
        )
    return denom


def path_weight(gen: AbsorbingGenerator, lambda0: float, path) -> float:
    """P(gamma): product of rate / (exit-rate - lambda0) along the path.

    The empty path (a single vertex) has weight 1.
    """
    vertices = path.vertices if isinstance(path, Path) else tuple(path)
    Path(vertices).validate(gen)
    denom = _edge_factors(gen, lambda0)
    out = 1.0
    for u, v in zip(vertices, vertices[1:]):
        out *= gen.rate(u, v) / denom[u - 1]
    return out


def rough_weight(gen: AbsorbingGenerator, path) -> float:
    """Q(gamma): product of exit-rate / rate along the path; empty path -> 1."""
    vertices = path.vertices if isinstance(path, Path) else tuple(path)
    Path(vertices).validate(gen)
    exit_rates = -gen.diagonal
    out = 1.0
    for u, v in zip(vertices, vertices[1:]):
        out *= exit_rates[u - 1] / gen.rate(u, v)
    return out


def _edge_list(gen: AbsorbingGenerator):
    rows, cols, vals = gen._coo
    order = np.lexsort((cols, rows))
    return rows[order], cols[order], vals[order]


def _bellman_ford(n, rows, cols, costs, src):
    """Shortest walks from src with deterministic tie-breaking.

    Ties on cost prefer fewer edges, then the lexicographically smaller
    predecessor state.  Returns (dist, parent, negative_cycle_flag).
    """
    dist = np.full(n, np.inf)
    nedge = np.full(n, 0)
    parent = np.full(n, -1, dtype=int)
    dist[src] = 0.0
    scale = 1.0 + np.abs(costs).max() if len(costs) else 1.0
    eps = 1e-14 * scale
    for _ in range(max(n - 1, 1)):
        changed = False
        for u, v, c in zip(rows, cols, costs):
            if not np.isfinite(dist[u]):
                continue
            cand = dist[u] + c
            if cand < dist[v] - eps:
                dist[v], nedge[v], parent[v] = cand, nedge[u] + 1, u
                changed = True
            elif cand <= dist[v] + eps:
                ne = nedge[u] + 1
                if ne < nedge[v] or (ne == nedge[v] and parent[v] != -1 and u < parent[v]):
                    dist[v], nedge[v], parent[v] = cand, ne, u
                    changed = True
        if not changed:
            break
    for u, v, c in zip(rows, cols, costs):
        if np.isfinite(dist[u]) and dist[u] + c < dist[v] - CYCLE_EPS * scale:
            return dist, parent, True
    return dist, parent, False


def _dijkstra_clipped(n, adj, src):
    """Dijkstra on max(cost, 0); used only as the cycle-guard fallback."""
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=int)
    dist[src] = 0.0
    heap = [(0.0, src)]
    seen = np.zeros(n, dtype=bool)
    while heap:
        du, u = heapq.heappop(heap)
        if seen[u]:
            continue
        seen[u] = True
        for v, c in adj[u]:
            cand = du + max(c, 0.0)
            if cand < dist[v]:
                dist[v], parent[v] = cand, u
                heapq.heappush(heap, (cand, v))
    return dist, parent


def _reconstruct(parent, src, dst):
    path = [dst]
    while path[-1] != src:
        p = parent[path[-1]]
        if p == -1:
            return None
        path.append(int(p))
    return tuple(x + 1 for x in reversed(path))


def _geodesic_tree(n, adj_unit, src):
    """BFS tree with lexicographic predecessor choice."""
    parent = np.full(n, -1, dtype=int)
    depth = np.full(n, -1, dtype=int)
    depth[src] = 0
    queue = [src]
    while queue:
        u = queue.pop(0)
        for v in adj_unit[u]:
            if depth[v] == -1:
                depth[v], parent[v] = depth[u] + 1, u
                queue.append(int(v))
    return parent


def path_bound(gen: AbsorbingGenerator, lambda0: float | None = None,
               paths: str = "best") -> PathBoundReport:
    """Amplitude bound from one path per (exit state y, state x) pair.

    paths="best" maximizes P(gamma) per pair; paths="geodesic" uses
    fewest-edge paths instead, which reproduces the degree-diameter bound on
    unit-rate walks.  The report carries every chosen path, the bound
    (min P)^-1 and the rough bound max Q over the same paths.
    """
    if paths not in ("best", "geodesic"):
        raise InvalidParameter("paths must be 'best' or 'geodesic'")
    if lambda0 is None:
        lambda0 = dirichlet_eigenpair(gen).lambda0
    n = gen.n_states
    denom = _edge_factors(gen, lambda0)
    rows, cols, vals = _edge_list(gen)
    costs = -(np.log(vals) - np.log(denom[rows]))
    adj = [[] for _ in range(n)]
    adj_unit = [[] for _ in range(n)]
    for u, v, c in zip(rows, cols, costs):
        adj[u].append((int(v), float(c)))
        adj_unit[u].append(int(v))
    pairs = {}
    for y in gen.absorbing_set:
        src = y - 1
        if paths == "geodesic":
            parent = _geodesic_tree(n, adj_unit, src)
        else:
            dist, parent, neg_cycle = _bellman_ford(n, rows, cols, costs, src)
            if neg_cycle:
                dist, parent = _dijkstra_clipped(n, adj, src)
        for x in range(1, n + 1):
            pth = (y,) if x == y else _reconstruct(parent, src, x - 1)
            if pth is None:
                raise InvalidParameter(f"no path from {y} to {x}; generator not irreducible?")
            pairs[(y, x)] = PathCertificate(
                path=pth,
                weight=path_weight(gen, lambda0, pth),
                rough_weight=rough_weight(gen, pth),
            )
    worst = min(c.weight for c in pairs.values())
    rough = max(c.rough_weight for c in pairs.values())
    return PathBoundReport(pairs=pairs, bound=1.0 / worst, rough_bound=rough, method=paths)


def graph_bound(d: float, diameter: int, r: float, big_r: float) -> float:
    """Degree-diameter bound (R d / r)^D for rate-perturbed unit walks."""
    if d < 1:
        raise InvalidParameter("max out-degree must be >= 1")
    if diameter < 0:
        raise InvalidParameter("diameter must be >= 0")
    if not 0 < r <= big_r:
        raise InvalidParameter("need 0 < r <= R")
    return float((big_r * d / r) ** diameter)


def graph_parameters(gen: AbsorbingGenerator):
    """(d, D, r, R) read off a generator: max out-degree of the full graph
    (absorption edges included), oriented diameter of the internal graph, and
    min/max positive rates (absorption included)."""
    rows, cols, vals = gen._coo
    n = gen.n_states
    degree = np.zeros(n, dtype=int)
    np.add.at(degree, rows, 1)
    degree += (gen.absorption_rates > 0).astype(int)
    rates = np.concatenate([vals, gen.absorption_rates[gen.absorption_rates > 0]])
    adj_unit = [[] for _ in range(n)]
    for u, v in zip(rows, cols):
        adj_unit[u].append(int(v))
    diameter = 0
    for src in range(n):
        depth = np.full(n, -1, dtype=int)
        depth[src] = 0
        queue = [src]
        while queue:
            u = queue.pop(0)
            for v in adj_unit[u]:
                if depth[v] == -1:
                    depth[v] = depth[u] + 1
                    queue.append(v)
        diameter = max(diameter, int(depth.max()))
    return int(degree.max()), diameter, float(rates.min()), float(rates.max())


def spectral_bound(report: SpectrumReport) -> SpectralBoundReport:
    """Reversible amplitude bound from the full spectrum and lambda0'.

    bound = ((1 - lambda0/lambda0') prod_{k>=1} (1 - lambda0/lambda_k))^-1.
    """
    if report.reversible_measure is None:
        raise NotReversible("spectral bound requires a reversible generator")
    lam = np.asarray(report.eigenvalues, dtype=float)
    lam0 = float(lam[0])
    lam0p = float(report.lambda0_prime)
    if not math.isinf(lam0p) and lam0p <= lam0 * (1 + 1e-12):
        raise DegenerateGap(
            f"lambda0' = {lam0p!r} <= lambda0 = {lam0!r}; eigensolver failure"
        )
    factors = [1.0 - lam0 / lam0p] if not math.isinf(lam0p) else [1.0]
    for lk in lam[1:]:
        if lk <= lam0 * (1 + 1e-12):
            raise DegenerateGap(f"eigenvalue {lk!r} <= lambda0 = {lam0!r}")
        factors.append(1.0 - lam0 / lk)
    prod = float(np.prod(factors))
    return SpectralBoundReport(bound=1.0 / prod, factors=tuple(factors))


def exact_bd_amplitude(gen: AbsorbingGenerator, dps: int | None = None) -> float:
    """Exact amplitude of a birth-death chain absorbed from state 1.

    Uses the hitting-time factorization: the amplitude equals
    prod_l (1 - lambda0/lam~_l)^-1 over the spectrum lam~ of the minor that
    removes state 1.  The product is evaluated as the determinant ratio
    det(T~ - lambda0)/det(T~) in multi-precision arithmetic, with lambda0
    from Sturm bisection, so the result stays accurate even when the
    amplitude spans hundreds of orders of magnitude.
    """
    if not gen.is_birth_death:
        raise NotBirthDeath("exact amplitude needs birth-death absorbed from state 1")
    b, d = gen.birth_death_rates()
    n = len(d)
    if n == 1:
        return 1.0
    if dps is None:
        dps = max(60, 50 + n // 10)
    lam = tridiag.mp_lambda(b, d, 0, dps=dps)
    ratio = tridiag.mp_detratio_minor(b, d, lam, dps=dps)
    return float(1 / ratio)
