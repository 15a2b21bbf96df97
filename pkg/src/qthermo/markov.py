"""Master-equation Markov systems: rate generators, time evolution, stationary
distributions, detailed balance, and Kolmogorov cycle analysis.

The central object is :class:`Generator`, a validated dense rate matrix w_ij
(i -> j, i != j) whose internal form has diagonal w_ii = -sum_{j!=i} w_ij so
that every row sums to zero.  Probability vectors are plain 1-D numpy arrays,
checked by :func:`validate_distribution`.  All operations are pure functions
of their inputs; returned arrays are read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.sparse
from scipy.sparse.csgraph import connected_components

from .errors import (
    IntegrationFailure,
    InvalidDistribution,
    NegativeRate,
    NonFinite,
    NotIrreducible,
    NotReversible,
    SolveFailure,
    TooSmall,
)

# Structural checks use 1e-12, dynamic (trajectory-level) checks 1e-9.
ROW_SUM_TOL = 1e-12
SUM_TOL = 1e-10
DRIFT_TOL = 1e-9
STATIONARY_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def validate_distribution(p, n: int | None = None, name: str = "p") -> np.ndarray:
    """Check a probability vector (finite, nonnegative, sums to 1 within 1e-10).

    Returns a read-only float64 copy.  Raises InvalidDistribution otherwise.
    """
    arr = np.array(p, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidDistribution(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if n is not None and arr.size != n:
        raise InvalidDistribution(f"{name} has length {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistribution(f"{name} contains non-finite entries")
    if arr.min(initial=0.0) < 0.0:
        raise InvalidDistribution(f"{name} has negative entries (min {arr.min():.3e})")
    s = float(arr.sum())
    if abs(s - 1.0) > SUM_TOL:
        raise InvalidDistribution(f"{name} sums to {s!r}, not 1 within {SUM_TOL}")
    return _readonly(arr)


@dataclass(frozen=True, eq=False)
class Generator:
    """Validated transition-rate structure of a master equation.

    rates   -- off-diagonal rates w_ij, diagonal zeroed (1/time units)
    matrix  -- internal generator W with w_ii = -sum_{j!=i} w_ij, rows sum to 0
    pairs   -- (E, 2) array of unordered support pairs i < j with
               w_ij > 0 or w_ji > 0
    """

    n: int
    rates: np.ndarray
    matrix: np.ndarray
    pairs: np.ndarray
    reversible: bool
    strongly_connected: bool

    def max_exit_rate(self) -> float:
        """Largest total exit rate max_i |w_ii|; 2x this bounds |Re(lambda)|."""
        return float(-self.matrix.diagonal().min())

    def min_positive_rate(self) -> float:
        pos = self.rates[self.rates > 0]
        return float(pos.min()) if pos.size else 0.0


@dataclass(frozen=True)
class Trajectory:
    """Solution of the master equation sampled on a strictly increasing grid.

    states[k] is the distribution at times[k]; raw_min records the most
    negative entry seen before clipping/renormalisation.
    """

    times: np.ndarray
    states: np.ndarray
    raw_min: float

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class DetailedBalanceReport:
    balanced: bool
    max_violation: float
    worst_edge: tuple[int, int] | None
    tol: float


@dataclass(frozen=True)
class CycleReport:
    """Fundamental-cycle Kolmogorov ratios.

    Each cycle is a node sequence (i_0, ..., i_m) traversed i_0 -> i_1 -> ...
    -> i_m -> i_0; its log ratio is log of forward over backward rate products.
    """

    cycles: tuple[tuple[int, ...], ...]
    log_ratios: np.ndarray
    max_abs_log_ratio: float
    balanced: bool
    tol: float


def validate_generator(raw_rates) -> Generator:
    """Validate raw off-diagonal rates and build the internal generator.

    Raises TooSmall (n < 2), NonFinite (NaN/inf entries), NegativeRate.
    """
    w = np.array(raw_rates, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise TooSmall(f"rate matrix must be square, got shape {w.shape}")
    n = w.shape[0]
    if n < 2:
        raise TooSmall(f"need at least 2 states, got {n}")
    off = ~np.eye(n, dtype=bool)
    if not np.all(np.isfinite(w[off])):
        raise NonFinite("rate matrix contains NaN or infinite entries")
    if w[off].min() < 0.0:
        i, j = np.unravel_index(np.argmin(np.where(off, w, 0.0)), w.shape)
        raise NegativeRate(f"w[{i},{j}] = {w[i, j]!r} < 0")
    np.fill_diagonal(w, 0.0)

    matrix = w.copy()
    np.fill_diagonal(matrix, -w.sum(axis=1))
    assert abs(matrix.sum(axis=1)).max() <= ROW_SUM_TOL * max(1.0, w.max(initial=0.0))

    support = w > 0
    reversible = bool(np.array_equal(support, support.T))
    graph = scipy.sparse.csr_matrix(support.astype(np.int8))
    ncomp, _ = connected_components(graph, directed=True, connection="strong")
    iu, ju = np.where(np.triu(support | support.T, k=1))
    pairs = np.column_stack([iu, ju]).astype(np.intp)

    return Generator(
        n=n,
        rates=_readonly(w),
        matrix=_readonly(matrix),
        pairs=_readonly(pairs),
        reversible=reversible,
        strongly_connected=(ncomp == 1),
    )


def _output_grid(t_end: float, dt_out: float) -> np.ndarray:
    n_steps = int(math.floor(t_end / dt_out + 1e-9))
    times = np.arange(n_steps + 1, dtype=float) * dt_out
    if times[-1] >= t_end - 1e-9 * dt_out:
        times[-1] = t_end
    else:
        times = np.append(times, t_end)
    return times


def _evolve_rk45(matrix: np.ndarray, p0: np.ndarray, times: np.ndarray) -> np.ndarray:
    wt = np.ascontiguousarray(matrix.T)
    sol = scipy.integrate.solve_ivp(
        lambda _t, y: wt @ y,
        (0.0, float(times[-1])),
        p0,
        method="RK45",
        t_eval=times,
        rtol=1e-10,
        atol=1e-12,
    )
    if not sol.success:
        raise IntegrationFailure(f"RK45 step control failed: {sol.message}")
    return np.ascontiguousarray(sol.y.T)


def _evolve_uniformization(matrix: np.ndarray, p0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Truncated-uniformization sampler: exact up to Poisson-tail truncation.

    Used as the exactness fallback for acceptance-grade checks; cost grows
    linearly with lam * t, so prefer rk45 for routine work.
    """
    lam = float(-matrix.diagonal().min())
    out = np.empty((len(times), len(p0)))
    out[0] = p0
    if lam == 0.0:
        out[1:] = p0
        return out
    kt = np.ascontiguousarray(matrix.T / lam + np.eye(len(p0)))
    p = p0.astype(float)
    for k in range(1, len(times)):
        a_total = lam * (times[k] - times[k - 1])
        # exp(-a) must stay inside double range; split long intervals
        n_sub = max(1, int(math.ceil(a_total / 200.0)))
        a = a_total / n_sub
        kmax = int(a + 12.0 * math.sqrt(a + 1.0) + 30)
        for _ in range(n_sub):
            weight = math.exp(-a)
            cum = weight
            acc = weight * p
            v = p
            for j in range(1, kmax + 1):
                v = kt @ v
                weight *= a / j
                acc += weight * v
                cum += weight
                if cum >= 1.0 - 1e-16:
                    break
            p = acc / acc.sum()
        out[k] = p
    return out


def evolve(g: Generator, p0, t_end: float, dt_out: float, method: str = "rk45") -> Trajectory:
    """Integrate dp_i/dt = sum_j (p_j w_ji - p_i w_ij) and sample every dt_out.

    method is "rk45" (adaptive embedded pair, default) or "uniformization"
    (truncated Poisson series, exact to rounding).  Samples are renormalised
    onto the simplex; mass drift >= 1e-9 or negative entries beyond -1e-9
    raise IntegrationFailure.
    """
    p0 = validate_distribution(p0, n=g.n, name="p0")
    if not (t_end > 0.0 and math.isfinite(t_end)):
        raise IntegrationFailure(f"t_end must be positive and finite, got {t_end!r}")
    if not (dt_out > 0.0 and math.isfinite(dt_out)):
        raise IntegrationFailure(f"dt_out must be positive and finite, got {dt_out!r}")
    times = _output_grid(t_end, dt_out)
    if method == "rk45":
        states = _evolve_rk45(g.matrix, p0, times)
    elif method == "uniformization":
        states = _evolve_uniformization(g.matrix, p0, times)
    else:
        raise ValueError(f"unknown method {method!r}")

    raw_min = float(states.min())
    if raw_min < -DRIFT_TOL:
        raise IntegrationFailure(f"negative probability {raw_min:.3e} beyond tolerance")
    sums = states.sum(axis=1)
    drift = float(np.abs(sums - 1.0).max())
    if drift >= DRIFT_TOL:
        raise IntegrationFailure(f"probability mass drift {drift:.3e} >= {DRIFT_TOL}")
    states = np.clip(states, 0.0, None)
    states /= states.sum(axis=1, keepdims=True)
    states[0] = p0
    return Trajectory(times=_readonly(times), states=_readonly(states), raw_min=raw_min)


def stationary(g: Generator, tol: float = STATIONARY_TOL) -> np.ndarray:
    """Solve pi W = 0, sum(pi) = 1 by dense null-space extraction.

    The transposed generator gets a normalisation row appended; the least
    squares solution is polished by iterative refinement until the stationarity
    residual ||pi W||_inf is at rounding level.  Raises NotIrreducible when the
    support graph is not strongly connected, SolveFailure on rank deficiency
    beyond the single expected null direction or an unmet residual.
    """
    if not g.strongly_connected:
        raise NotIrreducible("support graph is not strongly connected")
    scale = max(g.max_exit_rate(), 1.0)
    wt = g.matrix.T / scale
    sv = np.linalg.svd(wt, compute_uv=False)
    if g.n > 1 and sv[-2] < 1e-12 * max(sv[0], 1.0):
        raise SolveFailure("numerical null space has dimension > 1")
    a = np.vstack([wt, np.ones(g.n)])
    b = np.zeros(g.n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    for _ in range(2):
        delta, *_ = np.linalg.lstsq(a, b - a @ pi, rcond=None)
        pi = pi + delta
    if pi.min() < -1e-12:
        raise SolveFailure(f"stationary solve produced negative mass {pi.min():.3e}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(pi @ g.matrix).max())
    if residual > tol:
        raise SolveFailure(f"stationarity residual {residual:.3e} > {tol}")
    return _readonly(pi)


def detailed_balance_check(g: Generator, pi, tol: float = 1e-9) -> DetailedBalanceReport:
    """Check pi_i w_ij = pi_j w_ji on every edge; report the worst edge."""
    pi = validate_distribution(pi, n=g.n, name="pi")
    flux = pi[:, None] * g.rates
    gap = np.abs(flux - flux.T)
    i, j = np.unravel_index(np.argmax(gap), gap.shape)
    worst = float(gap[i, j])
    edge = (int(i), int(j)) if worst > 0.0 else None
    return DetailedBalanceReport(balanced=worst <= tol, max_violation=worst, worst_edge=edge, tol=tol)


def _bfs_forest(n: int, adjacency: list[list[int]]) -> tuple[list[int], list[int]]:
    """Deterministic BFS spanning forest: roots and neighbours in index order."""
    parent = [-1] * n
    depth = [0] * n
    seen = [False] * n
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        queue = [root]
        while queue:
            u = queue.pop(0)
            for v in adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    queue.append(v)
    return parent, depth


def kolmogorov_cycles(g: Generator, tol: float = 1e-9) -> CycleReport:
    """Evaluate the cycle condition on a fundamental basis of the support graph.

    Builds a BFS spanning forest (roots and tree edges by smallest index); each
    non-tree support edge closes one basis cycle, whose log rate-product ratio
    is reported.  Detailed balance holds iff every |log ratio| <= tol, which is
    equivalent to the per-edge stationary-flux check on reversible generators.
    Raises NotReversible when some edge exists in only one direction.
    """
    if not g.reversible:
        w = g.rates
        bad = np.argwhere((w > 0) & (w.T == 0))
        i, j = bad[0]
        raise NotReversible(f"edge ({i},{j}) has w_ij > 0 but w_ji = 0")
    n = g.n
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for i, j in g.pairs:
        adjacency[int(i)].append(int(j))
        adjacency[int(j)].append(int(i))
    parent, depth = _bfs_forest(n, adjacency)
    tree_edges = {(min(v, parent[v]), max(v, parent[v])) for v in range(n) if parent[v] >= 0}

    cycles: list[tuple[int, ...]] = []
    log_ratios: list[float] = []
    logw = np.full_like(g.rates, -np.inf)
    pos = g.rates > 0
    logw[pos] = np.log(g.rates[pos])
    for i, j in g.pairs:
        u, v = int(i), int(j)
        if (u, v) in tree_edges:
            continue
        # lowest common ancestor walk
        x, y = u, v
        while depth[x] > depth[y]:
            x = parent[x]
        while depth[y] > depth[x]:
            y = parent[y]
        while x != y:
            x, y = parent[x], parent[y]
        lca = x
        path_v = [v]
        while path_v[-1] != lca:
            path_v.append(parent[path_v[-1]])
        path_u = [u]
        while path_u[-1] != lca:
            path_u.append(parent[path_u[-1]])
        if lca == u:
            cycle = [u] + path_v[:-1]
        else:
            cycle = [u] + path_v + path_u[-2:0:-1]
        lr = 0.0
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            lr += float(logw[a, b] - logw[b, a])
        cycles.append(tuple(cycle))
        log_ratios.append(lr)

    ratios = np.asarray(log_ratios, dtype=float)
    max_abs = float(np.abs(ratios).max()) if ratios.size else 0.0
    return CycleReport(
        cycles=tuple(cycles),
        log_ratios=_readonly(ratios),
        max_abs_log_ratio=max_abs,
        balanced=max_abs <= tol,
        tol=tol,
    )


def spectral_gap(g: Generator) -> float:
    """Smallest nonzero decay rate min |Re(lambda)| of the generator."""
    if not g.strongly_connected:
        raise NotIrreducible("spectral gap needs a strongly connected generator")
    ev = np.linalg.eigvals(g.matrix)
    scale = max(1.0, float(np.abs(ev).max()))
    nonzero = ev[np.abs(ev) > 1e-12 * scale]
    return float(-nonzero.real.max())
