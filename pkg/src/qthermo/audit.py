"""Time-resolved ledgers, identity audits, and randomized claim searches.

run_ledger evolves a distribution and evaluates the full thermodynamic ledger
at every grid point.  check_identities verifies the four algebraic ledger
identities at 1e-10 and the two differential ones (dF/dt = -f_d, dS/dt
analytic) against Richardson-extrapolated central differences of the series
itself - the finite-difference oracle is independent of the analytic
formulas it checks.  claim_search drives a seeded random-model ensemble
against the inequality claims, recording replayable counterexamples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    GridTooCoarse,
    NotIrreducible,
    NotReversible,
    SupportError,
)
from .functionals import (
    LEDGER_FIELDS,
    QParam,
    ThermoSample,
    excess_heat_summands,
    flux_force,
    force_db_form,
    ledger_columns,
    relative_entropy,
    free_energy_dissipation,
    entropy_production,
    housekeeping_heat,
)
from .markov import (
    Generator,
    Trajectory,
    detailed_balance_check,
    evolve,
    spectral_gap,
    stationary,
    validate_distribution,
    validate_generator,
)

ALGEBRAIC_TOL = 1e-10
NONNEG_TOL = 1e-12
MONOTONE_SLACK = 1e-9
FORCE_MATCH_TOL = 1e-9
SETTLED_TOL = 1e-6
CLAIM_THRESHOLD = 1e-9

CLAIMS = ("fd_nonneg", "ep_nonneg", "qhk_nonneg", "qhk_zero_under_db", "hq_nonneg")


# ---------------------------------------------------------------------------
# ledger series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LedgerSeries:
    """Full ledger along a trajectory, against the fixed stationary state of g.

    circulation holds the per-edge excess-heat summands at the final time.
    """

    times: np.ndarray
    states: np.ndarray
    pi: np.ndarray
    q: float
    samples: tuple[ThermoSample, ...]
    circulation: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])

    def __len__(self) -> int:
        return len(self.times)


def ledger_from_trajectory(traj: Trajectory, g: Generator, q, pi=None) -> LedgerSeries:
    """Evaluate the ledger on an existing trajectory (reuses one integration
    across several q values)."""
    qp = QParam.of(q)
    if pi is None:
        pi = stationary(g)
    cols = ledger_columns(traj.states, pi, g, qp)
    samples = tuple(
        ThermoSample(**{k: float(cols[k][t]) for k in LEDGER_FIELDS})
        for t in range(len(traj.times))
    )
    circulation = excess_heat_summands(traj.states[-1], pi, g, qp)
    return LedgerSeries(
        times=traj.times,
        states=traj.states,
        pi=pi,
        q=qp.q,
        samples=samples,
        circulation=circulation,
    )


def run_ledger(g: Generator, p0, q, t_end: float, dt_out: float, method: str = "rk45") -> LedgerSeries:
    """Evolve p0 and evaluate every ledger quantity at each grid point.

    Needs a strongly connected (unique pi) and microscopically reversible
    generator: e_p, Q_hk and h_d are part of every sample and diverge on
    one-sided edges at any q.
    """
    if not g.strongly_connected:
        raise NotIrreducible("run_ledger needs a strongly connected generator")
    if not g.reversible:
        raise NotReversible("run_ledger needs bidirectional support")
    traj = evolve(g, p0, t_end, dt_out, method=method)
    return ledger_from_trajectory(traj, g, q)


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------

def differential_residuals(times: np.ndarray, values: np.ndarray, rates: np.ndarray,
                           sign: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residuals |d(values)/dt - sign * rates| per sample.

    Interior points (uniform spacing, 2 <= k <= T-3) use Richardson-extrapolated
    central differences, D = (4 D_h - D_2h)/3; the rest fall back to
    numpy.gradient's second-order one-sided estimates.  Returns (residuals,
    step-halving disagreement |D_h - D_2h| where defined else nan, richardson
    mask).
    """
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    n = len(t)
    deriv = np.gradient(v, t)
    disagreement = np.full(n, np.nan)
    mask = np.zeros(n, dtype=bool)
    if n >= 6:
        h = t[1] - t[0]
        uniform = np.abs(np.diff(t) - h) <= 1e-9 * h
        for k in range(2, n - 2):
            if not (uniform[k - 2] and uniform[k - 1] and uniform[k] and uniform[k + 1]):
                continue
            d1 = (v[k + 1] - v[k - 1]) / (2.0 * h)
            d2 = (v[k + 2] - v[k - 2]) / (4.0 * h)
            deriv[k] = (4.0 * d1 - d2) / 3.0
            disagreement[k] = abs(d1 - d2)
            mask[k] = True
    residuals = np.abs(deriv - sign * rates)
    return residuals, disagreement, mask


# ---------------------------------------------------------------------------
# audit report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityCheck:
    max_residual: float
    tol: float
    ok: bool


@dataclass(frozen=True)
class TellegenReport:
    """Per-edge excess-heat circulation at the stationary state."""

    summands: np.ndarray
    total: float
    max_abs_summand: float
    circulating: bool
    q: float


@dataclass(frozen=True)
class HTheoremReport:
    times: np.ndarray
    values: np.ndarray
    monotone: bool
    max_uptick: float


@dataclass(frozen=True)
class AuditReport:
    """Residuals of every balance identity plus inequality observations.

    identities_pass covers only the identity checks (and the force match when
    detailed balance holds); inequality observations such as the sign of Q_hk
    are reported, never gated.
    """

    n: int
    q: float
    p0: tuple[float, ...]
    pi: tuple[float, ...]
    t_end: float
    dt_out: float
    fd_tol: float
    detailed_balance: bool
    identities: dict[str, IdentityCheck]
    force_match: IdentityCheck | None
    f_d_min: float
    e_p_min: float
    f_d_nonnegative: bool
    e_p_nonnegative: bool
    free_energy_max_uptick: float
    free_energy_monotone: bool
    Q_hk_min: float
    Q_hk_max: float
    Q_hk_negative_fraction: float
    f_d_final: float
    Q_ex_final: float
    settled: bool
    tellegen_total: float
    tellegen_max_summand: float
    tellegen_circulating: bool
    h_theorem_max_uptick: float | None
    h_theorem_monotone: bool | None
    initial_sample: ThermoSample = field(repr=False, default=None)
    final_sample: ThermoSample = field(repr=False, default=None)
    identities_pass: bool = False

    def to_dict(self) -> dict:
        def check(c):
            return None if c is None else {
                "max_residual": c.max_residual, "tol": c.tol, "pass": c.ok}

        def sample(s):
            return None if s is None else {k: getattr(s, k) for k in LEDGER_FIELDS}

        return {
            "n": self.n,
            "q": self.q,
            "p0": list(self.p0),
            "pi": list(self.pi),
            "t_end": self.t_end,
            "dt_out": self.dt_out,
            "fd_tol": self.fd_tol,
            "detailed_balance": self.detailed_balance,
            "identities": {k: check(v) for k, v in self.identities.items()},
            "force_match": check(self.force_match),
            "inequalities": {
                "f_d_min": self.f_d_min,
                "f_d_nonnegative": self.f_d_nonnegative,
                "e_p_min": self.e_p_min,
                "e_p_nonnegative": self.e_p_nonnegative,
                "free_energy_max_uptick": self.free_energy_max_uptick,
                "free_energy_monotone": self.free_energy_monotone,
                "h_theorem_max_uptick": self.h_theorem_max_uptick,
                "h_theorem_monotone": self.h_theorem_monotone,
            },
            "observations": {
                "Q_hk_min": self.Q_hk_min,
                "Q_hk_max": self.Q_hk_max,
                "Q_hk_negative_fraction": self.Q_hk_negative_fraction,
            },
            "steady_state": {
                "f_d_final": self.f_d_final,
                "Q_ex_final": self.Q_ex_final,
                "settled": self.settled,
            },
            "tellegen": {
                "total": self.tellegen_total,
                "max_abs_summand": self.tellegen_max_summand,
                "circulating": self.tellegen_circulating,
            },
            "initial_sample": sample(self.initial_sample),
            "final_sample": sample(self.final_sample),
            "pass": self.identities_pass,
        }


def _fd_identity(times, values, rates, sign, fd_tol, label) -> IdentityCheck:
    residuals, disagreement, mask = differential_residuals(times, values, rates, sign)
    if not mask.any():
        raise GridTooCoarse(f"{label}: need at least 6 uniform samples for the FD oracle")
    res = residuals[mask]
    dis = disagreement[mask]
    if np.nanmax(dis) > 100.0 * fd_tol:
        raise GridTooCoarse(
            f"{label}: step-halving disagreement {np.nanmax(dis):.3e} > {100 * fd_tol:.1e}; "
            "refine dt_out (guidance: dt_out <= 0.01/max-rate)"
        )
    worst = int(np.argmax(res))
    if res[worst] > fd_tol and dis[worst] > res[worst]:
        raise GridTooCoarse(f"{label}: residual {res[worst]:.3e} is truncation-dominated")
    return IdentityCheck(max_residual=float(res.max()), tol=fd_tol, ok=bool(res.max() <= fd_tol))


def check_identities(series: LedgerSeries, g: Generator, fd_tol: float = 1e-5,
                     h_pair: "HTheoremReport | None" = None) -> AuditReport:
    """Verify every balance identity on a ledger series and populate verdicts.

    Algebraic identities are checked at 1e-10 at every sample; the two
    differential identities are checked at fd_tol against the finite-difference
    oracle.  Raises GridTooCoarse when Richardson step-halving shows the grid
    cannot support fd_tol.
    """
    cols = {k: series.column(k) for k in LEDGER_FIELDS}
    identities: dict[str, IdentityCheck] = {}
    algebraic = {
        "free_energy_split": np.abs(cols["F"] - (cols["U"] - cols["S"])),
        "entropy_production_split": np.abs(cols["e_p"] - (cols["f_d"] + cols["Q_hk"])),
        "heat_decomposition": np.abs(cols["h_d"] - (cols["Q_ex"] + cols["Q_hk"])),
        "entropy_balance": np.abs(cols["dS_dt"] - (cols["f_d"] - cols["Q_ex"])),
    }
    for name, res in algebraic.items():
        worst = float(res.max())
        identities[name] = IdentityCheck(max_residual=worst, tol=ALGEBRAIC_TOL,
                                         ok=worst <= ALGEBRAIC_TOL)

    identities["free_energy_rate_fd"] = _fd_identity(
        series.times, cols["F"], cols["f_d"], -1.0, fd_tol, "dF/dt = -f_d")
    identities["entropy_rate_fd"] = _fd_identity(
        series.times, cols["S"], cols["dS_dt"], 1.0, fd_tol, "dS/dt")

    db = detailed_balance_check(g, series.pi, tol=1e-9)
    force_match = None
    if db.balanced:
        worst = 0.0
        stride = max(1, len(series) // 16)
        for state in series.states[::stride]:
            ff = flux_force(state, series.pi, g, series.q)
            alt = force_db_form(state, series.pi, g, series.q)
            on = g.rates > 0
            worst = max(worst, float(np.abs(ff.Phi - alt)[on].max(initial=0.0)))
        force_match = IdentityCheck(max_residual=worst, tol=FORCE_MATCH_TOL,
                                    ok=worst <= FORCE_MATCH_TOL)

    upticks = np.diff(cols["F"])
    max_uptick = float(upticks.max(initial=0.0))
    tell = tellegen_check(g, series.q, pi=series.pi)

    q_hk = cols["Q_hk"]
    ok_all = all(c.ok for c in identities.values()) and (force_match is None or force_match.ok)
    return AuditReport(
        n=g.n,
        q=series.q,
        p0=tuple(float(x) for x in series.states[0]),
        pi=tuple(float(x) for x in series.pi),
        t_end=float(series.times[-1]),
        dt_out=float(series.times[1] - series.times[0]),
        fd_tol=fd_tol,
        detailed_balance=db.balanced,
        identities=identities,
        force_match=force_match,
        f_d_min=float(cols["f_d"].min()),
        e_p_min=float(cols["e_p"].min()),
        f_d_nonnegative=bool(cols["f_d"].min() >= -NONNEG_TOL),
        e_p_nonnegative=bool(cols["e_p"].min() >= -NONNEG_TOL),
        free_energy_max_uptick=max_uptick,
        free_energy_monotone=bool(max_uptick <= MONOTONE_SLACK),
        Q_hk_min=float(q_hk.min()),
        Q_hk_max=float(q_hk.max()),
        Q_hk_negative_fraction=float((q_hk < -NONNEG_TOL).mean()),
        f_d_final=float(cols["f_d"][-1]),
        Q_ex_final=float(cols["Q_ex"][-1]),
        settled=bool(cols["f_d"][-1] <= SETTLED_TOL and abs(cols["Q_ex"][-1]) <= SETTLED_TOL),
        tellegen_total=tell.total,
        tellegen_max_summand=tell.max_abs_summand,
        tellegen_circulating=tell.circulating,
        h_theorem_max_uptick=None if h_pair is None else h_pair.max_uptick,
        h_theorem_monotone=None if h_pair is None else h_pair.monotone,
        initial_sample=series.samples[0],
        final_sample=series.samples[-1],
        identities_pass=ok_all,
    )


# ---------------------------------------------------------------------------
# H-theorem and Tellegen checks
# ---------------------------------------------------------------------------

def h_theorem_pair(g: Generator, p0, g0, q, t_end: float, dt_out: float,
                   method: str = "rk45") -> HTheoremReport:
    """Co-evolve two solutions and verify H_q(p(t) || g(t)) never increases.

    A boundary reference start makes H infinite until the support fills in;
    such leading infinities are allowed, finite-to-infinite jumps are not.
    """
    qp = QParam.of(q)
    p0 = validate_distribution(p0, n=g.n, name="p0")
    g0 = validate_distribution(g0, n=g.n, name="g0")
    if (qp.is_limit or qp.q < 1.0) and (np.any(p0 == 0.0) or np.any(g0 == 0.0)):
        raise DomainError("q <= 1 pair check needs strictly positive starts")
    traj_p = evolve(g, p0, t_end, dt_out, method=method)
    traj_g = evolve(g, g0, t_end, dt_out, method=method)
    values = np.empty(len(traj_p))
    for k in range(len(traj_p)):
        try:
            values[k] = relative_entropy(traj_p.states[k], traj_g.states[k], qp)
        except SupportError:
            values[k] = np.inf
    max_uptick = 0.0
    monotone = True
    for a, b in zip(values, values[1:]):
        if np.isinf(a):
            continue
        if np.isinf(b):
            monotone = False
            max_uptick = np.inf
            break
        max_uptick = max(max_uptick, b - a)
    monotone = monotone and max_uptick <= MONOTONE_SLACK
    return HTheoremReport(times=traj_p.times, values=values,
                          monotone=monotone, max_uptick=float(max_uptick))


def tellegen_check(g: Generator, q, pi=None) -> TellegenReport:
    """Excess-heat circulation at the stationary state.

    The per-edge summands may circulate at a nonequilibrium steady state, but
    their total is zero; at equilibrium every summand vanishes individually.
    """
    qp = QParam.of(q)
    if pi is None:
        pi = stationary(g)
    summands = excess_heat_summands(pi, pi, g, qp)
    total = float(summands.sum())
    max_abs = float(np.abs(summands).max())
    return TellegenReport(summands=summands, total=total, max_abs_summand=max_abs,
                          circulating=max_abs > ALGEBRAIC_TOL, q=qp.q)


# ---------------------------------------------------------------------------
# random model ensemble
# ---------------------------------------------------------------------------

def _log_uniform(rng: np.random.Generator, lo: float, hi: float, size) -> np.ndarray:
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def sample_generator(rng: np.random.Generator, n: int,
                     rate_range: tuple[float, float] = (0.05, 20.0),
                     detailed_balance: bool = False,
                     extra_edge_prob: float = 0.5,
                     min_pi: float | None = None) -> Generator:
    """Draw a strongly connected, microscopically reversible random generator.

    The support is a random spanning tree plus extra undirected edges; rates
    are log-uniform over rate_range.  With detailed_balance=True the rates come
    from a random energy landscape with symmetric prefactors (pi_i w_ij =
    pi_j w_ji by construction, rates still inside rate_range).  min_pi, when
    set, redraws until the stationary minimum reaches it, keeping the
    epsilon scale small enough for 1e-10 absolute identity audits.
    """
    lo, hi = rate_range
    if not (0.0 < lo <= hi):
        raise DomainError(f"bad rate range {rate_range!r}")
    for _ in range(1000):
        edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
        for i in range(n - 1):
            for j in range(i + 1, n):
                if (i, j) not in edges and rng.random() < extra_edge_prob:
                    edges.append((i, j))
        rates = np.zeros((n, n))
        if detailed_balance:
            span = math.log(hi / lo) / 4.0
            energy = rng.uniform(-span, span, n)
            for i, j in edges:
                c = float(_log_uniform(rng, lo * math.exp(span), hi * math.exp(-span), ()))
                rates[i, j] = c * math.exp((energy[i] - energy[j]) / 2.0)
                rates[j, i] = c * math.exp((energy[j] - energy[i]) / 2.0)
        else:
            for i, j in edges:
                rates[i, j] = float(_log_uniform(rng, lo, hi, ()))
                rates[j, i] = float(_log_uniform(rng, lo, hi, ()))
        g = validate_generator(rates)
        if min_pi is None or float(stationary(g).min()) >= min_pi:
            return g
    raise DomainError(f"could not sample a generator with min(pi) >= {min_pi}")


# ---------------------------------------------------------------------------
# claim search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchFinding:
    """One replayable counterexample: every input needed to recompute value."""

    claim: str
    trial: int
    n: int
    q: float
    detailed_balance: bool
    rates: tuple[tuple[float, ...], ...]
    p: tuple[float, ...]
    ref: tuple[float, ...] | None
    value: float
    margin: float

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "trial": self.trial,
            "n": self.n,
            "q": self.q,
            "detailed_balance": self.detailed_balance,
            "rates": [list(row) for row in self.rates],
            "p": list(self.p),
            "ref": None if self.ref is None else list(self.ref),
            "value": self.value,
            "margin": self.margin,
        }


def _claim_value(claim: str, g: Generator, p: np.ndarray, q: float,
                 ref: np.ndarray | None) -> float:
    if claim == "fd_nonneg":
        return free_energy_dissipation(p, stationary(g), g, q)
    if claim == "ep_nonneg":
        return entropy_production(p, g, q)
    if claim in ("qhk_nonneg", "qhk_zero_under_db"):
        return housekeeping_heat(p, stationary(g), g, q)
    if claim == "hq_nonneg":
        return relative_entropy(p, ref, q)
    raise ValueError(f"unknown claim {claim!r}")


def normalize_claim(claim: str) -> str:
    name = claim.replace("-", "_")
    if name not in CLAIMS:
        raise ValueError(f"unknown claim {claim!r}; choose from {CLAIMS}")
    return name


def claim_search(claim: str, trials: int, n_range: tuple[int, int] = (2, 6),
                 q_set=(0.5, 1.0, 1.5, 2.0, 3.0), seed: int = 0,
                 rate_range: tuple[float, float] = (0.05, 20.0),
                 threshold: float = CLAIM_THRESHOLD) -> list[SearchFinding]:
    """Randomized counterexample search for one inequality claim.

    Each trial draws n, a detailed-balance toggle, a random generator
    (log-uniform rates), a Dirichlet-uniform distribution, and q from q_set,
    then evaluates the claim quantity.  Nonnegativity claims are violated
    below -threshold; the equality claim qhk_zero_under_db is violated beyond
    |value| > threshold (and always samples detailed-balance models).
    Findings replay bit-identically from their recorded inputs.
    """
    claim = normalize_claim(claim)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    q_set = tuple(float(x) for x in q_set)
    findings: list[SearchFinding] = []
    for trial, ss in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(ss)
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        db = True if claim == "qhk_zero_under_db" else bool(rng.integers(0, 2))
        g = sample_generator(rng, n, rate_range=rate_range, detailed_balance=db)
        p = rng.dirichlet(np.ones(n))
        ref = rng.dirichlet(np.ones(n)) if claim == "hq_nonneg" else None
        q = q_set[int(rng.integers(0, len(q_set)))]
        value = _claim_value(claim, g, p, q, ref)
        if claim == "qhk_zero_under_db":
            violated, margin = abs(value) > threshold, abs(value)
        else:
            violated, margin = value < -threshold, -value
        if violated:
            findings.append(SearchFinding(
                claim=claim, trial=trial, n=n, q=q, detailed_balance=db,
                rates=tuple(tuple(float(x) for x in row) for row in g.rates),
                p=tuple(float(x) for x in p),
                ref=None if ref is None else tuple(float(x) for x in ref),
                value=float(value), margin=float(margin)))
    return findings


def verify_finding(finding: SearchFinding) -> float:
    """Recompute a finding's observed value from its recorded inputs."""
    g = validate_generator(np.array(finding.rates))
    ref = None if finding.ref is None else np.array(finding.ref)
    return float(_claim_value(finding.claim, g, np.array(finding.p), finding.q, ref))


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def default_grid(g: Generator) -> tuple[float, float]:
    """Grid satisfying the FD guidance dt_out <= 0.01/max-rate, with enough
    span to expose relaxation but at most ~600 samples."""
    lam = max(2.0 * g.max_exit_rate(), 1e-12)
    dt = 0.01 / lam
    t_end = min(4.0 / spectral_gap(g), 600.0 * dt)
    t_end = max(t_end, 30.0 * dt)
    # keep the grid exactly uniform
    steps = max(6, int(round(t_end / dt)))
    return steps * dt, dt


def full_audit(g: Generator, p0=None, q=2.0, t_end: float | None = None,
               dt_out: float | None = None, fd_tol: float = 1e-5,
               method: str = "rk45") -> AuditReport:
    """Ledger run plus identity checks plus an H-theorem pair on one model."""
    if p0 is None:
        p0 = np.full(g.n, 1.0 / g.n)
    p0 = validate_distribution(p0, n=g.n, name="p0")
    if t_end is None or dt_out is None:
        auto_t, auto_dt = default_grid(g)
        t_end = auto_t if t_end is None else t_end
        dt_out = auto_dt if dt_out is None else dt_out
    series = run_ledger(g, p0, q, t_end, dt_out, method=method)
    uniform = np.full(g.n, 1.0 / g.n)
    partner = uniform if np.abs(p0 - uniform).max() > 1e-9 else series.pi
    pair = h_theorem_pair(g, p0, partner, q, t_end, dt_out, method=method)
    return check_identities(series, g, fd_tol=fd_tol, h_pair=pair)
