"""q-deformed entropy, free energy, and flux/force/heat functionals.

Everything is a pure function of (p, pi, rates, q).  The deformation uses the
generalized logarithm (x**(q-1) - 1)/(q-1); an entropic index within 1e-9 of 1
switches every formula to its logarithmic (Gibbs/KL) limit instead of
evaluating 0/0.  Evaluation is numerically anchored on expm1/log so that
values are continuous through q = 1 to full precision.

Zero handling follows one policy: for q > 1, 0**q := 0 and edges with zero
flux on both sides contribute nothing; for q < 1 any formula that would raise
a zero to a negative power raises DomainError instead of emitting infinities
that would silently corrupt the ledger identities.

Sign conventions: positive_flux phi_ij = p_i w_ij - p_j w_ji, and the heat
ledger satisfies (exactly, in exact arithmetic)

    F = U - S,   e_p = f_d + Q_hk,   dS/dt = f_d - Q_ex,   h_d = Q_ex + Q_hk.

Rates enter h_d and Q_hk as w**(q-1), so for q != 1 these two depend on the
absolute scale of the rates (they are not invariant under w -> c*w); the
thermodynamic force is likewise non-local in that it depends on pi_i and pi_j
individually, not only on their ratio.  Rates are treated as plain
dimensionless numbers throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    NotDetailedBalanced,
    NotReversible,
    NumericalInconsistency,
    SupportError,
)
from .markov import Generator, detailed_balance_check, validate_distribution

Q_LIMIT_BAND = 1e-9


@dataclass(frozen=True)
class QParam:
    """Entropic index q > 0; is_limit flags |q - 1| < 1e-9 (logarithmic limit)."""

    q: float
    is_limit: bool

    @classmethod
    def of(cls, q) -> "QParam":
        if isinstance(q, QParam):
            return q
        q = float(q)
        if not np.isfinite(q) or q <= 0.0:
            raise DomainError(f"entropic index must be positive and finite, got {q!r}")
        return cls(q=q, is_limit=abs(q - 1.0) < Q_LIMIT_BAND)

    @property
    def r(self) -> float:
        return self.q - 1.0


# ---------------------------------------------------------------------------
# scalar / array kernels
# ---------------------------------------------------------------------------

def _qlog0(x, qp: QParam) -> np.ndarray:
    """(x**r - 1)/r elementwise via expm1 (ln x in the limit); accepts x = 0.

    At x = 0: finite -1/r for q > 1, -inf at the limit.  Callers guard q < 1.
    """
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    if qp.is_limit:
        return lx
    return np.expm1(qp.r * lx) / qp.r


def _pow_r(x, qp: QParam) -> np.ndarray:
    """x**(q-1) elementwise with the q -> 1 limit 1; 0**(q-1) = 0 for q > 1."""
    x = np.asarray(x, dtype=float)
    if qp.is_limit:
        return np.ones_like(x)
    with np.errstate(divide="ignore"):
        return np.exp(qp.r * np.log(x))


def _require_interior(p: np.ndarray, qp: QParam, what: str) -> None:
    # logarithmic-limit formulas and negative powers (q < 1) both need p > 0
    if (qp.is_limit or qp.q < 1.0) and np.any(p == 0.0):
        raise DomainError(f"{what} requires strictly positive probabilities when q <= 1")


def _as_rows(p) -> tuple[np.ndarray, bool]:
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def q_log(x, q) -> float | np.ndarray:
    """Generalized logarithm (x**(q-1) - 1)/(q-1); ln x in the q -> 1 limit."""
    qp = QParam.of(q)
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("q_log needs strictly positive finite arguments")
    out = _qlog0(arr, qp)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def q_exp(y, q) -> float | np.ndarray:
    """Inverse of q_log: (1 + (q-1) y)**(1/(q-1)); exp(y) in the limit."""
    qp = QParam.of(q)
    arr = np.asarray(y, dtype=float)
    if qp.is_limit:
        out = np.exp(arr)
    else:
        base = 1.0 + qp.r * arr
        if np.any(base <= 0.0):
            raise DomainError("q_exp argument outside the deformed domain (1 + (q-1) y <= 0)")
        out = base ** (1.0 / qp.r)
    return float(out) if np.isscalar(y) or arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# entropies and energies
# ---------------------------------------------------------------------------

def _tsallis_rows(P: np.ndarray, qp: QParam) -> np.ndarray:
    # (1 - sum p**q)/(q-1) written as -sum p*qlog(p); zero entries contribute 0
    mask = P > 0.0
    safe = np.where(mask, P, 1.0)
    return -np.where(mask, P * _qlog0(safe, qp), 0.0).sum(axis=-1)


def tsallis_entropy(p, q) -> float:
    """Non-extensive entropy (1 - sum_i p_i**q)/(q - 1); Gibbs entropy at the limit."""
    qp = QParam.of(q)
    arr = validate_distribution(p)
    return float(_tsallis_rows(arr[None, :], qp)[0])


def _relative_rows(P: np.ndarray, ref: np.ndarray, qp: QParam) -> np.ndarray:
    mask = P > 0.0
    ratio = np.where(mask, P / np.where(ref > 0.0, ref, 1.0), 1.0)
    return np.where(mask, P * _qlog0(ratio, qp), 0.0).sum(axis=-1)


def relative_entropy(p, ref, q) -> float:
    """Generalized relative entropy of p with respect to ref; KL at the limit.

    Nonnegative, zero iff p == ref.  Raises SupportError where p_i > 0 with
    ref_i = 0, and DomainError if q < 1 with a vanishing reference entry.
    """
    qp = QParam.of(q)
    arr = validate_distribution(p)
    g = validate_distribution(ref, n=arr.size, name="ref")
    if np.any((arr > 0.0) & (g == 0.0)):
        i = int(np.argmax((arr > 0.0) & (g == 0.0)))
        raise SupportError(f"p[{i}] > 0 but reference vanishes there")
    if not qp.is_limit and qp.q < 1.0 and np.any(g == 0.0):
        raise DomainError("q < 1 requires a strictly positive reference distribution")
    return float(_relative_rows(arr[None, :], g, qp)[0])


def energy_levels(pi, q) -> np.ndarray:
    """Statistical energies eps_i = (pi_i**(1-q) - 1)/(q - 1) = q_log(1/pi_i)."""
    qp = QParam.of(q)
    arr = validate_distribution(pi, name="pi")
    if np.any(arr == 0.0):
        raise DomainError("energy levels need strictly positive pi")
    out = _qlog0(1.0 / arr, qp)
    out.setflags(write=False)
    return out


def _internal_energy_rows(P: np.ndarray, eps: np.ndarray, qp: QParam) -> np.ndarray:
    weight = P if qp.is_limit else P ** qp.q
    return (weight * eps).sum(axis=-1)


def internal_energy(p, eps, q) -> float:
    """Mean statistical energy sum_i p_i**q eps_i (p**q weighting, not p)."""
    qp = QParam.of(q)
    arr = validate_distribution(p)
    e = np.asarray(eps, dtype=float)
    if e.shape != arr.shape:
        raise DomainError(f"energy vector shape {e.shape} does not match p {arr.shape}")
    return float(_internal_energy_rows(arr[None, :], e, qp)[0])


def free_energy(p, pi, q) -> float:
    """Generalized free energy F = H(p||pi); cross-checked against U - S.

    The relative-entropy form and the U - S split are algebraically identical;
    both are evaluated and must agree within max(1e-10, 1e-12 * scale).
    """
    qp = QParam.of(q)
    arr = validate_distribution(p)
    ref = validate_distribution(pi, n=arr.size, name="pi")
    if np.any(ref == 0.0):
        raise DomainError("free energy needs strictly positive pi")
    h = float(_relative_rows(arr[None, :], ref, qp)[0])
    eps = _qlog0(1.0 / ref, qp)
    split = float(_internal_energy_rows(arr[None, :], eps, qp)[0]) - float(
        _tsallis_rows(arr[None, :], qp)[0]
    )
    tol = max(1e-10, 1e-12 * max(abs(h), abs(split)))
    if abs(h - split) > tol:
        raise NumericalInconsistency(
            f"free-energy split mismatch: H = {h!r}, U - S = {split!r}"
        )
    return h


# ---------------------------------------------------------------------------
# fluxes, forces, and the heat ledger
# ---------------------------------------------------------------------------

def _pair_data(g: Generator):
    i = g.pairs[:, 0]
    j = g.pairs[:, 1]
    return i, j, g.rates[i, j], g.rates[j, i]


def _phi_pairs(P: np.ndarray, g: Generator):
    i, j, wf, wb = _pair_data(g)
    return P[..., i] * wf - P[..., j] * wb


@dataclass(frozen=True)
class FluxForceField:
    """Antisymmetric probability flux phi and thermodynamic force Phi."""

    phi: np.ndarray
    Phi: np.ndarray


def flux_force(p, pi, g: Generator, q) -> FluxForceField:
    """Onsager pair: phi_ij = p_i w_ij - p_j w_ji and the q-deformed force.

    Phi_ij = [ (p_i/pi_i)**(q-1) - (p_j/pi_j)**(q-1) ] / (q-1), with the
    logarithmic limit ln(p_i/pi_i) - ln(p_j/pi_j).  Both matrices are exactly
    antisymmetric by construction.
    """
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    ref = validate_distribution(pi, n=g.n, name="pi")
    if np.any(ref == 0.0):
        raise DomainError("flux_force needs strictly positive pi")
    _require_interior(arr, qp, "flux_force")
    flux = arr[:, None] * g.rates
    phi = flux - flux.T
    v = _qlog0(arr / ref, qp)
    force = v[:, None] - v[None, :]
    phi.setflags(write=False)
    force.setflags(write=False)
    return FluxForceField(phi=phi, Phi=force)


def force_db_form(p, pi, g: Generator, q, db_tol: float = 1e-9) -> np.ndarray:
    """Detailed-balance rewriting of the force in terms of local fluxes.

    On edge (i, j):  2 / ((pi_j w_ji)**(q-1) + (pi_i w_ij)**(q-1)) *
    [ (p_i w_ij)**(q-1) - (p_j w_ji)**(q-1) ] / (q-1).  Under detailed balance
    this equals the force from flux_force on every edge.  Note the stationary
    weights enter individually (not only through their ratio), so for q != 1
    the force is not locally determined by (p_i, p_j, w_ij, w_ji) alone.
    """
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    ref = validate_distribution(pi, n=g.n, name="pi")
    if np.any(ref == 0.0):
        raise DomainError("force_db_form needs strictly positive pi")
    if not g.reversible:
        raise NotReversible("force_db_form needs bidirectional support")
    db = detailed_balance_check(g, ref, tol=db_tol)
    if not db.balanced:
        raise NotDetailedBalanced(
            f"edge {db.worst_edge} violates detailed balance by {db.max_violation:.3e}"
        )
    _require_interior(arr, qp, "force_db_form")
    i, j, wf, wb = _pair_data(g)
    num = _qlog0(arr[i] * wf, qp) - _qlog0(arr[j] * wb, qp)
    pref = 2.0 / (_pow_r(ref[j] * wb, qp) + _pow_r(ref[i] * wf, qp))
    out = np.zeros((g.n, g.n))
    out[i, j] = pref * num
    out[j, i] = -pref * num
    out.setflags(write=False)
    return out


def _f_d_rows(P: np.ndarray, pi: np.ndarray, g: Generator, qp: QParam) -> np.ndarray:
    i, j, _, _ = _pair_data(g)
    phi = _phi_pairs(P, g)
    v = _qlog0(P / pi, qp)
    with np.errstate(invalid="ignore"):
        terms = np.where(phi != 0.0, phi * (v[..., i] - v[..., j]), 0.0)
    return qp.q * terms.sum(axis=-1)


def free_energy_dissipation(p, pi, g: Generator, q) -> float:
    """f_d = (q/2) sum_ij phi_ij Phi_ij = -dF/dt; nonnegative, zero iff stationary."""
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    ref = validate_distribution(pi, n=g.n, name="pi")
    if np.any(ref == 0.0):
        raise DomainError("free_energy_dissipation needs strictly positive pi")
    _require_interior(arr, qp, "free_energy_dissipation")
    return float(_f_d_rows(arr[None, :], ref, g, qp)[0])


def _entropy_rate_rows(P: np.ndarray, g: Generator, qp: QParam) -> np.ndarray:
    i, j, _, _ = _pair_data(g)
    phi = _phi_pairs(P, g)
    v = _qlog0(P, qp)
    with np.errstate(invalid="ignore"):
        terms = np.where(phi != 0.0, phi * (v[..., i] - v[..., j]), 0.0)
    return qp.q * terms.sum(axis=-1)


def entropy_rate(p, g: Generator, q) -> float:
    """dS/dt = (q/2) sum_ij phi_ij (p_i**(q-1) - p_j**(q-1))/(q-1)."""
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    _require_interior(arr, qp, "entropy_rate")
    return float(_entropy_rate_rows(arr[None, :], g, qp)[0])


def _excess_heat_rows(P: np.ndarray, pi: np.ndarray, g: Generator, qp: QParam) -> np.ndarray:
    i, j, _, _ = _pair_data(g)
    phi = _phi_pairs(P, g)
    eps = _qlog0(1.0 / pi, qp)
    c = _pow_r(P, qp) * eps
    return qp.q * (phi * (c[..., i] - c[..., j])).sum(axis=-1)


def excess_heat(p, pi, g: Generator, q) -> float:
    """Excess heat rate (q/2) sum_ij phi_ij (p_i**(q-1) eps_i - p_j**(q-1) eps_j).

    Vanishes in any steady state; satisfies dS/dt = f_d - Q_ex.  The algebraic
    sign is kept exactly as defined (positive on relaxation toward pi in the
    canonical two-state fixture).
    """
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    ref = validate_distribution(pi, n=g.n, name="pi")
    if np.any(ref == 0.0):
        raise DomainError("excess_heat needs strictly positive pi")
    _require_interior(arr, qp, "excess_heat")
    return float(_excess_heat_rows(arr[None, :], ref, g, qp)[0])


def excess_heat_summands(p, pi, g: Generator, q) -> np.ndarray:
    """Per-edge excess-heat terms (q/2) phi_ij (p_i**(q-1) eps_i - ...), as an
    antisymmetric n x n table whose total is Q_ex."""
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    ref = validate_distribution(pi, n=g.n, name="pi")
    if np.any(ref == 0.0):
        raise DomainError("excess_heat_summands needs strictly positive pi")
    _require_interior(arr, qp, "excess_heat_summands")
    eps = _qlog0(1.0 / ref, qp)
    c = _pow_r(arr, qp) * eps
    flux = arr[:, None] * g.rates
    phi = flux - flux.T
    out = (qp.q / 2.0) * phi * (c[:, None] - c[None, :])
    out.setflags(write=False)
    return out


def _entropy_production_rows(P: np.ndarray, g: Generator, qp: QParam) -> np.ndarray:
    i, j, wf, wb = _pair_data(g)
    x = P[..., i] * wf
    y = P[..., j] * wb
    both_zero = (x == 0.0) & (y == 0.0)
    with np.errstate(invalid="ignore"):
        terms = np.where(both_zero, 0.0, (x - y) * (_qlog0(x, qp) - _qlog0(y, qp)))
    return qp.q * terms.sum(axis=-1)


def entropy_production(p, g: Generator, q) -> float:
    """e_p = (q/2) sum_ij phi_ij [(p_i w_ij)**(q-1) - (p_j w_ji)**(q-1)]/(q-1).

    Nonnegative term by term; edges with zero flux in both directions
    contribute 0.  Requires microscopic reversibility.
    """
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    if not g.reversible:
        raise NotReversible("entropy production needs bidirectional support")
    _require_interior(arr, qp, "entropy_production")
    return float(_entropy_production_rows(arr[None, :], g, qp)[0])


def _housekeeping_rows(P: np.ndarray, pi: np.ndarray, g: Generator, qp: QParam) -> np.ndarray:
    i, j, wf, wb = _pair_data(g)
    phi = _phi_pairs(P, g)
    prr = _pow_r(P / pi, qp)
    a = prr[..., i] * _qlog0(pi[i] * wf, qp) - prr[..., j] * _qlog0(pi[j] * wb, qp)
    return qp.q * (phi * a).sum(axis=-1)


def housekeeping_heat(p, pi, g: Generator, q) -> float:
    """Housekeeping heat rate; equals e_p - f_d exactly.

    The sign is reported as computed, never clamped: for q != 1 it is negative
    on ordinary detailed-balance relaxation (e.g. the two-state fixture at
    q = 2 gives -0.25), so the nonnegativity asserted for the classical case
    does not survive deformation.  Audited by claim_search, not assumed.
    """
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    ref = validate_distribution(pi, n=g.n, name="pi")
    if np.any(ref == 0.0):
        raise DomainError("housekeeping_heat needs strictly positive pi")
    if not g.reversible:
        raise NotReversible("housekeeping heat needs bidirectional support")
    _require_interior(arr, qp, "housekeeping_heat")
    return float(_housekeeping_rows(arr[None, :], ref, g, qp)[0])


def _heat_dissipation_rows(P: np.ndarray, g: Generator, qp: QParam) -> np.ndarray:
    i, j, wf, wb = _pair_data(g)
    phi = _phi_pairs(P, g)
    pr = _pow_r(P, qp)
    a = pr[..., i] * _qlog0(wf, qp) - pr[..., j] * _qlog0(wb, qp)
    return qp.q * (phi * a).sum(axis=-1)


def heat_dissipation(p, g: Generator, q) -> float:
    """Heat dissipation rate (q/(2(q-1))) sum_ij phi_ij [p_i**(q-1)(w_ij**(q-1)-1) - ...].

    The summation and flux factor are part of the definition (the bare bracket
    alone cannot balance the ledger); h_d = Q_ex + Q_hk holds exactly, and the
    q -> 1 limit is the classical (1/2) sum phi_ij ln(w_ij/w_ji).
    """
    qp = QParam.of(q)
    arr = validate_distribution(p, n=g.n)
    if not g.reversible:
        raise NotReversible("heat dissipation needs bidirectional support")
    _require_interior(arr, qp, "heat_dissipation")
    return float(_heat_dissipation_rows(arr[None, :], g, qp)[0])


# ---------------------------------------------------------------------------
# full per-state ledger
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThermoSample:
    """One time-point's thermodynamic ledger (all rates in 1/time)."""

    S: float
    U: float
    F: float
    f_d: float
    e_p: float
    Q_ex: float
    Q_hk: float
    h_d: float
    dS_dt: float

    def residuals(self) -> dict[str, float]:
        """Absolute residuals of the four algebraic ledger identities."""
        return {
            "free_energy_split": abs(self.F - (self.U - self.S)),
            "entropy_production_split": abs(self.e_p - (self.f_d + self.Q_hk)),
            "heat_decomposition": abs(self.h_d - (self.Q_ex + self.Q_hk)),
            "entropy_balance": abs(self.dS_dt - (self.f_d - self.Q_ex)),
        }


LEDGER_FIELDS = ("S", "U", "F", "f_d", "e_p", "Q_ex", "Q_hk", "h_d", "dS_dt")


def ledger_columns(states: np.ndarray, pi: np.ndarray, g: Generator, q) -> dict[str, np.ndarray]:
    """Vectorized ledger over a (T, n) block of distributions.

    States are assumed already validated (e.g. a Trajectory); pi must be the
    strictly positive stationary distribution of g, which must be reversible.
    """
    qp = QParam.of(q)
    if not g.reversible:
        raise NotReversible("the full ledger needs bidirectional support")
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0.0):
        raise DomainError("ledger needs strictly positive pi")
    P, _ = _as_rows(states)
    _require_interior(P, qp, "ledger")
    eps = _qlog0(1.0 / pi, qp)
    cols = {
        "S": _tsallis_rows(P, qp),
        "U": _internal_energy_rows(P, eps, qp),
        "F": _relative_rows(P, pi, qp),
        "f_d": _f_d_rows(P, pi, g, qp),
        "e_p": _entropy_production_rows(P, g, qp),
        "Q_ex": _excess_heat_rows(P, pi, g, qp),
        "Q_hk": _housekeeping_rows(P, pi, g, qp),
        "h_d": _heat_dissipation_rows(P, g, qp),
        "dS_dt": _entropy_rate_rows(P, g, qp),
    }
    split = np.abs(cols["F"] - (cols["U"] - cols["S"]))
    scale = np.maximum(np.abs(cols["F"]), np.abs(cols["U"]) + np.abs(cols["S"]))
    if np.any(split > np.maximum(1e-10, 1e-12 * scale)):
        raise NumericalInconsistency("free-energy split mismatch along ledger")
    return cols


def thermo_sample(p, pi, g: Generator, q) -> ThermoSample:
    """Evaluate the full ledger at one distribution."""
    arr = validate_distribution(p, n=g.n)
    ref = validate_distribution(pi, n=g.n, name="pi")
    cols = ledger_columns(arr[None, :], ref, g, q)
    return ThermoSample(**{k: float(v[0]) for k, v in cols.items()})


# ---------------------------------------------------------------------------
# conditional entropy and scalar inequalities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointDistribution:
    """Marginal p_a over A plus row-stochastic conditional cond[i, j] = P(B=j | A=i)."""

    p_a: np.ndarray
    cond: np.ndarray

    def __post_init__(self):
        p_a = validate_distribution(self.p_a, name="p_a")
        cond = np.array(self.cond, dtype=float)
        if cond.ndim != 2 or cond.shape[0] != p_a.size:
            raise DomainError(f"cond must be ({p_a.size}, k), got {cond.shape}")
        if not np.all(np.isfinite(cond)) or cond.min() < 0.0:
            raise DomainError("cond entries must be finite and nonnegative")
        if np.abs(cond.sum(axis=1) - 1.0).max() > 1e-10:
            raise DomainError("cond rows must sum to 1 within 1e-10")
        cond.setflags(write=False)
        object.__setattr__(self, "p_a", p_a)
        object.__setattr__(self, "cond", cond)

    def joint(self) -> np.ndarray:
        return self.p_a[:, None] * self.cond


@dataclass(frozen=True)
class ConditionalEntropyReport:
    gap: float
    chain_residual: float


def conditional_entropy_gap(jd: JointDistribution, q) -> ConditionalEntropyReport:
    """Subadditivity gap [S(A) + sum_i p_i S(B|A=i)] - S(AB) for Tsallis entropies.

    Nonnegative whenever q > 1 (p_i**q <= p_i pulls the exact chain rule below
    the plain conditional average).  Also reports the residual of the exact
    chain rule S(AB) = S(A) + sum_i p_i**q S(B|A=i), which must vanish for all q.
    """
    qp = QParam.of(q)
    s_a = float(_tsallis_rows(jd.p_a[None, :], qp)[0])
    s_rows = _tsallis_rows(jd.cond, qp)
    s_ab = float(_tsallis_rows(jd.joint().reshape(1, -1), qp)[0])
    weight = jd.p_a if qp.is_limit else jd.p_a ** qp.q
    gap = s_a + float((jd.p_a * s_rows).sum()) - s_ab
    chain = abs(s_ab - (s_a + float((weight * s_rows).sum())))
    return ConditionalEntropyReport(gap=gap, chain_residual=chain)


def h_theorem_kernel(z, q) -> float | np.ndarray:
    """Scalar kernel (q z**(q-1) - (q-1) z**q - 1)/(q-1), <= 0 for all z > 0.

    Its nonpositivity is what forces the relative entropy of two co-evolving
    solutions to decay; the q -> 1 limit is 1 + ln z - z.
    """
    qp = QParam.of(q)
    arr = np.asarray(z, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("h_theorem_kernel needs z > 0")
    if qp.is_limit:
        out = 1.0 + np.log(arr) - arr
    else:
        out = (qp.q * arr ** qp.r - qp.r * arr ** qp.q - 1.0) / qp.r
    return float(out) if np.isscalar(z) or arr.ndim == 0 else out
