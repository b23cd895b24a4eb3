"""Expected allocations E[X_i 1{S=k}] and derived tables.

The transform route: with independent risks, the generating function of the
allocation sequence for risk i is (t * d/dt of the risk's pgf) times the pgf of
the others.  Evaluating both factors on the roots of unity and inverting the
product recovers every allocation at once.  Closed forms for the (a, b) count
family and random sums over Poisson counts avoid the per-risk transform of the
others entirely, because their allocation generating function is an explicit
multiple of the pgf of the full sum.

Two transform-free oracles live here as well: direct enumeration of the joint
support, and the size-biased representation computed with direct convolution.
"""

from __future__ import annotations

import dataclasses
import itertools
import warnings
from dataclasses import dataclass, field
from math import exp, lgamma, log
from typing import Sequence

import numpy as np

from . import gf
from .errors import (
    AliasingRisk,
    AllocationError,
    EmptyDistribution,
    InvalidLayer,
    KatzDomain,
    OracleBudget,
    SeriesTruncation,
)
from .models import CompoundKatzRisk, ExplicitRisk, KatzParams, KatzRisk, RiskModel
from .pmf import DiscretePMF, TruncationReport, pmf_from_transform_output

DEFAULT_TOLERANCE = 1e-8
DEFAULT_UNDERFLOW_FLOOR = 1e-15
DIVISION_FLOOR = 1e-12
ALIAS_DEFICIT_TOL = 1e-9


@dataclass
class PortfolioModel:
    """A list of margins plus an optional dependence regime.

    ``dependence is None`` means independent margins; otherwise it holds one of
    the dependence spec objects from :mod:`allocgen.dependence`.
    """

    risks: list = field(default_factory=list)
    dependence: object | None = None


@dataclass
class AllocationTable:
    """Per-risk allocation vectors over the lattice, with a validity mask.

    ``expected_allocation[i][k]`` is E[X_i 1{S = k h}] in payment units;
    ``expected_cumulative`` its prefix sums; ``conditional_mean[i][k]`` the
    ratio against Pr(S = k h).  ``fs_raw`` keeps the unclamped inverse-transform
    output (it can carry negative round-off noise in the deep tail, which is
    exactly what the validity mask is for).
    """

    fs: DiscretePMF
    expected_allocation: np.ndarray
    expected_cumulative: np.ndarray
    conditional_mean: np.ndarray
    valid_mask: np.ndarray
    tolerance_used: float
    underflow_floor: float
    risk_means: np.ndarray
    truncation: TruncationReport
    fs_raw: np.ndarray

    @property
    def n_risks(self) -> int:
        return self.expected_allocation.shape[0]

    @property
    def kmax(self) -> int:
        return self.expected_allocation.shape[1]

    def total_conditional_mean(self) -> np.ndarray:
        """Validation curve: sums to k*h wherever results are trustworthy."""
        return self.conditional_mean.sum(axis=0)

    def lattice_values(self) -> np.ndarray:
        return self.fs.step_h * np.arange(self.kmax, dtype=float)


def _common_step(risks: Sequence[RiskModel]) -> float:
    steps = {r.pmf.step_h for r in risks if isinstance(r, ExplicitRisk)}
    if len(steps) > 1:
        raise AllocationError(f"risks use different lattice steps: {sorted(steps)}")
    return steps.pop() if steps else 1.0


def assemble_table(
    fs_raw: np.ndarray,
    mu: np.ndarray,
    risk_means: np.ndarray,
    *,
    step_h: float = 1.0,
    tolerance: float = DEFAULT_TOLERANCE,
    underflow_floor: float = DEFAULT_UNDERFLOW_FLOOR,
    truncation: TruncationReport | None = None,
    support_bound: int | None = None,
) -> AllocationTable:
    """Build the table from a mass vector and per-risk allocation rows.

    ``fs_raw`` and ``mu`` are on the index lattice; payment units are restored
    here via ``step_h``.  When the sum has a provable support bound below the
    buffer (all margins bounded, no wrap), entries beyond it are exact zeros and
    the inverse-transform noise there is dropped rather than reported.
    """
    kmax = len(fs_raw)
    if not np.any(fs_raw > 0.0):
        raise EmptyDistribution("total-loss pmf carries no positive mass")
    mu = np.atleast_2d(np.asarray(mu, dtype=float)) * step_h
    if support_bound is not None and support_bound + 1 < kmax:
        fs_raw = np.asarray(fs_raw, dtype=float).copy()
        fs_raw[support_bound + 1 :] = 0.0
        mu[:, support_bound + 1 :] = 0.0
    cond = np.divide(
        mu,
        fs_raw[None, :],
        out=np.full_like(mu, np.nan),
        where=fs_raw[None, :] != 0.0,
    )
    cum = np.cumsum(mu, axis=1)
    values = step_h * np.arange(kmax, dtype=float)
    with np.errstate(invalid="ignore"):
        total = cond.sum(axis=0)
        valid = (fs_raw > underflow_floor) & (np.abs(total - values) <= tolerance)
    return AllocationTable(
        fs=pmf_from_transform_output(fs_raw, step_h),
        expected_allocation=mu,
        expected_cumulative=cum,
        conditional_mean=cond,
        valid_mask=valid,
        tolerance_used=tolerance,
        underflow_floor=underflow_floor,
        risk_means=np.asarray(risk_means, dtype=float),
        truncation=truncation or TruncationReport(kmax=kmax),
        fs_raw=np.asarray(fs_raw, dtype=float),
    )


def mask_validity(table: AllocationTable, tol: float) -> AllocationTable:
    """Re-derive the validity mask at a different tolerance."""
    values = table.lattice_values()
    with np.errstate(invalid="ignore"):
        total = table.conditional_mean.sum(axis=0)
        valid = (table.fs_raw > table.underflow_floor) & (np.abs(total - values) <= tol)
    return dataclasses.replace(table, valid_mask=valid, tolerance_used=tol)


def _aliasing_report(risks: Sequence[RiskModel], pmfs: list[np.ndarray], kmax: int) -> TruncationReport:
    tops = [r.support_top() for r in risks]
    notes: list[str] = []
    risky = False
    if all(t is not None for t in tops) and sum(tops) > kmax - 1:
        risky = True
        notes.append(f"exact support bound {sum(tops)} exceeds buffer {kmax}")
    deficit = float(sum(max(0.0, 1.0 - f.sum()) for f in pmfs))
    if deficit > ALIAS_DEFICIT_TOL:
        risky = True
        notes.append(f"per-risk truncated mass totals {deficit:.3e}")
    if risky:
        warnings.warn("; ".join(notes), AliasingRisk, stacklevel=3)
    return TruncationReport(kmax=kmax, lost_mass=deficit, aliasing_risk=risky, notes=tuple(notes))


def allocate_independent(
    risks: Sequence[RiskModel],
    kmax: int,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    underflow_floor: float = DEFAULT_UNDERFLOW_FLOOR,
    division_floor: float = DIVISION_FLOOR,
) -> AllocationTable:
    """Allocation table for independent risks via the transform route.

    The pgf of everything-but-risk-i is obtained by pointwise division of the
    full product only when ``min |pgf_i|`` on the roots stays above
    ``division_floor``; otherwise it is recomputed as the product over the other
    risks, since marginal pgfs can have near-zeros on the unit circle.
    """
    if not risks:
        raise EmptyDistribution("empty portfolio")
    z = gf.roots_of_unity(kmax)
    step_h = _common_step(risks)
    n = len(risks)

    pmfs = [np.asarray(r.pmf_vector(kmax), dtype=float) for r in risks]
    pgfs = [np.asarray(r.pgf_on_roots(z), dtype=complex) for r in risks]
    fs_hat = np.ones(kmax, dtype=complex)
    for g in pgfs:
        fs_hat = fs_hat * g
    fs_raw = gf.idft(fs_hat)
    truncation = _aliasing_report(risks, pmfs, kmax)

    mu = np.empty((n, kmax))
    for i in range(n):
        phi_hat = gf.dft(gf.weighted_index_coeffs(pmfs[i]))
        if np.min(np.abs(pgfs[i])) > division_floor:
            fs_minus = fs_hat / pgfs[i]
        else:
            fs_minus = np.ones(kmax, dtype=complex)
            for j in range(n):
                if j != i:
                    fs_minus = fs_minus * pgfs[j]
        mu[i] = gf.idft(phi_hat * fs_minus)

    means = np.array([r.mean() for r in risks])
    tops = [r.support_top() for r in risks]
    bound = sum(tops) if all(t is not None for t in tops) else None
    if bound is not None and bound >= kmax:
        bound = None  # wrapped: nothing beyond the buffer is provably zero
    return assemble_table(
        fs_raw,
        mu,
        means,
        step_h=step_h,
        tolerance=tolerance,
        underflow_floor=underflow_floor,
        truncation=truncation,
        support_bound=bound,
    )


def allocate_compound_poisson_pool(
    risks: Sequence[CompoundKatzRisk],
    kmax: int,
    *,
    cache: bool | str = "auto",
    memory_budget_bytes: int = 2 << 30,
    tolerance: float = DEFAULT_TOLERANCE,
    underflow_floor: float = DEFAULT_UNDERFLOW_FLOOR,
) -> AllocationTable:
    """Allocation table for independent Poisson random sums, single shared product.

    Dataflow: per-risk severity transform -> pgf of the sum as one elementwise
    product -> per-risk derivative spectrum {(k+1) f_B(k+1)} shifted back by the
    root vector -> inverse transform -> masked division by the pmf of the sum.
    The pgf of the sum is computed once and reused for every risk.

    ``cache`` keeps the per-risk derivative spectra from the first pass
    (memory n * kmax * 16 bytes); ``"auto"`` falls back to streaming (recompute
    in the second pass) when that would exceed ``memory_budget_bytes``.
    """
    if not risks:
        raise EmptyDistribution("empty portfolio")
    for r in risks:
        if not (isinstance(r, CompoundKatzRisk) and r.frequency.is_poisson()):
            raise KatzDomain("this pipeline handles independent Poisson random sums only")
    n = len(risks)
    if cache == "auto":
        cache = n * kmax * 16 <= memory_budget_bytes

    z = gf.roots_of_unity(kmax)
    e1 = z
    fs_hat = np.ones(kmax, dtype=complex)
    cached_phi: list[np.ndarray] = []
    sev_deficit = 0.0
    for r in risks:
        fb = r.severity.padded(kmax)
        sev_deficit += max(0.0, 1.0 - fb.sum() - r.severity.truncation_mass) + r.severity.truncation_mass
        fb_hat = gf.dft(fb)
        fs_hat *= np.exp(r.frequency.b * (fb_hat - 1.0))
        if cache:
            cached_phi.append(gf.dft(_derivative_coeffs(fb)))
    fs_raw = gf.idft(fs_hat)

    steps = {r.severity.step_h for r in risks}
    if len(steps) > 1:
        raise AllocationError(f"severities use different lattice steps: {sorted(steps)}")
    step_h = steps.pop()
    mean_s = sum(r.mean() for r in risks)
    # var of a Poisson random sum is lam * E[B^2]; a 10-sigma headroom check
    var_s = 0.0
    for r in risks:
        fb = r.severity.masses
        k2 = np.arange(len(fb), dtype=float) ** 2
        var_s += r.frequency.b * float(np.dot(k2, fb)) * step_h**2
    notes: list[str] = []
    risky = sev_deficit > ALIAS_DEFICIT_TOL
    if risky:
        notes.append(f"severity truncated mass totals {sev_deficit:.3e}")
    if mean_s + 10.0 * np.sqrt(var_s) >= (kmax - 1) * step_h:
        risky = True
        notes.append(
            f"sum mean {mean_s:.1f} + 10 sd {10.0 * np.sqrt(var_s):.1f} reaches the buffer top {kmax}"
        )
    if risky:
        warnings.warn("; ".join(notes), AliasingRisk, stacklevel=2)

    mu = np.empty((n, kmax))
    for i, r in enumerate(risks):
        if cache:
            phi_hat = cached_phi[i]
        else:
            phi_hat = gf.dft(_derivative_coeffs(r.severity.padded(kmax)))
        mu_hat = r.frequency.b * e1 * phi_hat * fs_hat
        mu[i] = gf.idft(mu_hat)

    means = np.array([r.mean() for r in risks])
    trunc = TruncationReport(kmax=kmax, lost_mass=sev_deficit, aliasing_risk=risky, notes=tuple(notes))
    return assemble_table(
        fs_raw,
        mu,
        means,
        step_h=step_h,
        tolerance=tolerance,
        underflow_floor=underflow_floor,
        truncation=trunc,
    )


def _derivative_coeffs(fb: np.ndarray) -> np.ndarray:
    """{(k+1) f(k+1)}: derivative coefficients before the unit right shift."""
    out = np.zeros(len(fb))
    k = np.arange(1, len(fb), dtype=float)
    out[:-1] = k * fb[1:]
    return out


def allocate_katz_closed_form(katz: KatzParams, fs: DiscretePMF) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form allocation and cumulative allocation for an (a, b) family risk.

    ``fs`` is the pmf of the *full* sum including the risk itself.  The
    geometric-weight convolutions

        alloc[k] = (a+b) * sum_{j<k} a^j fs[k-1-j]
        cum[k]   = (a+b) * sum_{j<k} a^j FS[k-1-j]

    are evaluated by the equivalent one-step recursions (contractive for
    |a| < 1).
    """
    a, b = katz.a, katz.b
    if not abs(a) < 1.0:
        raise KatzDomain(f"|a| must be < 1, got {a}")
    f = fs.masses
    n = len(f)
    FS = np.cumsum(f)
    alloc = np.zeros(n)
    cum = np.zeros(n)
    ab = a + b
    for k in range(n - 1):
        alloc[k + 1] = a * alloc[k] + ab * f[k]
        cum[k + 1] = a * cum[k] + ab * FS[k]
    return fs.step_h * alloc, fs.step_h * cum


def allocate_compound_katz(
    risk: CompoundKatzRisk,
    fs_others_dft: np.ndarray,
    kmax: int,
) -> np.ndarray:
    """Allocation vector for one random-sum risk against the others' pgf buffer.

    Uses the closed count-derivative form: the allocation spectrum is
    t P'_B(t) * (a+b) / (1 - a P_B(t)) * P_S(t), which for a Poisson count
    reduces to lam * t P'_B(t) * P_S(t).
    """
    z = gf.roots_of_unity(kmax)
    a, b = risk.frequency.a, risk.frequency.b
    fb = risk.severity.padded(kmax)
    pb = gf.dft(fb)
    fx_hat = gf.compound_pgf_on_roots(risk.frequency, pb)
    fs_hat = fx_hat * np.asarray(fs_others_dft, dtype=complex)
    tpb_prime = gf.dft(gf.weighted_index_coeffs(fb))  # t * P_B'(t) on the roots
    mu_hat = tpb_prime * ((a + b) / (1.0 - a * pb)) * fs_hat
    return risk.severity.step_h * gf.idft(mu_hat)


def _as_negbin_pairs(risks) -> tuple[np.ndarray, np.ndarray]:
    rs, qs = [], []
    for item in risks:
        if isinstance(item, KatzRisk):
            item = item.params
        if isinstance(item, KatzParams):
            if not 0.0 < item.a < 1.0:
                raise KatzDomain("negative-binomial series needs 0 < a < 1")
            q = 1.0 - item.a
            rs.append(item.b / item.a + 1.0)
            qs.append(q)
        else:
            r, q = item
            if not (r > 0.0 and 0.0 < q < 1.0):
                raise KatzDomain(f"bad negative-binomial pair ({r}, {q})")
            rs.append(float(r))
            qs.append(float(q))
    return np.asarray(rs), np.asarray(qs)


def allocate_negbin_convolution(risks, k: int, *, ell_max: int = 20000) -> float:
    """E[X_1 1{S=k}] for independent negative-binomial risks, transform-free.

    Shift the first risk's order up by one: the allocation equals
    r1 (1-q1)/q1 times the mass at k-1 of the convolution of NB(r1+1, q1) with
    the remaining NB margins.  That convolution is expanded around the smallest
    q; on a fixed coefficient the expansion terminates after k-1 terms, so the
    sum here is exact rather than truncated.  The expansion-coefficient
    recursion is

        delta_{l+1} = (1/(l+1)) sum_{i=1}^{l+1} i xi_i delta_{l+1-i},
        xi_i = sum_j (r'_j / i) * ((q* - q_j)/(1 - q*))^i.
    """
    rs, qs = _as_negbin_pairs(risks)
    if k < 0 or k != int(k):
        raise AllocationError(f"lattice point must be a non-negative integer, got {k}")
    if k == 0:
        return 0.0
    s = int(k) - 1
    if s > ell_max:
        raise SeriesTruncation(
            f"coefficient recursion needs {s} terms, over the {ell_max} budget"
        )
    r_shift = rs.copy()
    r_shift[0] += 1.0
    q_star = float(qs.min())
    rp = float(r_shift.sum())
    base = (q_star - qs) / (1.0 - q_star)  # in (-1, 0]

    xi = np.zeros(s + 2)
    for i in range(1, s + 1):
        xi[i] = float(np.sum(r_shift / i * base**i))
    delta = np.zeros(s + 1)
    delta[0] = 1.0
    for ell in range(s):
        i = np.arange(1, ell + 2)
        delta[ell + 1] = float(np.dot(i * xi[1 : ell + 2], delta[ell::-1])) / (ell + 1)

    log_prefix = float(np.dot(r_shift, np.log(qs))) + s * log(1.0 - q_star)
    total = 0.0
    for ell in range(s + 1):
        m = s - ell
        log_c = lgamma(rp + s) - lgamma(m + 1.0) - lgamma(rp + ell)
        total += delta[ell] * exp(log_c + log_prefix)
    r1, q1 = rs[0], qs[0]
    return r1 * (1.0 - q1) / q1 * total


def cumulative_and_layers(
    table: AllocationTable, l1: int, l2: int, risk: int
) -> tuple[float, float, float]:
    """Split risk ``risk``'s mean into retained, layer and excess pieces.

    retained = E[X_i 1{S <= l1 h}], layer the increment up to l2, excess the
    remainder against the model mean (so the three always telescope to it).
    """
    if not (0 < l1 < l2 < table.kmax):
        raise InvalidLayer(f"need 0 < l1 < l2 < {table.kmax}, got ({l1}, {l2})")
    retained = float(table.expected_cumulative[risk, l1])
    layer = float(table.expected_cumulative[risk, l2] - table.expected_cumulative[risk, l1])
    excess = float(table.risk_means[risk] - table.expected_cumulative[risk, l2])
    return retained, layer, excess


def oracle_size_biased(risk: RiskModel, others_pmf: DiscretePMF) -> np.ndarray:
    """Allocations via the size-biased representation, by direct convolution.

    E[X_1 1{S=s}] = E[X_1] Pr(Xtilde_1 + S_{-1} = s) with the size-biased pmf
    x f(x)/E[X_1]; the mean cancels, leaving the direct sum
    sum_x x f(x) f_others(s - x).  Kept free of transforms on purpose.
    """
    kmax = len(others_pmf)
    fx = np.asarray(risk.pmf_vector(kmax), dtype=float)
    weighted = gf.weighted_index_coeffs(fx)
    if weighted.sum() == 0.0:
        return np.zeros(kmax)
    out = np.convolve(weighted, others_pmf.masses)[:kmax]
    return others_pmf.step_h * out


def oracle_enumerate(
    portfolio: PortfolioModel,
    kmax: int,
    *,
    budget: int = 10_000_000,
    tolerance: float = DEFAULT_TOLERANCE,
    underflow_floor: float = DEFAULT_UNDERFLOW_FLOOR,
) -> AllocationTable:
    """Exact allocations by direct summation over the joint support.

    Supports the independent regime (product measure over per-risk supports)
    and the frailty-coupled indicator regime (finite mixture of product
    measures).  Joint supports above ``budget`` outcomes, or regimes without a
    finite enumeration, raise :class:`OracleBudget`.
    """
    dep = portfolio.dependence
    if dep is None:
        return _enumerate_independent(portfolio.risks, kmax, budget, tolerance, underflow_floor)
    from .dependence import FrailtyBernoulliSpec  # runtime import avoids a module cycle

    if isinstance(dep, FrailtyBernoulliSpec):
        return _enumerate_frailty(dep, kmax, budget, tolerance, underflow_floor)
    raise OracleBudget(f"no finite joint enumeration for dependence {type(dep).__name__}")


def _enumerate_independent(risks, kmax, budget, tolerance, underflow_floor) -> AllocationTable:
    if not risks:
        raise EmptyDistribution("empty portfolio")
    step_h = _common_step(risks)
    n = len(risks)
    supports = []
    size = 1
    for r in risks:
        f = np.asarray(r.pmf_vector(kmax), dtype=float)
        idx = np.flatnonzero(f > 0.0)
        supports.append([(int(i), float(f[i])) for i in idx])
        size *= len(idx)
        if size > budget:
            raise OracleBudget(f"joint support exceeds {budget} outcomes")
    fs = np.zeros(kmax)
    mu = np.zeros((n, kmax))
    for combo in itertools.product(*supports):
        s = 0
        p = 1.0
        for x, px in combo:
            s += x
            p *= px
        if s >= kmax:
            continue
        fs[s] += p
        for i, (x, _) in enumerate(combo):
            mu[i, s] += x * p
    means = np.array([r.mean() for r in risks])
    return assemble_table(
        fs, mu, means, step_h=step_h, tolerance=tolerance, underflow_floor=underflow_floor,
    )


def _enumerate_frailty(spec, kmax, budget, tolerance, underflow_floor) -> AllocationTable:
    n = len(spec.b)
    theta_w = spec.theta_pmf()
    if (2**n) * len(theta_w) > budget:
        raise OracleBudget(f"frailty enumeration needs {(2 ** n) * len(theta_w)} > {budget} outcomes")
    r_pows = spec.conditional_claim_probs()  # shape (theta_star, n)
    fs = np.zeros(kmax)
    mu = np.zeros((n, kmax))
    for combo in itertools.product((0, 1), repeat=n):
        s = int(np.dot(combo, spec.b))
        if s >= kmax:
            continue
        cond = np.where(np.asarray(combo, dtype=bool), r_pows, 1.0 - r_pows)
        p = float(np.dot(theta_w, cond.prod(axis=1)))
        fs[s] += p
        for i, c in enumerate(combo):
            if c:
                mu[i, s] += spec.b[i] * p
    means = np.asarray(spec.b, dtype=float) * np.asarray(spec.q, dtype=float)
    return assemble_table(
        fs, mu, means, tolerance=tolerance, underflow_floor=underflow_floor,
    )
