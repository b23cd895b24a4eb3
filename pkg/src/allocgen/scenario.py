"""Scenario-driven pipeline: YAML config -> portfolio -> allocation table -> CSV/report.

Scenario schema (YAML, keys and nesting)::

    kmax: 64                  # rounded up to the next power of two
    tolerance: 1.0e-8         # validity tolerance on the validation curve
    underflow_floor: 1.0e-15
    seed: 123                 # required when model.sampled is present
    model:
      dependence: independent # | hierarchical_shock | gamma_mixture | frailty_bernoulli
      risks:                  # omitted for gamma_mixture / hierarchical_shock
        - {type: poisson, lam: 0.7}
        - {type: negative_binomial, r: 3, q: 0.6}
        - {type: binomial, m: 5, q: 0.3}
        - {type: bernoulli, b: 10, q: 0.3}
        - {type: pmf, masses: [0.5, 0.5], step_h: 1.0}
        - {type: compound_poisson, lam: 0.08, severity: [0, 0.1, 0.2, 0.4, 0.3]}
        - {type: compound, frequency: {family: negative_binomial, r: 2, q: 0.5},
           severity: [0, 1.0]}
        - {type: pareto, alpha: 1.3, lam: 3.0, xmax: 32768}   # moment-matched grid
      sampled:                # optional sampled extras, appended after risks
        kind: compound_poisson_negbin   # | pareto_extras | bernoulli_extras
        count: 10000
        ...                   # kind-specific fields, see _SAMPLED_BUILDERS
      alpha: 0.5              # frailty only
      epsilon: 1.0e-10        # frailty only
      gamma0: 1.0             # gamma_mixture only (plus r1, r2, lambda1, lambda2)
      shock_lambdas: {"0": 0.01, "1": 0.02, ..., "222": 0.05}
    outputs:
      allocations: true
      pmf_of_conditional_means: [1, 2, 3]    # 1-based risk indices
      rvar_levels: [[0.90, 0.99], [0.95, 0.95]]
      layers: [10, 20]
      risk_columns: [1, 2, 3]  # per-risk CSV columns; defaults to all when n <= 64

Outputs: ``allocations.csv`` (k, f_S, F_S, per-risk mu_i/cum_i/cond_i, valid),
``cond_mean_dist_<i>.csv`` (value, mass, cum_mass), ``report.txt``.  Floats are
written with shortest round-trip formatting so reruns diff exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import risk_measures
from .allocation import (
    AllocationTable,
    PortfolioModel,
    allocate_independent,
    cumulative_and_layers,
    allocate_compound_poisson_pool,
)
from .dependence import (
    FrailtyBernoulliSpec,
    GammaMixtureSpec,
    HierarchicalShockSpec,
    frailty_allocation,
    gamma_mixture_allocation,
    shock_allocation_table,
)
from .errors import ConfigError, EmptyDistribution
from .models import (
    BernoulliRisk,
    CompoundKatzRisk,
    ExplicitRisk,
    KatzParams,
    KatzRisk,
    negbin_pmf,
)
from .pmf import arithmetize, next_pow2, pmf_from_values
from .tails import pareto_cdf, pareto_lev

GENERATOR_NAME = "numpy PCG64 (default_rng)"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ScenarioConfig:
    kmax: int
    tolerance: float = 1e-8
    underflow_floor: float = 1e-15
    seed: Optional[int] = None
    dependence: str = "independent"
    risk_specs: list = field(default_factory=list)
    sampled: Optional[dict] = None
    alpha: float = 0.0
    epsilon: float = 1e-10
    gamma_params: Optional[dict] = None
    shock_lambdas: Optional[dict] = None
    outputs: dict = field(default_factory=dict)
    name: str = "scenario"


_DEPENDENCE_KINDS = ("independent", "hierarchical_shock", "gamma_mixture", "frailty_bernoulli")


def _need(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}: missing required field")
    return mapping[key]


def parse_scenario(raw: dict, name: str = "scenario") -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("scenario root must be a mapping")
    try:
        kmax = int(_need(raw, "kmax", "(root)"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"kmax: {exc}") from None
    if kmax < 2:
        raise ConfigError(f"kmax: must be >= 2, got {kmax}")
    model = _need(raw, "model", "(root)")
    if not isinstance(model, dict):
        raise ConfigError("model: must be a mapping")
    dependence = model.get("dependence", "independent")
    if dependence not in _DEPENDENCE_KINDS:
        raise ConfigError(f"model.dependence: unknown kind {dependence!r}")

    cfg = ScenarioConfig(
        kmax=next_pow2(kmax),
        tolerance=float(raw.get("tolerance", 1e-8)),
        underflow_floor=float(raw.get("underflow_floor", 1e-15)),
        seed=(int(raw["seed"]) if raw.get("seed") is not None else None),
        dependence=dependence,
        risk_specs=list(model.get("risks", []) or []),
        sampled=model.get("sampled"),
        alpha=float(model.get("alpha", 0.0)),
        epsilon=float(model.get("epsilon", 1e-10)),
        outputs=dict(raw.get("outputs", {}) or {}),
        name=name,
    )

    if dependence == "gamma_mixture":
        cfg.gamma_params = {
            key: float(_need(model, key, "model"))
            for key in ("gamma0", "r1", "r2", "lambda1", "lambda2")
        }
    elif dependence == "hierarchical_shock":
        lams = _need(model, "shock_lambdas", "model")
        if not isinstance(lams, dict):
            raise ConfigError("model.shock_lambdas: must be a mapping of node -> rate")
        cfg.shock_lambdas = {str(k): float(v) for k, v in lams.items()}
    else:
        if not cfg.risk_specs and not cfg.sampled:
            raise ConfigError("model.risks: empty portfolio")
    if cfg.sampled is not None:
        if not isinstance(cfg.sampled, dict) or "kind" not in cfg.sampled:
            raise ConfigError("model.sampled: must be a mapping with a 'kind' field")
        if cfg.seed is None:
            raise ConfigError("seed: required when model.sampled is present")
    for i, spec in enumerate(cfg.risk_specs):
        if not isinstance(spec, dict) or "type" not in spec:
            raise ConfigError(f"model.risks[{i}]: must be a mapping with a 'type' field")
    return cfg


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not parseable YAML: {exc}") from None
    if raw is None:
        raise ConfigError(f"{path}: empty scenario file")
    return parse_scenario(raw, name=path.stem)


# ---------------------------------------------------------------------------
# portfolio construction
# ---------------------------------------------------------------------------


def _build_risk(spec: dict, path: str, kmax: int):
    kind = spec["type"]
    try:
        if kind == "poisson":
            return KatzRisk(KatzParams.poisson(float(spec["lam"])))
        if kind == "negative_binomial":
            return KatzRisk(KatzParams.negative_binomial(float(spec["r"]), float(spec["q"])))
        if kind == "binomial":
            return KatzRisk(KatzParams.binomial(int(spec["m"]), float(spec["q"])))
        if kind == "bernoulli":
            return BernoulliRisk(int(spec["b"]), float(spec["q"]))
        if kind == "pmf":
            return ExplicitRisk(pmf_from_values(spec["masses"], float(spec.get("step_h", 1.0))))
        if kind == "compound_poisson":
            sev = pmf_from_values(spec["severity"])
            return CompoundKatzRisk(KatzParams.poisson(float(spec["lam"])), sev)
        if kind == "compound_poisson_negbin":
            sev_len = int(spec.get("severity_length", min(kmax, 4096)))
            sev = negbin_pmf(float(spec["r"]), float(spec["q"]), sev_len)
            return CompoundKatzRisk(
                KatzParams.poisson(float(spec["lam"])),
                pmf_from_values(sev),
            )
        if kind == "compound":
            freq = spec["frequency"]
            family = freq["family"]
            if family == "poisson":
                params = KatzParams.poisson(float(freq["lam"]))
            elif family == "negative_binomial":
                params = KatzParams.negative_binomial(float(freq["r"]), float(freq["q"]))
            elif family == "binomial":
                params = KatzParams.binomial(int(freq["m"]), float(freq["q"]))
            else:
                raise ConfigError(f"{path}.frequency.family: unknown family {family!r}")
            return CompoundKatzRisk(params, pmf_from_values(spec["severity"]))
        if kind == "pareto":
            xmax = int(spec.get("xmax", kmax))
            pmf, report = arithmetize(
                pareto_cdf(float(spec["alpha"]), float(spec["lam"])),
                pareto_lev(float(spec["alpha"]), float(spec["lam"])),
                "moment_matching",
                xmax,
            )
            risk = ExplicitRisk(pmf)
            return risk, report
    except KeyError as exc:
        raise ConfigError(f"{path}: missing field {exc.args[0]!r} for type {kind!r}") from None
    raise ConfigError(f"{path}.type: unknown risk type {kind!r}")


def _sample_compound_poisson_negbin(sampled: dict, rng, kmax: int):
    count = int(sampled["count"])
    lam_mean = float(sampled.get("lam_exp_mean", 0.1))
    r_choices = [int(v) for v in sampled.get("r_choices", [1, 2, 3, 4, 5, 6])]
    q_lo, q_hi = [float(v) for v in sampled.get("q_range", [0.4, 0.5])]
    sev_len = int(sampled.get("severity_length", min(kmax, 4096)))
    lams = rng.exponential(lam_mean, size=count)
    rs = rng.choice(r_choices, size=count)
    qs = rng.uniform(q_lo, q_hi, size=count)
    risks = []
    for lam, r, q in zip(lams, rs, qs):
        sev = negbin_pmf(float(r), float(q), sev_len)
        top = int(np.flatnonzero(sev > 0.0)[-1]) + 1
        risks.append(
            CompoundKatzRisk(
                KatzParams.poisson(float(lam)),
                pmf_from_values(sev[:top]),
            )
        )
    return risks


def _sample_pareto_extras(sampled: dict, rng, kmax: int):
    count = int(sampled["count"])
    a_lo, a_hi = [float(v) for v in sampled.get("alpha_range", [1.3, 1.9])]
    l_lo, l_hi = [float(v) for v in sampled.get("lam_range", [5.0, 15.0])]
    xmax = int(sampled.get("xmax", min(kmax, 2**15)))
    alphas = rng.uniform(a_lo, a_hi, size=count)
    lams = rng.uniform(l_lo, l_hi, size=count)
    risks = []
    for a, l in zip(alphas, lams):
        pmf, _ = arithmetize(pareto_cdf(a, l), pareto_lev(a, l), "moment_matching", xmax)
        risks.append(ExplicitRisk(pmf))
    return risks


def _sample_bernoulli_extras(sampled: dict, rng, kmax: int):
    count = int(sampled["count"])
    b_choices = [int(v) for v in sampled.get("b_choices", list(range(1, 11)))]
    q_lo, q_hi = [float(v) for v in sampled.get("q_range", [0.0, 1.0])]
    bs = rng.choice(b_choices, size=count)
    qs = np.clip(rng.uniform(q_lo, q_hi, size=count), 1e-6, 1.0 - 1e-6)
    return [BernoulliRisk(int(b), float(q)) for b, q in zip(bs, qs)]


_SAMPLED_BUILDERS = {
    "compound_poisson_negbin": _sample_compound_poisson_negbin,
    "pareto_extras": _sample_pareto_extras,
    "bernoulli_extras": _sample_bernoulli_extras,
}


@dataclass
class BuiltScenario:
    config: ScenarioConfig
    portfolio: PortfolioModel
    kmax: int
    truncation_notes: list = field(default_factory=list)


def build_portfolio(config: ScenarioConfig) -> BuiltScenario:
    """Materialize the portfolio (including sampled extras) from a config."""
    notes: list[str] = []
    kmax = config.kmax
    if config.dependence == "gamma_mixture":
        spec = GammaMixtureSpec(
            gamma0=config.gamma_params["gamma0"],
            r1=config.gamma_params["r1"],
            r2=config.gamma_params["r2"],
            lambda1=config.gamma_params["lambda1"],
            lambda2=config.gamma_params["lambda2"],
        )
        return BuiltScenario(config, PortfolioModel(dependence=spec), kmax, notes)
    if config.dependence == "hierarchical_shock":
        spec = HierarchicalShockSpec(config.shock_lambdas or {})
        return BuiltScenario(config, PortfolioModel(dependence=spec), kmax, notes)

    risks = []
    for i, rspec in enumerate(config.risk_specs):
        built = _build_risk(rspec, f"model.risks[{i}]", kmax)
        if isinstance(built, tuple):
            risk, report = built
            notes.append(
                f"risk {i + 1}: arithmetized on {report.kmax} points, "
                f"lost mass {report.lost_mass:.3e}, lost mean {report.lost_mean:.6f}"
            )
            risks.append(risk)
        else:
            risks.append(built)
    if config.sampled is not None:
        kind = config.sampled["kind"]
        if kind not in _SAMPLED_BUILDERS:
            raise ConfigError(f"model.sampled.kind: unknown kind {kind!r}")
        rng = np.random.default_rng(config.seed)
        risks.extend(_SAMPLED_BUILDERS[kind](config.sampled, rng, kmax))
        notes.append(
            f"sampled {config.sampled['count']} extra risks ({kind}) with "
            f"{GENERATOR_NAME}, seed={config.seed}"
        )

    if config.dependence == "frailty_bernoulli":
        if not all(isinstance(r, BernoulliRisk) for r in risks):
            raise ConfigError("model.risks: frailty coupling needs bernoulli risks only")
        spec = FrailtyBernoulliSpec(
            b=tuple(r.b for r in risks),
            q=tuple(r.q for r in risks),
            alpha=config.alpha,
            epsilon=config.epsilon,
        )
        kmax = max(kmax, next_pow2(spec.min_kmax()))
        return BuiltScenario(config, PortfolioModel(dependence=spec), kmax, notes)
    return BuiltScenario(config, PortfolioModel(risks=risks), kmax, notes)


def allocate_portfolio(
    portfolio: PortfolioModel,
    kmax: int,
    *,
    tolerance: float = 1e-8,
    underflow_floor: float = 1e-15,
) -> AllocationTable:
    """Dispatch to the right allocation pipeline for the dependence regime."""
    dep = portfolio.dependence
    kwargs = dict(tolerance=tolerance, underflow_floor=underflow_floor)
    if dep is None:
        all_cpois = portfolio.risks and all(
            isinstance(r, CompoundKatzRisk) and r.frequency.is_poisson()
            for r in portfolio.risks
        )
        if all_cpois:
            return allocate_compound_poisson_pool(portfolio.risks, kmax, **kwargs)
        return allocate_independent(portfolio.risks, kmax, **kwargs)
    if isinstance(dep, HierarchicalShockSpec):
        return shock_allocation_table(dep, kmax, **kwargs)
    if isinstance(dep, GammaMixtureSpec):
        return gamma_mixture_allocation(dep, kmax, **kwargs)
    if isinstance(dep, FrailtyBernoulliSpec):
        return frailty_allocation(dep, kmax, **kwargs)
    raise ConfigError(f"unknown dependence spec {type(dep).__name__}")


# ---------------------------------------------------------------------------
# conditional-mean distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionalMeanDistribution:
    """Push-forward of Pr(S = k) onto the distinct conditional-mean values."""

    support: np.ndarray
    masses: np.ndarray

    def cum_masses(self) -> np.ndarray:
        return np.cumsum(self.masses)

    def cdf_at(self, x) -> np.ndarray:
        """P(value <= x) for scalar or vector x."""
        idx = np.searchsorted(self.support, np.asarray(x, dtype=float), side="right")
        cum = self.cum_masses()
        out = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        return out


MERGE_TOL = 1e-12


def conditional_mean_distribution(table: AllocationTable, risk: int) -> ConditionalMeanDistribution:
    """Distribution of the conditional mean of one risk over the valid lattice points.

    Masses are Pr(S = k); values equal within MERGE_TOL are merged onto one
    support point.
    """
    valid = table.valid_mask
    if not valid.any():
        raise EmptyDistribution("no valid lattice points to aggregate")
    values = table.conditional_mean[risk, valid]
    masses = table.fs_raw[valid]
    order = np.argsort(values, kind="stable")
    values = values[order]
    masses = masses[order]
    # group values whose gaps stay within the merge tolerance
    new_group = np.empty(len(values), dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(values) > MERGE_TOL
    group_ids = np.cumsum(new_group) - 1
    support = values[new_group]
    agg = np.zeros(len(support))
    np.add.at(agg, group_ids, masses)
    return ConditionalMeanDistribution(support=support, masses=agg)


def count_cdf_crossings(
    a: ConditionalMeanDistribution,
    b: ConditionalMeanDistribution,
    *,
    value_tol: float = 1e-9,
    mass_tol: float = 1e-12,
) -> int:
    """Sign changes of (cdf_a - cdf_b) across the union of the two supports.

    Support values within ``value_tol * (1 + |x|)`` of each other are treated
    as the same evaluation point (transform noise makes 'equal' conditional
    means differ in the last digits); differences below ``mass_tol`` are
    treated as ties and skipped.
    """
    grid = np.sort(np.concatenate([a.support, b.support]))
    if grid.size == 0:
        return 0
    keep = np.empty(len(grid), dtype=bool)
    keep[-1] = True
    keep[:-1] = np.diff(grid) > value_tol * (1.0 + np.abs(grid[:-1]))
    reps = grid[keep]  # cluster representative = the largest member
    d = a.cdf_at(reps) - b.cdf_at(reps)
    d = d[np.abs(d) > mass_tol]
    if d.size < 2:
        return 0
    signs = np.sign(d)
    return int(np.sum(signs[1:] != signs[:-1]))


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    """Shortest round-trip decimal for a float (ints stay bare)."""
    return repr(float(x))


def _select_risk_columns(config: ScenarioConfig, n_risks: int) -> list[int]:
    chosen = config.outputs.get("risk_columns")
    if chosen:
        cols = [int(c) - 1 for c in chosen]
        bad = [c + 1 for c in cols if not 0 <= c < n_risks]
        if bad:
            raise ConfigError(f"outputs.risk_columns: indices {bad} outside 1..{n_risks}")
        return cols
    if n_risks <= 64:
        return list(range(n_risks))
    return list(range(8))  # keep wide pools manageable; override via risk_columns


def write_allocations_csv(
    path: Path, table: AllocationTable, columns: Sequence[int], header_notes: Sequence[str] = ()
) -> None:
    cdf = np.cumsum(table.fs_raw)
    with np.errstate(invalid="ignore"):
        cond_total = table.conditional_mean.sum(axis=0)
    with path.open("w") as fh:
        for note in header_notes:
            fh.write(f"# {note}\n")
        names = ["k", "f_S", "F_S"]
        for c in columns:
            names += [f"mu_{c + 1}", f"cum_{c + 1}", f"cond_{c + 1}"]
        names += ["cond_total", "valid"]
        fh.write(",".join(names) + "\n")
        for k in range(table.kmax):
            row = [str(k), _fmt(table.fs_raw[k]), _fmt(cdf[k])]
            for c in columns:
                row += [
                    _fmt(table.expected_allocation[c, k]),
                    _fmt(table.expected_cumulative[c, k]),
                    _fmt(table.conditional_mean[c, k]),
                ]
            row += [_fmt(cond_total[k]), "1" if table.valid_mask[k] else "0"]
            fh.write(",".join(row) + "\n")


def write_cond_mean_dist_csv(path: Path, dist: ConditionalMeanDistribution,
                             header_notes: Sequence[str] = ()) -> None:
    cum = dist.cum_masses()
    with path.open("w") as fh:
        for note in header_notes:
            fh.write(f"# {note}\n")
        fh.write("value,mass,cum_mass\n")
        for v, m, c in zip(dist.support, dist.masses, cum):
            fh.write(f"{_fmt(v)},{_fmt(m)},{_fmt(c)}\n")


@dataclass
class ScenarioResult:
    table: AllocationTable
    built: BuiltScenario
    paths: list = field(default_factory=list)
    report_lines: list = field(default_factory=list)


def run_scenario(config: ScenarioConfig, out_dir) -> ScenarioResult:
    """Run the full pipeline and write the configured outputs under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    built = build_portfolio(config)
    table = allocate_portfolio(
        built.portfolio,
        built.kmax,
        tolerance=config.tolerance,
        underflow_floor=config.underflow_floor,
    )
    result = ScenarioResult(table=table, built=built)
    lines = result.report_lines
    lines.append(f"scenario: {config.name}")
    lines.append(f"dependence: {config.dependence}")
    lines.append(f"kmax: {built.kmax}")
    lines.append(f"risks: {table.n_risks}")
    lines.append(f"tolerance: {_fmt(config.tolerance)}")
    lines.append(f"underflow_floor: {_fmt(config.underflow_floor)}")
    if config.seed is not None:
        lines.append(f"rng: {GENERATOR_NAME}, seed={config.seed}")
    for note in built.truncation_notes:
        lines.append(f"note: {note}")

    header_notes = [f"scenario {config.name}"]
    if config.seed is not None:
        header_notes.append(f"rng {GENERATOR_NAME} seed={config.seed}")

    dep = built.portfolio.dependence
    if isinstance(dep, FrailtyBernoulliSpec):
        lines.append(
            f"frailty: alpha={_fmt(dep.alpha)} epsilon={_fmt(dep.epsilon)} "
            f"theta_star={dep.theta_star} residual_mass={_fmt(dep.residual_mass)}"
        )

    # identity diagnostics on the valid range
    k = table.lattice_values()
    tot_mu = table.expected_allocation.sum(axis=0)
    target = k * table.fs_raw
    rel = np.abs(tot_mu - target) / (1.0 + np.abs(target))
    valid = table.valid_mask
    lines.append(f"valid_points: {int(valid.sum())} of {table.kmax}")
    if valid.any():
        vidx = np.flatnonzero(valid)
        lines.append(f"valid_range: [{vidx[0]}, {vidx[-1]}]")
        lines.append(f"full_allocation_max_rel_dev_on_valid: {_fmt(rel[valid].max())}")
    trunc = table.truncation
    lines.append(
        f"truncation: lost_mass={_fmt(trunc.lost_mass)} lost_mean={_fmt(trunc.lost_mean)} "
        f"aliasing_risk={trunc.aliasing_risk}"
    )
    for note in trunc.notes:
        lines.append(f"truncation_note: {note}")

    outputs = config.outputs
    columns = _select_risk_columns(config, table.n_risks)
    if outputs.get("allocations", True):
        p = out / "allocations.csv"
        write_allocations_csv(p, table, columns, header_notes)
        result.paths.append(p)

    for idx in outputs.get("pmf_of_conditional_means", []) or []:
        i = int(idx) - 1
        if not 0 <= i < table.n_risks:
            raise ConfigError(f"outputs.pmf_of_conditional_means: index {idx} outside 1..{table.n_risks}")
        dist = conditional_mean_distribution(table, i)
        p = out / f"cond_mean_dist_{idx}.csv"
        write_cond_mean_dist_csv(p, dist, header_notes)
        result.paths.append(p)
        lines.append(
            f"cond_mean_dist_{idx}: {len(dist.support)} support points, "
            f"mass {_fmt(float(dist.masses.sum()))}"
        )

    for pair in outputs.get("rvar_levels", []) or []:
        levels = risk_measures.RVaRLevels(float(pair[0]), float(pair[1]))
        value = risk_measures.rvar(table.fs, levels)
        contribs = risk_measures.euler_rvar_contributions(table, levels)
        lines.append(
            f"rvar({_fmt(levels.alpha1)},{_fmt(levels.alpha2)}): total={_fmt(value)} "
            f"sum_contributions={_fmt(float(contribs.sum()))}"
        )
        shown = ", ".join(f"{c + 1}:{_fmt(contribs[c])}" for c in columns[:16])
        lines.append(f"  contributions: {shown}")

    layers = outputs.get("layers")
    if layers:
        l1, l2 = int(layers[0]), int(layers[1])
        for c in columns[:16]:
            retained, layer, excess = cumulative_and_layers(table, l1, l2, c)
            lines.append(
                f"layers risk {c + 1} (l1={l1}, l2={l2}): retained={_fmt(retained)} "
                f"layer={_fmt(layer)} excess={_fmt(excess)}"
            )

    p = out / "report.txt"
    p.write_text("\n".join(lines) + "\n")
    result.paths.append(p)
    return result
