"""Two-point minimax experiment harness.

Builds the adversarial pair for each sample budget n, verifies the KL budget
and the HSIC gap, simulates the risk of concrete estimators over replicated
draws, and fits the empirical convergence rate on a log-log scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .analytic import adversarial_hsic2, hsic2_gaussian, lecam_bound, minimax_constant
from .data import BlockStructure
from .estimators import (
    _block_grams,
    _hsic_u_from_stats,
    _hsic_v_from_grams,
    _hsic_v_from_stats,
    _two_block_stats,
    hsic_nystrom,
)
from .gaussian import (
    AdversarialPair,
    GaussianMeasure,
    kl_adversarial_bound,
    kl_adversarial_exact,
    make_adversarial_cov,
    sample,
)
from .kernels import KernelFamily, ProductKernel, gram

KL_BUDGET = 1.25
DEFAULT_N_GRID = (64, 128, 256, 512, 1024, 2048, 4096)
ESTIMATOR_KINDS = ("v", "u", "nystrom")


@dataclass(frozen=True)
class Estimator:
    """One concrete estimator entering the risk simulation.

    ``kind`` selects the estimator operation; the U-statistic and the Nystrom
    estimator are defined for two blocks only, and the latter needs a landmark
    count.
    """

    name: str
    kind: str
    landmarks: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ESTIMATOR_KINDS:
            raise ValueError(f"kind must be one of {ESTIMATOR_KINDS}, got {self.kind!r}")
        if self.kind == "nystrom":
            if self.landmarks is None or self.landmarks < 2:
                raise ValueError("nystrom estimator needs a landmark count >= 2")
        elif self.landmarks is not None:
            raise ValueError(f"landmarks only apply to the nystrom kind, not {self.kind!r}")


def build_pair(n: int, gamma: float, block: BlockStructure) -> AdversarialPair:
    """Null N(0, I_d) versus the correlated alternative with rho_n = n^{-1/2}
    and mean (1/(sqrt(d) n)) 1_d."""
    if int(n) != n or n < 2:
        raise ValueError(f"pair construction needs an integer n >= 2, got {n}")
    n = int(n)
    block.require_multiblock()
    d = block.total
    rho = 1.0 / math.sqrt(n)
    p0 = GaussianMeasure.standard(d)
    p1 = GaussianMeasure(
        np.full(d, 1.0 / (math.sqrt(d) * n)), make_adversarial_cov(block, rho)
    )
    return AdversarialPair(p0=p0, p1=p1, n=n, rho=rho, gamma=float(gamma), block=block)


@dataclass(frozen=True)
class DistributionRisk:
    """Risk summary of one estimator under one member of the pair."""

    label: str
    true_hsic: float
    mean_error: float
    rmse: float
    exceed_prob: float
    rmse_sq_scale: float


@dataclass(frozen=True)
class RiskResult:
    """Risk of one estimator at one sample budget, worst case over the pair."""

    estimator: str
    n: int
    threshold: float
    null: DistributionRisk
    alt: DistributionRisk

    @property
    def sup_risk(self) -> float:
        return max(self.null.rmse, self.alt.rmse)

    @property
    def sup_exceed_prob(self) -> float:
        return max(self.null.exceed_prob, self.alt.exceed_prob)


def _validate_estimators(estimators: tuple[Estimator, ...], block: BlockStructure, n_min: int) -> None:
    names = [est.name for est in estimators]
    if len(set(names)) != len(names):
        raise ValueError(f"estimator names must be unique, got {names}")
    for est in estimators:
        if est.kind in ("u", "nystrom") and block.m != 2:
            raise ValueError(f"estimator {est.name!r} requires exactly 2 blocks, got {block.m}")
        if est.kind == "nystrom" and est.landmarks > n_min:
            raise ValueError(
                f"estimator {est.name!r} wants {est.landmarks} landmarks but the smallest budget is {n_min}"
            )
        if est.kind == "u" and n_min < 4:
            raise ValueError(f"estimator {est.name!r} requires n >= 4, smallest budget is {n_min}")


def _simulate(
    estimators: tuple[Estimator, ...], pair: AdversarialPair, reps: int, seed: int
) -> dict[str, RiskResult]:
    """Shared-draw risk simulation: every estimator sees the same datasets,
    and dataset streams are keyed by (seed, distribution, replicate) only, so
    single-estimator runs reproduce multi-estimator runs bit for bit."""
    if reps < 2:
        raise ValueError(f"need at least 2 replicates, got {reps}")
    _validate_estimators(estimators, pair.block, pair.n)
    pk = ProductKernel.homogeneous(pair.block, KernelFamily.GAUSSIAN, pair.gamma)
    needs_grams = any(est.kind in ("v", "u") for est in estimators)
    two_block = pair.block.m == 2
    threshold = minimax_constant(pair.gamma, pair.block.total) / math.sqrt(pair.n)

    # shared per-replicate Gram buffers: every estimator sees the same draws,
    # and reuse keeps the n x n allocations out of the replicate loop
    buffers = None
    if needs_grams and two_block:
        buffers = (np.empty((pair.n, pair.n)), np.empty((pair.n, pair.n)))

    per_dist: dict[str, list[DistributionRisk]] = {est.name: [] for est in estimators}
    for label, measure in (("null", pair.p0), ("alt", pair.p1)):
        true_sq = hsic2_gaussian(measure, pair.block, pair.gamma).value
        true_hsic = math.sqrt(max(0.0, true_sq))
        errors = {est.name: np.empty(reps) for est in estimators}
        errors_sq = {est.name: np.empty(reps) for est in estimators}
        for r in range(reps):
            ds = sample(measure, pair.n, rng.derive(seed, label, r), pair.block)
            grams = stats = None
            if needs_grams:
                if two_block:
                    k = gram(pk.specs[0], ds.block_values(0), ds.block_values(0), out=buffers[0])
                    l = gram(pk.specs[1], ds.block_values(1), ds.block_values(1), out=buffers[1])
                    stats = _two_block_stats(k, l)
                else:
                    grams = _block_grams(pk, ds)
            for est in estimators:
                if est.kind == "v":
                    if two_block:
                        raw = _hsic_v_from_stats(pair.n, *stats)
                    else:
                        raw = _hsic_v_from_grams(grams)
                    est_hsic = math.sqrt(max(0.0, raw))
                elif est.kind == "u":
                    raw = _hsic_u_from_stats(
                        pair.n, *stats, np.diagonal(buffers[0]), np.diagonal(buffers[1])
                    )
                    est_hsic = math.sqrt(max(0.0, raw))
                else:
                    est_hsic, _ = hsic_nystrom(
                        pk, ds, est.landmarks, rng.derive(seed, label, r, "nystrom")
                    )
                    raw = est_hsic * est_hsic
                errors[est.name][r] = abs(est_hsic - true_hsic)
                errors_sq[est.name][r] = abs(raw - true_sq)
        for est in estimators:
            err = errors[est.name]
            per_dist[est.name].append(
                DistributionRisk(
                    label=label,
                    true_hsic=true_hsic,
                    mean_error=float(err.mean()),
                    rmse=float(np.sqrt(np.mean(err * err))),
                    exceed_prob=float(np.mean(err >= threshold)),
                    rmse_sq_scale=float(np.sqrt(np.mean(errors_sq[est.name] ** 2))),
                )
            )
    return {
        est.name: RiskResult(est.name, pair.n, threshold, *per_dist[est.name])
        for est in estimators
    }


def risk_sim(est: Estimator, pair: AdversarialPair, reps: int, seed: int) -> RiskResult:
    """Simulated risk of one estimator under both members of the pair.

    Errors are measured on the HSIC scale (V/U outputs pass through
    sqrt(max(0, .))); the exceedance threshold is the explicit constant over
    sqrt(n).  Squared-scale errors are kept as diagnostics.
    """
    return _simulate((est,), pair, reps, seed)[est.name]


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float


def rate_fit(ns, risks) -> RateFit:
    """Ordinary least squares of log(risk) on log(n); the slope estimates the
    convergence-rate exponent."""
    ns = np.asarray(ns, dtype=float)
    risks = np.asarray(risks, dtype=float)
    if ns.shape != risks.shape:
        raise ValueError(f"grid and risks disagree: {ns.shape} vs {risks.shape}")
    if ns.size < 3:
        raise ValueError("rate fit needs >= 3 grid points")
    if np.any(risks <= 0):
        raise ValueError("rate fit needs strictly positive risks")
    x = np.log(ns)
    y = np.log(risks)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = y - y.mean()
    ss_tot = float(total @ total)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(residual @ residual) / ss_tot
    return RateFit(float(slope), float(intercept), r2)


@dataclass(frozen=True)
class ExperimentConfig:
    gamma: float
    block: BlockStructure
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    estimators: tuple[Estimator, ...] = ()
    reps: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "estimators", tuple(self.estimators))


@dataclass(frozen=True, eq=False)
class PerNRecord:
    """Certificates and risks at a single sample budget."""

    n: int
    rho: float
    kl_exact: float
    kl_bound: float
    analytic_gap: float
    minimax_c: float
    risks: dict[str, RiskResult] = field(default_factory=dict)

    @property
    def gap_floor(self) -> float:
        """Certified lower bound 2c/sqrt(n) on the HSIC gap."""
        return 2.0 * self.minimax_c / math.sqrt(self.n)


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    config: ExperimentConfig
    records: tuple[PerNRecord, ...]
    rate_fits: dict[str, RateFit]
    certificates: dict[str, bool]
    lecam_value: float

    def to_dict(self) -> dict:
        """JSON-ready view with a fixed layout."""
        cfg = self.config
        return {
            "config": {
                "gamma": cfg.gamma,
                "blocks": list(cfg.block.dims),
                "n_grid": list(cfg.n_grid),
                "estimators": [
                    {"name": e.name, "kind": e.kind, "landmarks": e.landmarks}
                    for e in cfg.estimators
                ],
                "reps": cfg.reps,
                "seed": cfg.seed,
            },
            "records": [
                {
                    "n": rec.n,
                    "rho": rec.rho,
                    "kl_exact": rec.kl_exact,
                    "kl_bound": rec.kl_bound,
                    "analytic_gap": rec.analytic_gap,
                    "minimax_c": rec.minimax_c,
                    "gap_floor": rec.gap_floor,
                    "sup_risk": {name: r.sup_risk for name, r in rec.risks.items()},
                    "exceed_prob": {name: r.sup_exceed_prob for name, r in rec.risks.items()},
                    "rmse_null": {name: r.null.rmse for name, r in rec.risks.items()},
                    "rmse_alt": {name: r.alt.rmse for name, r in rec.risks.items()},
                }
                for rec in self.records
            ],
            "certificates": dict(self.certificates),
            "rate_fits": {
                name: {"slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared}
                for name, f in self.rate_fits.items()
            },
            "lecam_value": self.lecam_value,
        }


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Full harness run: per-n certificates, risk simulation for every
    configured estimator, rate fits, and the testing floor at budget 5/4.

    Deterministic in the configuration, including its seed.
    """
    if not config.n_grid:
        raise ValueError("n_grid must not be empty")
    if any(n < 2 for n in config.n_grid):
        raise ValueError(f"all grid budgets must be >= 2, got {config.n_grid}")
    if config.reps < 2:
        raise ValueError(f"need at least 2 replicates, got {config.reps}")
    if config.estimators:
        _validate_estimators(config.estimators, config.block, min(config.n_grid))

    d = config.block.total
    c = minimax_constant(config.gamma, d)
    records = []
    for n in config.n_grid:
        pair = build_pair(n, config.gamma, config.block)
        gap = adversarial_hsic2(config.gamma, d, n=n).hsic
        risks = (
            _simulate(config.estimators, pair, config.reps, rng.derive(config.seed, "risk", n))
            if config.estimators
            else {}
        )
        records.append(
            PerNRecord(
                n=n,
                rho=pair.rho,
                kl_exact=kl_adversarial_exact(n, pair.rho, config.block),
                kl_bound=kl_adversarial_bound(n, pair.rho),
                analytic_gap=gap,
                minimax_c=c,
                risks=risks,
            )
        )

    rate_fits = {}
    if len(config.n_grid) >= 3:
        ns = [rec.n for rec in records]
        for est in config.estimators:
            risks = [rec.risks[est.name].sup_risk for rec in records]
            if all(r > 0 for r in risks):
                rate_fits[est.name] = rate_fit(ns, risks)

    certificates = {
        "kl_budget": all(rec.kl_exact <= rec.kl_bound <= KL_BUDGET for rec in records),
        "hsic_gap": all(rec.analytic_gap >= rec.gap_floor for rec in records),
    }
    return ExperimentReport(
        config=config,
        records=tuple(records),
        rate_fits=rate_fits,
        certificates=certificates,
        lecam_value=lecam_bound(KL_BUDGET),
    )
