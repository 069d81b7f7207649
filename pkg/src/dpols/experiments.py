"""Seeded Monte Carlo runners behind the ``simulate`` and ``power`` commands.

Every scenario runs ``trials`` independent replications, each on its own
generator derived from (seed, trial index), so reports are byte-identical
across runs and trials could execute concurrently without sharing state.
Aggregation order is fixed by trial index.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .analyze_gauss import AnalyzeGaussInference, release_noisy_gram
from .distributions import student_t_quantile, trial_rng
from .exceptions import InvalidParameterError
from .ols import LeastSquaresInference, min_sample_size_baseline
from .projected import (
    ProjectedLeastSquares,
    dof_ratio,
    min_r_for_power,
    sandwich_cdf_band,
)
from .projection import BoundedDataset, PrivacyBudget, project
from .reports import PATHS
from .ridge import ProjectedRidgeInference, check_sign_condition
from .synthetic import GaussianLinearModel, empirical_row_bound, generate_dataset

SCENARIOS = ("coverage", "power", "pivot_sandwich", "width_ratio", "ag_coverage", "ridge_sign")


@dataclass
class ExperimentConfig:
    """A fully resolved Monte Carlo experiment."""

    scenario: str
    model: GaussianLinearModel
    n: int
    trials: int
    seed: int
    r: int | None = None
    alpha: float = 0.05
    nu: float = 0.05
    epsilon: float = 1.0
    delta: float = 1e-6
    path: str = "ols"
    coordinate: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InvalidParameterError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.path not in PATHS:
            raise InvalidParameterError(f"path must be one of {PATHS}, got {self.path!r}")
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials!r}")
        if not 0 <= self.coordinate < self.model.p:
            raise InvalidParameterError(
                f"coordinate {self.coordinate} out of range for p={self.model.p}"
            )

    @property
    def budget(self) -> PrivacyBudget:
        return PrivacyBudget(self.epsilon, self.delta)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "model": json.loads(self.model.to_json()),
            "n": self.n,
            "r": self.r,
            "trials": self.trials,
            "alpha": self.alpha,
            "nu": self.nu,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "seed": self.seed,
            "path": self.path,
            "coordinate": self.coordinate,
            "options": dict(self.options),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        model = GaussianLinearModel.from_json(json.dumps(doc["model"]))
        keys = ("scenario", "n", "trials", "seed", "r", "alpha", "nu", "epsilon", "delta", "path", "coordinate", "options")
        kwargs = {k: doc[k] for k in keys if k in doc}
        return cls(model=model, **kwargs)


def binomial_se(rate: float, trials: int) -> float:
    return math.sqrt(max(rate * (1.0 - rate), 0.0) / trials)


def _project_trial(config: ExperimentConfig, data, rng):
    """Run the full mechanism on one synthetic draw, bounding rows empirically."""
    bound = empirical_row_bound(data.x, data.y)
    dataset = BoundedDataset.from_features_labels(data.x, data.y, bound)
    release = project(dataset, config.budget, config.r, seed=rng)
    return release, bound


def _single_report(config: ExperimentConfig, trial: int) -> dict:
    rng = trial_rng(config.seed, trial)
    data = generate_dataset(config.model, config.n, rng)
    j = config.coordinate
    if config.path == "ols":
        fit = LeastSquaresInference().fit(data.x, data.y)
        return fit.confidence_interval(j, config.alpha).to_dict()
    if config.path == "projected":
        release, _ = _project_trial(config, data, rng)
        if release.altered:
            return {"altered": True}
        fit = ProjectedLeastSquares().fit(release)
        return fit.confidence_interval(j, config.alpha).to_dict()
    if config.path == "ridge":
        release, _ = _project_trial(config, data, rng)
        if not release.altered:
            return {"altered": False}
        fit = ProjectedRidgeInference().fit(release)
        return fit.confidence_interval(j, config.alpha).to_dict()
    bound = empirical_row_bound(data.x, data.y)
    dataset = BoundedDataset.from_features_labels(data.x, data.y, bound)
    release = release_noisy_gram(dataset, config.budget, seed=rng)
    fit = AnalyzeGaussInference().fit(release)
    return fit.confidence_interval(j, bound, nu=config.nu).to_dict()


def _run_coverage(config: ExperimentConfig) -> dict:
    j = config.coordinate
    truth = float(config.model.coef[j])
    covered = 0
    effective = 0
    wrong_branch = 0
    widths = []
    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        data = generate_dataset(config.model, config.n, rng)
        if config.path == "ols":
            fit = LeastSquaresInference().fit(data.x, data.y)
            report = fit.confidence_interval(j, config.alpha)
            target = truth
        elif config.path == "projected":
            release, _ = _project_trial(config, data, rng)
            if release.altered:
                wrong_branch += 1
                continue
            report = ProjectedLeastSquares().fit(release).confidence_interval(j, config.alpha)
            target = truth
        elif config.path == "ridge":
            release, _ = _project_trial(config, data, rng)
            if not release.altered:
                wrong_branch += 1
                continue
            report = ProjectedRidgeInference().fit(release).confidence_interval(j, config.alpha)
            # the ridge interval covers the raw-data least-squares estimate
            target = float(LeastSquaresInference().fit(data.x, data.y).coef_[j])
        else:
            bound = empirical_row_bound(data.x, data.y)
            dataset = BoundedDataset.from_features_labels(data.x, data.y, bound)
            release = release_noisy_gram(dataset, config.budget, seed=rng)
            report = AnalyzeGaussInference().fit(release).confidence_interval(j, bound, nu=config.nu)
            target = truth
        effective += 1
        widths.append(report.half_width)
        covered += report.contains(target)
    rate = covered / effective if effective else float("nan")
    return {
        "coverage": rate,
        "coverage_se": binomial_se(rate, effective) if effective else float("nan"),
        "effective_trials": effective,
        "wrong_branch_trials": wrong_branch,
        "mean_half_width": float(np.mean(widths)) if widths else float("nan"),
    }


def _run_power(config: ExperimentConfig) -> dict:
    j = config.coordinate
    rejected = 0
    effective = 0
    gate_passes = 0
    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        data = generate_dataset(config.model, config.n, rng)
        if config.path == "ols":
            fit = LeastSquaresInference().fit(data.x, data.y)
            report = fit.reject_null(j, config.alpha)
            effective += 1
            rejected += bool(report.rejected)
        elif config.path == "projected":
            release, _ = _project_trial(config, data, rng)
            if release.altered:
                continue
            gate_passes += 1
            report = ProjectedLeastSquares().fit(release).reject_null(j, config.alpha)
            effective += 1
            rejected += bool(report.rejected)
        else:
            raise InvalidParameterError(f"power scenario supports ols/projected, got {config.path!r}")
    out = {
        "rejection_rate": rejected / effective if effective else 0.0,
        "rejection_se": binomial_se(rejected / effective, effective) if effective else float("nan"),
        "effective_trials": effective,
    }
    if config.path == "projected":
        out["gate_pass_rate"] = gate_passes / config.trials
    return out


def _run_pivot_sandwich(config: ExperimentConfig) -> dict:
    """Empirical CDF of the sketch pivot against the integrated density band.

    The design is drawn once and held fixed; label noise and projection
    are redrawn each trial. The acceptance band is widened by the DKW
    radius at the configured failure mass.
    """
    j = config.coordinate
    gamma = float(config.options.get("dkw_gamma", 0.001))
    design_rng = trial_rng(config.seed, -1)
    x = design_rng.standard_normal((config.n, config.model.p)) @ config.model.sqrt_factor()
    truth = float(config.model.coef[j])
    pivots = []
    altered = 0
    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        noise = math.sqrt(config.model.noise_variance) * rng.standard_normal(config.n)
        y = x @ config.model.coef + noise
        bound = empirical_row_bound(x, y)
        dataset = BoundedDataset.from_features_labels(x, y, bound)
        release = project(dataset, config.budget, config.r, seed=rng)
        if release.altered:
            altered += 1
            continue
        fit = ProjectedLeastSquares().fit(release)
        pivots.append(fit.pivot(j, truth))
    pivots = np.sort(np.asarray(pivots))
    m = pivots.size
    dkw = math.sqrt(math.log(2.0 / gamma) / (2.0 * m)) if m else float("nan")
    grid = np.linspace(-6.0, 6.0, 121)
    worst = -math.inf
    for point in grid:
        ecdf = float(np.searchsorted(pivots, point, side="right")) / m
        lo, hi = sandwich_cdf_band(float(point), config.r, config.model.p, config.n)
        worst = max(worst, lo - dkw - ecdf, ecdf - hi - dkw)
    return {
        "pivot_count": int(m),
        "altered_trials": altered,
        "dkw_radius": dkw,
        "max_band_violation": worst,
        "within_band": bool(worst <= 0.0),
    }


def _run_width_ratio(config: ExperimentConfig) -> dict:
    j = config.coordinate
    ratios = []
    altered = 0
    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        data = generate_dataset(config.model, config.n, rng)
        ols_fit = LeastSquaresInference().fit(data.x, data.y)
        ols_width = ols_fit.confidence_interval(j, config.alpha).half_width
        release, _ = _project_trial(config, data, rng)
        if release.altered:
            altered += 1
            continue
        proj_width = ProjectedLeastSquares().fit(release).confidence_interval(j, config.alpha).half_width
        ratios.append(proj_width / ols_width)
    a = dof_ratio(config.r, config.model.p, config.n)
    c_proj = student_t_quantile(1.0 - (config.alpha / 2.0) * math.exp(-a), config.r - config.model.p)
    c_ols = student_t_quantile(1.0 - config.alpha / 2.0, config.n - config.model.p)
    predicted = (c_proj / c_ols) * math.sqrt(config.n / config.r)
    median = float(np.median(ratios)) if ratios else float("nan")
    return {
        "median_ratio": median,
        "predicted_ratio": predicted,
        "within_factor_two": bool(0.5 * predicted <= median <= 2.0 * predicted),
        "altered_trials": altered,
        "effective_trials": len(ratios),
    }


def _run_ag_coverage(config: ExperimentConfig) -> dict:
    j = config.coordinate
    truth = float(config.model.coef[j])
    covered = 0
    variance_bound_held = 0
    effective = 0
    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        data = generate_dataset(config.model, config.n, rng)
        bound = empirical_row_bound(data.x, data.y)
        dataset = BoundedDataset.from_features_labels(data.x, data.y, bound)
        release = release_noisy_gram(dataset, config.budget, seed=rng)
        fit = AnalyzeGaussInference().fit(release)
        rho2 = fit.variance_upper_bound(bound, config.nu)
        report = fit.confidence_interval(j, bound, nu=config.nu)
        effective += 1
        variance_bound_held += rho2 >= config.model.noise_variance
        covered += report.contains(truth)
    return {
        "coverage": covered / effective,
        "coverage_se": binomial_se(covered / effective, effective),
        "variance_bound_rate": variance_bound_held / effective,
        "effective_trials": effective,
    }


def _run_ridge_sign(config: ExperimentConfig) -> dict:
    j = config.coordinate
    sign_truth = math.copysign(1.0, float(config.model.coef[j]))
    agree = 0
    effective = 0
    unaltered = 0
    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        data = generate_dataset(config.model, config.n, rng)
        release, _ = _project_trial(config, data, rng)
        if not release.altered:
            unaltered += 1
            continue
        fit = ProjectedRidgeInference().fit(release)
        effective += 1
        agree += math.copysign(1.0, float(fit.coef_[j])) == sign_truth
    rate = agree / effective if effective else float("nan")
    # condition check at model truths (diagnostic; independent of the trials)
    probe_rng = trial_rng(config.seed, -1)
    probe = generate_dataset(config.model, config.n, probe_rng)
    gram_scaled = (probe.x.T @ probe.x) / config.n
    condition = check_sign_condition(
        config.model.coef,
        config.model.noise_variance,
        pseudo_frob2=float(np.trace(np.linalg.inv(probe.x.T @ probe.x))),
        sigma_min_scaled_gram=float(np.linalg.eigvalsh(gram_scaled)[0]),
        r=config.r,
        n=config.n,
        p=config.model.p,
        alpha=config.alpha,
        nu=config.nu,
        eta=float(config.options.get("eta", 0.1)),
        j=j,
    )
    return {
        "sign_agreement": rate,
        "sign_se": binomial_se(rate, effective) if effective else float("nan"),
        "effective_trials": effective,
        "unaltered_trials": unaltered,
        "sign_condition": condition.to_dict(),
    }


_RUNNERS = {
    "coverage": _run_coverage,
    "power": _run_power,
    "pivot_sandwich": _run_pivot_sandwich,
    "width_ratio": _run_width_ratio,
    "ag_coverage": _run_ag_coverage,
    "ridge_sign": _run_ridge_sign,
}


def run_experiment(config: ExperimentConfig) -> dict:
    """Execute one scenario and return a machine-readable report.

    The report embeds the fully resolved config; identical configs produce
    byte-identical reports.
    """
    needs_r = config.scenario in ("pivot_sandwich", "width_ratio", "ridge_sign") or config.path in (
        "projected",
        "ridge",
    )
    if needs_r and (config.r is None or config.r < 1):
        raise InvalidParameterError(f"scenario {config.scenario!r} on path {config.path!r} needs r")
    results = _RUNNERS[config.scenario](config)
    report = {"config": config.to_dict(), "results": results}
    if config.trials == 1 and config.scenario == "coverage":
        report["single_trial_report"] = _single_report(config, 0)
    return report


def summarize(report: dict) -> str:
    """One human-readable line per result entry."""
    lines = [f"scenario={report['config']['scenario']} path={report['config']['path']}"]
    for key, value in report["results"].items():
        lines.append(f"  {key}: {value}")
    return "\n".join(lines)


def power_tables(
    model: GaussianLinearModel,
    grid,
    trials: int,
    alpha: float,
    nu: float,
    delta: float,
    seed: int,
    coordinate: int = 0,
) -> str:
    """Empirical rejection rates over an (n, r, epsilon) grid, as CSV.

    Each cell runs the projected power scenario; the analytic
    sample-size and sketch-size requirements ride along for overlay.
    """
    j = coordinate
    sigma_min = float(np.linalg.eigvalsh(model.covariance)[0])
    beta_j = float(model.coef[j])
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        [
            "n",
            "r",
            "epsilon",
            "trials",
            "rejection_rate",
            "rejection_se",
            "gate_pass_rate",
            "baseline_n_required",
            "projected_r_required",
        ]
    )
    n_required = min_sample_size_baseline(
        model.noise_variance, beta_j, sigma_min, alpha, nu, model.p
    )
    r_required = min_r_for_power(model.noise_variance, beta_j, sigma_min, alpha, nu, model.p)
    for cell_index, (n, r, epsilon) in enumerate(grid):
        config = ExperimentConfig(
            scenario="power",
            model=model,
            n=int(n),
            r=int(r),
            trials=trials,
            alpha=alpha,
            nu=nu,
            epsilon=float(epsilon),
            delta=delta,
            seed=seed + cell_index,
            path="projected",
            coordinate=j,
        )
        results = run_experiment(config)["results"]
        writer.writerow(
            [
                n,
                r,
                epsilon,
                trials,
                results["rejection_rate"],
                results["rejection_se"],
                results.get("gate_pass_rate", ""),
                n_required,
                r_required,
            ]
        )
    return buf.getvalue()
