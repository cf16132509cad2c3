"""Deterministic Monte Carlo engine for the selection and prediction
experiments.

Determinism contract: every random draw comes from a PRNG seeded by an
explicit integer list, (seed, design) for per-design state and
(seed, design, replication) for per-replication state, so results are
byte-identical for a given config regardless of worker count.  Outer
designs are independent work units; records are merged in design order.

Selection experiments support two replication semantics, chosen by
``inner_resample``: "noise" fixes the design per outer draw and
redraws only the noise inside (the irrepresentable-number study), while
"design_noise" redraws the design and the noise per inner replication
and treats the outer index as a fresh (covariance, coefficient) draw
(the success-rate grids).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .data import (
    DEFAULT_EPS,
    TrueModel,
    make_dataset,
    make_true_model,
    sign_pattern,
    standardize,
    to_original_coords,
)
from .diagnostics import eta_infinity
from .errors import SpecMismatchError, TwoStepError
from .selectors import (
    MethodSpec,
    fit_initial,
    fit_path,
    parse_method,
    select_lambda_cv,
    select_lambda_oracle,
)

BOOTSTRAP_RESAMPLES = 200


@dataclass(frozen=True)
class CovarianceSpec:
    """Population covariance family for the design rows.

    kinds: wishart(df) resampled per outer draw; ar(rho) with entries
    rho^|j-k|; constant(r) off-diagonal; block_orthogonal(a, off_corr)
    with the first a columns exactly uncorrelated with the rest and
    off_corr elsewhere off the diagonal.
    """

    kind: str
    df: int | None = None
    rho: float | None = None
    r: float | None = None
    a: int | None = None
    off_corr: float = 0.6

    @property
    def is_random(self) -> bool:
        return self.kind == "wishart"

    def validate(self, p: int) -> list[str]:
        bad = []
        if self.kind == "wishart":
            if self.df is None or self.df < p:
                bad.append("covariance.df (need df >= p)")
        elif self.kind == "ar":
            if self.rho is None or not -1.0 < self.rho < 1.0:
                bad.append("covariance.rho (need |rho| < 1)")
        elif self.kind == "constant":
            lower = -1.0 / (p - 1) if p > 1 else -1.0
            if self.r is None or not lower < self.r < 1.0:
                bad.append("covariance.r (need -1/(p-1) < r < 1)")
        elif self.kind == "block_orthogonal":
            if self.a is None or not 1 <= self.a <= p:
                bad.append("covariance.a (need 1 <= a <= p)")
            if not 0.0 <= self.off_corr < 1.0:
                bad.append("covariance.off_corr (need 0 <= off_corr < 1)")
        else:
            bad.append("covariance.kind")
        return bad

    def fixed_matrix(self, p: int) -> np.ndarray:
        """The deterministic covariance for the non-Wishart kinds."""
        if self.kind == "ar":
            idx = np.arange(p)
            return self.rho ** np.abs(idx[:, None] - idx[None, :])
        if self.kind == "constant":
            return np.full((p, p), self.r) + (1.0 - self.r) * np.eye(p)
        if self.kind == "block_orthogonal":
            sigma = np.full((p, p), self.off_corr) + (1.0 - self.off_corr) * np.eye(p)
            sigma[: self.a, self.a :] = 0.0
            sigma[self.a :, : self.a] = 0.0
            return sigma
        raise SpecMismatchError(f"covariance kind {self.kind!r} is not deterministic")


@dataclass(frozen=True)
class BetaSpec:
    """How the true coefficients are generated.

    fixed: the given values; uniform: magnitudes from [low, high] with
    random signs; tiered: values repeated count-wise.  placement is
    "first" (the leading s coordinates) or "random".
    """

    kind: str
    values: tuple = ()
    counts: tuple = ()
    low: float = 0.5
    high: float = 2.0
    placement: str = "first"

    def validate(self, s: int) -> list[str]:
        bad = []
        if self.kind == "fixed":
            if len(self.values) != s:
                bad.append("beta.values (need exactly s values)")
        elif self.kind == "uniform":
            if not 0.0 < self.low <= self.high:
                bad.append("beta.low/beta.high")
        elif self.kind == "tiered":
            if len(self.values) != len(self.counts) or sum(self.counts) != s:
                bad.append("beta.counts (need counts matching values, summing to s)")
        else:
            bad.append("beta.kind")
        if self.placement not in ("first", "random"):
            bad.append("beta.placement")
        return bad


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; mirrors the JSON config format."""

    name: str
    mode: str
    n: int
    p: int
    s: int
    covariance: CovarianceSpec
    beta: BetaSpec
    sigma2: float
    outer: int
    inner: int
    methods: tuple[MethodSpec, ...]
    lambda_rule: str
    seed: int
    inner_resample: str = "noise"
    n_test: int = 1000
    grid_size: int = 100
    grid_min_ratio: float = 1e-3
    s_grid: tuple[int, ...] = ()

    @property
    def cv_folds(self) -> int:
        if not self.lambda_rule.startswith("cv"):
            raise SpecMismatchError("lambda_rule is not cross-validation")
        return int(self.lambda_rule[2:] or 5)

    def validate(self) -> None:
        bad = []
        if self.mode not in ("selection", "prediction"):
            bad.append("mode")
        if self.n < 1:
            bad.append("n")
        if self.p < 1:
            bad.append("p")
        if not 0 <= self.s <= self.p:
            bad.append("s (need 0 <= s <= p)")
        if self.sigma2 <= 0.0:
            bad.append("sigma2")
        if self.outer < 1 or self.inner < 1:
            bad.append("replications")
        if not self.methods:
            bad.append("methods")
        if self.lambda_rule != "oracle":
            if not self.lambda_rule.startswith("cv"):
                bad.append("lambda_rule")
            elif self.cv_folds < 2:
                bad.append("lambda_rule (fold count)")
        if self.mode == "prediction":
            if self.lambda_rule == "oracle":
                bad.append("lambda_rule (prediction mode needs cv)")
            if self.n_test < 1:
                bad.append("n_test")
        if self.inner_resample not in ("noise", "design_noise"):
            bad.append("inner_resample")
        if self.grid_size < 1 or not 0.0 < self.grid_min_ratio < 1.0:
            bad.append("grid_size/grid_min_ratio")
        bad += self.covariance.validate(self.p)
        bad += self.beta.validate(self.s)
        if bad:
            raise SpecMismatchError("invalid config fields: " + ", ".join(bad))


@dataclass
class MetricsRecord:
    """One result row: a (design or replication, method) pair.

    Fields that do not apply to the experiment mode stay NaN.
    """

    design: int
    method: str
    eta_inf: float = math.nan
    success_rate: float = math.nan
    rpe: float = math.nan
    tp: float = math.nan
    fp: float = math.nan
    failures: int = 0


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build and validate a config from parsed JSON."""
    if not isinstance(raw, dict):
        raise SpecMismatchError("config must be a JSON object")
    required = [
        "name", "mode", "n", "p", "s", "covariance", "beta", "sigma2",
        "replications", "methods", "lambda_rule", "seed",
    ]
    missing = [key for key in required if key not in raw]
    if missing:
        raise SpecMismatchError("missing config fields: " + ", ".join(missing))
    try:
        cov = CovarianceSpec(**raw["covariance"])
        beta_raw = dict(raw["beta"])
        beta_raw["values"] = tuple(beta_raw.get("values", ()))
        beta_raw["counts"] = tuple(beta_raw.get("counts", ()))
        beta = BetaSpec(**beta_raw)
        methods = tuple(parse_method(m) for m in raw["methods"])
        cfg = ExperimentConfig(
            name=str(raw["name"]),
            mode=str(raw["mode"]),
            n=int(raw["n"]),
            p=int(raw["p"]),
            s=int(raw["s"]),
            covariance=cov,
            beta=beta,
            sigma2=float(raw["sigma2"]),
            outer=int(raw["replications"]["outer"]),
            inner=int(raw["replications"]["inner"]),
            methods=methods,
            lambda_rule=str(raw["lambda_rule"]),
            seed=int(raw["seed"]),
            inner_resample=str(raw.get("inner_resample", "noise")),
            n_test=int(raw.get("n_test", 1000)),
            grid_size=int(raw.get("grid_size", 100)),
            grid_min_ratio=float(raw.get("grid_min_ratio", 1e-3)),
            s_grid=tuple(int(v) for v in raw.get("s_grid", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecMismatchError(f"malformed config: {exc}") from exc
    cfg.validate()
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = asdict(cfg)
    out["covariance"] = {
        k: v for k, v in asdict(cfg.covariance).items() if v is not None
    }
    out["beta"] = asdict(cfg.beta)
    out["methods"] = [m.label for m in cfg.methods]
    out["replications"] = {"outer": cfg.outer, "inner": cfg.inner}
    del out["outer"], out["inner"]
    out["s_grid"] = list(cfg.s_grid)
    return out


def scale_config(cfg: ExperimentConfig, factor: float) -> ExperimentConfig:
    """Scale replication counts, keeping at least one of each."""
    if factor <= 0.0:
        raise SpecMismatchError("scale factor must be positive")
    return replace(
        cfg,
        outer=max(1, round(cfg.outer * factor)),
        inner=max(1, round(cfg.inner * factor)),
    )


def sample_wishart(p: int, df: int, rng) -> np.ndarray:
    """Wishart(df, I_p) draw via the Bartlett decomposition."""
    if df < p:
        raise ValueError("need df >= p")
    diag = np.sqrt(rng.chisquare(df - np.arange(p)))
    a = np.tril(rng.standard_normal((p, p)), -1)
    np.fill_diagonal(a, diag)
    return a @ a.T


def sample_design(n: int, sigma, rng) -> np.ndarray:
    """n rows iid N(0, sigma), via Cholesky with an eigenvalue fallback.

    The standard normals are drawn before factoring, so the draw stream
    does not depend on which factorization succeeds.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    z = rng.standard_normal((n, sigma.shape[0]))
    try:
        factor = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        values, vectors = np.linalg.eigh(sigma)
        values = np.where(values > 1e-12, values, 0.0)
        factor = vectors * np.sqrt(values)
    return z @ factor.T


def gen_beta(spec: BetaSpec, p: int, s: int, rng, sigma2: float) -> TrueModel:
    """Draw the true coefficient vector.

    Draw order is fixed (support positions, then magnitudes, then signs)
    so seeded runs are reproducible.
    """
    problems = spec.validate(s)
    if problems:
        raise SpecMismatchError("invalid beta spec: " + ", ".join(problems))
    if spec.placement == "first":
        positions = np.arange(s)
    else:
        positions = rng.choice(p, size=s, replace=False)
    if spec.kind == "fixed":
        values = np.asarray(spec.values, dtype=np.float64)
    elif spec.kind == "uniform":
        magnitudes = rng.uniform(spec.low, spec.high, size=s)
        signs = rng.integers(0, 2, size=s) * 2 - 1
        values = signs * magnitudes
    else:
        values = np.repeat(
            np.asarray(spec.values, dtype=np.float64), np.asarray(spec.counts)
        )
    beta = np.zeros(p)
    beta[positions] = values
    return make_true_model(beta, sigma2)


def rpe(beta_hat, beta_star, x_test, sigma2: float, intercept: float = 0.0) -> float:
    """Mean squared excess prediction error over the test rows, over sigma2."""
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    x_test = np.asarray(x_test, dtype=np.float64)
    gap = intercept + x_test @ (np.asarray(beta_hat) - np.asarray(beta_star))
    return float(np.mean(gap * gap) / sigma2)


def tp_fp(beta_hat, support, eps: float = DEFAULT_EPS) -> tuple[int, int]:
    """Counts of true and false selections at magnitude cutoff eps."""
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    selected = np.abs(np.asarray(beta_hat)) > eps
    mask = np.zeros(selected.shape[0], dtype=bool)
    mask[np.asarray(support, dtype=np.intp)] = True
    return int(np.count_nonzero(selected & mask)), int(
        np.count_nonzero(selected & ~mask)
    )


def _design_matrix(cfg: ExperimentConfig, rng) -> np.ndarray:
    if cfg.covariance.is_random:
        return sample_wishart(cfg.p, cfg.covariance.df, rng)
    return cfg.covariance.fixed_matrix(cfg.p)


def _selection_design(cfg: ExperimentConfig, design_idx: int) -> list[MetricsRecord]:
    rng = np.random.default_rng([cfg.seed, design_idx])
    sigma = _design_matrix(cfg, rng)
    truth = gen_beta(cfg.beta, cfg.p, cfg.s, rng, cfg.sigma2)
    truth_signs = sign_pattern(truth.beta_star, 0.0)
    fixed_design = cfg.inner_resample == "noise"
    x_fixed = sample_design(cfg.n, sigma, rng) if fixed_design else None

    skip = {
        m.label: (m.initial == "ols" and cfg.p > cfg.n) for m in cfg.methods
    }
    successes = {m.label: 0 for m in cfg.methods}
    failures = {m.label: 0 for m in cfg.methods}
    eta = math.nan

    for noise_idx in range(cfg.inner):
        rng_i = np.random.default_rng([cfg.seed, design_idx, noise_idx])
        x_raw = x_fixed if fixed_design else sample_design(cfg.n, sigma, rng_i)
        noise = math.sqrt(cfg.sigma2) * rng_i.standard_normal(cfg.n)
        y = x_raw @ truth.beta_star + noise
        # Selection experiments run in the generator's coordinates: the
        # sign-recovery rates of the reference grids are only reproduced
        # when the penalty acts on the raw Wishart column scales.
        ds = make_dataset(x_raw, y)
        if fixed_design and noise_idx == 0 and 0 < cfg.s < cfg.p:
            try:
                eta = eta_infinity(
                    ds, truth.support, np.sign(truth.beta_star[truth.support])
                )
            except (TwoStepError, ValueError):
                eta = math.nan
        inits: dict = {}
        for spec in cfg.methods:
            if skip[spec.label]:
                continue
            try:
                init = None
                if spec.selector != "lasso":
                    init = inits.get(spec.initial)
                    if init is None:
                        init = fit_initial(
                            ds,
                            spec.initial,
                            seed=[cfg.seed, design_idx, noise_idx, 5],
                        )
                        inits[spec.initial] = init
                if cfg.lambda_rule == "oracle":
                    path, _ = fit_path(
                        ds,
                        spec,
                        init=init,
                        grid_size=cfg.grid_size,
                        grid_min_ratio=cfg.grid_min_ratio,
                    )
                    _, ok = select_lambda_oracle(path, truth_signs)
                else:
                    _, beta = select_lambda_cv(
                        ds,
                        spec,
                        k=cfg.cv_folds,
                        seed=[cfg.seed, design_idx, noise_idx, 7],
                    )
                    ok = bool(np.array_equal(sign_pattern(beta), truth_signs))
                successes[spec.label] += int(ok)
            except TwoStepError:
                failures[spec.label] += 1

    records = []
    for spec in cfg.methods:
        label = spec.label
        rate = math.nan if skip[label] else successes[label] / cfg.inner
        records.append(
            MetricsRecord(
                design_idx,
                label,
                eta_inf=eta,
                success_rate=rate,
                failures=failures[label],
            )
        )
    return records


def _selection_design_star(args) -> list[MetricsRecord]:
    return _selection_design(*args)


def _prediction_rep(cfg: ExperimentConfig, rep_idx: int) -> list[MetricsRecord]:
    rng = np.random.default_rng([cfg.seed, rep_idx])
    sigma = _design_matrix(cfg, rng)
    truth = gen_beta(cfg.beta, cfg.p, cfg.s, rng, cfg.sigma2)
    x_train = sample_design(cfg.n, sigma, rng)
    noise = math.sqrt(cfg.sigma2) * rng.standard_normal(cfg.n)
    x_test = sample_design(cfg.n_test, sigma, rng)
    y = x_train @ truth.beta_star + noise
    ds = standardize(make_dataset(x_train, y))

    records = []
    for spec in cfg.methods:
        rpe_val = tp_val = fp_val = math.nan
        fails = 0
        try:
            _, beta_std = select_lambda_cv(
                ds, spec, k=cfg.cv_folds, seed=[cfg.seed, rep_idx, 3]
            )
            beta_orig, intercept = to_original_coords(ds.standardization, beta_std)
            rpe_val = rpe(
                beta_orig, truth.beta_star, x_test, cfg.sigma2, intercept=intercept
            )
            tp_val, fp_val = tp_fp(beta_orig, truth.support)
        except TwoStepError:
            fails = 1
        records.append(
            MetricsRecord(
                rep_idx, spec.label, rpe=rpe_val, tp=tp_val, fp=fp_val, failures=fails
            )
        )
    return records


def _prediction_rep_star(args) -> list[MetricsRecord]:
    return _prediction_rep(*args)


def _run_parallel(worker, cfg: ExperimentConfig, count: int, workers: int):
    tasks = [(cfg, i) for i in range(count)]
    if workers <= 1:
        chunks = [worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(worker, tasks))
    return [record for chunk in chunks for record in chunk]


def run_selection_experiment(cfg: ExperimentConfig, workers: int = 1) -> list[MetricsRecord]:
    """Per-design sign-recovery rates for every configured method."""
    cfg.validate()
    if cfg.mode != "selection":
        raise SpecMismatchError("config mode must be 'selection'")
    return _run_parallel(_selection_design_star, cfg, cfg.outer, workers)


def run_prediction_experiment(
    cfg: ExperimentConfig, workers: int = 1
) -> tuple[list[MetricsRecord], dict]:
    """Per-replication prediction metrics plus a bootstrap summary.

    The summary maps each method label to the median RPE, the bootstrap
    standard error of that median (resampling replication-level RPEs),
    and the median TP/FP counts.
    """
    cfg.validate()
    if cfg.mode != "prediction":
        raise SpecMismatchError("config mode must be 'prediction'")
    records = _run_parallel(_prediction_rep_star, cfg, cfg.outer, workers)

    summary = {}
    for m_idx, spec in enumerate(cfg.methods):
        rpes = np.asarray(
            [r.rpe for r in records if r.method == spec.label and not math.isnan(r.rpe)]
        )
        tps = np.asarray(
            [r.tp for r in records if r.method == spec.label and not math.isnan(r.tp)]
        )
        fps = np.asarray(
            [r.fp for r in records if r.method == spec.label and not math.isnan(r.fp)]
        )
        entry = {
            "n_replications": int(rpes.size),
            "rpe_median": float(np.median(rpes)) if rpes.size else math.nan,
            "rpe_se": math.nan,
            "tp_median": float(np.median(tps)) if tps.size else math.nan,
            "fp_median": float(np.median(fps)) if fps.size else math.nan,
        }
        if rpes.size:
            boot_rng = np.random.default_rng([cfg.seed, 990001, m_idx])
            picks = boot_rng.integers(0, rpes.size, size=(BOOTSTRAP_RESAMPLES, rpes.size))
            medians = np.median(rpes[picks], axis=1)
            entry["rpe_se"] = float(np.std(medians, ddof=1))
        summary[spec.label] = entry
    return records, summary
