"""Small dense linear solvers: ordinary least squares and L1-regularized
regression by cyclic coordinate descent, plus the shrinking-penalty schedule
that retries a failed sparse fit at successively weaker regularization.

The L1 objective is (1/(2n))*||X w + b - y||^2 + lambda*||w||_1 with the bias
unpenalized. Features are standardized internally (zero mean, unit variance;
constant columns are pinned to coefficient 0) so the penalty behaves the same
across datasets; coefficients are mapped back to raw feature space on return.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError


@dataclass(frozen=True)
class RegressionProblem:
    design: np.ndarray
    targets: np.ndarray
    fit_bias: bool = True

    def __post_init__(self):
        design = np.asarray(self.design, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        if design.ndim != 2:
            raise ValueError(f"design must be 2-D, got shape {design.shape}")
        if targets.ndim != 1 or targets.shape[0] != design.shape[0]:
            raise ValueError("targets must be a vector with one entry per design row")
        if design.shape[0] < 1 or design.shape[1] < 1:
            raise ValueError("design must have at least one row and one column")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(targets))):
            raise ValueError("design and targets must be finite")
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "targets", targets)


@dataclass(frozen=True)
class LassoConfig:
    lambda0: float = 1e5
    divisor: float = 1.5
    max_halvings: int = 200
    cd_max_iters: int = 10_000
    cd_tol: float = 1e-8

    def __post_init__(self):
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if self.divisor <= 1:
            raise ValueError("divisor must exceed 1")
        if self.max_halvings < 1 or self.cd_max_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.cd_tol <= 0:
            raise ValueError("cd_tol must be positive")


@dataclass
class LinearFit:
    w: np.ndarray
    b: float
    converged: bool = True
    n_sweeps: int = 0
    objective_trace: list[float] | None = None


@dataclass
class ScheduledFit:
    w: np.ndarray
    b: float
    used_lambda: float
    has_nonzero: bool
    converged: bool


def soft_threshold(x: float, lam: float) -> float:
    if x > lam:
        return x - lam
    if x < -lam:
        return x + lam
    return 0.0


class StandardizedDesign:
    """Standardized copy of a design matrix with its Gram matrix cached.

    Building this once and fitting many target vectors against it is the hot
    path of layer construction, where the features are fixed and only the
    regression targets change.
    """

    def __init__(self, design: np.ndarray, center: bool = True):
        x = np.asarray(design, dtype=float)
        self.n, self.p = x.shape
        self.center = center
        self.mean = x.mean(axis=0) if center else np.zeros(self.p)
        scale = x.std(axis=0)
        self.active = scale > 0.0
        self.scale = np.where(self.active, scale, 1.0)
        self.z = (x - self.mean) / self.scale
        if not center:
            # Constant nonzero columns carry no variance; without centering they
            # would leak raw magnitudes, so zero them like centered ones.
            self.z[:, ~self.active] = 0.0
        self.gram = self.z.T @ self.z / self.n
        self.diag = np.ascontiguousarray(np.diag(self.gram))

    def unstandardize(self, w_std: np.ndarray, target_mean: float) -> tuple[np.ndarray, float]:
        w_raw = np.where(self.active, w_std / self.scale, 0.0)
        b = target_mean - float(w_raw @ self.mean) if self.center else 0.0
        return w_raw, b


def least_squares_fit(problem: RegressionProblem) -> LinearFit:
    """Minimize ||X w + b - y||^2; rank deficiency is handled by a tiny ridge
    jitter (1e-10 * trace/p) on the normal equations, which picks a solution
    near the minimum-norm one."""
    x = problem.design
    y = problem.targets
    n, p = x.shape
    if problem.fit_bias:
        x_mean = x.mean(axis=0)
        y_mean = float(y.mean())
        xc = x - x_mean
        yc = y - y_mean
    else:
        x_mean = np.zeros(p)
        y_mean = 0.0
        xc = x
        yc = y
    normal = xc.T @ xc
    trace = float(np.trace(normal))
    if trace == 0.0:
        # Every column is constant (or zero); only the intercept is determined.
        return LinearFit(np.zeros(p), y_mean)
    normal = normal + np.eye(p) * (1e-10 * trace / p)
    try:
        w = np.linalg.solve(normal, xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"normal equations singular beyond jitter: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise SolverError("normal equations produced non-finite coefficients")
    b = y_mean - float(w @ x_mean) if problem.fit_bias else 0.0
    return LinearFit(w, b)


def _cd_fit(
    design: StandardizedDesign,
    targets: np.ndarray,
    lam: float,
    cfg: LassoConfig,
    trace: bool = False,
) -> LinearFit:
    y = np.asarray(targets, dtype=float)
    y_mean = float(y.mean()) if design.center else 0.0
    yc = y - y_mean
    q = design.z.T @ yc / design.n
    gram = design.gram
    diag = design.diag
    p = design.p
    w = np.zeros(p)
    gw = np.zeros(p)  # gram @ w, maintained incrementally
    objectives: list[float] | None = [] if trace else None
    converged = False
    sweeps = 0
    for _ in range(cfg.cd_max_iters):
        max_delta = 0.0
        for j in range(p):
            dj = diag[j]
            if dj <= 0.0:
                continue
            rho = q[j] - gw[j] + dj * w[j]
            new = soft_threshold(rho, lam) / dj
            delta = new - w[j]
            if delta != 0.0:
                gw += gram[:, j] * delta
                w[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        sweeps += 1
        if objectives is not None:
            resid = yc - design.z @ w
            objectives.append(
                float(resid @ resid) / (2 * design.n) + lam * float(np.sum(np.abs(w)))
            )
        if max_delta < cfg.cd_tol:
            converged = True
            break
    w_raw, b = design.unstandardize(w, y_mean)
    return LinearFit(w_raw, b, converged, sweeps, objectives)


def lasso_fit(
    problem: RegressionProblem,
    lam: float,
    cfg: LassoConfig | None = None,
    trace: bool = False,
) -> LinearFit:
    """Cyclic coordinate descent with soft thresholding; thresholded
    coordinates are exact zeros. At lam=0 this converges to the least-squares
    solution on full-rank problems."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    cfg = cfg or LassoConfig()
    design = StandardizedDesign(problem.design, center=problem.fit_bias)
    return _cd_fit(design, problem.targets, lam, cfg, trace=trace)


def scheduled_lasso_fit(
    design: StandardizedDesign,
    targets: np.ndarray,
    cfg: LassoConfig,
    current_lambda: float,
) -> ScheduledFit:
    """Fit at current_lambda, dividing the penalty by cfg.divisor after every
    all-zero weight vector, until some weight survives or the halving budget
    runs out (then the zero fit is returned, flagged)."""
    if current_lambda <= 0:
        raise ValueError("current_lambda must be positive")
    lam = current_lambda
    fit = _cd_fit(design, targets, lam, cfg)
    halvings = 0
    while not np.any(fit.w != 0.0) and halvings < cfg.max_halvings:
        lam /= cfg.divisor
        halvings += 1
        fit = _cd_fit(design, targets, lam, cfg)
    return ScheduledFit(fit.w, fit.b, lam, bool(np.any(fit.w != 0.0)), fit.converged)


def auto_lambda_fit(
    problem: RegressionProblem,
    cfg: LassoConfig,
    current_lambda: float,
) -> ScheduledFit:
    design = StandardizedDesign(problem.design, center=problem.fit_bias)
    return scheduled_lasso_fit(design, problem.targets, cfg, current_lambda)
