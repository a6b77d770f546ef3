import logging
from enum import Enum
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from erspin.analysis.traces import DecayTrace, FitResult
from erspin.errors import BoundViolationError, NoConvergenceError, SingularJacobianError

logger = logging.getLogger(__name__)

X_TOLERANCE = 1e-10
G_TOLERANCE = 1e-12
F_TOLERANCE = 1e-12
DIFF_STEP = 1e-6
MAX_ITERATIONS = 200
MAX_CONDITION = 1e14
MAX_RELATIVE_RESIDUAL = 0.5


class ResidualKind(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"
    LOG = "log"


def _residual_function(model: Callable, x: np.ndarray, y: np.ndarray, weights: np.ndarray,
                       kind: ResidualKind) -> Callable[[np.ndarray], np.ndarray]:
    if kind is ResidualKind.RELATIVE:
        return lambda p: (model(x, *p) - y) / np.abs(y)
    if kind is ResidualKind.LOG:
        return lambda p: np.log(np.maximum(model(x, *p), 1e-300)) - np.log(y)
    return lambda p: (model(x, *p) - y) * weights


def nlls_fit(model: Callable, trace: DecayTrace, initial: Sequence[float],
             bounds: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
             names: Optional[Sequence[str]] = None, kind: str = "custom",
             residual: ResidualKind = ResidualKind.ABSOLUTE, fixed: Optional[Dict[str, float]] = None,
             max_iterations: int = MAX_ITERATIONS) -> FitResult:
    """
    Local least-squares fit of model(x, *params) to a trace.

    Uses trust-region reflective steps with a forward-difference Jacobian of
    relative step 1e-6. Covariance is (JᵀJ)⁻¹ scaled by the residual
    variance. Parameters named in `fixed` are held at the given values and
    reported with zero uncertainty.

    Raises:
        BoundViolationError: If an initial value lies outside its bounds.
        NoConvergenceError: If the iteration limit is reached or the fit stalls far from the data.
        SingularJacobianError: If the parameters are not identifiable at the optimum.
    """
    initial = np.asarray(initial, dtype=float)
    names = list(names) if names is not None else [f"p{k}" for k in range(len(initial))]
    lower, upper = (np.full(len(initial), -np.inf), np.full(len(initial), np.inf)) if bounds is None else (
        np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float))
    fixed = dict(fixed or {})
    residual = ResidualKind(residual)

    outside = [n for n, v, lo, hi in zip(names, initial, lower, upper) if not lo <= v <= hi]
    if outside:
        raise BoundViolationError(f"initial value(s) outside bounds for {', '.join(outside)}")

    full = initial.copy()
    for name, value in fixed.items():
        full[names.index(name)] = value
    free = np.array([n not in fixed for n in names])

    def expand(p_free: np.ndarray) -> np.ndarray:
        p = full.copy()
        p[free] = p_free
        return p

    x, y = trace.abscissa, trace.amplitude
    weights = 1.0 / trace.sigma if trace.sigma is not None else np.ones_like(y)
    base = _residual_function(model, x, y, weights, residual)

    def residuals(p_free: np.ndarray) -> np.ndarray:
        return base(expand(p_free))

    start = initial[free]
    initial_norm = float(np.linalg.norm(residuals(start)))
    solution = least_squares(
        residuals, start, bounds=(lower[free], upper[free]), method="trf", x_scale="jac",
        xtol=X_TOLERANCE, gtol=G_TOLERANCE, ftol=F_TOLERANCE, diff_step=DIFF_STEP,
        max_nfev=max_iterations,
    )
    if solution.status <= 0:
        raise NoConvergenceError(
            f"{kind} fit did not converge after {solution.nfev} evaluations: {solution.message}"
        )

    values = expand(solution.x)
    prediction = model(x, *values)
    relative = np.linalg.norm(prediction - y) / max(np.linalg.norm(y), 1e-300)
    if relative > MAX_RELATIVE_RESIDUAL:
        raise NoConvergenceError(f"{kind} fit stalled far from the data | relative_residual={relative:.3g}")

    jac = np.atleast_2d(solution.jac)
    column_norms = np.linalg.norm(jac, axis=0)
    if np.any(column_norms == 0):
        raise SingularJacobianError(f"{kind} fit: a parameter does not affect the model at the optimum")
    scaled = jac / column_norms
    normal = scaled.T @ scaled
    condition = np.linalg.cond(normal)
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise SingularJacobianError(f"{kind} fit: JᵀJ is singular | condition={condition:.3g}")

    m, p = len(solution.fun), int(free.sum())
    variance = float(np.sum(solution.fun ** 2) / (m - p)) if m > p else 0.0
    covariance_free = np.linalg.inv(normal) / np.outer(column_norms, column_norms) * variance
    covariance = np.zeros((len(values), len(values)))
    covariance[np.ix_(free, free)] = covariance_free
    sigmas = np.sqrt(np.clip(np.diag(covariance), 0.0, None))

    result = FitResult(
        kind=kind,
        names=names,
        values=values,
        sigmas=sigmas,
        residual_norm=float(np.linalg.norm(solution.fun)),
        initial_residual_norm=initial_norm,
        converged=True,
        iterations=int(solution.nfev),
        covariance=covariance,
    )
    logger.info(
        f"Fit converged | kind={kind} | points={m} | iterations={solution.nfev} | "
        f"residual_norm={result.residual_norm:.4g} | "
        + " | ".join(f"{n}={v:.6g}" for n, v in zip(names, values))
    )
    return result
