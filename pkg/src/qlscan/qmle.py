"""Quasi-maximum likelihood estimation on a sub-sample.

The estimator maximises the truncated quasi-log-likelihood over the
feasible set (box intersected with the stationarity constraint) with a
projected Newton ascent: analytic gradient and hessian, eigenvalue
modification to keep the direction well defined, Armijo backtracking
along the projection arc.  Cold calls run a small deterministic
multi-start (domain centre plus quasi-random points); warm calls pass
``init`` and run a single start, which is what the scan relies on.

Everything here is deterministic: the quasi-random starts come from an
unscrambled radical-inverse sequence, and no step consults a RNG.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .likelihood import loglik
from .models import (
    DomainError,
    ModelFamily,
    ModelSpec,
    SeriesSegment,
    SizingError,
    in_domain,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

__all__ = ["EstimateResult", "OptimOptions", "estimate", "project_to_domain"]


@dataclass(frozen=True)
class OptimOptions:
    """Optimizer controls.

    ``grad_tol`` of None means the default 1e-8 * Card(T), so longer
    windows tolerate proportionally larger gradient norms.
    """

    grad_tol: float | None = None
    max_iter: int = 200
    n_starts: int = 5
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40


@dataclass(frozen=True)
class EstimateResult:
    """Outcome of one estimation call.

    ``grad_norm`` is the norm of the projected-gradient step at the
    returned point, the natural optimality measure under constraints:
    it coincides with the plain gradient norm at interior points and is
    zero at a constrained maximiser on the boundary.
    """

    theta_hat: NDArray[np.float64]
    loglik_at_opt: float
    grad_norm: float
    iterations: int
    converged: bool
    boundary_active: bool


def _clipped_sum_root(
    x: NDArray[np.float64],
    lo: NDArray[np.float64],
    hi: NDArray[np.float64],
    target: float,
) -> float:
    """Solve sum(clip(x - mu, lo, hi)) == target for mu.

    The left side is a piecewise-linear nonincreasing function of mu with
    breakpoints at x - hi and x - lo; the caller guarantees a root exists
    (value above target at the smallest breakpoint, at or below it at the
    largest).
    """
    bps = np.unique(np.concatenate((x - hi, x - lo)))

    def val(mu: float) -> float:
        return float(np.sum(np.clip(x - mu, lo, hi)))

    prev = bps[0]
    for bp in bps:
        if val(bp) <= target:
            v_left, v_right = val(prev), val(bp)
            if v_right == target or v_left == v_right:
                return float(bp)
            return float(prev + (v_left - target) * (bp - prev) / (v_left - v_right))
        prev = bp
    return float(bps[-1])


def _project_box_halfspace(
    x: NDArray[np.float64],
    lo: NDArray[np.float64],
    hi: NDArray[np.float64],
    c: float,
) -> NDArray[np.float64]:
    """Project onto {lo <= y <= hi, sum(y[1:]) <= c} exactly.

    Coordinate 0 only sees the box.  When the sum constraint binds, the
    KKT conditions give y_i = clip(x_i - mu, lo_i, hi_i) on the summed
    coordinates with a single multiplier mu > 0 fixed by sum == c.
    """
    y = np.clip(x, lo, hi)
    if float(np.sum(y[1:])) <= c:
        return y
    mu = _clipped_sum_root(x[1:], lo[1:], hi[1:], c)
    y[1:] = np.clip(x[1:] - mu, lo[1:], hi[1:])
    return y


def _project_box_l1(
    x: NDArray[np.float64],
    lo: NDArray[np.float64],
    hi: NDArray[np.float64],
    c: float,
) -> NDArray[np.float64]:
    """Project onto {lo <= y <= hi, sum|y| <= c} when every box spans zero.

    The projection never flips a sign, so it reduces to the half-space
    case on magnitudes: |y_i| = clip(|x_i| - mu, 0, cap_i) with cap_i the
    box edge on x_i's side.
    """
    y = np.clip(x, lo, hi)
    if float(np.sum(np.abs(y))) <= c:
        return y
    caps = np.where(x >= 0.0, hi, -lo)
    mags = np.abs(x)
    mu = _clipped_sum_root(mags, np.zeros_like(mags), caps, c)
    return np.where(x >= 0.0, 1.0, -1.0) * np.clip(mags - mu, 0.0, caps)


def project_to_domain(spec: ModelSpec, theta: ArrayLike) -> NDArray[np.float64]:
    """Euclidean projection onto the feasible set of ``spec``.

    The feasible set is a box intersected with one stationarity
    constraint (l1 ball for AR, half-space on the summed coordinates for
    ARCH/GARCH), so the projection has an exact single-multiplier form;
    no iterative scheme is needed.  AR(1) short-circuits to a clamp.
    Custom AR domains whose boxes exclude zero fall back to Dykstra's
    alternating projections.
    """
    y = spec.check_theta(theta)
    lo, hi = spec.domain.as_arrays()
    c = 1.0 - spec.domain.margin

    if spec.family is ModelFamily.AR and spec.p == 1:
        return np.clip(y, max(lo[0], -c), min(hi[0], c))

    if spec.family is not ModelFamily.AR:
        x = _project_box_halfspace(y, lo, hi, c)
    elif np.all(lo < 0.0) and np.all(hi > 0.0):
        x = _project_box_l1(y, lo, hi, c)
    else:
        x = _dykstra_box_l1(y, lo, hi, c)
    if not in_domain(spec, x):
        raise DomainError("projection failed; the feasible set may be empty")
    return x


def _dykstra_box_l1(
    y: NDArray[np.float64],
    lo: NDArray[np.float64],
    hi: NDArray[np.float64],
    c: float,
) -> NDArray[np.float64]:
    """Alternating-projection fallback for sign-restricted AR boxes."""

    def proj_l1(v: NDArray[np.float64]) -> NDArray[np.float64]:
        if np.sum(np.abs(v)) <= c:
            return v.copy()
        mags = np.sort(np.abs(v))[::-1]
        csum = np.cumsum(mags)
        idx = np.arange(1, v.size + 1)
        rho = np.max(idx[mags - (csum - c) / idx > 0])
        lam = (csum[rho - 1] - c) / rho
        return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)

    x = y.copy()
    p_corr = np.zeros_like(x)
    q_corr = np.zeros_like(x)
    for _ in range(200):
        x_prev = x
        xb = np.clip(x + p_corr, lo, hi)
        p_corr = x + p_corr - xb
        x = proj_l1(xb + q_corr)
        q_corr = xb + q_corr - x
        if np.max(np.abs(x - x_prev)) < 1e-14:
            break
    return np.clip(x, lo, hi)


def _radical_inverse(i: int, base: int) -> float:
    inv = 0.0
    denom = 1.0
    while i > 0:
        denom *= base
        inv += (i % base) / denom
        i //= base
    return inv


def _default_starts(spec: ModelSpec, n_starts: int) -> list[NDArray[np.float64]]:
    """Domain centre plus quasi-random in-domain points, all projected."""
    lo, hi = spec.domain.as_arrays()
    centre = project_to_domain(spec, (lo + hi) / 2.0)
    starts = [centre]
    primes = [2, 3, 5, 7, 11, 13, 17][: spec.d]
    for i in range(1, n_starts):
        unit = np.array([_radical_inverse(i, b) for b in primes])
        # Pull toward the centre a little so starts stay strictly interior
        # even after projection.
        point = lo + (0.05 + 0.9 * unit) * (hi - lo)
        starts.append(project_to_domain(spec, point))
    return starts


def _boundary_active(spec: ModelSpec, x: NDArray[np.float64]) -> bool:
    lo, hi = spec.domain.as_arrays()
    eps = 1e-8 * (1.0 + float(np.max(np.abs(x))))
    if np.any(x - lo <= eps) or np.any(hi - x <= eps):
        return True
    c = 1.0 - spec.domain.margin
    stat = float(np.sum(np.abs(x))) if spec.family is ModelFamily.AR else float(
        np.sum(x[1:])
    )
    return c - stat <= eps


def _psd_repair(hess: NDArray[np.float64]) -> NDArray[np.float64]:
    """Positive-definite repair of a symmetric matrix.

    Eigenvalues are replaced by their absolute value floored away from
    zero, so saddle curvature repels instead of producing a huge
    ill-scaled step.
    """
    evals, evecs = np.linalg.eigh(hess)
    floor = 1e-8 * max(1.0, float(np.max(np.abs(evals))))
    evals = np.maximum(np.abs(evals), floor)
    return (evecs * evals) @ evecs.T


def _modified_newton_dir(
    hess: NDArray[np.float64], grad: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Descent direction -B^(-1) g with B the positive repair of H."""
    return -np.linalg.solve(_psd_repair(hess), grad)


_ACTIVE_EPS = 1e-9


def _newton_direction(
    spec: ModelSpec,
    x: NDArray[np.float64],
    grad: NDArray[np.float64],
    hess: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Active-set Newton step for minimising f over the feasible set.

    Box coordinates pressed against a bound by the gradient are frozen,
    and when descent pushes outward through the binding stationarity
    face the step is solved with that face as an equality.  Without this
    reduction a raw Newton step at a boundary optimum points outside the
    domain and the projected step degrades to a crawl along the face.
    """
    lo, hi = spec.domain.as_arrays()
    c = 1.0 - spec.domain.margin
    eps = _ACTIVE_EPS * (1.0 + float(np.max(np.abs(x))))

    fixed = ((x - lo <= eps) & (grad > 0.0)) | ((hi - x <= eps) & (grad < 0.0))
    face: NDArray[np.float64] | None = None
    if spec.family is ModelFamily.AR:
        if c - float(np.sum(np.abs(x))) <= eps:
            # On a binding l1 face a coordinate at zero cannot move at
            # all without pushing the sum outward, so freeze it.
            fixed = fixed | (np.abs(x) <= eps)
            normal = np.sign(x)
            if float(normal @ grad) < 0.0:
                face = normal
    else:
        normal = np.zeros(spec.d)
        normal[1:] = 1.0
        if c - float(normal @ x) <= eps and float(normal @ grad) < 0.0:
            face = normal

    free = ~fixed
    m = int(np.count_nonzero(free))
    if m == 0:
        return np.zeros_like(x)
    h_ff = _psd_repair(hess[np.ix_(free, free)])
    g_f = grad[free]
    step_f: NDArray[np.float64]
    if face is not None and np.any(face[free] != 0.0):
        n_f = face[free]
        kkt = np.zeros((m + 1, m + 1))
        kkt[:m, :m] = h_ff
        kkt[:m, m] = n_f
        kkt[m, :m] = n_f
        rhs = np.append(-g_f, 0.0)
        step_f = np.linalg.solve(kkt, rhs)[:m]
    else:
        step_f = np.linalg.solve(h_ff, -g_f)
    step = np.zeros_like(x)
    step[free] = step_f
    return step


def _run_single_start(
    spec: ModelSpec,
    segment: SeriesSegment,
    x0: NDArray[np.float64],
    grad_tol: float,
    opts: OptimOptions,
) -> tuple[NDArray[np.float64], float, float, int, bool]:
    """Projected Newton descent on f = -L from one starting point.

    Returns (x, f, projected_grad_norm, iterations, converged).
    """

    def evaluate(x: NDArray[np.float64], order: int):
        ev = loglik(spec, x, segment, order=order)
        if order == 0:
            return -ev.value, None, None
        return -ev.value, -ev.gradient, -ev.hessian if order >= 2 else None

    x = x0
    f, g, hess = evaluate(x, 2)
    iterations = 0
    for _ in range(opts.max_iter):
        pg = x - project_to_domain(spec, x - g)
        if float(np.linalg.norm(pg)) <= grad_tol:
            return x, f, float(np.linalg.norm(pg)), iterations, True
        directions = [_newton_direction(spec, x, g, hess), -g]
        accepted = None
        for direction in directions:
            alpha = 1.0
            for _ in range(opts.max_backtracks):
                trial = project_to_domain(spec, x + alpha * direction)
                step = trial - x
                slope = float(g @ step)
                if np.max(np.abs(step)) == 0.0:
                    break
                if slope < 0.0:
                    f_trial, _, _ = evaluate(trial, 0)
                    if f_trial <= f + opts.armijo_c1 * slope:
                        accepted = trial
                        break
                alpha *= opts.backtrack
            if accepted is not None:
                break
        if accepted is None:
            pg = x - project_to_domain(spec, x - g)
            return x, f, float(np.linalg.norm(pg)), iterations, False
        x = accepted
        f, g, hess = evaluate(x, 2)
        iterations += 1
    pg = x - project_to_domain(spec, x - g)
    norm = float(np.linalg.norm(pg))
    return x, f, norm, iterations, norm <= grad_tol


def estimate(
    spec: ModelSpec,
    segment: SeriesSegment,
    init: ArrayLike | None = None,
    opts: OptimOptions | None = None,
) -> EstimateResult:
    """QMLE of theta on the segment's window.

    With ``init`` given the optimizer runs a single start from the
    projection of ``init`` (warm start).  Without it, a deterministic
    multi-start is used and the best local maximiser wins, earliest
    start breaking exact ties.

    Raises
    ------
    SizingError
        If the window holds fewer than d + 1 observations.
    """
    opts = opts or OptimOptions()
    if segment.card < spec.d + 1:
        raise SizingError(
            f"window of {segment.card} observations cannot identify "
            f"{spec.d} parameters; need at least {spec.d + 1}"
        )
    grad_tol = opts.grad_tol if opts.grad_tol is not None else 1e-8 * segment.card

    if init is not None:
        starts = [project_to_domain(spec, init)]
    else:
        starts = _default_starts(spec, opts.n_starts)

    best: tuple[NDArray[np.float64], float, float, int, bool] | None = None
    for x0 in starts:
        run = _run_single_start(spec, segment, x0, grad_tol, opts)
        if best is None or run[1] < best[1]:
            best = run
    assert best is not None
    x, f, pg_norm, iterations, converged = best
    return EstimateResult(
        theta_hat=x,
        loglik_at_opt=-f,
        grad_norm=pg_norm,
        iterations=iterations,
        converged=converged,
        boundary_active=_boundary_active(spec, x),
    )
