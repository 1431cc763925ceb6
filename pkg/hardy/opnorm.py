from dataclasses import dataclass, field
import itertools
import logging
import math

import numpy as np
from scipy.optimize import minimize

import config
from hardy.bounds import BoundCalculator, implied_norm_bound
from hardy.errors import DomainError, InsufficientDataError, NumericError
from hardy.weights import make_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FiniteSection:
    """
    N x N leading section of the weighted mean matrix a_{n,k} = lambda_k / Lambda_n (k <= n).

    Purpose:
        - Applies the matrix and its transpose matrix-free in O(N).
        - Materializes the dense lower-triangular matrix for small N (oracles, tests).

    Usage:
        A = build_section(make_weights('const', 3), 3)
        A.apply([1.0, 0.0, 0.0])     # array([1. , 0.5, 0.3333...])
        A.to_dense()[2]              # array([0.3333..., 0.3333..., 0.3333...])
    """
    weights: object

    @property
    def size(self):
        return self.weights.n_terms

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise DomainError(f"expected a sequence of length {self.size}, got shape {x.shape}")
        return x

    def apply(self, a):
        """Running weighted averages A_n = (sum_{k<=n} lambda_k a_k) / Lambda_n."""
        a = self._check(a)
        return np.cumsum(self.weights.lambdas * a) / self.weights.prefix

    def apply_transpose(self, y):
        """(A^T y)_k = lambda_k * sum_{n>=k} y_n / Lambda_n."""
        y = self._check(y)
        suffix = np.cumsum((y / self.weights.prefix)[::-1])[::-1]
        return self.weights.lambdas * suffix

    def to_dense(self):
        if self.size > config.DENSE_LIMIT:
            raise DomainError(f"section of size {self.size} exceeds the dense limit {config.DENSE_LIMIT}")
        dense = self.weights.lambdas[None, :] / self.weights.prefix[:, None]
        return np.tril(dense)


@dataclass(frozen=True, eq=False)
class NormEstimate:
    value: float
    iterations: int
    rel_change: float
    witness: np.ndarray
    converged: bool


@dataclass(frozen=True, eq=False)
class VerificationResult:
    """
    Outcome of checking one finite instance of an inequality lhs <= rhs.

    `passed` holds iff residual = rhs - lhs >= -tolerance * max(1, |rhs|).
    A finite lhs against rhs = +inf (a right side past the float range) passes.
    `coefficients` carries the per-n coefficients of the verified sum when the
    verifier has them; `details` carries extra figures (e.g. classical slack).
    """
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    passed: bool
    coefficients: np.ndarray = None
    details: dict = field(default_factory=dict)

    @property
    def relative_residual(self):
        if math.isinf(self.rhs):
            return 1.0
        return self.residual / max(1.0, abs(self.rhs))

    @classmethod
    def make(cls, lhs, rhs, tol=None, coefficients=None, **details):
        tol = config.VERIFY_TOL if tol is None else tol
        lhs, rhs = float(lhs), float(rhs)
        if not math.isfinite(lhs) or not (math.isfinite(rhs) or rhs == math.inf):
            raise NumericError(f"non-finite inequality sides: lhs={lhs}, rhs={rhs}")
        residual = rhs - lhs
        passed = residual >= -tol * max(1.0, abs(rhs))
        return cls(lhs, rhs, residual, tol, passed, coefficients, details)


def as_sequence(a, name='a', positive=False):
    """Validated 1-d float array; nonnegative, or strictly positive when `positive`."""
    a = np.asarray(a, dtype=float).ravel()
    if a.size == 0:
        raise InsufficientDataError(f"sequence {name} is empty")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"sequence {name} has non-finite entries", index=int(np.flatnonzero(~np.isfinite(a))[0]) + 1)
    bad = a <= 0 if positive else a < 0
    if np.any(bad):
        kind = 'positive' if positive else 'nonnegative'
        raise DomainError(f"sequence {name} must be {kind}", index=int(np.flatnonzero(bad)[0]) + 1)
    return a


def _need_terms(w, n):
    if w.n_terms < n:
        raise InsufficientDataError(f"need {n} weights, only {w.n_terms} available")


def _p_norm(x, p):
    return float(np.sum(x ** p) ** (1.0 / p))


def build_section(w, n):
    if n < 1:
        raise DomainError(f"section size must be at least 1, got {n}")
    _need_terms(w, n)
    return FiniteSection(w.truncate(n))


def norm_ratio(A, e, x):
    """||A x||_p / ||x||_p for a nonzero x; a lower bound on ||A||_{p,p}."""
    x = np.abs(A._check(x))
    denominator = _p_norm(x, e.p)
    if denominator == 0:
        raise DomainError("norm ratio of the zero vector")
    return _p_norm(A.apply(x), e.p) / denominator


def norm_estimate(A, e, tol=None, max_iter=None, start=None):
    """
    Lower bound on ||A||_{p,p} by the nonlinear power iteration
    x <- normalize((A^T (A x)^(p-1))^(q-1)), started from the uniform vector
    (or from `start`, e.g. a zero-padded witness of a nested section).
    The best ratio seen is returned, recomputed at its witness.
    """
    tol = config.NORM_TOL if tol is None else tol
    max_iter = config.NORM_MAX_ITER if max_iter is None else max_iter
    p, q = e.p, e.q

    x = np.ones(A.size) if start is None else np.abs(A._check(start))
    x = x / _p_norm(x, p)
    ratio = norm_ratio(A, e, x)
    best_ratio, best_x = ratio, x
    rel_change = math.inf
    converged = False

    iterations = 0
    for iterations in range(1, max_iter + 1):
        z = A.apply_transpose(A.apply(x) ** (p - 1)) ** (q - 1)
        scale = _p_norm(z, p)
        if not math.isfinite(scale) or scale == 0:
            raise NumericError(f"power iteration broke down at step {iterations} (scale={scale})")
        x = z / scale
        new_ratio = norm_ratio(A, e, x)
        if not math.isfinite(new_ratio):
            raise NumericError(f"non-finite norm ratio at step {iterations}")
        rel_change = abs(new_ratio - ratio) / ratio
        ratio = new_ratio
        if ratio > best_ratio:
            best_ratio, best_x = ratio, x
        if rel_change < tol:
            converged = True
            break

    if not converged:
        logger.warning(f"Power iteration did not converge in {max_iter} steps "
                       f"(N={A.size}, p={p}, last relative change {rel_change:.3g})")
    logger.debug(f"norm_estimate N={A.size} p={p}: {best_ratio:.15g} after {iterations} steps")
    return NormEstimate(
        value=norm_ratio(A, e, best_x),
        iterations=iterations,
        rel_change=rel_change,
        witness=best_x,
        converged=converged,
    )


def _simplex_points(theta):
    """
    Maps angles in R^(N-1) to points of the probability simplex: squares of the
    coordinates of a point on the Euclidean unit sphere. Periodic and smooth, so
    corners and faces are interior points of the angle space.
    """
    theta = np.atleast_2d(theta)
    m, k = theta.shape
    y = np.ones((m, k + 1))
    sines = np.ones(m)
    for j in range(k):
        y[:, j] = sines * np.cos(theta[:, j])
        sines = sines * np.sin(theta[:, j])
    y[:, k] = sines
    return y ** 2


def brute_force_norm(A, e):
    """
    Independent oracle for ||A||_{p,p} at N <= 4: exhaustive angle grid over the
    nonnegative orthant, then unconstrained Nelder-Mead from the best grid points.
    """
    n = A.size
    if n == 1:
        return 1.0
    if n not in config.BRUTE_FORCE_GRID:
        raise DomainError(f"brute force is limited to N <= {max(config.BRUTE_FORCE_GRID)}, got N={n}")
    p = e.p
    dense = A.to_dense()

    def ratios(theta):
        x = _simplex_points(theta)
        x = x / np.sum(x ** p, axis=1, keepdims=True) ** (1.0 / p)
        return np.sum((x @ dense.T) ** p, axis=1) ** (1.0 / p)

    points = config.BRUTE_FORCE_GRID[n]
    axis = np.linspace(0.0, math.pi / 2, points)
    if n == 2:
        grid = axis[:, None]
    else:
        grid = np.array(list(itertools.product(axis, repeat=n - 1)))
    values = ratios(grid)
    starts = np.argsort(values)[-config.BRUTE_FORCE_STARTS:]

    best = float(np.max(values))
    for i in starts:
        result = minimize(
            lambda theta: -ratios(theta)[0],
            grid[i],
            method='Nelder-Mead',
            options={'xatol': 1e-10, 'fatol': 1e-15, 'maxiter': 20000},
        )
        best = max(best, -float(result.fun))
    logger.debug(f"brute_force_norm N={n} p={p}: {best:.15g} from {len(starts)} starts")
    return best


def verify_weighted_hardy(w, e, a, L, tol=None):
    """sum_n A_n^p <= (p/(p-L))^p sum_n a_n^p on the first len(a) terms."""
    a = as_sequence(a)
    if not 0 < L < e.p:
        raise DomainError(f"L must lie in (0, p) = (0, {e.p}), got {L}")
    A = build_section(w, a.size)
    lhs = np.sum(A.apply(a) ** e.p)
    rhs = (e.p / (e.p - L)) ** e.p * np.sum(a ** e.p)
    return VerificationResult.make(lhs, rhs, tol)


def verify_hardy(e, a, tol=None):
    """Hardy's inequality: the Cesaro case L = 1."""
    a = as_sequence(a)
    return verify_weighted_hardy(make_weights('const', a.size), e, a, 1.0, tol)


def verify_53(w, e, a, aux, tol=None):
    """
    sum_n W_n^{-(p-1)} (w_n^{p-1}/lambda_n^p - w_{n+1}^{p-1}/lambda_{n+1}^p) Lambda_n^p A_n^p <= sum a_n^p
    for positive auxiliary w_1..w_{N+1} with W_n = w_1 + ... + w_n.
    """
    a = as_sequence(a)
    n = a.size
    aux = as_sequence(aux, 'aux', positive=True)
    if aux.size != n + 1:
        raise DomainError(f"aux must have {n + 1} entries, got {aux.size}")
    _need_terms(w, n + 1)
    p = e.p
    lam = w.lambdas[:n + 1]
    running = np.cumsum(lam[:n] * a)              # Lambda_n A_n
    aux_prefix = np.cumsum(aux[:n])
    # each coefficient split so the large factors (Lambda_n/lambda)^p never appear alone
    first = (aux[:n] / aux_prefix) ** (p - 1) * (running / lam[:n]) ** p
    second = (aux[1:] / aux_prefix) ** (p - 1) * (running / lam[1:]) ** p
    terms = first - second
    return VerificationResult.make(np.sum(terms), np.sum(a ** p), tol)


def inner_averages_54(w, e, b):
    """(sum_{k<=n} lambda_k prod_{i=k}^n b_i^{1/(p-1)}) / Lambda_n for n = 1..len(b)."""
    b = as_sequence(b, 'b', positive=True)
    n = b.size
    _need_terms(w, n)
    cum = np.cumsum(np.log(b) / (e.p - 1))
    cum_before = np.concatenate(([0.0], cum[:-1]))
    log_sums = cum + np.logaddexp.accumulate(np.log(w.lambdas[:n]) - cum_before)
    return np.exp(log_sums - np.log(w.prefix[:n]))


def verify_54(w, e, a, b, tol=None):
    """
    sum_n I_n^{-(p-1)} (b_n/lambda_n - 1/lambda_{n+1}) Lambda_n A_n^p <= sum a_n^p,
    I_n the inner averages of `inner_averages_54`.
    """
    a = as_sequence(a)
    b = as_sequence(b, 'b', positive=True)
    n = a.size
    if b.size != n:
        raise DomainError(f"b must have {n} entries, got {b.size}")
    _need_terms(w, n + 1)
    p = e.p
    lam, lam_prefix = w.lambdas, w.prefix[:n]
    inner = inner_averages_54(w, e, b)
    coefficients = np.exp(-(p - 1) * np.log(inner)) * (b / lam[:n] - 1.0 / lam[1:n + 1]) * lam_prefix
    averages = np.cumsum(lam[:n] * a) / lam_prefix
    lhs = np.sum(coefficients * averages ** p)
    return VerificationResult.make(lhs, np.sum(a ** p), tol, coefficients=coefficients)


def hardy_improvement_coefficients(e, n):
    """c_n = I_n^{-(p-1)} with b_i = 1 + (1 - 1/p)/i and constant weights."""
    i = np.arange(1, n + 1, dtype=float)
    b = 1.0 + (1.0 - 1.0 / e.p) / i
    inner = inner_averages_54(make_weights('const', n), e, b)
    return np.exp(-(e.p - 1) * np.log(inner))


def verify_hardy_improvement(e, a, tol=None):
    """
    sum_n c_n (mean of a_1..a_n)^p <= p/(p-1) sum_n a_n^p, with c_n from
    `hardy_improvement_coefficients`. Reports the classical Hardy slack too.
    """
    a = as_sequence(a)
    p = e.p
    coefficients = hardy_improvement_coefficients(e, a.size)
    means = np.cumsum(a) / np.arange(1, a.size + 1)
    mean_powers = means ** p
    lhs = np.sum(coefficients * mean_powers)
    total = np.sum(a ** p)
    classical_slack = (p / (p - 1)) ** p * total - np.sum(mean_powers)
    return VerificationResult.make(lhs, p / (p - 1) * total, tol, coefficients=coefficients,
                                   classical_slack=float(classical_slack))


class NormCalculator:
    """
    Sandwiches the lp operator norm of finite sections of one weighted mean matrix.

    Purpose:
        - Lower bound from power iteration, brute-force oracle for N <= 4.
        - Upper bounds p/(p - L) from Cartlidge's L and the minimal feasible L of
          the local condition and of the averaged condition on the same prefix.

    Usage:
        calc = NormCalculator(make_weights('const', 2))
        calc.sandwich(Exponent(2.0), 2)

        # Output:
        #   {'n': 2, 'p': 2.0, 'lower': 1.1441228..., 'brute_force': 1.1441228..., 'upper': 1.618..., 'upper_cartlidge': 2.0, ...}
    """
    def __init__(self, weights):
        self.weights = weights

    def section(self, n):
        return build_section(self.weights, n)

    def estimate(self, e, n, start=None):
        return norm_estimate(self.section(n), e, start=start)

    def brute_force(self, e, n):
        return brute_force_norm(self.section(n), e)

    def upper_bounds(self, e, n):
        """Implied bounds p/(p - L) per criterion; absent entries mean no feasible L < p."""
        calc = BoundCalculator(self.weights.truncate(n))
        bounds = {}
        try:
            bounds['CartlidgeL'] = implied_norm_bound(e, calc.cartlidge_L().value)
        except InsufficientDataError:
            bounds['CartlidgeL'] = None
        bounds['LocalCond'] = implied_norm_bound(e, calc.min_L_local(e))
        bounds['Thm31Cond'] = implied_norm_bound(e, calc.min_L_thm31(e))
        return bounds

    def sandwich(self, e, n, start=None):
        estimate = self.estimate(e, n, start=start)
        bounds = self.upper_bounds(e, n)
        brute = self.brute_force(e, n) if n <= max(config.BRUTE_FORCE_GRID) else None
        finite = [b for b in bounds.values() if b is not None]
        upper = min(finite) if finite else None

        lower = max(estimate.value, brute) if brute is not None else estimate.value
        violated = upper is not None and lower > upper + 1e-9
        if violated:
            logger.warning(f"Norm sandwich violated at N={n}, p={e.p}: lower {lower!r} > upper {upper!r}")
        return {
            'n': n,
            'p': e.p,
            'lower': estimate.value,
            'brute_force': brute,
            'upper': upper,
            'upper_cartlidge': bounds['CartlidgeL'],
            'upper_local': bounds['LocalCond'],
            'upper_thm31': bounds['Thm31Cond'],
            'gap': None if upper is None else upper - lower,
            'iterations': estimate.iterations,
            'converged': estimate.converged,
            'violated': violated,
            'witness': estimate.witness,
        }
