from dataclasses import dataclass
from enum import Enum
import logging
import math

import numpy as np

import config
from hardy.errors import DomainError, InsufficientDataError
from hardy.weights import ratios

logger = logging.getLogger(__name__)


class Method(str, Enum):
    CARTLIDGE_L = 'CartlidgeL'
    BENNETT_E = 'BennettE'
    M_LOG = 'MLog'
    M_SUM = 'MSum'
    LOCAL_COND = 'LocalCond'
    THM31_COND = 'Thm31Cond'


class Trend(str, Enum):
    INCREASING_TAIL = 'increasing_tail'
    ATTAINED_INTERIOR = 'attained_interior'
    FLAT = 'flat'


SUPREMUM_METHODS = (Method.CARTLIDGE_L, Method.BENNETT_E, Method.M_LOG, Method.M_SUM)


@dataclass(frozen=True, eq=False)
class BoundReport:
    """
    One bound constant or feasibility condition evaluated on a finite prefix.

    For supremum-type methods `value` is max(per_index) and `argmax` the smallest
    1-based index n attaining it. For condition checks `value` is the tested L,
    `per_index` holds the margins (RHS - LHS, >= 0 where the condition holds),
    `argmax` is the binding index (smallest margin) and `feasible` is set.
    `argmax` is 0 when there is no index to report (N = 1 condition checks).
    """
    method: Method
    value: float
    per_index: np.ndarray
    argmax: int
    trend: Trend
    feasible: bool = None

    @property
    def is_supremum(self):
        return self.method in SUPREMUM_METHODS

    def as_row(self, exponent=None):
        row = {
            'method': self.method.value,
            'value': float(self.value),
            'argmax': int(self.argmax),
            'trend': self.trend.value,
            'feasible': self.feasible,
            'norm_bound': None,
            'carleman_constant': None,
        }
        if self.method in (Method.CARTLIDGE_L, Method.M_LOG, Method.M_SUM):
            row['carleman_constant'] = exp_or_inf(self.value)
        elif self.method == Method.BENNETT_E:
            row['carleman_constant'] = float(self.value)
        if exponent is not None and self.method in (Method.CARTLIDGE_L, Method.LOCAL_COND, Method.THM31_COND):
            if self.feasible is not False:
                row['norm_bound'] = implied_norm_bound(exponent, self.value)
        return row


def exp_or_inf(x):
    """exp(x), or inf past the float64 range."""
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def implied_norm_bound(exponent, L):
    """p/(p - L) when 0 < L < p, otherwise None."""
    p = exponent.p
    if L is None or not 0 < L < p:
        return None
    return p / (p - L)


def classify_trend(values, index, towards='max'):
    """
    Trend of a per-index sequence around the reported 0-based `index`.
    `towards='max'` for suprema, `'min'` for condition margins.
    """
    if values.size == 0:
        return Trend.FLAT
    top = np.max(np.abs(values))
    if np.ptp(values) <= 1e-12 * max(1.0, top):
        return Trend.FLAT
    tail = np.diff(values[-3:])
    monotone = np.all(tail >= 0) if towards == 'max' else np.all(tail <= 0)
    if index == values.size - 1 and monotone:
        return Trend.INCREASING_TAIL
    return Trend.ATTAINED_INTERIOR


def _supremum_report(method, per_index):
    per_index = np.asarray(per_index, dtype=float)
    idx = int(np.argmax(per_index))   # first occurrence
    report = BoundReport(
        method=method,
        value=float(per_index[idx]),
        per_index=per_index,
        argmax=idx + 1,
        trend=classify_trend(per_index, idx, 'max'),
    )
    if report.trend == Trend.INCREASING_TAIL:
        logger.debug(f"{method.value}: supremum still increasing at n={report.argmax}; "
                     f"{report.value:.12g} is a lower estimate of the infinite sup")
    return report


def _condition_report(method, L, margins, scale):
    margins = np.asarray(margins, dtype=float)
    if margins.size == 0:
        return BoundReport(method, float(L), margins, 0, Trend.FLAT, True)
    idx = int(np.argmin(margins))
    feasible = bool(np.all(margins >= -config.FEASIBILITY_RTOL * scale))
    return BoundReport(
        method=method,
        value=float(L),
        per_index=margins,
        argmax=idx + 1,
        trend=classify_trend(margins, idx, 'min'),
        feasible=feasible,
    )


def log_bennett_terms(w):
    """log of (Lambda_{n+1}/lambda_{n+1}) prod_{k<=n} (lambda_k/Lambda_k)^(lambda_k/Lambda_n), n = 1..N-1."""
    r = ratios(w)
    # running inner sum of lambda_k log(lambda_k / Lambda_k)
    inner = np.cumsum(-w.lambdas * np.log(r))[:-1] / w.prefix[:-1]
    return np.log(r[1:]) + inner


def bisect_min_L(is_feasible, p, tol=None, max_iter=None, edge=None):
    """
    Smallest L in (edge, p(1 - edge)) with is_feasible(L), assuming feasibility is
    monotone nondecreasing in L. Returns None if the upper end is infeasible.
    """
    tol = config.BISECTION_TOL if tol is None else tol
    max_iter = config.BISECTION_MAX_ITER if max_iter is None else max_iter
    edge = config.BISECTION_EDGE if edge is None else edge

    low, high = edge, p * (1.0 - edge)
    if not is_feasible(high):
        return None
    if is_feasible(low):
        return low

    for i in range(max_iter):
        if high - low <= tol:
            break
        mid = 0.5 * (low + high)
        if is_feasible(mid):
            high = mid
        else:
            low = mid
    else:
        logger.warning(f"Bisection hit {max_iter} iterations with bracket width {high - low:.3g}")

    probe = high - 10 * tol
    if probe > edge and is_feasible(probe):
        logger.warning(f"Feasibility is not monotone near L={high!r}: L={probe!r} is feasible too")
    return high


class BoundCalculator:
    """
    Computes the norm-bound constants and feasibility conditions of a weighted mean matrix.

    Purpose:
        - Cartlidge's L = sup (R_{n+1} - R_n), with R_n = Lambda_n / lambda_n.
        - Bennett's Carleman constant E and the two M constants (log form and averaged form).
        - The local condition and the averaged (Thm31) condition at a given L, and the
          minimal feasible L for each by bisection.
        - All suprema are prefix suprema over n = 1..N-1 with a trend flag.

    Usage:
        calc = BoundCalculator(make_weights('const', 1000))
        calc.cartlidge_L().value                   # 1.0
        calc.min_L_thm31(Exponent(2.0))            # <= 1.0

        # Output:
        #   BoundReport(method=Method.CARTLIDGE_L, value=1.0, argmax=1, trend=Trend.FLAT, ...)
    """
    def __init__(self, weights):
        self.weights = weights
        self.r = ratios(weights)

    def _require_two(self, what):
        if self.weights.n_terms < 2:
            raise InsufficientDataError(f"{what} needs at least 2 weights, got {self.weights.n_terms}")

    def _check_L(self, exponent, L):
        if not 0 < L < exponent.p:
            raise DomainError(f"L must lie in (0, p) = (0, {exponent.p}), got {L}")

    def cartlidge_L(self):
        self._require_two('Cartlidge L')
        return _supremum_report(Method.CARTLIDGE_L, np.diff(self.r))

    def bennett_E(self):
        self._require_two('Bennett E')
        return _supremum_report(Method.BENNETT_E, np.exp(log_bennett_terms(self.weights)))

    def m_log(self):
        self._require_two('M (log form)')
        r = self.r
        return _supremum_report(Method.M_LOG, r[:-1] * np.log1p(np.diff(r) / r[:-1]))

    def m_sum(self):
        self._require_two('M (averaged form)')
        lam, lam_prefix = self.weights.lambdas, self.weights.prefix
        numerator = np.cumsum(lam[:-1] * np.diff(self.r))
        return _supremum_report(Method.M_SUM, numerator / lam_prefix[:-1])

    def check_local_condition(self, exponent, L):
        """Local-condition margins R_n (1 - L/(p R_n))^(1-p) + L/p - R_{n+1}, n = 1..N-1."""
        self._check_L(exponent, L)
        p, r = exponent.p, self.r
        x = L / (p * r[:-1])
        if np.any(x >= 1):
            raise DomainError("1 - L lambda_n/(p Lambda_n) is not positive", index=int(np.flatnonzero(x >= 1)[0]) + 1)
        # expm1/log1p: at the Cartlidge L = R_{n+1} - R_n the margin is only O(x^2)
        margins = r[:-1] * np.expm1((1 - p) * np.log1p(-x)) + L / p - np.diff(r)
        return _condition_report(Method.LOCAL_COND, L, margins, np.maximum(1.0, r[1:]))

    def check_thm31(self, exponent, L):
        """Averaged-condition margins p/(p-L) - S_n, n = 1..N-1."""
        self._check_L(exponent, L)
        p, r = exponent.p, self.r
        n = self.weights.n_terms - 1
        bound = p / (p - L)
        if n == 0:
            return _condition_report(Method.THM31_COND, L, np.empty(0), bound)

        base = (r[1:] - L / p) / r[:-1]
        if np.any(base <= 0):
            raise DomainError("factor R_{i+1} - L/p is not positive", index=int(np.flatnonzero(base <= 0)[0]) + 1)
        log_beta = np.log(base) / (p - 1)
        cum = np.cumsum(log_beta)
        cum_before = np.concatenate(([0.0], cum[:-1]))
        # S_n Lambda_n = exp(cum_n) * sum_k lambda_k exp(-cum_{k-1})
        log_terms = np.log(self.weights.lambdas[:n]) - cum_before
        log_u = cum + np.logaddexp.accumulate(log_terms)
        s = np.exp(log_u - np.log(self.weights.prefix[:n]))
        return _condition_report(Method.THM31_COND, L, bound - s, bound)

    def min_L_local(self, exponent):
        return bisect_min_L(lambda L: self.check_local_condition(exponent, L).feasible, exponent.p)

    def min_L_thm31(self, exponent):
        def feasible(L):
            try:
                return self.check_thm31(exponent, L).feasible
            except DomainError as e:
                # undefined there; counts as infeasible for the search
                logger.debug(f"Averaged condition undefined at L={L!r}: {e}")
                return False
        return bisect_min_L(feasible, exponent.p)

    def carleman_constants(self):
        """
        Weighted Carleman constants E valid for this prefix: Bennett's E, e^M for both
        M forms, and e^L from Cartlidge's L (Cartlidge's bound read at p -> infinity).
        Constants past the float range come back as inf.
        """
        constants = {
            'BennettE': self.bennett_E().value,
            'ExpMLog': exp_or_inf(self.m_log().value),
            'ExpMSum': exp_or_inf(self.m_sum().value),
            'ExpCartlidgeL': exp_or_inf(self.cartlidge_L().value),
        }
        constants['best'] = min(constants.values())
        return constants


def bound_reports(weights, exponent=None, L=None):
    """All reports `cmd_bounds` emits, in table order."""
    calc = BoundCalculator(weights)
    reports = [calc.cartlidge_L(), calc.bennett_E(), calc.m_log(), calc.m_sum()]
    if exponent is not None and L is not None:
        reports.append(calc.check_local_condition(exponent, L))
        reports.append(calc.check_thm31(exponent, L))
    return reports
