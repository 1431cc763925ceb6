from dataclasses import dataclass
from enum import Enum
import logging
import math

import numpy as np
from scipy.special import logsumexp

import config
from hardy.bounds import exp_or_inf, log_bennett_terms
from hardy.errors import DomainError, InsufficientDataError
from hardy.opnorm import VerificationResult, as_sequence
from hardy.weights import ratios

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GeoMeans:
    """Weighted geometric means G_n = prod_{k<=n} a_k^(lambda_k/Lambda_n) and their logs."""
    values: np.ndarray
    log_values: np.ndarray

    def __len__(self):
        return self.values.size


class BKind(str, Enum):
    BENNETT = 'Bennett'
    EXP_M = 'ExpM'
    THIRD_CHOICE = 'ThirdChoice'
    THM_ONE_ONE = 'ThmOneOne'
    THM_THREE_ONE = 'ThmThreeOne'
    EXPLICIT = 'Explicit'


@dataclass(frozen=True)
class BStrategy:
    """
    A choice of the positive sequence b_n in the Carleman-side inequalities.

    Usage:
        make_b(BStrategy.exp_m(1.0), make_weights('const', 4))   # e^(1/n), n = 1..3
        make_b(BStrategy.thm_three_one(1.0, 2.0), w)             # 1 + 1/(2n) for constant weights
        coefficients_52(w, BStrategy.exp_m(M))                   # finite even when e^(M/R_n) overflows
    """
    kind: BKind
    L: float = None
    p: float = None
    M: float = None
    values: tuple = ()

    @classmethod
    def bennett(cls):
        return cls(BKind.BENNETT)

    @classmethod
    def exp_m(cls, M):
        return cls(BKind.EXP_M, M=float(M))

    @classmethod
    def third_choice(cls):
        return cls(BKind.THIRD_CHOICE)

    @classmethod
    def thm_one_one(cls, L, p):
        return cls(BKind.THM_ONE_ONE, L=float(L), p=float(p))

    @classmethod
    def thm_three_one(cls, L, p):
        return cls(BKind.THM_THREE_ONE, L=float(L), p=float(p))

    @classmethod
    def explicit(cls, values):
        return cls(BKind.EXPLICIT, values=tuple(float(v) for v in values))


def geo_means(w, a):
    """
    Running weighted geometric means, in log domain. A zero a_k sends every
    G_n with n >= k to 0.
    """
    a = as_sequence(a)
    n = a.size
    if w.n_terms < n:
        raise InsufficientDataError(f"need {n} weights, only {w.n_terms} available")
    lam, lam_prefix = w.lambdas[:n], w.prefix[:n]
    with np.errstate(divide='ignore'):
        log_a = np.log(a)
    # -inf entries stay -inf through the running sum; no +inf can appear
    log_g = np.cumsum(lam * log_a) / lam_prefix
    return GeoMeans(values=np.exp(log_g), log_values=log_g)


def make_log_b(s, w):
    """log b_1..log b_{N-1}; finite even where b itself is past the float range."""
    if s.kind == BKind.EXPLICIT:
        return np.log(as_sequence(s.values, 'b', positive=True))
    if w.n_terms < 2:
        raise InsufficientDataError(f"strategy {s.kind.value} needs at least 2 weights")
    r = ratios(w)
    if s.kind == BKind.BENNETT:
        log_b = np.log(r[1:] / r[:-1])
    elif s.kind == BKind.EXP_M:
        if s.M is None or not math.isfinite(s.M):
            raise DomainError(f"ExpM needs a finite M, got {s.M}")
        log_b = s.M / r[:-1]
    elif s.kind == BKind.THIRD_CHOICE:
        log_b = np.diff(r) / r[:-1]
    elif s.kind in (BKind.THM_ONE_ONE, BKind.THM_THREE_ONE):
        if s.p is None or s.L is None or not s.p > 1 or not 0 < s.L < s.p:
            raise DomainError(f"{s.kind.value} needs p > 1 and 0 < L < p, got p={s.p}, L={s.L}")
        if s.kind == BKind.THM_ONE_ONE:
            log_b = -(s.p - 1) * np.log1p(-s.L / (s.p * r[:-1]))
        else:
            log_b = np.log(w.lambdas[:-1] / w.lambdas[1:] + (1 - s.L / s.p) / r[:-1])
    else:
        raise DomainError(f"unknown b strategy {s.kind}")
    return log_b


def make_b(s, w):
    """b_1..b_{N-1} for an N-term weight sequence (b_n may use lambda_{n+1})."""
    if s.kind == BKind.EXPLICIT:
        return as_sequence(s.values, 'b', positive=True)
    with np.errstate(over='ignore'):
        b = np.exp(make_log_b(s, w))
    return as_sequence(b, 'b', positive=True)


def _log_b(w, b):
    """log b from a strategy or from explicit positive values."""
    if isinstance(b, BStrategy):
        return make_log_b(b, w)
    return np.log(as_sequence(b, 'b', positive=True))


def balance_terms(w, b):
    """Lambda_n (b_n/lambda_n - 1/lambda_{n+1}) for n = 1..len(b)."""
    b = as_sequence(b, 'b', positive=True)
    n = b.size
    if w.n_terms < n + 1:
        raise InsufficientDataError(f"need {n + 1} weights, only {w.n_terms} available")
    lam, lam_prefix = w.lambdas, w.prefix[:n]
    return lam_prefix * b / lam[:n] - lam_prefix / lam[1:n + 1]


def coefficients_52(w, b):
    """
    Coefficient of G_n: balance_n * prod_{k<=n} b_k^(-Lambda_k/Lambda_n), with `b`
    a BStrategy or explicit values. With S_n = sum_{k<=n} Lambda_k log b_k / Lambda_n,
    entries whose balance or e^(-S_n) leave the float range are evaluated as
    R_n exp(log b_n - S_n) - (Lambda_n/lambda_{n+1}) exp(-S_n).
    """
    log_b = _log_b(w, b)
    n = log_b.size
    if w.n_terms < n + 1:
        raise InsufficientDataError(f"need {n + 1} weights, only {w.n_terms} available")
    lam, lam_prefix = w.lambdas, w.prefix[:n]
    r, r_next = lam_prefix / lam[:n], lam_prefix / lam[1:n + 1]
    s = np.cumsum(lam_prefix * log_b) / lam_prefix
    with np.errstate(over='ignore', invalid='ignore'):
        direct = (r * np.exp(log_b) - r_next) * np.exp(-s)
        scaled = r * np.exp(log_b - s) - r_next * np.exp(-s)
    return np.where((s < config.LOG_SCALE_THRESHOLD) & np.isfinite(direct), direct, scaled)


def verify_ps(w, a, b, tol=None):
    """
    sum_n Lambda_n (b_n - 1) G_n + Lambda_N G_N <= sum_n lambda_n a_n b_n^(Lambda_n/lambda_n).
    A right side past the float range is reduced in log domain and may come back as inf.
    """
    a = as_sequence(a)
    b = as_sequence(b, 'b', positive=True)
    n = a.size
    if b.size != n:
        raise DomainError(f"b must have {n} entries, got {b.size}")
    g = geo_means(w, a).values
    lam, lam_prefix = w.lambdas[:n], w.prefix[:n]
    r = lam_prefix / lam
    lhs = np.sum(lam_prefix * (b - 1.0) * g) + lam_prefix[-1] * g[-1]
    with np.errstate(over='ignore', invalid='ignore'):
        rhs = np.sum(lam * a * np.exp(r * np.log(b)))
    if not math.isfinite(rhs):
        with np.errstate(divide='ignore'):
            log_rhs = logsumexp(np.log(lam) + np.log(a) + r * np.log(b))
        rhs = exp_or_inf(float(log_rhs))
    return VerificationResult.make(lhs, rhs, tol)


def verify_52(w, a, b, tol=None):
    """sum_n coefficients_52(w, b)_n G_n <= sum_n a_n; needs lambda_{N+1}."""
    a = as_sequence(a)
    n = a.size
    log_b = _log_b(w, b)
    if log_b.size != n:
        raise DomainError(f"b must have {n} entries, got {log_b.size}")
    coefficients = coefficients_52(w, b)
    g = geo_means(w, a).values
    return VerificationResult.make(np.sum(coefficients * g), np.sum(a), tol, coefficients=coefficients)


def carleman_ratio(w, a):
    """(sum G_n) / (sum a_n); any valid constant E bounds it."""
    a = as_sequence(a)
    total = float(np.sum(a))
    if total == 0:
        raise DomainError("Carleman ratio of the zero sequence")
    return float(np.sum(geo_means(w, a).values)) / total


def improvement_predicate(w, L):
    """lambda_2 / Lambda_2 > e^(-L): the solved-b_1 variant beats Bennett's constant."""
    if w.n_terms < 2:
        raise InsufficientDataError("improvement predicate needs at least 2 weights")
    return bool(w.lambdas[1] / w.prefix[1] > math.exp(-L))


def _solved_b1_log_factors(w, n, log_base):
    """log of min(base^(lambda_1/Lambda_k), base^(lambda_1/Lambda_n)) for k = 2..n."""
    lam1 = w.lambdas[0]
    exponents = lam1 / w.prefix[1:n]
    return np.minimum(exponents * log_base, lam1 / w.prefix[n - 1] * log_base)


def _log_expm1(x):
    """log(e^x - 1) for x > 0."""
    return x + math.log(-math.expm1(-x))


def verify_improved_bennett(w, a, L, tol=None):
    """
    e^(-L) G_1 + sum_{n>=2} c^(lambda_1/Lambda_N) (lambda_{n+1}/Lambda_{n+1})
    prod_{k<=n} (Lambda_k/lambda_k)^(lambda_k/Lambda_n) G_n <= sum a_n,
    with c = Lambda_2 (e^L - 1)/(lambda_1 e^L).
    """
    a = as_sequence(a)
    if not L > 0:
        raise DomainError(f"L must be positive, got {L}")
    n = a.size
    if w.n_terms < max(n + 1, 2):
        raise InsufficientDataError(f"need {max(n + 1, 2)} weights, only {w.n_terms} available")
    g = geo_means(w, a).values
    log_base = math.log(w.prefix[1] / w.lambdas[0]) + math.log(-math.expm1(-L))

    coefficients = np.empty(n)
    coefficients[0] = math.exp(-L)
    if n > 1:
        log_bennett = log_bennett_terms(w.truncate(n + 1))
        coefficients[1:] = np.exp(_solved_b1_log_factors(w, n, log_base) - log_bennett[1:n])
    return VerificationResult.make(np.sum(coefficients * g), np.sum(a), tol, coefficients=coefficients,
                                   improves=improvement_predicate(w, L))


def verify_improved_expm(w, a, L, M, tol=None):
    """
    G_1 + sum_{n>=2} c^(lambda_1/Lambda_N) Lambda_n (e^(M lambda_n/Lambda_n)/lambda_n - 1/lambda_{n+1}) G_n
    <= e^M sum a_n, with c = lambda_2 (e^L - 1)/lambda_1.

    When e^M or the c factor would leave the float range, both sides and the
    coefficients are reported divided by e^S, with S in details['log_scale'].
    """
    a = as_sequence(a)
    if not L > 0:
        raise DomainError(f"L must be positive, got {L}")
    if not math.isfinite(M):
        raise DomainError(f"M must be finite, got {M}")
    if L > M:
        logger.warning(f"improved ExpM check with L={L} > M={M}; the display is only derived for L <= M")
    n = a.size
    if w.n_terms < max(n + 1, 2):
        raise InsufficientDataError(f"need {max(n + 1, 2)} weights, only {w.n_terms} available")
    g = geo_means(w, a).values
    r = ratios(w)
    log_base = math.log(w.lambdas[1] / w.lambdas[0]) + _log_expm1(L)
    log_factors = _solved_b1_log_factors(w, n, log_base) if n > 1 else np.empty(0)

    top = M + max(0.0, float(np.max(log_factors, initial=0.0)))
    scale = top if top > config.LOG_SCALE_THRESHOLD else 0.0

    coefficients = np.empty(n)
    coefficients[0] = math.exp(-scale)
    if n > 1:
        coefficients[1:] = (r[1:n] * np.exp(log_factors + M / r[1:n] - scale)
                            - (r[2:n + 1] - 1.0) * np.exp(log_factors - scale))
    return VerificationResult.make(np.sum(coefficients * g), math.exp(M - scale) * np.sum(a), tol,
                                   coefficients=coefficients, consistent=L <= M, log_scale=scale)
