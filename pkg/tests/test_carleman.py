import math

import mpmath
import numpy as np
import pytest

from hardy.bounds import BoundCalculator, log_bennett_terms
from hardy.carleman import (BKind, BStrategy, balance_terms, carleman_ratio, coefficients_52, geo_means,
                            improvement_predicate, make_b, make_log_b, verify_52, verify_improved_bennett,
                            verify_improved_expm, verify_ps)
from hardy.errors import DomainError, InsufficientDataError
from hardy.weights import WeightSequence, make_weights, ratios


def random_weights(rng, n):
    return WeightSequence(np.exp(rng.uniform(-2.0, 2.0, size=n)))


def near_extremal(n):
    """a_k = k^(k-1) / (k+1)^k: constant-weight geometric means are exactly 1/(n+1)."""
    k = np.arange(1, n + 1, dtype=float)
    return np.exp((k - 1) * np.log(k) - k * np.log1p(k))


# --- Geometric means ---
def test_geo_means_examples():
    g = geo_means(make_weights('const', 2), [1.0, 4.0])
    assert np.allclose(g.values, [1.0, 2.0], rtol=1e-15)
    assert len(g) == 2

    g = geo_means(make_weights('power:alpha=1', 2), [8.0, 1.0])
    assert g.values[1] == pytest.approx(2.0, rel=1e-15)


def test_geo_means_with_zero():
    g = geo_means(make_weights('const', 3), [2.0, 0.0, 3.0])
    assert g.values[0] == pytest.approx(2.0)
    assert list(g.values[1:]) == [0.0, 0.0]
    assert np.all(np.isneginf(g.log_values[1:]))


def test_geo_means_bounds_and_errors(rng):
    w = random_weights(rng, 100)
    a = np.exp(rng.uniform(-3, 3, size=100))
    g = geo_means(w, a).values
    running_min = np.minimum.accumulate(a)
    running_max = np.maximum.accumulate(a)
    assert np.all(g >= running_min * (1 - 1e-13))
    assert np.all(g <= running_max * (1 + 1e-13))
    with pytest.raises(InsufficientDataError):
        geo_means(w.truncate(10), a)
    with pytest.raises(DomainError):
        geo_means(w, -a)


def test_geo_means_match_high_precision(rng):
    mpmath.mp.dps = 40
    w = random_weights(rng, 60)
    a = np.exp(rng.uniform(-5, 5, size=60))
    g = geo_means(w, a).values
    lam = [mpmath.mpf(float(x)) for x in w.lambdas]
    values = [mpmath.mpf(float(x)) for x in a]
    for n in (1, 7, 30, 60):
        total = mpmath.fsum(lam[:n])
        expected = mpmath.exp(mpmath.fsum(lam[k] * mpmath.log(values[k]) for k in range(n)) / total)
        assert abs(g[n - 1] / float(expected) - 1) < 1e-13


def test_near_extremal_geometric_means():
    g = geo_means(make_weights('const', 500), near_extremal(500)).values
    assert np.allclose(g, 1.0 / np.arange(2, 502), rtol=1e-12)


# --- b strategies ---
def test_make_b_examples():
    w = make_weights('const', 4)
    n = np.arange(1, 4)
    assert np.allclose(make_b(BStrategy.exp_m(1.0), w), np.exp(1.0 / n), rtol=1e-15)
    assert np.allclose(make_b(BStrategy.thm_three_one(1.0, 2.0), w), 1 + 0.5 / n, rtol=1e-15)
    assert np.allclose(make_b(BStrategy.bennett(), w), (n + 1) / n, rtol=1e-15)
    assert np.allclose(make_b(BStrategy.third_choice(), w), np.exp(1.0 / n), rtol=1e-15)
    assert np.allclose(make_b(BStrategy.thm_one_one(1.0, 2.0), w), 1.0 / (1 - 0.5 / n), rtol=1e-15)
    assert list(make_b(BStrategy.explicit([1.5, 2.0]), w)) == [1.5, 2.0]
    assert BStrategy.bennett().kind == BKind.BENNETT


def test_make_b_rejects_bad_parameters():
    w = make_weights('const', 4)
    with pytest.raises(DomainError):
        make_b(BStrategy.exp_m(float('nan')), w)
    with pytest.raises(DomainError):
        make_b(BStrategy.thm_one_one(3.0, 2.0), w)
    with pytest.raises(DomainError):
        make_b(BStrategy.thm_three_one(0.0, 2.0), w)
    with pytest.raises(DomainError):
        make_b(BStrategy.explicit([1.0, 0.0]), w)
    with pytest.raises(InsufficientDataError):
        make_b(BStrategy.bennett(), make_weights('const', 1))


def test_balance_terms_identities(rng):
    for _ in range(20):
        w = random_weights(rng, int(rng.integers(2, 200)))
        assert np.allclose(balance_terms(w, make_b(BStrategy.bennett(), w)), 1.0, rtol=1e-10)
        p, L = 3.0, 1.2
        balance = balance_terms(w, make_b(BStrategy.thm_three_one(L, p), w))
        assert np.allclose(balance, 1 - L / p, rtol=1e-10)


@pytest.mark.parametrize("spec", ['const', 'power:alpha=1'])
@pytest.mark.parametrize("p, L", [(2.0, 1.0), (3.0, 1.2), (1.5, 0.5)])
def test_thm_three_one_balance_is_exact(spec, p, L):
    w = make_weights(spec, 100)
    balance = balance_terms(w, make_b(BStrategy.thm_three_one(L, p), w))
    assert balance.size == 99
    assert np.allclose(balance, 1 - L / p, rtol=1e-12, atol=0)


def test_balance_terms_need_next_weight():
    with pytest.raises(InsufficientDataError):
        balance_terms(make_weights('const', 3), [1.0, 1.0, 1.0])


# --- Carleman-side coefficients ---
def test_bennett_coefficients_are_reciprocal_terms(rng):
    for _ in range(20):
        w = random_weights(rng, int(rng.integers(2, 300)))
        coefficients = coefficients_52(w, make_b(BStrategy.bennett(), w))
        assert np.allclose(coefficients, np.exp(-log_bennett_terms(w)), rtol=1e-10)


def test_exp_m_coefficients_dominate_exp_minus_m(rng):
    for _ in range(20):
        w = random_weights(rng, int(rng.integers(2, 300)))
        M = BoundCalculator(w).m_log().value
        r = ratios(w)
        coefficients = coefficients_52(w, BStrategy.exp_m(M))
        assert np.all(np.isfinite(coefficients))
        expected = r[:-1] * np.exp(M / r[:-1] - M) - (r[1:] - 1) * np.exp(-M)
        assert np.allclose(coefficients, expected, rtol=1e-10)
        if M < 700:
            assert np.all(coefficients >= math.exp(-M) * (1 - 1e-10))


def test_exp_m_coefficients_with_huge_m():
    w = make_weights('power:alpha=-3', 100)
    M = BoundCalculator(w).m_log().value
    assert M > 1000
    with pytest.raises(DomainError):
        make_b(BStrategy.exp_m(M), w)
    coefficients = coefficients_52(w, BStrategy.exp_m(M))
    assert np.all(np.isfinite(coefficients))
    assert np.all(coefficients >= 0)
    assert coefficients[0] == pytest.approx(1.0)
    result = verify_52(w, np.ones(99), BStrategy.exp_m(M))
    assert result.passed
    assert result.lhs == pytest.approx(1.0)


def test_third_choice_coefficients_dominate(rng):
    for _ in range(20):
        w = random_weights(rng, int(rng.integers(2, 300)))
        m_sum = BoundCalculator(w).m_sum().per_index
        coefficients = coefficients_52(w, BStrategy.third_choice())
        assert np.all(np.isfinite(coefficients))
        small = m_sum < 700
        assert np.all(coefficients[small] >= np.exp(-m_sum[small]) * (1 - 1e-10))


def test_strategy_and_values_give_same_coefficients(rng):
    w = random_weights(rng, 40)
    strategy = BStrategy.thm_three_one(1.0, 2.0)
    assert np.allclose(coefficients_52(w, strategy), coefficients_52(w, make_b(strategy, w)), rtol=1e-9)
    assert np.allclose(make_b(BStrategy.third_choice(), w), np.exp(make_log_b(BStrategy.third_choice(), w)))


# --- Verifiers ---
def test_verify_ps_examples():
    w = make_weights('const', 2)
    equal = verify_ps(w, [1.0, 1.0], [1.0, 1.0])
    assert equal.lhs == 2.0 and equal.rhs == 2.0 and equal.passed

    result = verify_ps(w, [1.0, 1.0], [2.0, 2.0])
    assert result.lhs == pytest.approx(5.0)
    assert result.rhs == pytest.approx(6.0)
    assert result.passed

    with pytest.raises(DomainError):
        verify_ps(w, [1.0, 1.0], [1.0])


def test_verify_ps_right_side_past_float_range():
    w = WeightSequence([1.0, 998.0, 1.0])
    result = verify_ps(w, [1.0, 1.0, 1.0], [1.0, 1.0, math.e])
    assert result.lhs == pytest.approx(1000 * math.e)
    assert result.rhs == math.inf
    assert result.passed
    assert result.relative_residual == 1.0


def test_verify_ps_random(rng):
    for _ in range(300):
        n = int(rng.integers(1, 51))
        w = random_weights(rng, n)
        r = w.prefix / w.lambdas
        b = np.exp(rng.uniform(-1, 1, size=n) / r)
        assert verify_ps(w, np.exp(rng.uniform(-3, 3, size=n)), b).passed


def test_verify_52_strategies(rng):
    for _ in range(100):
        n = int(rng.integers(1, 51))
        w = random_weights(rng, n + 1)
        a = np.exp(rng.uniform(-3, 3, size=n))
        M = BoundCalculator(w).m_log().value
        for strategy in (BStrategy.bennett(), BStrategy.exp_m(M), BStrategy.third_choice(),
                         BStrategy.thm_three_one(1.0, 2.0)):
            result = verify_52(w, a, make_b(strategy, w))
            assert result.passed, strategy
            assert result.coefficients.size == n


def test_verify_52_zero_sequence():
    w = make_weights('const', 4)
    result = verify_52(w, np.zeros(3), make_b(BStrategy.bennett(), w))
    assert result.lhs == 0.0 and result.passed


# --- Carleman ratio ---
def test_carleman_ratio_cases():
    assert carleman_ratio(make_weights('const', 10), np.ones(10)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        carleman_ratio(make_weights('const', 3), np.zeros(3))


def test_near_extremal_ratio_approaches_e():
    n = 10000
    ratio = carleman_ratio(make_weights('const', n), near_extremal(n))
    assert ratio > 2.2
    assert ratio < math.e
    constants = BoundCalculator(make_weights('const', n + 1)).carleman_constants()
    assert ratio <= constants['best'] + 1e-9


def test_ratio_bounded_by_constants(rng):
    for _ in range(50):
        n = int(rng.integers(1, 200))
        w = random_weights(rng, n + 1)
        a = np.exp(rng.uniform(-3, 3, size=n))
        constants = BoundCalculator(w).carleman_constants()
        assert carleman_ratio(w, a) <= constants['best'] * (1 + 1e-10)


# --- Solved-b_1 improvements ---
def test_improvement_predicate():
    w = make_weights('const', 5)
    assert improvement_predicate(w, 1.0)
    assert not improvement_predicate(w, 0.5)
    with pytest.raises(InsufficientDataError):
        improvement_predicate(make_weights('const', 1), 1.0)


def test_improved_bennett_single_term():
    result = verify_improved_bennett(make_weights('const', 2), [3.0], 1.0)
    assert result.lhs == pytest.approx(3.0 * math.exp(-1.0))
    assert result.rhs == 3.0
    assert result.passed
    assert result.details['improves'] is True
    with pytest.raises(DomainError):
        verify_improved_bennett(make_weights('const', 2), [3.0], 0.0)
    with pytest.raises(InsufficientDataError):
        verify_improved_bennett(make_weights('const', 3), np.ones(3), 1.0)


def test_improved_bennett_random(rng):
    w = make_weights('const', 201)
    for _ in range(300):
        n = int(rng.integers(1, 201))
        assert verify_improved_bennett(w, np.exp(rng.uniform(-3, 3, size=n)), 1.0).passed


def test_improved_expm_single_term():
    result = verify_improved_expm(make_weights('const', 2), [2.0], 1.0, 1.0)
    assert result.lhs == 2.0
    assert result.rhs == pytest.approx(2.0 * math.e)
    assert result.details['consistent'] is True


def test_improved_expm_hand_example():
    result = verify_improved_expm(make_weights('const', 4), [1.0, 1.0, 1.0], 1.0, 1.0)
    factor = (math.e - 1) ** (1.0 / 3.0)
    expected = 1 + factor * (2 * math.exp(0.5) - 2 + 3 * math.exp(1.0 / 3.0) - 3)
    assert result.lhs == pytest.approx(expected, rel=1e-13)
    assert result.lhs == pytest.approx(3.9757, abs=1e-3)
    assert result.rhs == pytest.approx(3 * math.e)
    assert result.passed


def test_improved_expm_flags_inconsistent_parameters(caplog):
    result = verify_improved_expm(make_weights('const', 4), [1.0, 1.0, 1.0], 2.0, 1.0)
    assert result.details['consistent'] is False
    assert [r for r in caplog.records if 'L <= M' in r.getMessage()]
    with pytest.raises(DomainError):
        verify_improved_expm(make_weights('const', 4), [1.0], 1.0, float('inf'))
