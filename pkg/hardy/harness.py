from dataclasses import dataclass, asdict
import logging

import numpy as np

import config
from hardy.bounds import BoundCalculator
from hardy.carleman import verify_52, verify_improved_bennett, verify_improved_expm, verify_ps
from hardy.errors import DomainError
from hardy.opnorm import verify_53, verify_54, verify_hardy_improvement, verify_weighted_hardy
from hardy.weights import Exponent, WeightSequence, WeightSpec, ratios
from utils.weights_helper import get_shared_weights

logger = logging.getLogger(__name__)

INEQUALITIES = ('ps', '52', '53', '54', 'hardy', 'improved-bennett', 'improved-expm', 'hardy-improved')

# None: fresh lambda_n = exp(uniform(-2, 2)) per trial
DEFAULT_WEIGHTS = {
    'ps': None,
    '52': None,
    '53': None,
    '54': None,
    'hardy': 'const',
    'improved-bennett': 'const',
    'improved-expm': 'const',
    'hardy-improved': None,
}


@dataclass(frozen=True)
class TrialSettings:
    """Everything needed to rebuild trial `i` of one inequality from its seed alone."""
    inequality: str
    p: float = None
    L: float = None
    M: float = None
    weights: str = None
    n_max: int = config.DEFAULT_N_VERIFY
    base_seed: int = config.DEFAULT_SEED
    tol: float = config.VERIFY_TOL

    def __post_init__(self):
        if self.inequality not in INEQUALITIES:
            raise DomainError(f"unknown inequality '{self.inequality}' (expected one of {', '.join(INEQUALITIES)})")
        if self.n_max < 1:
            raise DomainError(f"n_max must be at least 1, got {self.n_max}")


@dataclass(frozen=True)
class TrialOutcome:
    inequality: str
    trial: int
    seed: int
    n: int
    p: float
    passed: bool
    lhs: float = None
    rhs: float = None
    residual: float = None
    relative_residual: float = None
    skipped: bool = False

    def as_row(self):
        return asdict(self)


class TrialRunner:
    """
    Builds seeded random instances and runs one verifier on each.

    Purpose:
        - Trial i uses numpy's default_rng(base_seed + i), so any single trial
          can be replayed from the seed in a report.
        - Draws N uniformly in [1, n_max], p from {1.5, 2, 3} unless fixed,
          a_n = exp(uniform(-3, 3)) and b_n = exp(uniform(-1, 1)).

    Usage:
        runner = TrialRunner(TrialSettings('54', p=2.0))
        outcome = runner.run(0)

        # Output:
        #   TrialOutcome(inequality='54', trial=0, seed=42, n=..., passed=True, ...)
    """
    def __init__(self, settings):
        self.settings = settings
        spec = settings.weights if settings.weights is not None else DEFAULT_WEIGHTS[settings.inequality]
        self.spec = WeightSpec.parse(spec) if isinstance(spec, str) else spec

    def _weights(self, rng, n_terms):
        if self.spec is None:
            return WeightSequence(np.exp(rng.uniform(-2.0, 2.0, size=n_terms)))
        return get_shared_weights(self.spec, self.settings.n_max + 1).truncate(n_terms)

    def _hardy_L(self, w, e):
        if self.settings.L is not None:
            return self.settings.L
        calc = BoundCalculator(w)
        if w.n_terms >= 2:
            cartlidge = calc.cartlidge_L().value
            if 0 < cartlidge < e.p:
                return cartlidge
        return calc.min_L_thm31(e)

    def run(self, trial_index):
        s = self.settings
        seed = s.base_seed + trial_index
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, s.n_max + 1))
        p = float(s.p) if s.p is not None else float(rng.choice(config.TRIAL_EXPONENTS))
        e = Exponent(p)
        a = np.exp(rng.uniform(-3.0, 3.0, size=n))

        kind = s.inequality
        if kind == 'hardy-improved':
            result = verify_hardy_improvement(e, a, s.tol)
        elif kind == 'hardy':
            w = self._weights(rng, n)
            L = self._hardy_L(w, e)
            if L is None:
                logger.debug(f"trial {trial_index}: no feasible L < p for the weighted Hardy check, skipped")
                return TrialOutcome(kind, trial_index, seed, n, p, passed=True, skipped=True)
            result = verify_weighted_hardy(w, e, a, L, s.tol)
        else:
            w = self._weights(rng, n + 1)
            if kind == 'ps':
                # b_n^(R_n) stays within [1/e, e]
                r = ratios(w)[:n]
                b = np.exp(rng.uniform(-1.0, 1.0, size=n) / r)
                result = verify_ps(w, a, b, s.tol)
            elif kind == '52':
                result = verify_52(w, a, np.exp(rng.uniform(-1.0, 1.0, size=n)), s.tol)
            elif kind == '53':
                result = verify_53(w, e, a, np.exp(rng.uniform(-1.0, 1.0, size=n + 1)), s.tol)
            elif kind == '54':
                result = verify_54(w, e, a, np.exp(rng.uniform(-1.0, 1.0, size=n)), s.tol)
            elif kind == 'improved-bennett':
                result = verify_improved_bennett(w, a, s.L if s.L is not None else 1.0, s.tol)
            else:
                m_log = BoundCalculator(w).m_log().value
                M = max(s.M if s.M is not None else 1.0, m_log)
                L = s.L if s.L is not None else M
                result = verify_improved_expm(w, a, L, M, s.tol)

        if not result.passed:
            logger.warning(f"{kind} trial {trial_index} (seed {seed}, N={n}, p={p}) failed: "
                           f"lhs={result.lhs!r} rhs={result.rhs!r}")
        return TrialOutcome(
            inequality=kind,
            trial=trial_index,
            seed=seed,
            n=n,
            p=p,
            passed=result.passed,
            lhs=result.lhs,
            rhs=result.rhs,
            residual=result.residual,
            relative_residual=result.relative_residual,
        )


def run_trial_chunk(settings, start, stop):
    """Trials start..stop-1 in index order. Top-level so process pools can pickle it."""
    runner = TrialRunner(settings)
    return [runner.run(i) for i in range(start, stop)]


def chunk_ranges(trials, n_chunks):
    """Splits range(trials) into at most n_chunks contiguous (start, stop) pairs."""
    n_chunks = max(1, min(n_chunks, trials))
    bounds = np.linspace(0, trials, n_chunks + 1).astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def summarize(outcomes):
    """Pass counts and the worst (most negative relative) residual with its seed."""
    checked = [o for o in outcomes if not o.skipped]
    worst = min(checked, key=lambda o: o.relative_residual, default=None)
    passed = sum(o.passed for o in checked)
    return {
        'inequality': outcomes[0].inequality if outcomes else None,
        'trials': len(outcomes),
        'checked': len(checked),
        'passed': passed,
        'failed': len(checked) - passed,
        'skipped': len(outcomes) - len(checked),
        'pass': passed == len(checked),
        'worst_residual': None if worst is None else worst.residual,
        'worst_relative_residual': None if worst is None else worst.relative_residual,
        'worst_seed': None if worst is None else worst.seed,
        'worst_n': None if worst is None else worst.n,
    }
