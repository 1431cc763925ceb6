from dataclasses import dataclass, field
from pathlib import Path
import logging
import math

import numpy as np

from hardy.errors import DomainError, WeightError
from utils.summation import compensated_cumsum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightSpec:
    """
    Description of a weight family, as given on the command line.

    Purpose:
        - Parses the weight-spec strings `const`, `power:alpha=<real>`, `harmonic`,
          `file:<path>` and `random:seed=<int>`.
        - Holds an explicit list of weights for programmatic use (`kind='explicit'`).

    Usage:
        spec = WeightSpec.parse('power:alpha=0.5')
        w = make_weights(spec, 1000)

        # Output:
        #   WeightSpec(kind='power', alpha=0.5, ...)
    """
    kind: str
    alpha: float = 1.0
    path: str = None
    seed: int = 0
    values: tuple = ()

    @classmethod
    def parse(cls, text):
        text = text.strip()
        kind, _, rest = text.partition(':')
        kind = kind.lower()
        if kind in ('const', 'constant', 'cesaro'):
            return cls('const')
        if kind == 'harmonic':
            return cls('harmonic')
        if kind == 'power':
            params = _parse_params(rest, text, ('alpha',))
            if 'alpha' not in params:
                raise WeightError(f"weight spec '{text}' is missing alpha=<real>")
            alpha = _parse_real(params['alpha'], text)
            return cls('power', alpha=alpha)
        if kind == 'file':
            if not rest:
                raise WeightError(f"weight spec '{text}' is missing a path")
            return cls('file', path=rest)
        if kind == 'random':
            params = _parse_params(rest, text, ('seed',))
            try:
                seed = int(params.get('seed', 0))
            except ValueError:
                raise WeightError(f"weight spec '{text}': seed must be an integer")
            return cls('random', seed=seed)
        raise WeightError(f"unknown weight spec '{text}' (expected one of const, power:alpha=<real>, harmonic, file:<path>, random:seed=<int>)")

    @classmethod
    def explicit(cls, values):
        return cls('explicit', values=tuple(float(v) for v in values))

    def __str__(self):
        if self.kind == 'power':
            return f"power:alpha={self.alpha!r}"
        if self.kind == 'file':
            return f"file:{self.path}"
        if self.kind == 'random':
            return f"random:seed={self.seed}"
        if self.kind == 'explicit':
            return f"explicit:{len(self.values)}"
        return self.kind


def _parse_params(rest, text, allowed):
    params = {}
    for item in filter(None, rest.split(',')):
        key, sep, value = item.partition('=')
        if not sep:
            raise WeightError(f"weight spec '{text}': expected key=value, got '{item}'")
        key = key.strip().lower()
        if key not in allowed:
            raise WeightError(f"weight spec '{text}': unknown parameter '{key}' (expected {', '.join(allowed)})")
        params[key] = value.strip()
    return params


def _parse_real(value, text):
    try:
        x = float(value)
    except ValueError:
        raise WeightError(f"weight spec '{text}': '{value}' is not a real number")
    if not math.isfinite(x):
        raise WeightError(f"weight spec '{text}': '{value}' is not finite")
    return x


def load_weight_file(path):
    """
    Reads a weight file: UTF-8, one strictly positive decimal per line, no header.
    Blank lines are skipped. Errors report the 1-based line number.
    """
    values = []
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise WeightError(f"cannot read weight file '{path}': {e}")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            x = float(line)
        except ValueError:
            raise WeightError(f"'{line}' is not a decimal number", line=lineno)
        if not math.isfinite(x):
            raise WeightError(f"'{line}' is not finite", line=lineno)
        if x <= 0:
            raise WeightError(f"weight {line} is not strictly positive", line=lineno)
        values.append(x)
    if not values:
        raise WeightError(f"weight file '{path}' contains no weights")
    logger.debug(f"Loaded {len(values)} weights from {path}")
    return values


@dataclass(frozen=True)
class Exponent:
    """The exponent p in (1, inf) and its conjugate q = p/(p-1)."""
    p: float
    q: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p <= 1:
            raise DomainError(f"exponent p must lie in (1, inf), got {self.p}")
        object.__setattr__(self, 'p', p)
        object.__setattr__(self, 'q', p / (p - 1.0))

    @classmethod
    def from_p(cls, p):
        return cls(p)


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """
    Positive weights lambda_1..lambda_N of a weighted mean matrix with their prefix sums.

    Purpose:
        - Validates lambda_n > 0 and finiteness.
        - Holds Lambda_n = lambda_1 + ... + lambda_n (compensated summation).
        - Shared, read-only input of every calculator (arrays are frozen).

    Usage:
        w = make_weights('harmonic', 3)
        w.lambdas   # array([1. , 0.5, 0.3333...])
        w.prefix    # array([1. , 1.5, 1.8333...])
        w.ratios()  # array([1. , 3. , 5.5])
    """
    lambdas: np.ndarray
    prefix: np.ndarray = None

    def __post_init__(self):
        lambdas = np.array(self.lambdas, dtype=float).ravel()
        if lambdas.size == 0:
            raise WeightError("weight sequence is empty")
        if not np.all(np.isfinite(lambdas)):
            bad = int(np.flatnonzero(~np.isfinite(lambdas))[0]) + 1
            raise WeightError(f"weight lambda_{bad} is not finite")
        if np.any(lambdas <= 0):
            bad = int(np.flatnonzero(lambdas <= 0)[0]) + 1
            raise WeightError(f"weight lambda_{bad} = {lambdas[bad - 1]} is not strictly positive")
        if self.prefix is None:
            prefix = compensated_cumsum(lambdas)
        else:
            prefix = np.array(self.prefix, dtype=float).ravel()
            if prefix.shape != lambdas.shape:
                raise WeightError("prefix sums do not match the weights")
        lambdas.flags.writeable = False
        prefix.flags.writeable = False
        object.__setattr__(self, 'lambdas', lambdas)
        object.__setattr__(self, 'prefix', prefix)

    @property
    def n_terms(self):
        return self.lambdas.size

    def __len__(self):
        return self.n_terms

    def truncate(self, n):
        """First n terms; prefix sums are reused so nested sections agree exactly."""
        if not 1 <= n <= self.n_terms:
            raise WeightError(f"cannot take {n} terms from a sequence of {self.n_terms}")
        return WeightSequence(self.lambdas[:n], self.prefix[:n])

    def ratios(self):
        return ratios(self)


def make_weights(kind, n_terms):
    """
    Builds a validated WeightSequence of `n_terms` weights.
    `kind` is a WeightSpec, a weight-spec string, or a list of explicit weights.
    """
    if isinstance(kind, str):
        spec = WeightSpec.parse(kind)
    elif isinstance(kind, WeightSpec):
        spec = kind
    else:
        spec = WeightSpec.explicit(kind)

    n_terms = int(n_terms)
    if n_terms < 1:
        raise WeightError(f"n_terms must be at least 1, got {n_terms}")

    n = np.arange(1, n_terms + 1, dtype=float)
    if spec.kind == 'const':
        lambdas = np.ones(n_terms)
    elif spec.kind == 'power':
        lambdas = n ** spec.alpha
    elif spec.kind == 'harmonic':
        lambdas = 1.0 / n
    elif spec.kind == 'random':
        rng = np.random.default_rng(spec.seed)
        lambdas = np.exp(rng.uniform(-2.0, 2.0, size=n_terms))
    elif spec.kind in ('explicit', 'file'):
        values = spec.values if spec.kind == 'explicit' else load_weight_file(spec.path)
        if len(values) == 0:
            raise WeightError("explicit weight list is empty")
        if n_terms > len(values):
            raise WeightError(f"requested {n_terms} terms but only {len(values)} weights are available")
        lambdas = np.asarray(values[:n_terms], dtype=float)
    else:
        raise WeightError(f"unknown weight kind '{spec.kind}'")

    return WeightSequence(lambdas)


def ratios(w):
    """R_n = Lambda_n / lambda_n for n = 1..N; R_1 = 1."""
    r = w.prefix / w.lambdas
    r[0] = 1.0
    return r
