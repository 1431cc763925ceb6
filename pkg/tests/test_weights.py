import math
from fractions import Fraction

import numpy as np
import pytest

from hardy.errors import DomainError, WeightError
from hardy.weights import Exponent, WeightSequence, WeightSpec, load_weight_file, make_weights, ratios


# --- WeightSpec ---
def test_parse_known_specs():
    assert WeightSpec.parse('const').kind == 'const'
    assert WeightSpec.parse('cesaro').kind == 'const'
    assert WeightSpec.parse('harmonic').kind == 'harmonic'

    spec = WeightSpec.parse('power:alpha=0.5')
    assert spec.kind == 'power'
    assert spec.alpha == 0.5
    assert str(spec) == 'power:alpha=0.5'

    spec = WeightSpec.parse('random:seed=7')
    assert (spec.kind, spec.seed) == ('random', 7)

    spec = WeightSpec.parse('file:/tmp/w.txt')
    assert (spec.kind, spec.path) == ('file', '/tmp/w.txt')


@pytest.mark.parametrize("text", ['bogus', 'power', 'power:alpha=abc', 'power:alpha=nan',
                                  'power:beta', 'file:', 'random:seed=x'])
def test_parse_rejects_bad_specs(text):
    with pytest.raises(WeightError):
        WeightSpec.parse(text)


@pytest.mark.parametrize("text, key", [('power:alpha=1,beta=2', 'beta'), ('random:seed=3,sead=4', 'sead')])
def test_parse_names_unknown_parameter(text, key):
    with pytest.raises(WeightError, match=f"unknown parameter '{key}'"):
        WeightSpec.parse(text)


# --- Weight files ---
def test_load_weight_file(tmp_path):
    path = tmp_path / "weights.txt"
    path.write_text("1\n\n2.5\n  0.25 \n", encoding='utf-8')
    assert load_weight_file(path) == [1.0, 2.5, 0.25]


@pytest.mark.parametrize("content, line", [
    ("1\nabc\n", 2),
    ("1\n2\n0\n", 3),
    ("-1\n", 1),
    ("1\ninf\n", 2),
])
def test_load_weight_file_reports_line(tmp_path, content, line):
    path = tmp_path / "bad.txt"
    path.write_text(content, encoding='utf-8')
    with pytest.raises(WeightError) as excinfo:
        load_weight_file(path)
    assert excinfo.value.line == line
    assert f"line {line}:" in str(excinfo.value)


def test_load_weight_file_missing_or_empty(tmp_path):
    with pytest.raises(WeightError):
        load_weight_file(tmp_path / "nope.txt")
    empty = tmp_path / "empty.txt"
    empty.write_text("\n\n", encoding='utf-8')
    with pytest.raises(WeightError):
        load_weight_file(empty)


def test_file_spec_builds_sequence(tmp_path):
    path = tmp_path / "w.txt"
    path.write_text("1\n2\n3\n", encoding='utf-8')
    w = make_weights(f"file:{path}", 2)
    assert list(w.lambdas) == [1.0, 2.0]
    with pytest.raises(WeightError):
        make_weights(f"file:{path}", 4)


# --- WeightSequence ---
def test_harmonic_prefix_and_ratios():
    w = make_weights('harmonic', 3)
    assert np.allclose(w.prefix, [1.0, 1.5, 11.0 / 6.0], rtol=1e-15)
    assert np.allclose(ratios(w), [1.0, 3.0, 5.5], rtol=1e-15)
    assert np.array_equal(w.ratios(), ratios(w))


def test_power_ratios_are_exact(power_one):
    r = ratios(power_one)
    n = np.arange(1, power_one.n_terms + 1)
    assert np.array_equal(r, (n + 1) / 2.0)


@pytest.mark.parametrize("values", [[], [1.0, 0.0], [1.0, -2.0], [1.0, float('nan')], [float('inf')]])
def test_sequence_validation(values):
    with pytest.raises(WeightError):
        WeightSequence(values)


def test_sequence_is_read_only():
    w = make_weights('const', 5)
    with pytest.raises(ValueError):
        w.lambdas[0] = 2.0
    with pytest.raises(ValueError):
        w.prefix[0] = 2.0


def test_truncate_reuses_prefix(rng):
    w = WeightSequence(np.exp(rng.uniform(-2, 2, size=100)))
    t = w.truncate(40)
    assert len(t) == 40
    assert np.array_equal(t.prefix, w.prefix[:40])
    with pytest.raises(WeightError):
        w.truncate(0)
    with pytest.raises(WeightError):
        w.truncate(101)


def test_prefix_sums_are_compensated(rng):
    values = np.exp(rng.uniform(-8, 8, size=5000))
    w = WeightSequence(values)
    exact = float(sum(Fraction(x) for x in values.tolist()))
    assert w.prefix[-1] == pytest.approx(exact, rel=4e-16)


def test_random_spec_is_seeded():
    a = make_weights('random:seed=3', 20)
    b = make_weights('random:seed=3', 20)
    c = make_weights('random:seed=4', 20)
    assert np.array_equal(a.lambdas, b.lambdas)
    assert not np.array_equal(a.lambdas, c.lambdas)
    assert np.all((a.lambdas >= math.exp(-2)) & (a.lambdas <= math.exp(2)))


def test_make_weights_from_list():
    w = make_weights([3.0, 1.0, 2.0], 2)
    assert list(w.prefix) == [3.0, 4.0]
    with pytest.raises(WeightError):
        make_weights('const', 0)


# --- Exponent ---
def test_exponent_conjugate():
    assert Exponent(2.0).q == 2.0
    assert Exponent.from_p(3).q == pytest.approx(1.5)
    assert Exponent(1.5).q == pytest.approx(3.0)


@pytest.mark.parametrize("p", [1.0, 0.5, -2.0, float('inf'), float('nan')])
def test_exponent_domain(p):
    with pytest.raises(DomainError):
        Exponent(p)
