from fractions import Fraction

import numpy as np
import pytest

from smld.exppoly import (
    ExpPoly,
    NotPositiveSpectrum,
    Term,
    TolTooCoarse,
    ZeroFunction,
    companion_matrix,
    from_linear_orbit,
    isolate_zeros,
    recurrence_terms,
    recurrence_zero_set,
)

one = Fraction(1)
quadratic = (  # (x - 1)(x - 2)
    ExpPoly.exponential(1, one, 2) - ExpPoly.exponential(3, one, 1) + Fraction(2)
)


def test_exppoly_canonical():
    ep = ExpPoly([Term(1.0, 0.5, 0), Term(2.0, 0.5, 0), Term(1.0, 0.0, 1)])
    assert len(ep) == 2
    assert [t.key() for t in ep.terms] == [(0.0, 1), (0.5, 0)]
    assert ep.terms[1].c == 3.0
    assert ExpPoly([Term(1.0, 0.1), Term(-1.0, 0.1)]).is_zero()
    assert ExpPoly().weight == 0
    assert quadratic.weight == 6

    with pytest.raises(ValueError):
        Term(1.0, 0.0, -1)
    with pytest.raises(ValueError):
        ExpPoly.exponential(1.0, -2.0)


def test_exppoly_exact_bases():
    ep = ExpPoly.exponential(Fraction(1, 3), 2) * ExpPoly.exponential(3, Fraction(1, 2))
    assert len(ep) == 1
    assert ep.terms[0].c == 1
    assert ep.terms[0].base == 1
    assert np.isclose(ep(7.3), 1.0)

    ep = ExpPoly.exponential(1, 2) ** 3
    assert ep.terms[0].base == 8
    assert np.isclose(ep(0.5), 8**0.5)
    assert (ExpPoly.exponential(1, 2) ** 0)(5.0) == 1.0


def test_exppoly_evaluate():
    xs = np.array([0.0, 1.0, 1.5, 2.0])
    assert np.allclose(quadratic(xs), [2.0, 0.0, -0.25, 0.0])
    assert ExpPoly()(3.0) == 0.0

    ep = ExpPoly.exponential(2.0, np.e, 1)  # 2 x e^x
    assert np.isclose(ep(1.5), 3.0 * np.exp(1.5))
    assert np.isclose(ep.scaled(1.5), 3.0)
    assert np.isclose((ep - ExpPoly.exponential(1.0, np.e)).scaled_magnitude(2.0), 5.0)
    assert np.isfinite(ep.scaled(1e4))


def test_exppoly_substitute():
    ep = ExpPoly.exponential(1, 2)
    sub = ep.substitute(2, 1)  # 2^(2x + 1) = 2 * 4^x
    assert sub.terms[0].base == 4
    assert sub.terms[0].c == 2
    assert np.isclose(sub(1.5), 16.0)

    ep = ExpPoly.exponential(1, 3, 1)  # x 3^x
    sub = ep.substitute(2, 3)
    assert np.isclose(sub(0.25), 3.5 * 3**3.5)
    assert np.isclose(ep.substitute(0.5, 0.25)(1.0), 0.75 * 3**0.75)


def test_exppoly_differentiate():
    ep = ExpPoly.exponential(1.0, np.e, 2)  # x^2 e^x
    d = ep.differentiate()
    x = 0.7
    assert np.isclose(d(x), (x**2 + 2 * x) * np.exp(x))
    assert quadratic.differentiate().weight == 3
    assert ExpPoly.constant(5.0).differentiate().is_zero()


def test_exppoly_is_zero_at():
    assert quadratic.is_zero_at(1.0)
    assert quadratic.is_zero_at(2.0)
    assert not quadratic.is_zero_at(1.5)
    ep = ExpPoly.exponential(1.0, 2.0) - 4.0
    assert ep.is_zero_at(2.0, rtol=1e-12)


def test_exppoly_to_list():
    ep = ExpPoly.from_list([{"c": 2.0, "mu": 0.5, "d": 1}])
    assert ep.to_list() == [{"c": 2.0, "mu": 0.5, "d": 1}]


def test_from_linear_orbit():
    g = np.array([[2.0, 1.0], [0.0, 2.0]])
    ep = from_linear_orbit(g, [0.0, 1.0], [1.0, 0.0])  # x 2^(x - 1)
    assert np.isclose(ep(3.0), 12.0)
    assert np.isclose(ep(2.5), 2.5 * 2**1.5)
    assert all(isinstance(t.c, Fraction) for t in ep.terms)

    g = np.array([[1.5, 0.3], [0.2, 1.1]])
    v, w = np.array([0.3, -0.7]), np.array([1.0, 2.0])
    ep = from_linear_orbit(g, v, w)
    for m in range(5):
        assert np.isclose(ep(m), w @ np.linalg.matrix_power(g, m) @ v)


def test_isolate_zeros():
    brackets = isolate_zeros(quadratic, 0.0, 5.0, tol=1e-12)
    assert len(brackets) == 2
    assert np.isclose(brackets[0].midpoint, 1.0)
    assert np.isclose(brackets[1].midpoint, 2.0)

    ep = ExpPoly.exponential(1.0, 2.0) - 3.0
    brackets = isolate_zeros(ep, 0.0, 10.0, tol=1e-12)
    assert len(brackets) == 1
    assert np.isclose(brackets[0].midpoint, np.log2(3.0))

    assert isolate_zeros(ExpPoly.exponential(1.0, 2.0) + 1.0, 0.0, 10.0) == []
    assert isolate_zeros(quadratic, 3.0, 5.0) == []


def test_isolate_zeros_tangential():
    ep = ExpPoly.exponential(1, one, 2)  # x^2
    brackets = isolate_zeros(ep, -1.0, 1.0)
    assert len(brackets) == 1
    assert brackets[0].tangential

    square = quadratic * quadratic  # double zeros at 1 and 2
    brackets = isolate_zeros(square, 0.0, 3.0, tol=1e-9)
    assert len(brackets) == 2
    assert np.isclose(brackets[0].midpoint, 1.0, atol=1e-6)
    assert np.isclose(brackets[1].midpoint, 2.0, atol=1e-6)


def test_isolate_zeros_errors():
    with pytest.raises(ZeroFunction):
        isolate_zeros(ExpPoly(), 0.0, 1.0)
    with pytest.raises(ValueError):
        isolate_zeros(quadratic, 1.0, 0.0)
    with pytest.raises(TolTooCoarse):
        # critical points at 1.5 +/- 1e-3 cannot be separated at width 1
        cubic = ExpPoly.exponential(1.0, 1.0, 3) - ExpPoly.exponential(4.5, 1.0, 2)
        cubic = cubic + ExpPoly.exponential(6.749997, 1.0, 1)
        isolate_zeros(cubic, 0.0, 3.0, tol=1.0)


def test_companion_matrix():
    c = companion_matrix([3.0, -2.0])
    assert np.all(c == [[0.0, 1.0], [-2.0, 3.0]])
    assert np.all(c @ [7.0, 6.0] == [6.0, 4.0])


def test_recurrence_terms():
    assert recurrence_terms([3, -2], [7, 6], 4) == [7, 6, 4, 0, -8]
    assert recurrence_terms([1, 1], [0, 1], 6) == [0, 1, 1, 2, 3, 5, 8]


def test_recurrence_zero_set():
    assert recurrence_zero_set([3, -2], [7, 6], 100) == [3]
    assert recurrence_zero_set([3, -2], [7, 6], 2) == []
    assert recurrence_zero_set([2, -1], [-3, 1], 50) == []  # -3 + 4n
    assert recurrence_zero_set([2, -1], [-4, -3], 50) == [4]
    assert recurrence_zero_set([1], [0], 5) == [0, 1, 2, 3, 4, 5]
    assert recurrence_zero_set([0.5], [1.0], 30) == []


def test_recurrence_zero_set_errors():
    with pytest.raises(NotPositiveSpectrum):
        recurrence_zero_set([0, 1], [1, 0], 10)
    with pytest.raises(NotPositiveSpectrum):
        recurrence_zero_set([1, -1], [1, 0], 10)
    with pytest.raises(ValueError):
        recurrence_zero_set([1, 1], [1], 10)


def characteristic_coeffs(roots: list[Fraction]) -> list[Fraction]:
    poly = [Fraction(1)]
    for r in roots:
        poly = [a - r * b for a, b in zip(poly + [0], [0] + poly)]
    return [-c for c in poly[1:]]


def test_recurrence_zero_set_random():
    assert recurrence_zero_set([3, -2], [7, 6], 500) == [3]  # 8 - 2^n

    rng = np.random.default_rng(21)
    choices = [Fraction(k, 2) for k in range(1, 7)]
    for i in range(10):
        k = int(rng.integers(2, 4))
        roots = [choices[j] for j in rng.choice(len(choices), k, replace=False)]
        coeffs = characteristic_coeffs(roots)
        if i % 2 == 0:
            # r2^m r1^n - r1^m r2^n vanishes at n = m
            m = int(rng.integers(0, 40))
            r1, r2 = roots[:2]
            init = [r2**m * r1**n - r1**m * r2**n for n in range(k)]
        else:
            init = [Fraction(int(a)) for a in rng.integers(-5, 6, k)]

        terms = recurrence_terms(coeffs, init, 500)
        expected = [n for n, a in enumerate(terms) if a == 0]
        assert recurrence_zero_set(coeffs, init, 500) == expected
        if i % 2 == 0:
            assert m in expected


def test_isolate_zeros_random():
    rng = np.random.default_rng(22)
    xs = np.linspace(0.0, 10.0, 20001)
    for _ in range(200):
        ep = ExpPoly(
            [
                Term(c, mu, int(d))
                for c, mu, d in zip(
                    rng.normal(size=3), rng.uniform(-1.0, 1.0, 3), rng.integers(0, 3, 3)
                )
            ]
        )
        brackets = isolate_zeros(ep, 0.0, 10.0)
        assert len(brackets) <= ep.weight - 1
        for a, b in zip(brackets[:-1], brackets[1:]):
            assert a.hi < b.lo

        values = ep.scaled(xs)
        clear = np.abs(values) > 1e-9 * ep.scaled_magnitude(xs)
        flips = np.flatnonzero(
            (values[:-1] * values[1:] < 0.0) & clear[:-1] & clear[1:]
        )
        for i in flips:
            assert any(r.lo <= xs[i + 1] and r.hi >= xs[i] for r in brackets)
