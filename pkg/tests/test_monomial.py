import numpy as np
import pytest

from smld.monomial import (
    DimensionTooLarge,
    MonomialMap,
    MonomialOrbit,
    OutsideBasin,
    apply_monomial,
    interpolate_monomial_orbit,
    normalize_scale,
    sign_map,
    sign_orbit,
    sign_period_B,
)

cat_map = MonomialMap([[2, 1], [1, 1]], [1.0, 1.0])


def test_monomial_map_validation():
    with pytest.raises(ValueError):  # singular
        MonomialMap([[1, 1], [1, 1]], [1.0, 1.0])
    with pytest.raises(ValueError):  # M^2 = I
        MonomialMap([[0, 1], [1, 0]], [1.0, 1.0])
    with pytest.raises(ValueError):
        MonomialMap([[2, -1], [1, 1]], [1.0, 1.0])
    with pytest.raises(ValueError):
        MonomialMap([[2, 1], [1, 1]], [1.0])
    with pytest.raises(ValueError):
        MonomialMap([[2]], [0.0])

    assert cat_map.n == 2
    assert cat_map.strong
    assert not MonomialMap([[0, 1], [1, 1]], [1.0, 1.0]).strong
    assert np.all(MonomialMap([[3]], [-2.0]).scale_sign == [-1])


def test_apply_monomial():
    m = MonomialMap([[2, 1], [1, 1]], [2.0, 3.0])
    assert np.allclose(apply_monomial(m, [1.0, 2.0]), [4.0, 6.0])
    points = np.array([[1.0, 2.0], [0.5, 0.5]])
    assert np.allclose(m(points), [[4.0, 6.0], [0.25, 0.75]])

    # 0^0 = 1
    m = MonomialMap([[2, 0], [0, 3]], [1.0, 1.0])
    assert np.allclose(apply_monomial(m, [0.0, 0.5]), [0.0, 0.125])

    with pytest.raises(ValueError):
        apply_monomial(m, [1.0, 2.0, 3.0])


def test_sign_map():
    assert np.all(sign_map(cat_map.exponents, [1, -1]) == [-1, 1])
    assert np.all(sign_map(cat_map.exponents, [1, 1], [-1, 1]) == [-1, 1])
    assert np.all(sign_map(cat_map.exponents, [0, -1]) == [0, 0])
    assert np.all(sign_map([[2, 0], [0, 1]], [0, -1]) == [0, -1])


def test_sign_orbit():
    orbit = sign_orbit(cat_map.exponents, [1, -1])
    assert orbit.preperiod == 0
    assert orbit.period == 3
    assert np.all(orbit.at(1) == [-1, 1])
    assert np.all(orbit.at(2) == [-1, -1])
    assert np.all(orbit.at(4) == [-1, 1])

    orbit = sign_orbit([[2]], [-1])
    assert orbit.preperiod == 1
    assert orbit.period == 1


def test_sign_period_B():
    assert sign_period_B(cat_map.exponents) == 3
    assert sign_period_B([[2]], [-1]) == 1
    assert sign_period_B([[3]], [-1]) == 2
    assert sign_period_B(np.eye(4, dtype=int) * 3) == 1
    assert sign_period_B(cat_map.exponents, workers=2) == 3

    with pytest.raises(DimensionTooLarge):
        sign_period_B(np.eye(3, dtype=int) * 2, max_states=4)


def test_normalize_scale():
    mu, normalized = normalize_scale(MonomialMap([[2]], [4.0]))
    assert np.allclose(mu, [0.25])
    assert np.all(normalized.scale == [1.0])

    m = MonomialMap([[2, 1], [1, 1]], [0.5, -3.0])
    mu, normalized = normalize_scale(m)
    assert np.all(normalized.scale == [1.0, -1.0])
    x = np.array([0.3, -0.2])
    assert np.allclose(apply_monomial(m, mu * x) / mu, apply_monomial(normalized, x))


def test_monomial_orbit():
    orbit = MonomialOrbit(cat_map, [0.5, -0.5])
    assert orbit.period == 3
    assert orbit.transient == 0
    assert np.allclose(orbit(0.0), [0.5, -0.5])
    assert np.allclose(orbit(1.0), orbit.iterate(3), rtol=1e-10, atol=0.0)
    assert np.allclose(orbit(1.0), [0.5**21, -(0.5**13)], rtol=1e-10, atol=0.0)

    z = orbit(0.4)
    for _ in range(3):
        z = apply_monomial(cat_map, z)
    assert np.allclose(orbit(1.4), z, rtol=1e-8, atol=0.0)

    with pytest.raises(ValueError):
        orbit(-1.0)


def test_monomial_orbit_scaled():
    m = MonomialMap([[2]], [-4.0])
    a = [0.1]
    orbit = MonomialOrbit(m, a)
    assert orbit.transient == 1
    assert np.allclose(orbit(0.0), orbit.iterate(1))
    assert np.allclose(orbit(2.0), orbit.iterate(1 + 2 * orbit.period), rtol=1e-10)
    assert np.isclose(interpolate_monomial_orbit(m, a, 0.5)[0], orbit(0.5)[0])


def test_monomial_orbit_zero_component():
    m = MonomialMap([[2, 1], [0, 2]], [1.0, 1.0])
    orbit = MonomialOrbit(m, [0.0, 0.5])
    assert np.all(orbit.support == [1])
    assert np.allclose(orbit(0.0), [0.0, 0.5])
    assert np.allclose(orbit(1.0), orbit.iterate(orbit.period))


def test_monomial_orbit_period_doubling():
    m = MonomialMap([[0, 1], [1, 1]], [1.0, 1.0])
    orbit = MonomialOrbit(m, [0.5, 0.6])
    assert orbit.period % 2 == 0
    assert np.allclose(orbit(1.0), orbit.iterate(orbit.period), rtol=1e-10, atol=0.0)


def test_monomial_orbit_outside_basin():
    with pytest.raises(OutsideBasin):
        MonomialOrbit(MonomialMap([[2]], [1.0]), [2.0])
    with pytest.raises(ValueError):
        MonomialOrbit(cat_map, [0.5])
    with pytest.raises(ValueError):
        MonomialOrbit(cat_map, [0.5, -0.5], period=2)


def random_monomial_map(rng: np.random.Generator) -> MonomialMap:
    while True:
        n = int(rng.integers(1, 4))
        m = rng.integers(0, 4, size=(n, n))
        if round(np.linalg.det(m - np.eye(n))) == 0:
            continue
        scale = rng.choice([-1.0, 1.0], n) * rng.uniform(0.5, 4.0, n)
        try:
            return MonomialMap(m, scale)
        except ValueError:  # singular or a root of unity
            continue


def test_normalize_scale_random():
    mu, normalized = normalize_scale(MonomialMap([[2]], [-8.0]))
    assert mu[0] == 0.125
    assert np.all(normalized.scale == [-1.0])

    rng = np.random.default_rng(21)
    for _ in range(50):
        m = random_monomial_map(rng)
        mu, normalized = normalize_scale(m)
        assert np.all(np.abs(normalized.scale) == 1.0)
        assert np.all(normalized.scale == np.sign(m.scale))

        x = rng.uniform(0.2, 0.9, (10, m.n)) * rng.choice([-1.0, 1.0], (10, m.n))
        lhs = apply_monomial(m, mu * x) / mu
        assert np.allclose(lhs, apply_monomial(normalized, x), rtol=1e-10, atol=0.0)


golden_orbits = [
    (cat_map, [0.5, -0.5], 3),
    (MonomialMap([[2]], [-4.0]), [0.1], 1),
    (MonomialMap([[3]], [-1.0]), [0.5], 2),
    (MonomialMap([[2, 1], [0, 2]], [1.0, 1.0]), [0.0, 0.5], 1),
    (MonomialMap([[0, 1], [1, 1]], [1.0, 1.0]), [0.5, 0.6], None),
]


@pytest.mark.parametrize("m, a, period", golden_orbits)
def test_monomial_orbit_functional_equation(m: MonomialMap, a: list, period: int):
    orbit = MonomialOrbit(m, a)
    if period is not None:
        assert orbit.period == period

    rng = np.random.default_rng(22)
    for x in rng.uniform(0.0, 10.0, 20):
        z = orbit(x)
        for _ in range(orbit.period):
            z = apply_monomial(m, z)
        assert np.allclose(orbit(x + 1.0), z, rtol=1e-8, atol=1e-300)

    for k in range((25 - orbit.transient) // orbit.period + 1):
        expected = orbit.iterate(orbit.transient + k * orbit.period)
        assert np.allclose(orbit(float(k)), expected, rtol=1e-8, atol=1e-300)
