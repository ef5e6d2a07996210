import math

import numpy as np
import pytest

from schottky_lab.errors import InvalidParameterError, PoleError
from schottky_lab.mobius import (
    INFINITY,
    MobiusMap,
    angle_to_point,
    bracket,
    mobius_apply,
    mobius_derivative,
    point_to_angle,
    sphere_derivative,
    sphere_distance,
)


def random_map(rng: np.random.Generator) -> MobiusMap:
    while True:
        a, b, c, d = rng.uniform(-3.0, 3.0, size=4)
        if a * d - b * c > 0.1:
            return MobiusMap.from_entries(a, b, c, d)


class TestMobiusMap:

    def test_unit_determinant_enforced(self):
        with pytest.raises(InvalidParameterError):
            MobiusMap(2.0, 0.0, 0.0, 1.0)

    def test_from_entries_normalises(self):
        m = MobiusMap.from_entries(4.0, 2.0, 0.0, 1.0)
        assert m.det == pytest.approx(1.0)
        assert m(0.5) == pytest.approx((4.0 * 0.5 + 2.0) / 1.0)

    def test_from_entries_rejects_orientation_reversal(self):
        with pytest.raises(InvalidParameterError):
            MobiusMap.from_entries(0.0, 1.0, 1.0, 0.0)

    def test_inverse_and_composition(self, rng):
        for _ in range(20):
            m = random_map(rng)
            assert (m @ m.inverse()).is_close(MobiusMap.identity(), tol=1e-10)

    def test_composition_acts_left_to_right(self, rng):
        f, g = random_map(rng), random_map(rng)
        z = 0.3 + 0.7j
        assert (f @ g)(z) == pytest.approx(f(g(z)))

    def test_fixed_points_of_hyperbolic_map(self):
        ch, sh = math.cosh(1.0), math.sinh(1.0)
        gamma = MobiusMap(ch, sh, sh, ch)
        attracting, repelling = gamma.fixed_points()
        assert attracting == pytest.approx(1.0)
        assert repelling == pytest.approx(-1.0)
        assert gamma.translation_length() == pytest.approx(2.0)

    def test_fixed_points_of_elliptic_map_rejected(self):
        rotation = MobiusMap(math.cos(0.3), math.sin(0.3), -math.sin(0.3), math.cos(0.3))
        with pytest.raises(InvalidParameterError):
            rotation.fixed_points()

    def test_scaling_fixes_infinity(self):
        attracting, repelling = MobiusMap.scaling(4.0).fixed_points()
        assert attracting is INFINITY
        assert repelling == pytest.approx(0.0)


class TestPointActions:

    def test_apply_at_pole_and_infinity(self):
        m = MobiusMap(0.0, 1.0, -1.0, 0.0)
        assert mobius_apply(m, 0.0) is INFINITY
        assert mobius_apply(m, INFINITY) == pytest.approx(0.0)
        assert mobius_apply(MobiusMap.scaling(2.0), INFINITY) is INFINITY

    def test_derivative_at_pole_raises(self):
        m = MobiusMap(0.0, 1.0, -1.0, 0.0)
        with pytest.raises(PoleError):
            mobius_derivative(m, 0.0)
        with pytest.raises(InvalidParameterError):
            mobius_derivative(m, INFINITY)

    def test_real_input_gives_real_output(self):
        value = mobius_apply(MobiusMap.scaling(4.0), 1.5)
        assert isinstance(value, float)
        assert value == pytest.approx(6.0)

    @pytest.mark.parametrize(
        "x", [0.0, 1.0, -2.5, 40.0], ids=["origin", "one", "negative", "large"]
    )
    def test_angle_round_trip(self, x):
        assert angle_to_point(point_to_angle(x)) == pytest.approx(x)

    def test_angle_of_infinity(self):
        assert point_to_angle(INFINITY) == pytest.approx(math.pi)
        assert angle_to_point(math.pi) is INFINITY

    def test_circle_action_matches_point_action(self, rng):
        m = random_map(rng)
        x = rng.uniform(-5.0, 5.0, size=50)
        x = x[np.abs(m.c * x + m.d) > 1e-3]
        theta = 2.0 * np.arctan(x)
        expected = 2.0 * np.arctan(m(x))
        difference = np.angle(np.exp(1j * (m.circle_action(theta) - expected)))
        assert np.max(np.abs(difference)) < 1e-12

    def test_circle_derivative_matches_sphere_derivative(self, rng):
        m = random_map(rng)
        for x in rng.uniform(-5.0, 5.0, size=25):
            theta = point_to_angle(float(x))
            assert float(m.circle_derivative(theta)) == pytest.approx(sphere_derivative(m, float(x)), rel=1e-12)


class TestConformalIdentities:

    def test_euclidean_two_point_identity(self, rng):
        # |φ(x) - φ(y)|^{-2} |φ'(x)| = |x - y|^{-2} |φ'(y)|^{-1}
        worst = 0.0
        for _ in range(1000):
            m = random_map(rng)
            x, y = rng.uniform(-4.0, 4.0, size=2)
            if min(abs(m.c * x + m.d), abs(m.c * y + m.d), abs(x - y)) < 1e-2:
                continue
            lhs = abs(m(x) - m(y)) ** -2 * abs(m.derivative(x))
            rhs = abs(x - y) ** -2 / abs(m.derivative(y))
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
        assert worst < 1e-12

    def test_circle_metric_identity(self, rng):
        # |γx - γy|_S^2 = |γ'(x)|_S |γ'(y)|_S |x - y|_S^2
        worst = 0.0
        for _ in range(1000):
            m = random_map(rng)
            x, y = (float(v) for v in rng.uniform(-4.0, 4.0, size=2))
            if abs(x - y) < 1e-2:
                continue
            images = [mobius_apply(m, x), mobius_apply(m, y)]
            lhs = sphere_distance(images[0], images[1]) ** 2
            rhs = sphere_derivative(m, x) * sphere_derivative(m, y) * sphere_distance(x, y) ** 2
            worst = max(worst, abs(lhs - rhs) / rhs)
        assert worst < 1e-12

    def test_sphere_distance_bounds(self):
        assert sphere_distance(1.0, -1.0) == pytest.approx(2.0)
        assert sphere_distance(0.0, INFINITY) == pytest.approx(2.0)
        assert sphere_distance(3.0, INFINITY) == pytest.approx(2.0 / float(bracket(3.0)))
        assert sphere_distance(INFINITY, INFINITY) == 0.0
        assert sphere_distance(0.2, 0.7) == pytest.approx(sphere_distance(0.7, 0.2))

    def test_sphere_derivative_at_infinity(self):
        m = MobiusMap.from_entries(2.0, 1.0, 1.0, 1.0)
        assert sphere_derivative(m, INFINITY) == pytest.approx(1.0 / (m.a**2 + m.c**2))
