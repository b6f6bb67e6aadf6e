"""
Tests for the expression language, dual numbers and sampled models.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import (
    ArityError,
    EllipticityError,
    ExpressionDomainError,
    ExpressionSyntaxError,
    InterpolationError,
    UnknownIdentifierError,
)
from src.modelspec import BlendedModel, MetricModel, evaluate, parse_expr, periodicity_defect, to_source
from src.modelspec.dual import Dual
from src.modelspec.model import sample_model, step_jet
from src.modelspec.parser import depends_on

from tests.conftest import BREATHING_H

# expression sources that parse and stay finite on the sampling grid
SOURCES = [
    "1",
    "1 + 0.3*cos(x)",
    "exp(0.1*t) * (2 + sin(x))",
    "-t + x^2",
    "sqrt(2 + cos(x)) / (3 - tanh(t))",
    BREATHING_H,
    "2^3 - -1",
]


class TestParser:

    @pytest.mark.parametrize("source", SOURCES)
    def test_printing_round_trips(self, source):
        node = parse_expr(source)
        assert parse_expr(to_source(node)) == node

    def test_precedence_and_associativity(self):
        t, x = np.array([0.5]), np.array([2.0])
        assert evaluate(parse_expr("1 + 2*3^2"), t, x)[0] == 19.0
        assert evaluate(parse_expr("2^3^2"), t, x)[0] == 2.0 ** 9
        assert evaluate(parse_expr("8/2/2"), t, x)[0] == 2.0

    def test_variables_broadcast(self):
        t = np.linspace(0, 1, 3)[:, None]
        x = np.linspace(0, 2, 5)[None, :]
        value = evaluate(parse_expr("t*x"), t, x)
        assert value.shape == (3, 5)
        assert np.allclose(value, t * x)

    @pytest.mark.parametrize("source, error, offset", [
        ("1 +", ExpressionSyntaxError, 3),
        ("(1 + x", ExpressionSyntaxError, 6),
        ("1 $ 2", ExpressionSyntaxError, 2),
        ("y + 1", UnknownIdentifierError, 0),
        ("sin(x, t)", ArityError, 5),
    ])
    def test_errors_carry_offsets(self, source, error, offset):
        with pytest.raises(error) as info:
            parse_expr(source)
        assert info.value.offset == offset

    @pytest.mark.parametrize("source", ["", "   ", "x + π"])
    def test_empty_or_non_ascii(self, source):
        with pytest.raises(ExpressionSyntaxError):
            parse_expr(source)

    def test_domain_errors(self):
        t, x = np.zeros(3), np.array([0.0, 1.0, 2.0])
        with pytest.raises(ExpressionDomainError):
            evaluate(parse_expr("1/(x - x)"), t, x)
        with pytest.raises(ExpressionDomainError):
            evaluate(parse_expr("sqrt(x - 1)"), t, x)

    def test_depends_on(self):
        node = parse_expr("1 + cos(x)")
        assert depends_on(node, 'x')
        assert not depends_on(node, 't')


class TestDual:

    @given(st.floats(min_value=0.2, max_value=5.0))
    @settings(max_examples=40, deadline=None)
    def test_chain_rule(self, a):
        z = Dual(a, 1.0)
        f = (z * z + 1.0).sqrt() / z
        expected = -1.0 / (a * a * np.sqrt(a * a + 1.0))
        assert np.isclose(f.dot, expected, rtol=1e-12)

    def test_power_and_log(self):
        z = Dual(2.0, 1.0)
        assert np.isclose((z ** 3).dot, 12.0)
        assert np.isclose(z.log().dot, 0.5)
        assert np.isclose(z.exp().dot, np.exp(2.0))


class TestMetricModel:

    def test_exact_derivatives(self):
        model = MetricModel.from_strings("x^2 + t*x + 2", "1")
        sampled = model.sample([0.0, 0.5], 8)
        t = sampled.t[:, None]
        x = sampled.x[None, :]
        assert np.allclose(sampled.h.value, x ** 2 + t * x + 2)
        assert np.allclose(sampled.h.dt, np.broadcast_to(x, (2, 8)))
        assert np.allclose(sampled.h.dx, 2 * x + t)
        assert np.allclose(sampled.h.dtt, 0.0)
        assert np.allclose(sampled.h.dtx, 1.0)

    def test_second_time_derivative(self):
        model = MetricModel.from_strings("2 + sin(t)*cos(x)", "1")
        sampled = model.sample([0.3], 6)
        assert np.allclose(sampled.h.dtt, -np.sin(0.3) * np.cos(sampled.x)[None, :])

    def test_ellipticity_floor(self):
        with pytest.raises(EllipticityError) as info:
            MetricModel.from_strings("0.5 + cos(x)", "1").sample([0.0], 16)
        assert info.value.residual > 0

    def test_static_and_conformal_flags(self):
        model = MetricModel.from_strings("1 + 0.1*t", "1", "0.2*t")
        assert not model.is_static()
        assert model.has_conformal_factor()
        assert not model.without_conformal_factor().has_conformal_factor()

    def test_frozen_model(self):
        frozen = MetricModel.from_strings("1 + 0.1*t", "1 + t^2").frozen_at(-0.5)
        assert frozen.is_static()
        sampled = frozen.sample([0.0, 3.0], 4)
        assert np.allclose(sampled.h.value, 0.95)
        assert np.allclose(sampled.m.value, 1.25)

    def test_periodicity(self):
        assert periodicity_defect(MetricModel.from_strings(BREATHING_H, "1"), np.linspace(-1, 1, 5)) < 1e-12
        assert periodicity_defect(MetricModel.from_strings("2 + 0.1*x", "1"), np.zeros(1)) > 0.5

    def test_sample_model_grid(self):
        model = MetricModel.from_strings("1", "1", time_interval=(-1.0, 2.0))
        sampled = sample_model(model, 7, 10)
        assert sampled.shape == (7, 10)
        assert sampled.t[0] == -1.0 and sampled.t[-1] == 2.0


class TestBlendedModel:

    def test_smooth_step_is_exact_outside_the_collar(self):
        s, ds, dds = step_jet(np.array([-2.0, -1.0, 0.0, 1.0, 1.5]))
        assert s[0] == 0.0 and s[1] == 0.0
        assert s[3] == pytest.approx(1.0, abs=1e-15)
        assert s[4] == pytest.approx(1.0, abs=1e-15)
        assert np.isclose(s[2], 0.5)
        assert ds[0] == 0.0
        assert abs(dds[4]) < 1e-12

    def test_blend_matches_its_ends(self):
        ultrastatic = MetricModel.from_strings("1", "1")
        physical = MetricModel.from_strings(BREATHING_H, "1 + 0.1*cos(x)")
        blended = BlendedModel(ultrastatic, physical)
        assert blended.check_ends(16) <= 1e-12
        at_end = blended.sample([2.0], 16)
        assert np.allclose(at_end.h.value, physical.sample([0.0], 16).h.value)

    def test_time_dependent_ultrastatic_end_is_rejected(self):
        blended = BlendedModel(MetricModel.from_strings("1 + 0.1*t", "1"), MetricModel.from_strings("1", "1"))
        with pytest.raises(InterpolationError):
            blended.check_ends(8)

    def test_blended_time_derivative_matches_finite_differences(self):
        blended = BlendedModel(MetricModel.from_strings("1", "1"), MetricModel.from_strings(BREATHING_H, "1"))
        delta = 1e-5
        sampled = blended.sample([0.3 - delta, 0.3, 0.3 + delta], 12)
        fd = (sampled.h.value[2] - sampled.h.value[0]) / (2 * delta)
        assert np.allclose(fd, sampled.h.dt[1], atol=1e-7)
