"""Expression grammar for user-supplied objectives."""
import numpy as np
import pytest

from lpgrad.errors import DomainError
from lpgrad.expr import compile_expression


class TestCompileExpression:
    def test_sum_of_sines(self):
        f = compile_expression("sum(sin(x))")
        x = np.array([0.1, -0.4, 2.0])
        assert f(x) == pytest.approx(float(np.sin(x).sum()))

    def test_coordinates_and_powers(self):
        f = compile_expression("x1*x1 + 100*pow(x2 - x1^2, 2)")
        x = np.array([0.5, 0.7])
        assert f(x) == pytest.approx(0.25 + 100 * (0.7 - 0.25) ** 2)

    def test_caret_right_associative(self):
        f = compile_expression("2^3^...".replace("...", "2"))
        assert f(np.zeros(1)) == pytest.approx(512.0)

    def test_unary_minus_and_division(self):
        f = compile_expression("-x1/2 + exp(0)")
        assert f(np.array([4.0])) == pytest.approx(-1.0)

    def test_precedence(self):
        f = compile_expression("1 + 2*3^2")
        assert f(np.zeros(1)) == pytest.approx(19.0)

    def test_cos_exp(self):
        f = compile_expression("cos(x1) + exp(x2)")
        x = np.array([0.3, 0.2])
        assert f(x) == pytest.approx(np.cos(0.3) + np.exp(0.2))

    def test_vector_result_rejected(self):
        f = compile_expression("sin(x)")
        with pytest.raises(DomainError):
            f(np.array([1.0, 2.0]))

    @pytest.mark.parametrize("bad", ["x1 +", "foo(x)", "1 2", "(x1", "x0"])
    def test_parse_errors(self, bad):
        with pytest.raises(DomainError):
            compile_expression(bad)(np.zeros(2))

    def test_scientific_literals(self):
        f = compile_expression("1e-4 * sum(x)")
        assert f(np.array([1.0, 2.0])) == pytest.approx(3e-4)
