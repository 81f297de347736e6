import pytest

from app.services.parsing import ExpressionParseError, parse_expression, parse_integer, split_values


@pytest.mark.parametrize(
    ("text", "expected"),
    [("pi", "pi"), ("2pi", "2*pi"), ("pi^2", "pi**2"), ("pi/3", "pi/3"), ("0.5", "1/2"), ("3", "3")],
)
def test_parse_expression_text(text, expected):
    assert parse_expression(text).text == expected


def test_parse_expression_values(ctx30):
    mp = ctx30.mp
    tolerance = 10 * ctx30.target()
    assert abs(parse_expression("2pi").evaluate(ctx30) - 2 * mp.pi) < tolerance
    assert abs(parse_expression("PI^2 / 6").evaluate(ctx30) - mp.pi**2 / 6) < tolerance
    value = parse_expression("(1+3i)/2").evaluate(ctx30)
    assert abs(value - mp.mpc("0.5", "1.5")) < tolerance


def test_parse_expression_reality():
    assert parse_expression("pi/2").is_real
    assert not parse_expression("i").is_real
    assert not parse_expression("1 + 2i").is_real


@pytest.mark.error
@pytest.mark.parametrize("text", ["", "   ", "exp(1)", "x", "__import__('os')", "1/0", "2 +", "pi" * 120])
def test_parse_expression_rejects(text):
    with pytest.raises(ExpressionParseError):
        parse_expression(text)


def test_parse_integer():
    assert parse_integer(" 7 ", "m") == 7
    with pytest.raises(ExpressionParseError, match="m must be an integer"):
        parse_integer("2.5", "m")


def test_split_values():
    assert split_values("1, 2,3") == ["1", "2", "3"]
    assert split_values("(1+i)/2, pi") == ["(1+i)/2", "pi"]
    assert split_values("a,,b,") == ["a", "b"]
    assert split_values("") == []
