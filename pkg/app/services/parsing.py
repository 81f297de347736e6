"""Parsing of symbolic parameters such as ``pi^2``, ``2pi``, ``pi/3`` or ``(1+3i)/2``."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Any

import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from models import PrecisionContext

logger = logging.getLogger(__name__)

_MAX_LENGTH = 200
_ALLOWED_REST = re.compile(r"^[0-9.+\-*/^()\s]*$")
_IMPLICIT_PRODUCT = re.compile(r"(?<=[0-9.)])\s*(?=[a-z(])|(?<=\bpi)\s*(?=[(0-9])|(?<=\bi)\s*(?=[(0-9])")
_TRANSFORMATIONS = standard_transformations + (convert_xor,)
_SYMBOLS = {"pi": sympy.pi, "i": sympy.I}


class ExpressionParseError(ValueError):
    """Raised when a parameter expression is not a number built from pi, i and rationals."""


@dataclass(frozen=True)
class ParsedExpression:
    """A parameter value kept exact; ``text`` echoes the parsed form."""

    source: str
    exact: Any

    @property
    def text(self) -> str:
        return sympy.sstr(self.exact)

    @property
    def is_real(self) -> bool:
        return bool(self.exact.is_real)

    def evaluate(self, ctx: PrecisionContext) -> Any:
        mp = ctx.mp
        digits = int(mp.dps) + 10
        real_part, imag_part = sympy.N(self.exact, digits).as_real_imag()
        real = mp.mpf(str(sympy.N(real_part, digits)))
        if imag_part == 0:
            return real
        return mp.mpc(real, mp.mpf(str(sympy.N(imag_part, digits))))


def _normalize(text: str) -> str:
    cleaned = text.strip().lower()
    if not cleaned:
        raise ExpressionParseError("empty expression")
    if len(cleaned) > _MAX_LENGTH:
        raise ExpressionParseError(f"expression longer than {_MAX_LENGTH} characters")
    rest = re.sub(r"\bpi\b|\bi\b", " ", re.sub(r"(?<=[0-9.)])(?=pi|i)", " ", cleaned))
    if not _ALLOWED_REST.match(rest):
        raise ExpressionParseError(f"{text!r} may only contain numbers, pi, i and + - * / ^ ( )")
    return _IMPLICIT_PRODUCT.sub("*", cleaned)


def parse_expression(text: str) -> ParsedExpression:
    normalized = _normalize(text)
    try:
        exact = parse_expr(normalized, local_dict=dict(_SYMBOLS), global_dict={"Integer": sympy.Integer,
                           "Float": sympy.Float, "Rational": sympy.Rational, "Symbol": sympy.Symbol},
                           transformations=_TRANSFORMATIONS, evaluate=True)
    except (SyntaxError, TypeError, ValueError, ZeroDivisionError, sympy.SympifyError) as exc:
        raise ExpressionParseError(f"cannot parse {text!r}: {exc}") from exc
    exact = sympy.nsimplify(exact, rational=True) if exact.has(sympy.Float) else exact
    if not getattr(exact, "is_number", False) or exact.free_symbols or exact.has(sympy.zoo, sympy.nan):
        raise ExpressionParseError(f"{text!r} does not evaluate to a finite number")
    logger.debug("Parsed %r as %s", text, exact)
    return ParsedExpression(source=text, exact=exact)


def parse_integer(text: str, name: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError as exc:
        raise ExpressionParseError(f"{name} must be an integer, got {text!r}") from exc


def split_values(text: str) -> list[str]:
    """Split a comma-separated list while keeping commas inside parentheses."""
    parts: list[str] = []
    depth = 0
    current = ""
    for char in text:
        if char == "," and depth == 0:
            parts.append(current.strip())
            current = ""
            continue
        depth += {"(": 1, ")": -1}.get(char, 0)
        current += char
    if current.strip():
        parts.append(current.strip())
    return [part for part in parts if part]


__all__ = [
    "ExpressionParseError",
    "ParsedExpression",
    "parse_expression",
    "parse_integer",
    "split_values",
]
