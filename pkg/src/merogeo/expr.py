"""Expression language for complex rational functions of ``z``.

Grammar (precedence low to high: ``+ -``, ``* /``, unary ``-``, ``^``)::

    form  := sum
    sum   := prod (('+' | '-') prod)*
    prod  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' uint)*          # right associative
    atom  := number | number 'i' | 'i' | 'z' | '(' sum ')'

Numbers are decimals with an optional exponent; a number immediately
followed by ``i`` is an imaginary literal, so ``2+3i`` and ``2+3*i`` agree.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .rational import RationalForm, RationalFormError, ZeroDenominatorError

__all__ = [
    "ParseError",
    "ZeroDenominatorError",
    "RationalForm",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "parse_expr",
    "parse_form",
    "parse_constant",
    "evaluate",
    "print_form",
    "format_number",
]


class ParseError(RationalFormError):
    """Syntax error at a byte offset of the UTF-8 source."""

    def __init__(self, offset: int, expected: frozenset[str], found: str):
        self.offset = offset
        self.expected = frozenset(expected)
        self.found = found
        want = ", ".join(sorted(self.expected))
        super().__init__(f"syntax error at offset {offset}: expected one of {{{want}}}, found {found}")


# --- AST --------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str = "z"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Num, Var, Neg, BinOp, Pow]


# --- lexer ------------------------------------------------------------------

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_UINT = re.compile(r"\d+")


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'num', 'imag', 'i', 'z', 'op', 'eof'
    text: str
    offset: int  # byte offset
    value: object = None


def _tokenize(src: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    boff = 0  # byte offset of src[pos]
    n = len(src)
    while pos < n:
        ch = src[pos]
        if ch.isspace():
            boff += len(ch.encode("utf-8"))
            pos += 1
            continue
        m = _NUMBER.match(src, pos)
        if m:
            text = m.group(0)
            end = m.end()
            if end < n and src[end] == "i" and not (end + 1 < n and (src[end + 1].isalnum() or src[end + 1] == "_")):
                toks.append(_Tok("imag", text + "i", boff, float(text)))
                boff += len(text) + 1
                pos = end + 1
            else:
                toks.append(_Tok("num", text, boff, float(text)))
                boff += len(text)
                pos = end
            continue
        if ch in "+-*/^()":
            toks.append(_Tok("op", ch, boff))
        elif ch in "iz" and not (pos + 1 < n and (src[pos + 1].isalnum() or src[pos + 1] == "_")):
            toks.append(_Tok(ch, ch, boff))
        else:
            raise ParseError(boff, frozenset({"number", "i", "z", "(", "-"}), repr(ch))
        boff += 1
        pos += 1
    toks.append(_Tok("eof", "", boff))
    return toks


# --- parser -----------------------------------------------------------------

_BINARY = {"+": 10, "-": 10, "*": 20, "/": 20}
MAX_EXPONENT = 256
_ATOM_START = frozenset({"number", "i", "z", "(", "-"})


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, expected) -> ParseError:
        t = self.tok
        return ParseError(t.offset, frozenset(expected), "end of input" if t.kind == "eof" else repr(t.text))

    def parse(self) -> Expr:
        node = self.expr(0)
        if self.tok.kind != "eof":
            raise self.fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self, min_bp: int) -> Expr:
        left = self.nud()
        while True:
            t = self.tok
            if t.kind == "op" and t.text in _BINARY and _BINARY[t.text] > min_bp:
                self.i += 1
                right = self.expr(_BINARY[t.text])
                left = BinOp(t.text, left, right)
            else:
                return left

    def nud(self) -> Expr:
        t = self.tok
        if t.kind == "op" and t.text == "-":
            self.i += 1
            return Neg(self.nud())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        exps = []
        while self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            t = self.tok
            if t.kind != "num" or not _UINT.fullmatch(t.text):
                raise self.fail({"unsigned integer"})
            exps.append(int(t.text))
            self.i += 1
        if not exps:
            return base
        # right associativity: a^b^c = a^(b^c)
        e = exps[-1]
        for k in reversed(exps[:-1]):
            if e > MAX_EXPONENT or (k > 1 and e * math.log2(k) > math.log2(MAX_EXPONENT)):
                e = MAX_EXPONENT + 1
                break
            e = k ** e
        if e > MAX_EXPONENT:
            raise RationalFormError(f"exponent exceeds {MAX_EXPONENT}")
        return Pow(base, e)

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(complex(t.value))
        if t.kind == "imag":
            self.i += 1
            return Num(complex(0.0, t.value))
        if t.kind == "i":
            self.i += 1
            return Num(1j)
        if t.kind == "z":
            self.i += 1
            return Var()
        if t.kind == "op" and t.text == "(":
            self.i += 1
            inner = self.expr(0)
            if not (self.tok.kind == "op" and self.tok.text == ")"):
                raise self.fail({")", "+", "-", "*", "/", "^"})
            self.i += 1
            return inner
        raise self.fail(_ATOM_START)


def parse_expr(src: str) -> Expr:
    """Parse ``src`` into an AST; raises :class:`ParseError`."""
    if not src or not src.strip():
        raise ParseError(len(src.encode("utf-8")), _ATOM_START, "end of input")
    return _Parser(src).parse()


def evaluate(node: Expr) -> RationalForm:
    if isinstance(node, Num):
        return RationalForm.constant(node.value)
    if isinstance(node, Var):
        return RationalForm.variable()
    if isinstance(node, Neg):
        return -evaluate(node.operand)
    if isinstance(node, Pow):
        return evaluate(node.base) ** node.exponent
    left, right = evaluate(node.left), evaluate(node.right)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if right.is_zero:
        raise ZeroDenominatorError("denominator is identically zero")
    return left / right


def parse_form(src: str) -> RationalForm:
    """Parse ``src`` into a normalized :class:`RationalForm`."""
    return evaluate(parse_expr(src))


def parse_constant(src: str) -> complex:
    """Parse a constant complex expression such as ``1+2i`` or ``-i/2``."""
    f = parse_form(src)
    if not f.is_constant:
        raise RationalFormError(f"expected a constant, got an expression in z: {src!r}")
    return f.num[0] / f.den[0]


# --- printing ---------------------------------------------------------------

def format_number(x: float) -> str:
    """Shortest round-trip text; integral values without a decimal point."""
    if x == 0:
        return "0"
    if math.isfinite(x) and x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def _coeff_text(c: complex) -> tuple[str, bool]:
    """Text of a coefficient magnitude and whether it is negative.

    Purely real or imaginary coefficients carry their sign outside so the
    caller can emit ``a - b``; general complex values are parenthesized.
    """
    re_, im = c.real, c.imag
    if im == 0:
        return format_number(abs(re_)), re_ < 0
    if re_ == 0:
        mag = format_number(abs(im))
        return ("i" if mag == "1" else f"{mag}*i"), im < 0
    sign = "-" if im < 0 else "+"
    return f"({format_number(re_)} {sign} {format_number(abs(im))}*i)", False


def _poly_text(coeffs) -> str:
    terms: list[tuple[bool, str]] = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = complex(coeffs[k])
        if c == 0:
            continue
        mag, neg = _coeff_text(c)
        mono = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
        if not mono:
            body = mag
        elif mag == "1":
            body = mono
        else:
            body = f"{mag}*{mono}"
        terms.append((neg, body))
    if not terms:
        return "0"
    out = ("-" if terms[0][0] else "") + terms[0][1]
    for neg, body in terms[1:]:
        out += (" - " if neg else " + ") + body
    return out


def print_form(f: RationalForm) -> str:
    """Canonical text for ``f``; ``parse_form(print_form(f))`` reproduces it.

    >>> print_form(RationalForm.make([3], [-2, 1]))
    '(3)/(z - 2)'
    """
    if f.is_zero:
        return "0"
    num = _poly_text(f.num)
    if len(f.den) == 1 and f.den[0] == 1:
        return num
    return f"({num})/({_poly_text(f.den)})"
