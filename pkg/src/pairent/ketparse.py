"""Parser for ket expressions such as ``1/2|0000> - sqrt(3)/2 |1111⟩``.

Grammar (whitespace is ignored)::

    sum     := [sign] product (sign product)*
    product := unary (('*' | '/') unary | unary)*
    unary   := '-' unary | atom
    atom    := number ['i' | 'j'] | 'i' | 'j' | 'sqrt' '(' sum ')' | '(' sum ')' | ket
    ket     := '|' digit+ ('>' | '⟩')

Juxtaposition (``2|00>``, ``1/2(|00> + |11>)``) multiplies. Values are either
numbers or linear combinations of kets; adding a number to a ket, multiplying
two kets or dividing by a ket is a parse error. The whole expression must be a
ket combination.
"""
import cmath
import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, UsageError
from .qstate import StateVector

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ket>\|\s*[0-9](?:\s*[0-9])*\s*(?:>|⟩))"
    r"|(?P<name>sqrt|i|j)"
    r"|(?P<op>[-+*/()]))"
)

NORM_WARN_TOL = 1e-6


@dataclass(frozen=True)
class ParsedKet:
    state: StateVector
    input_norm: float
    renormalized: bool


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[col]!r}", text, col)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if kind == "ket":
            value = re.sub(r"[\s|>⟩]", "", value)
        out.append((kind, value, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Kets(dict):
    """Linear combination ``{digits: coefficient}``."""

    def scaled(self, c):
        return _Kets({k: c * v for k, v in self.items()})

    def plus(self, other, sign):
        out = _Kets(self)
        for k, v in other.items():
            out[k] = out.get(k, 0) + sign * v
        return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.kets = []

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok[2])

    def expect_op(self, op, opener=None):
        tok = self.peek()
        if tok[:2] != ("op", op):
            where = f" to close {opener[1]!r} at column {opener[2] + 1}" if opener else ""
            self.fail(f"expected {op!r}{where}", tok)
        self.take()

    def parse(self):
        value = self.sum()
        if self.peek()[0] != "end":
            self.fail("unexpected token", self.peek())
        if not isinstance(value, _Kets):
            raise ParseError("expression contains no ket", self.text, 0)
        return value

    def sum(self):
        sign = 1
        if self.peek()[:2] in (("op", "+"), ("op", "-")):
            sign = -1 if self.take()[1] == "-" else 1
        value = self.product()
        if sign < 0:
            value = value.scaled(-1) if isinstance(value, _Kets) else -value
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()
            rhs = self.product()
            sign = -1 if op[1] == "-" else 1
            if isinstance(value, _Kets) != isinstance(rhs, _Kets):
                self.fail("cannot add a number and a ket", op)
            value = value.plus(rhs, sign) if isinstance(value, _Kets) else value + sign * rhs
        return value

    def _starts_atom(self):
        kind, value, _ = self.peek()
        return kind in ("num", "ket", "name") or (kind, value) == ("op", "(")

    def product(self):
        value = self.unary()
        while True:
            tok = self.peek()
            if tok[:2] in (("op", "*"), ("op", "/")):
                self.take()
                rhs = self.unary()
                value = self._combine(value, rhs, tok)
            elif self._starts_atom():
                value = self._combine(value, self.unary(), ("op", "*", tok[2]))
            else:
                return value

    def _combine(self, a, b, op):
        ket_a, ket_b = isinstance(a, _Kets), isinstance(b, _Kets)
        if op[1] == "/":
            if ket_b:
                self.fail("cannot divide by a ket", op)
            if b == 0:
                self.fail("division by zero", op)
            return a.scaled(1 / b) if ket_a else a / b
        if ket_a and ket_b:
            self.fail("cannot multiply two kets", op)
        if ket_a:
            return a.scaled(b)
        if ket_b:
            return b.scaled(a)
        return a * b

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            value = self.unary()
            return value.scaled(-1) if isinstance(value, _Kets) else -value
        return self.atom()

    def atom(self):
        tok = self.take()
        kind, value = tok[0], tok[1]
        if kind == "num":
            x = float(value)
            if self.peek()[:2] in (("name", "i"), ("name", "j")):
                self.take()
                return 1j * x
            return x
        if kind == "ket":
            self.kets.append(tok)
            return _Kets({value: 1.0})
        if kind == "name" and value in ("i", "j"):
            return 1j
        if kind == "name" and value == "sqrt":
            opener = self.peek()
            self.expect_op("(")
            inner = self.sum()
            self.expect_op(")", opener)
            if isinstance(inner, _Kets):
                self.fail("cannot take the square root of a ket", tok)
            return cmath.sqrt(inner) if isinstance(inner, complex) or inner < 0 else inner ** 0.5
        if (kind, value) == ("op", "("):
            inner = self.sum()
            self.expect_op(")", tok)
            return inner
        if kind == "end":
            self.fail("unexpected end of input", tok)
        self.fail(f"unexpected {value!r}", tok)


def parse_ket(text: str, d=None) -> ParsedKet:
    """Parse a ket expression into a normalized :class:`StateVector`.

    The local dimension defaults to ``max(2, largest digit + 1)``. Inputs whose
    norm differs from 1 by more than 1e-6 are renormalized and flagged.
    """
    parser = _Parser(text)
    combo = parser.parse()
    kets = parser.kets
    n = len(kets[0][1])
    bad = next((t for t in kets if len(t[1]) != n), None)
    if bad is not None:
        raise ParseError(f"ket length {len(bad[1])} differs from {n}", text, bad[2])
    top = max(int(ch) for t in kets for ch in t[1])
    if d is None:
        d = max(2, top + 1)
    elif top >= d:
        bad = next(t for t in kets if any(int(ch) >= d for ch in t[1]))
        raise ParseError(f"digit exceeds local dimension {d}", text, bad[2])
    amps = np.zeros(d ** n, dtype=complex)
    for bits, coeff in combo.items():
        amps[int(bits, d)] += coeff
    norm = float(np.linalg.norm(amps))
    if norm == 0:
        raise UsageError("ket expression evaluates to the zero vector")
    return ParsedKet(StateVector(amps / norm, n, d), norm, abs(norm - 1) > NORM_WARN_TOL)
