"""Parsing of vector-field expressions from text.

The grammar is a tiny polynomial language over the mixed real/complex
coordinates:

    expr    := term (('+' | '-') term)*
    term    := factor ('*' factor)*
    factor  := atom ('^' integer)?
    atom    := number | variable | basis | '(' expr ')' | '-' atom

Numbers are real or imaginary literals (``0.5``, ``2i``, ``1.5e-3i``);
complex constants are written with arithmetic, e.g. ``(1+2i)``.
Variables are ``t1..tr`` (real directions), ``z1..zn`` and ``zb1..zbn``
(complex coordinates and their conjugates).  Basis symbols are ``dt_k``,
``dz_j``, ``dzb_j``; an expression denotes a vector field and must be a
polynomial combination of scalars times basis symbols.

Errors carry the line and column of the offending token.  Transcendental
function names (``sin``, ``exp``, ...) are rejected explicitly: only
polynomial expressions are representable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import PreconditionError
from .series import PowerSeries, mul


class FieldSpecError(PreconditionError):
    """A syntax or semantic error in a field expression."""

    def __init__(self, message, line=None, column=None):
        loc = "" if line is None else f" (line {line}, column {column})"
        super().__init__(message + loc)
        self.line = line
        self.column = column


_NON_POLYNOMIAL = {
    "sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "abs",
}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.?\d*(?:[eE][+-]?\d+)?i?|\.\d+(?:[eE][+-]?\d+)?i?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^()=]))"
)


@dataclass
class _Token:
    kind: str      # "number" | "name" | "op" | "end"
    text: str
    line: int
    column: int


def _tokenize(text):
    tokens = []
    for lineno, line in enumerate(text.splitlines() or [""], start=1):
        pos = 0
        while pos < len(line):
            while pos < len(line) and line[pos].isspace():
                pos += 1
            if pos == len(line):
                break
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                raise FieldSpecError(
                    f"unexpected character {line[pos]!r}", lineno, pos + 1
                )
            kind = m.lastgroup
            tokens.append(_Token(kind, m.group(kind), lineno, m.start(kind) + 1))
            pos = m.end()
    tokens.append(_Token("end", "", lineno if text else 1, len(text) + 1))
    return tokens


@dataclass
class FieldSpec:
    """Shape header for a family of field expressions."""

    r: int
    n: int
    dmax: int = 8

    @property
    def dim(self):
        return self.r + 2 * self.n


class _Parser:
    """Recursive-descent parser evaluating directly to series values.

    A value is a pair (scalar, vec): ``scalar`` is a PowerSeries or None,
    ``vec`` is a dict basis-index -> PowerSeries or None; exactly one of
    the two is set.
    """

    def __init__(self, spec, tokens):
        self.spec = spec
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text):
        tok = self.advance()
        if tok.kind != "op" or tok.text != text:
            raise FieldSpecError(
                f"expected {text!r}, found {tok.text!r}", tok.line, tok.column
            )
        return tok

    # ---- values -------------------------------------------------------

    def _scalar(self, value):
        return (value, None)

    def _vec(self, mapping):
        return (None, mapping)

    def _add(self, a, b, tok, sign=1.0):
        sa, va = a
        sb, vb = b
        if (sa is None) != (sb is None):
            raise FieldSpecError(
                "cannot add a scalar and a vector field", tok.line, tok.column
            )
        if sa is not None:
            return self._scalar(sa + sb.scale(sign))
        out = dict(va)
        for k, v in vb.items():
            out[k] = out.get(k, None) + v.scale(sign) if k in out else v.scale(sign)
        return self._vec(out)

    def _mul(self, a, b, tok):
        sa, va = a
        sb, vb = b
        if sa is not None and sb is not None:
            return self._scalar(mul(sa, sb))
        if va is not None and vb is not None:
            raise FieldSpecError(
                "cannot multiply two vector fields", tok.line, tok.column
            )
        scal = sa if sa is not None else sb
        vec = va if va is not None else vb
        return self._vec({k: mul(scal, v) for k, v in vec.items()})

    # ---- grammar ------------------------------------------------------

    def parse_expr(self):
        tok = self.peek()
        value = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance()
            rhs = self.parse_term()
            value = self._add(value, rhs, op, sign=1.0 if op.text == "+" else -1.0)
        return value

    def parse_term(self):
        value = self.parse_factor()
        while self.peek().kind == "op" and self.peek().text == "*":
            op = self.advance()
            rhs = self.parse_factor()
            value = self._mul(value, rhs, op)
        return value

    def parse_factor(self):
        value = self.parse_atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            op = self.advance()
            tok = self.advance()
            if tok.kind != "number" or not tok.text.isdigit():
                raise FieldSpecError(
                    "exponent must be a nonnegative integer", tok.line, tok.column
                )
            k = int(tok.text)
            scal, vec = value
            if scal is None:
                raise FieldSpecError(
                    "cannot raise a vector field to a power", op.line, op.column
                )
            acc = PowerSeries.constant(self.spec.dim, self.spec.dmax, 1.0)
            for _ in range(k):
                acc = mul(acc, scal)
            value = self._scalar(acc)
        return value

    def parse_atom(self):
        tok = self.advance()
        d, dmax = self.spec.dim, self.spec.dmax
        if tok.kind == "number":
            text = tok.text
            if text.endswith("i"):
                return self._scalar(
                    PowerSeries.constant(d, dmax, complex(0.0, float(text[:-1] or 1.0)))
                )
            return self._scalar(PowerSeries.constant(d, dmax, float(text)))
        if tok.kind == "name":
            return self._name_atom(tok)
        if tok.kind == "op" and tok.text == "(":
            value = self.parse_expr()
            self.expect_op(")")
            return value
        if tok.kind == "op" and tok.text == "-":
            scal, vec = self.parse_atom()
            if scal is not None:
                return self._scalar(scal.scale(-1.0))
            return self._vec({k: v.scale(-1.0) for k, v in vec.items()})
        raise FieldSpecError(f"unexpected token {tok.text!r}", tok.line, tok.column)

    def _name_atom(self, tok):
        name = tok.text
        r, n = self.spec.r, self.spec.n
        d, dmax = self.spec.dim, self.spec.dmax
        if name in _NON_POLYNOMIAL:
            raise FieldSpecError(
                f"{name!r} is not a polynomial construct; only polynomial "
                "expressions in t, z, zb are representable",
                tok.line,
                tok.column,
            )
        if name == "i":
            return self._scalar(PowerSeries.constant(d, dmax, 1j))
        m = re.fullmatch(r"(t|z|zb|dt_?|dz_?|dzb_?)(\d+)", name)
        if m is None:
            raise FieldSpecError(f"unknown symbol {name!r}", tok.line, tok.column)
        head, idx = m.group(1).rstrip("_"), int(m.group(2))
        if head == "t":
            self._check_index(idx, r, name, tok)
            return self._scalar(PowerSeries.variable(d, dmax, idx - 1))
        if head == "z":
            self._check_index(idx, n, name, tok)
            x = PowerSeries.variable(d, dmax, r + idx - 1)
            y = PowerSeries.variable(d, dmax, r + n + idx - 1)
            return self._scalar(x + y.scale(1j))
        if head == "zb":
            self._check_index(idx, n, name, tok)
            x = PowerSeries.variable(d, dmax, r + idx - 1)
            y = PowerSeries.variable(d, dmax, r + n + idx - 1)
            return self._scalar(x + y.scale(-1j))
        one = PowerSeries.constant(d, dmax, 1.0)
        if head == "dt":
            self._check_index(idx, r, name, tok)
            return self._vec({idx - 1: one})
        if head == "dz":
            self._check_index(idx, n, name, tok)
            return self._vec({r + idx - 1: one})
        # dzb
        self._check_index(idx, n, name, tok)
        return self._vec({r + n + idx - 1: one})

    def _check_index(self, idx, bound, name, tok):
        if not (1 <= idx <= bound):
            raise FieldSpecError(
                f"index of {name!r} out of range 1..{bound}", tok.line, tok.column
            )


def parse_field(text, spec):
    """Parse one expression into a :class:`~frobflat.frames.VectorField`."""
    from .frames import VectorField

    tokens = _tokenize(text)
    # optional "NAME =" label prefix (e.g. "L1 = dzb1 + ...")
    if (
        len(tokens) >= 2
        and tokens[0].kind == "name"
        and tokens[1].kind == "op"
        and tokens[1].text == "="
    ):
        tokens = tokens[2:]
    parser = _Parser(spec, tokens)
    scal, vec = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "end":
        raise FieldSpecError(f"trailing input {tok.text!r}", tok.line, tok.column)
    if vec is None:
        raise FieldSpecError("expression is a scalar, not a vector field", 1, 1)
    d = spec.dim
    comps = [PowerSeries.zero(d, spec.dmax) for _ in range(d)]
    for k, v in vec.items():
        comps[k] = v
    return VectorField(spec.r, spec.n, comps)


def parse_fields(texts, spec):
    """Parse a list of expressions; the list length must equal r + n."""
    if len(texts) != spec.r + spec.n:
        raise FieldSpecError(
            f"expected r + n = {spec.r + spec.n} field expressions, got {len(texts)}"
        )
    return [parse_field(t, spec) for t in texts]


def format_field(field):
    """Render a field back to expression text (round-trips through parse)."""
    r, n = field.r, field.n
    d = r + 2 * n
    parts = []
    for k in range(d):
        if k < r:
            basis = f"dt{k + 1}"
        elif k < r + n:
            basis = f"dz{k - r + 1}"
        else:
            basis = f"dzb{k - r - n + 1}"
        comp = field.comps[k]
        for alpha in sorted(comp.coeffs, key=lambda a: (sum(a), a)):
            c = comp.coeffs[alpha]
            parts.append(_format_term(c, alpha, r, n, basis))
    return " + ".join(parts) if parts else "0*dt1" if r else "0*dz1"


def _format_term(c, alpha, r, n, basis):
    factors = [_format_complex(c)]
    for j, a in enumerate(alpha):
        if a == 0:
            continue
        if j < r:
            var = f"t{j + 1}"
        elif j < r + n:
            # real part coordinate: (z + zb)/2
            var = f"(0.5*z{j - r + 1} + 0.5*zb{j - r + 1})"
        else:
            var = f"(-0.5i*z{j - r - n + 1} + 0.5i*zb{j - r - n + 1})"
        factors.append(var if a == 1 else f"{var}^{a}")
    factors.append(basis)
    return "*".join(factors)


def _format_complex(c):
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}i" if c.imag >= 0 else f"(-{abs(c.imag)!r}i)"
    sign = "+" if c.imag >= 0 else "-"
    return f"({c.real!r}{sign}{abs(c.imag)!r}i)"
