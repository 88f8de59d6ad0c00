"""Differential operators in one variable with rational-function coefficients.

An operator is kept in right-normal order,

    A = sum_k c_k(v) * D^k,

with ``D`` the derivation d/dv acting on everything to its right.  Products
expand through the Leibniz rule D*c = c*D + c', so arithmetic stays inside
the skew polynomial ring K(v)[D].  The module provides the formal adjoint,
commutators, evaluation of polynomials at the Airy operator D^2 - (v+shift),
the divided symmetric display template, and the operator expression grammar
shared with the command line.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

from .exact import (
    MAIN_VARS,
    MultiPoly,
    POLY_ONE,
    RF_ONE,
    RF_ZERO,
    RationalFunction,
    poly_coeffs_in,
)


def as_rational(value) -> RationalFunction:
    """Coerce ints, exact scalars, and polynomials to RationalFunction."""
    out = RationalFunction._coerce(value)
    if out is None:
        raise TypeError("cannot interpret %r as a rational function" % (value,))
    return out


_RF_MINUS_ONE = RationalFunction.constant(-1)


class DiffOperator:
    """Normal-ordered operator sum_k coeffs[k] * D^k in one variable.

    Immutable; the coefficient tuple never ends in a zero, so the normal
    form is unique and ``order`` is simply the top index (-1 for the zero
    operator).
    """

    __slots__ = ("var", "coeffs", "_hash")

    def __init__(self, var: str, coeffs=()):
        self.var = var
        cs = tuple(as_rational(c) for c in coeffs)
        while cs and cs[-1].is_zero():
            cs = cs[:-1]
        self.coeffs = cs
        self._hash = None

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero(var: str) -> "DiffOperator":
        return DiffOperator(var, ())

    @staticmethod
    def identity(var: str) -> "DiffOperator":
        return DiffOperator(var, (RF_ONE,))

    @staticmethod
    def derivative(var: str, k: int = 1) -> "DiffOperator":
        return DiffOperator(var, (RF_ZERO,) * k + (RF_ONE,))

    @staticmethod
    def mult(var: str, value) -> "DiffOperator":
        return DiffOperator(var, (as_rational(value),))

    # -- structure --------------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, k: int) -> RationalFunction:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return RF_ZERO

    def leading_coeff(self) -> RationalFunction:
        if self.is_zero():
            return RF_ZERO
        return self.coeffs[-1]

    # -- arithmetic -------------------------------------------------------

    def _coerce_op(self, other):
        if isinstance(other, DiffOperator):
            if other.var != self.var:
                raise ValueError(
                    "operator variable mismatch: %s vs %s" % (self.var, other.var)
                )
            return other
        scalar = RationalFunction._coerce(other)
        if scalar is None:
            return None
        return DiffOperator(self.var, (scalar,))

    def __add__(self, other):
        other = self._coerce_op(other)
        if other is None:
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return DiffOperator(
            self.var, tuple(self.coeff(k) + other.coeff(k) for k in range(n))
        )

    __radd__ = __add__

    def __neg__(self):
        return DiffOperator(self.var, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        other = self._coerce_op(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce_op(other)
        if other is None:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return DiffOperator.zero(self.var)
        top = len(self.coeffs) - 1
        # derivs[j][m] = m-th derivative of the j-th coefficient of other
        derivs = []
        for b in other.coeffs:
            row = [b]
            for _ in range(top):
                if row[-1].is_zero():
                    break
                row.append(row[-1].derivative(self.var))
            derivs.append(row)
        out = [RF_ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, row in enumerate(derivs):
                for m in range(min(i, len(row) - 1) + 1):
                    c = row[m]
                    if c.is_zero():
                        break
                    out[i - m + j] += comb(i, m) * (a * c)
        return DiffOperator(self.var, out)

    def __rmul__(self, other):
        # scalars commute past nothing: c * A really is mult(c) composed with A
        other = self._coerce_op(other)
        if other is None:
            return NotImplemented
        return other * self

    def __pow__(self, n: int) -> "DiffOperator":
        if n < 0:
            raise ValueError("negative operator power")
        out = DiffOperator.identity(self.var)
        for _ in range(n):
            out = out * self
        return out

    def adjoint(self) -> "DiffOperator":
        """Formal adjoint sum_k (-D)^k o c_k, normal-ordered."""
        if self.is_zero():
            return self
        out = [RF_ZERO] * len(self.coeffs)
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            sign = -1 if k % 2 else 1
            d = c
            for m in range(k + 1):
                if d.is_zero():
                    break
                out[k - m] += (sign * comb(k, m)) * d
                if m < k:
                    d = d.derivative(self.var)
        return DiffOperator(self.var, out)

    def is_symmetric(self) -> bool:
        return self == self.adjoint()

    def apply(self, f) -> RationalFunction:
        """Apply to a rational function: sum_k c_k * f^(k)."""
        f = as_rational(f)
        out = RF_ZERO
        d = f
        for k, c in enumerate(self.coeffs):
            if k:
                d = d.derivative(self.var)
            if not c.is_zero():
                out = out + c * d
        return out

    def rename(self, newvar: str) -> "DiffOperator":
        """Same operator written in another variable name."""
        if newvar == self.var:
            return self
        sub = {self.var: MultiPoly.variable(newvar)}
        return DiffOperator(newvar, tuple(c.substitute(sub) for c in self.coeffs))

    def substitute_params(self, assignment: dict) -> "DiffOperator":
        """Substitute values for parameter symbols in every coefficient."""
        if self.var in assignment:
            raise ValueError("cannot substitute the operator variable")
        return DiffOperator(
            self.var, tuple(c.substitute(assignment) for c in self.coeffs)
        )

    # -- comparison ---------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            other = self._coerce_op(other)
            if other is None:
                return NotImplemented
        return self.var == other.var and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.var, self.coeffs))
        return self._hash

    def __str__(self):
        return op_to_text(self)

    def __repr__(self):
        return "DiffOperator(%s: %s)" % (self.var, op_to_text(self))


# -- named operations ---------------------------------------------------------


def op_mul(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    return a * b


def op_adjoint(a: DiffOperator) -> DiffOperator:
    return a.adjoint()


def op_commutator(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    return a * b - b * a


def op_pow(a: DiffOperator, n: int) -> DiffOperator:
    return a**n


def airy_operator(var: str = "x", shift=0) -> DiffOperator:
    """The operator D^2 - (var + shift)."""
    arg = as_rational(MultiPoly.variable(var)) + as_rational(shift)
    return DiffOperator(var, (-arg, RF_ZERO, RF_ONE))


def _detect_main_var(q: MultiPoly) -> str | None:
    mains = [v for v in q.effective_vars() if v in MAIN_VARS]
    if len(mains) > 1:
        raise ValueError("ambiguous polynomial variable in %s" % q)
    return mains[0] if mains else None


def substitute_airy(
    q: MultiPoly, var: str = "x", shift=0, q_var: str | None = None
) -> DiffOperator:
    """Evaluate a univariate polynomial q at the Airy operator D^2-(var+shift).

    ``q`` may carry parameter symbols in its coefficients; ``q_var`` names
    the variable being substituted (autodetected when q uses exactly one of
    the main variables).
    """
    if q_var is None:
        q_var = _detect_main_var(q)
    if q_var is None:
        return DiffOperator.mult(var, q)
    coeffs = poly_coeffs_in(q, q_var)
    L = airy_operator(var, shift)
    out = DiffOperator.zero(var)
    for k in range(max(coeffs), -1, -1):
        out = out * L + coeffs.get(k, 0)
    return out


def binom_shift_expand(m: int, n: int, a, var: str = "x", shift=0) -> bool:
    """Check (L-a)^m D^n = sum_j C(m,j) n!/(n-j)! D^(n-j) (L-a)^(m-j)."""
    if m < 0 or n < 0:
        raise ValueError("orders must be nonnegative")
    L = airy_operator(var, shift)
    A = L - as_rational(a)
    lhs = A**m * DiffOperator.derivative(var, n)
    rhs = DiffOperator.zero(var)
    for j in range(min(m, n) + 1):
        scale = comb(m, j) * (factorial(n) // factorial(n - j))
        rhs = rhs + scale * (DiffOperator.derivative(var, n - j) * A ** (m - j))
    return lhs == rhs


# -- divided symmetric form ----------------------------------------------------


@dataclass(frozen=True)
class DividedForm:
    """Display template (1/v^s) (sum_k D^k a_k(v) rho(v)^k D^k) (1/v^s)."""

    var: str
    s: int
    rho: MultiPoly
    coeffs: tuple

    def to_operator(self) -> DiffOperator:
        var = self.var
        mid = DiffOperator.zero(var)
        rho = as_rational(self.rho)
        for k, a in enumerate(self.coeffs):
            a = as_rational(a)
            if a.is_zero():
                continue
            dk = DiffOperator.derivative(var, k)
            mid = mid + dk * DiffOperator.mult(var, a * rho**k) * dk
        if not self.s:
            return mid
        inv = DiffOperator.mult(
            var, RF_ONE / as_rational(MultiPoly.variable(var)) ** self.s
        )
        return inv * mid * inv

    def __str__(self):
        terms = []
        rho_s = str(self.rho)
        for k in range(len(self.coeffs) - 1, -1, -1):
            a = as_rational(self.coeffs[k])
            if a.is_zero():
                continue
            if k == 0:
                terms.append("(%s)" % a)
                continue
            dk = "D" if k == 1 else "D^%d" % k
            terms.append("%s*(%s)*(%s)^%d*%s" % (dk, a, rho_s, k, dk))
        body = " + ".join(terms) if terms else "0"
        if not self.s:
            return body
        wrap = "(1/%s)" % self.var if self.s == 1 else "(1/%s^%d)" % (self.var, self.s)
        return "%s*(%s)*%s" % (wrap, body, wrap)


def divided_from_operator(
    op: DiffOperator, s: int, rho: MultiPoly
) -> DividedForm | None:
    """Recover the divided symmetric template, or None when op does not fit."""
    var = op.var
    zs = DiffOperator.mult(var, as_rational(MultiPoly.variable(var)) ** s)
    rem = zs * op * zs
    if rem.is_zero():
        return DividedForm(var, s, rho, ())
    if rem.order % 2:
        return None
    rho_rf = as_rational(rho)
    coeffs = []
    for k in range(rem.order // 2, -1, -1):
        a = rem.coeff(2 * k) / rho_rf**k
        coeffs.append(a)
        if not a.is_zero():
            dk = DiffOperator.derivative(var, k)
            rem = rem - dk * DiffOperator.mult(var, a * rho_rf**k) * dk
        if rem.order >= 2 * k:
            return None
    if not rem.is_zero():
        return None
    coeffs.reverse()
    return DividedForm(var, s, rho, tuple(coeffs))


# -- expression grammar ---------------------------------------------------------


class OperatorSyntaxError(ValueError):
    pass


_OPERATOR_CHARS = set("+-*/^()")


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch.isdigit():
            start = pos
            while pos < n and text[pos].isdigit():
                pos += 1
            tokens.append(("int", text[start:pos]))
            continue
        if ch.isalpha() or ch == "_":
            start = pos
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                pos += 1
            tokens.append(("name", text[start:pos]))
            continue
        if ch in _OPERATOR_CHARS:
            tokens.append(("op", ch))
            pos += 1
            continue
        raise OperatorSyntaxError("unexpected character %r at position %d" % (ch, pos))
    return tokens


class _Parser:
    """Recursive descent over +- / */ / ^ with D the ambient derivation."""

    def __init__(self, tokens, var: str):
        self.tokens = tokens
        self.var = var
        self.pos = 0

    def _peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return (None, None)

    def _next(self):
        tok = self._peek()
        self.pos += 1
        return tok

    def parse(self) -> DiffOperator:
        node = self.expr()
        if self.pos != len(self.tokens):
            raise OperatorSyntaxError(
                "trailing input at token %d: %r" % (self.pos, self._peek()[1])
            )
        return node

    def expr(self) -> DiffOperator:
        kind, val = self._peek()
        negate = False
        if kind == "op" and val in "+-":
            self._next()
            negate = val == "-"
        node = self.term()
        if negate:
            node = -node
        while True:
            kind, val = self._peek()
            if kind == "op" and val in "+-":
                self._next()
                rhs = self.term()
                node = node + rhs if val == "+" else node - rhs
            else:
                return node

    def term(self) -> DiffOperator:
        node = self.factor()
        while True:
            kind, val = self._peek()
            if kind == "op" and val in "*/":
                self._next()
                rhs = self.factor()
                if val == "*":
                    node = node * rhs
                else:
                    if rhs.order != 0:
                        raise OperatorSyntaxError(
                            "division only by order-0 expressions"
                        )
                    node = node * DiffOperator.mult(self.var, RF_ONE / rhs.coeff(0))
            else:
                return node

    def factor(self) -> DiffOperator:
        node = self.base()
        kind, val = self._peek()
        if kind == "op" and val == "^":
            self._next()
            kind, val = self._next()
            if kind != "int":
                raise OperatorSyntaxError("exponent must be a nonnegative integer")
            node = node ** int(val)
        return node

    def base(self) -> DiffOperator:
        kind, val = self._next()
        if kind == "op" and val == "(":
            node = self.expr()
            kind, val = self._next()
            if (kind, val) != ("op", ")"):
                raise OperatorSyntaxError("missing closing parenthesis")
            return node
        if kind == "int":
            return DiffOperator.mult(self.var, int(val))
        if kind == "name":
            if val == "D":
                return DiffOperator.derivative(self.var)
            return DiffOperator.mult(self.var, MultiPoly.variable(val))
        raise OperatorSyntaxError("unexpected token %r" % (val,))


def parse_operator(text: str, var: str) -> DiffOperator:
    """Parse the operator grammar; D is the derivation in ``var``."""
    return _Parser(_tokenize(text), var).parse()


def parse_rational(text: str, var: str = "x") -> RationalFunction:
    """Parse a scalar expression (an order-0 operator) to a rational function."""
    op = parse_operator(text, var)
    if op.order > 0:
        raise OperatorSyntaxError("expected a scalar expression, got order %d" % op.order)
    return op.coeff(0)


def _coeff_text(c: RationalFunction) -> tuple[int, str]:
    """Sign and unsigned text of a coefficient, parenthesized for the grammar."""
    num, den = c.num, c.den
    text = str(num)
    sign = 1
    if text.startswith("-"):
        sign = -1
        num = -num
        text = str(num)
    if den == POLY_ONE:
        if len(num.terms) > 1:
            text = "(%s)" % text
        return sign, text
    return sign, "(%s)/(%s)" % (text, den)


def op_to_text(a: DiffOperator) -> str:
    """Canonical text form; parses back to exactly the same operator."""
    if a.is_zero():
        return "0"
    parts = []
    for k in range(a.order, -1, -1):
        c = a.coeff(k)
        if c.is_zero():
            continue
        dpart = "" if k == 0 else ("D" if k == 1 else "D^%d" % k)
        if k > 0 and c == RF_ONE:
            sign, body = 1, dpart
        elif k > 0 and c == _RF_MINUS_ONE:
            sign, body = -1, dpart
        else:
            sign, body = _coeff_text(c)
            if k > 0:
                body = "%s*%s" % (body, dpart)
        if not parts:
            parts.append(body if sign > 0 else "-" + body)
        else:
            parts.append((" + " if sign > 0 else " - ") + body)
    return "".join(parts)


def op_to_structured(a: DiffOperator, divided: DividedForm | None = None) -> dict:
    """Plain-data form: every string re-parses through the grammar."""
    out = {
        "variable": a.var,
        "order": a.order,
        "coefficients": [str(c) for c in a.coeffs],
    }
    if divided is not None:
        out["divided_form"] = {
            "s": divided.s,
            "rho": str(divided.rho),
            "coefficients": [str(as_rational(c)) for c in divided.coeffs],
        }
    return out


def op_from_structured(data: dict) -> DiffOperator:
    var = data["variable"]
    return DiffOperator(var, [parse_rational(s, var) for s in data["coefficients"]])
