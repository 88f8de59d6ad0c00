"""Exact scalar, polynomial, and rational-function arithmetic.

Everything downstream (operator algebra, concomitants, solvers) reduces to
the types in this module.  All arithmetic is exact: rational scalars with
arbitrary precision, sparse multivariate polynomials over those scalars,
reduced rational functions, and fraction-free linear elimination.  No
floating point anywhere.

Scalars are ``gmpy2.mpq`` when gmpy2 is importable and ``fractions.Fraction``
otherwise; both keep fractions reduced with a positive denominator.
"""

from __future__ import annotations

from typing import Iterable, Sequence

try:
    from gmpy2 import mpq as _mpq, mpz as _mpz, gcd as _int_gcd

    def RAT(n, d=1):
        return _mpq(n, d)

    def _scalar_gcd(a, b):
        return _int_gcd(_mpz(a), _mpz(b))

except ImportError:  # pragma: no cover
    from fractions import Fraction as _mpq
    from math import gcd as _int_gcd

    def RAT(n, d=1):
        return _mpq(n, d)

    def _scalar_gcd(a, b):
        return _int_gcd(int(a), int(b))

ZERO = RAT(0)
ONE = RAT(1)

# Ambient variables sort after every parameter symbol so that graded-lex
# comparisons break ties on parameters first.
MAIN_VARS = ("x", "z", "w")
_MAIN_RANK = {name: i for i, name in enumerate(MAIN_VARS)}


def symbol_key(name: str):
    """Sort key placing parameter symbols before ambient variables."""
    if name in _MAIN_RANK:
        return (1, _MAIN_RANK[name], name)
    return (0, 0, name)


def rational_from_string(text: str):
    """Parse an exact rational like ``-16/3`` or ``42``."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return RAT(int(num.strip()), int(den.strip()))
    return RAT(int(text))


def _as_scalar(value):
    if isinstance(value, int):
        return RAT(value)
    return value


class MultiPoly:
    """Sparse multivariate polynomial over exact rationals.

    ``vars`` is a tuple of symbol names sorted by :func:`symbol_key`;
    ``terms`` maps exponent tuples (one entry per variable) to nonzero
    scalar coefficients.  Instances are treated as immutable.
    """

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, vars: tuple[str, ...], terms: dict):
        self.vars = vars
        self.terms = terms
        self._hash = None

    # -- construction -------------------------------------------------

    @staticmethod
    def constant(value) -> "MultiPoly":
        value = _as_scalar(value)
        if value == 0:
            return MultiPoly((), {})
        return MultiPoly((), {(): value})

    @staticmethod
    def variable(name: str) -> "MultiPoly":
        return MultiPoly((name,), {(1,): ONE})

    @staticmethod
    def monomial(vars: tuple[str, ...], exps: tuple[int, ...], coeff) -> "MultiPoly":
        coeff = _as_scalar(coeff)
        if coeff == 0:
            return MultiPoly((), {})
        pairs = sorted(
            ((v, e) for v, e in zip(vars, exps) if e),
            key=lambda p: symbol_key(p[0]),
        )
        return MultiPoly(
            tuple(p[0] for p in pairs), {tuple(p[1] for p in pairs): coeff}
        )

    # -- basic queries -------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self):
        if not self.terms:
            return ZERO
        if not self.is_constant():
            raise ValueError("polynomial is not constant: %s" % self)
        return next(iter(self.terms.values()))

    def degree(self, var: str | None = None) -> int:
        """Total degree, or degree in one variable.  Zero poly gives -1."""
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e) for e in self.terms)
        if var not in self.vars:
            return 0
        i = self.vars.index(var)
        return max(e[i] for e in self.terms)

    def effective_vars(self) -> tuple[str, ...]:
        used = [False] * len(self.vars)
        for exps in self.terms:
            for i, e in enumerate(exps):
                if e:
                    used[i] = True
        return tuple(v for v, u in zip(self.vars, used) if u)

    def _trim(self) -> "MultiPoly":
        """Drop variables that no longer occur."""
        eff = self.effective_vars()
        if eff == self.vars:
            return self
        idx = [self.vars.index(v) for v in eff]
        terms = {tuple(e[i] for i in idx): c for e, c in self.terms.items()}
        return MultiPoly(eff, terms)

    def leading_term(self) -> tuple[tuple[int, ...], object]:
        """Greatest term in graded-lex order (requires nonzero)."""
        return max(self.terms.items(), key=lambda t: (sum(t[0]), t[0]))

    def leading_coeff(self):
        if not self.terms:
            return ZERO
        return self.leading_term()[1]

    # -- alignment -----------------------------------------------------

    def _aligned(self, other: "MultiPoly"):
        if self.vars == other.vars:
            return self.vars, self.terms, other.terms
        merged = tuple(
            sorted(set(self.vars) | set(other.vars), key=symbol_key)
        )
        return merged, self._remap(merged), other._remap(merged)

    def _remap(self, merged: tuple[str, ...]) -> dict:
        if merged == self.vars:
            return self.terms
        pos = [merged.index(v) for v in self.vars]
        n = len(merged)
        out = {}
        for exps, coeff in self.terms.items():
            new = [0] * n
            for p, e in zip(pos, exps):
                new[p] = e
            out[tuple(new)] = coeff
        return out

    def with_vars(self, merged: tuple[str, ...]) -> "MultiPoly":
        return MultiPoly(merged, self._remap(merged))

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, type(ONE))):
            other = MultiPoly.constant(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        vars, a, b = self._aligned(other)
        terms = dict(a)
        for exps, coeff in b.items():
            acc = terms.get(exps)
            if acc is None:
                terms[exps] = coeff
            else:
                acc = acc + coeff
                if acc == 0:
                    del terms[exps]
                else:
                    terms[exps] = acc
        return MultiPoly(vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, type(ONE))):
            other = MultiPoly.constant(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, type(ONE))):
            return self.scale(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        if not self.terms or not other.terms:
            return MultiPoly((), {})
        vars, a, b = self._aligned(other)
        if len(a) > len(b):
            a, b = b, a
        terms = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                key = tuple(i + j for i, j in zip(ea, eb))
                acc = terms.get(key)
                if acc is None:
                    terms[key] = ca * cb
                else:
                    acc = acc + ca * cb
                    if acc == 0:
                        del terms[key]
                    else:
                        terms[key] = acc
        return MultiPoly(vars, terms)

    __rmul__ = __mul__

    def scale(self, value) -> "MultiPoly":
        value = _as_scalar(value)
        if value == 0:
            return MultiPoly((), {})
        return MultiPoly(self.vars, {e: c * value for e, c in self.terms.items()})

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = MultiPoly.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, type(ONE))):
            other = MultiPoly.constant(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        _, a, b = self._aligned(other)
        return a == b

    def __hash__(self):
        if self._hash is None:
            trimmed = self._trim()
            self._hash = hash(
                (trimmed.vars, frozenset(trimmed.terms.items()))
            )
        return self._hash

    # -- calculus ---------------------------------------------------------

    def derivative(self, var: str) -> "MultiPoly":
        if var not in self.vars:
            return MultiPoly((), {})
        i = self.vars.index(var)
        terms = {}
        for exps, coeff in self.terms.items():
            e = exps[i]
            if e:
                key = exps[:i] + (e - 1,) + exps[i + 1 :]
                terms[key] = coeff * e
        return MultiPoly(self.vars, terms)

    def substitute(self, assignment: dict) -> "MultiPoly":
        """Substitute polynomials or scalars for variables."""
        if not any(v in assignment for v in self.vars):
            return self
        result = MultiPoly((), {})
        powers: dict[tuple[str, int], MultiPoly] = {}

        def var_power(v: str, e: int) -> MultiPoly:
            key = (v, e)
            cached = powers.get(key)
            if cached is None:
                repl = assignment.get(v)
                if repl is None:
                    cached = MultiPoly.variable(v) ** e
                else:
                    if not isinstance(repl, MultiPoly):
                        repl = MultiPoly.constant(repl)
                    cached = repl**e
                powers[key] = cached
            return cached

        for exps, coeff in self.terms.items():
            term = MultiPoly.constant(coeff)
            for v, e in zip(self.vars, exps):
                if e:
                    term = term * var_power(v, e)
            result = result + term
        return result

    # -- division ----------------------------------------------------------

    def divmod_exact(self, divisor: "MultiPoly") -> "MultiPoly":
        """Exact quotient self/divisor; raises ValueError when not divisible."""
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if divisor.is_constant():
            return self.scale(ONE / divisor.constant_value())
        vars, a, b = self._aligned(divisor)
        rem = dict(a)
        n = len(vars)
        blead_exp, blead_coeff = max(b.items(), key=lambda t: (sum(t[0]), t[0]))
        quo: dict[tuple[int, ...], object] = {}
        while rem:
            rexp, rcoeff = max(rem.items(), key=lambda t: (sum(t[0]), t[0]))
            qexp = tuple(i - j for i, j in zip(rexp, blead_exp))
            if any(e < 0 for e in qexp):
                raise ValueError("inexact polynomial division")
            qcoeff = rcoeff / blead_coeff
            quo[qexp] = qcoeff
            for bexp, bcoeff in b.items():
                key = tuple(i + j for i, j in zip(qexp, bexp))
                acc = rem.get(key, ZERO) - qcoeff * bcoeff
                if acc == 0:
                    rem.pop(key, None)
                else:
                    rem[key] = acc
        return MultiPoly(vars, quo)._trim()

    def divides(self, other: "MultiPoly") -> bool:
        try:
            other.divmod_exact(self)
            return True
        except ValueError:
            return False

    # -- content and normal forms -------------------------------------------

    def rational_content(self):
        """Positive rational c with self/c integer-primitive; 0 poly gives 1."""
        if not self.terms:
            return ONE
        num_gcd = 0
        den_lcm = 1
        for coeff in self.terms.values():
            num_gcd = _scalar_gcd(num_gcd, coeff.numerator)
            d = coeff.denominator
            den_lcm = den_lcm // _scalar_gcd(den_lcm, d) * d
        return RAT(num_gcd, den_lcm)

    def primitive(self) -> tuple[object, "MultiPoly"]:
        """Split into (signed rational content, primitive positive-leading part)."""
        if not self.terms:
            return ONE, self
        content = self.rational_content()
        if self.leading_coeff() < 0:
            content = -content
        return content, self.scale(ONE / content)

    def evaluate(self, assignment: dict):
        """Fully evaluate to a scalar; every variable must be assigned."""
        total = ZERO
        for exps, coeff in self.terms.items():
            term = coeff
            for v, e in zip(self.vars, exps):
                if e:
                    term = term * (_as_scalar(assignment[v]) ** e)
            total = total + term
        return total

    # -- printing --------------------------------------------------------

    def sorted_terms(self):
        """Terms in display order: graded, with main variables most significant."""
        mains = [i for i, v in enumerate(self.vars) if v in MAIN_VARS]
        rest = [i for i in range(len(self.vars)) if self.vars[i] not in MAIN_VARS]
        perm = mains + rest

        def key(item):
            exps = item[0]
            return (sum(exps),) + tuple(exps[i] for i in perm)

        return sorted(self.terms.items(), key=key, reverse=True)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exps, coeff in self.sorted_terms():
            factors = []
            for v, e in zip(self.vars, exps):
                if e == 1:
                    factors.append(v)
                elif e > 1:
                    factors.append("%s^%d" % (v, e))
            mono = "*".join(factors)
            if not mono:
                piece = _scalar_str(coeff)
            elif coeff == 1:
                piece = mono
            elif coeff == -1:
                piece = "-" + mono
            else:
                piece = _scalar_str(coeff) + "*" + mono
            if parts and not piece.startswith("-"):
                parts.append("+" + piece)
            else:
                parts.append(piece)
        return "".join(parts)

    def __repr__(self):
        return "MultiPoly(%s)" % self


def _scalar_str(value) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return "%s/%s" % (value.numerator, value.denominator)


POLY_ZERO = MultiPoly((), {})
POLY_ONE = MultiPoly.constant(1)


def poly_from_var(name: str) -> MultiPoly:
    return MultiPoly.variable(name)


def poly_coeffs_in(poly: MultiPoly, var: str) -> dict[int, MultiPoly]:
    """Coefficients of ``poly`` as a polynomial in ``var``.

    Returns {exponent: coefficient}; coefficients are polynomials in the
    remaining variables.  Zero gives an empty dict.
    """
    if poly.is_zero():
        return {}
    if var not in poly.vars:
        return {0: poly}
    return _to_univariate(poly, var)


# -- gcd ---------------------------------------------------------------------


def _scalar_poly_gcd(a: dict, b: dict) -> int:
    """gcd of the integer contents of two scalar-coefficient term dicts."""
    g = 0
    for coeff in a.values():
        g = _scalar_gcd(g, coeff.numerator)
    for coeff in b.values():
        g = _scalar_gcd(g, coeff.numerator)
    return g


def _to_univariate(poly: MultiPoly, var: str) -> dict[int, MultiPoly]:
    """View as a polynomial in ``var`` with MultiPoly coefficients."""
    i = poly.vars.index(var)
    rest = poly.vars[:i] + poly.vars[i + 1 :]
    out: dict[int, dict] = {}
    for exps, coeff in poly.terms.items():
        e = exps[i]
        out.setdefault(e, {})[exps[:i] + exps[i + 1 :]] = coeff
    return {e: MultiPoly(rest, terms)._trim() for e, terms in out.items()}


def _from_univariate(coeffs: dict[int, MultiPoly], var: str) -> MultiPoly:
    result = POLY_ZERO
    v = MultiPoly.variable(var)
    for e, c in coeffs.items():
        result = result + c * v**e
    return result


def _dense(coeffs: dict[int, MultiPoly]) -> list[MultiPoly]:
    deg = max(coeffs)
    out = [POLY_ZERO] * (deg + 1)
    for e, c in coeffs.items():
        out[deg - e] = c
    return out


def _dense_degree(f: list[MultiPoly]) -> int:
    return len(f) - 1


def _dense_strip(f: list[MultiPoly]) -> list[MultiPoly]:
    i = 0
    while i < len(f) and f[i].is_zero():
        i += 1
    return f[i:]


def _dense_prem(f: list[MultiPoly], g: list[MultiPoly]) -> list[MultiPoly]:
    """Pseudo-remainder prem(f, g) = lc(g)^(deg f - deg g + 1) * f mod g."""
    df, dg = _dense_degree(f), _dense_degree(g)
    lead_g = g[0]
    r = list(f)
    for _ in range(df - dg + 1):
        if not r or _dense_degree(r) < dg:
            r = [lead_g * c for c in r]
            continue
        lead_r = r[0]
        new = [lead_g * c for c in r[1:]]
        for k in range(1, dg + 1):
            new[k - 1] = new[k - 1] - lead_r * g[k]
        r = _dense_strip(new)
        if not r:
            break
    return r


def _content_of(coeffs: Iterable[MultiPoly]) -> MultiPoly:
    items = [c for c in coeffs if not c.is_zero()]
    g = POLY_ZERO
    for c in items:
        g = poly_gcd(g, c)
        if g.is_constant() and not g.is_zero():
            break
    return g if not g.is_zero() else POLY_ZERO


def poly_gcd(f: MultiPoly, g: MultiPoly) -> MultiPoly:
    """Primitive positive-leading gcd over the rationals.

    Constant nonzero inputs act as units: gcd(c, f) is 1 for c != 0.
    Computed by subresultant pseudo-remainder sequences, recursing on the
    coefficient ring one variable at a time.
    """
    if f.is_zero():
        return g.primitive()[1] if not g.is_zero() else POLY_ZERO
    if g.is_zero():
        return f.primitive()[1]
    if f.is_constant() or g.is_constant():
        return POLY_ONE

    # Single-term fast path: gcd with a monomial is the shared monomial part.
    if len(f.terms) == 1 or len(g.terms) == 1:
        return _monomial_gcd(f, g)

    vars, a, b = f._aligned(g)
    f = MultiPoly(vars, a)._trim()
    g = MultiPoly(vars, b)._trim()
    shared = tuple(sorted(set(f.vars) & set(g.vars), key=symbol_key))
    if not shared:
        return POLY_ONE
    var = shared[-1]

    fu = _to_univariate(f, var)
    gu = _to_univariate(g, var)
    cont_f = _content_of(fu.values())
    cont_g = _content_of(gu.values())
    cont = poly_gcd(cont_f, cont_g)
    F = _dense({e: c.divmod_exact(cont_f) for e, c in fu.items()})
    G = _dense({e: c.divmod_exact(cont_g) for e, c in gu.items()})
    if _dense_degree(F) < _dense_degree(G):
        F, G = G, F

    # Subresultant PRS (Knuth's g/h divisors keep every division exact).
    gg = POLY_ONE
    h = POLY_ONE
    while True:
        d = _dense_degree(F) - _dense_degree(G)
        R = _dense_prem(F, G)
        if not R:
            break
        if _dense_degree(R) == 0:
            G = [POLY_ONE]
            break
        beta = gg * h**d
        F, G = G, [c.divmod_exact(beta) for c in R]
        gg = F[0]
        if d == 1:
            h = gg
        elif d > 1:
            h = (gg**d).divmod_exact(h ** (d - 1))

    if _dense_degree(G) == 0:
        result = cont
    else:
        g_cont = _content_of(G)
        pp = {
            _dense_degree(G) - i: c.divmod_exact(g_cont)
            for i, c in enumerate(G)
            if not c.is_zero()
        }
        result = cont * _from_univariate(pp, var)
    return result.primitive()[1]


def _monomial_gcd(f: MultiPoly, g: MultiPoly) -> MultiPoly:
    vars, a, b = f._aligned(g)
    n = len(vars)
    mins = None
    for terms in (a, b):
        for exps in terms:
            if mins is None:
                mins = list(exps)
            else:
                mins = [min(i, j) for i, j in zip(mins, exps)]
    exps = tuple(mins if mins else [0] * n)
    return MultiPoly.monomial(vars, exps, ONE)


def poly_lcm(f: MultiPoly, g: MultiPoly) -> MultiPoly:
    if f.is_zero() or g.is_zero():
        return POLY_ZERO
    prod = f * g
    quo = prod.divmod_exact(poly_gcd(f, g))
    return quo.primitive()[1]


# -- rational functions --------------------------------------------------------


class RationalFunction:
    """Reduced quotient of multivariate polynomials.

    Canonical form: gcd(num, den) is a unit, the denominator is
    integer-primitive with positive leading coefficient in graded-lex
    order, and zero is 0/1.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: MultiPoly, den: MultiPoly, reduce: bool = True):
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if reduce:
            num, den = _reduce_fraction(num, den)
        self.num = num
        self.den = den

    # -- construction ---------------------------------------------------

    @staticmethod
    def from_poly(poly: MultiPoly) -> "RationalFunction":
        return RationalFunction(poly, POLY_ONE, reduce=False)

    @staticmethod
    def constant(value) -> "RationalFunction":
        return RationalFunction.from_poly(MultiPoly.constant(value))

    @staticmethod
    def variable(name: str) -> "RationalFunction":
        return RationalFunction.from_poly(MultiPoly.variable(name))

    # -- queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den == POLY_ONE

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self):
        return self.num.constant_value() / self.den.constant_value()

    def as_poly(self) -> MultiPoly:
        if not self.is_polynomial():
            raise ValueError("not a polynomial: %s" % self)
        return self.num

    # -- arithmetic ---------------------------------------------------------

    @staticmethod
    def _coerce(value):
        if isinstance(value, RationalFunction):
            return value
        if isinstance(value, MultiPoly):
            return RationalFunction.from_poly(value)
        if isinstance(value, (int, type(ONE))):
            return RationalFunction.constant(value)
        return None

    def __add__(self, other):
        other = RationalFunction._coerce(other)
        if other is None:
            return NotImplemented
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        num = self.num * other.den + other.num * self.den
        return RationalFunction(num, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        other = RationalFunction._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = RationalFunction._coerce(other)
        if other is None:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return RF_ZERO
        # Cross-reduce before multiplying; the result is then already
        # reduced and the denominator primitive by Gauss's lemma.
        a, d2 = _reduce_fraction(self.num, other.den)
        b, d1 = _reduce_fraction(other.num, self.den)
        return RationalFunction(a * b, d1 * d2, reduce=False)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = RationalFunction._coerce(other)
        if other is None:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return self * RationalFunction(other.den, other.num)

    def __rtruediv__(self, other):
        other = RationalFunction._coerce(other)
        return other / self

    def __pow__(self, n: int):
        if n < 0:
            return RationalFunction(self.den**-n, self.num**-n)
        return RationalFunction(self.num**n, self.den**n, reduce=False)

    def __eq__(self, other):
        other = RationalFunction._coerce(other)
        if other is None:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    # -- calculus ----------------------------------------------------------

    def derivative(self, var: str) -> "RationalFunction":
        if self.is_polynomial():
            return RationalFunction(self.num.derivative(var), POLY_ONE, reduce=False)
        dden = self.den.derivative(var)
        if dden.is_zero():
            return RationalFunction(self.num.derivative(var), self.den)
        # (n/d)' = (n'e - n*w)/(d*e) with d = g*e, d' = g*w, g = gcd(d, d'),
        # which keeps the denominator from squaring before reduction.
        g = poly_gcd(self.den, dden)
        e = self.den.divmod_exact(g)
        w = dden.divmod_exact(g)
        num = self.num.derivative(var) * e - self.num * w
        return RationalFunction(num, self.den * e)

    def substitute(self, assignment: dict) -> "RationalFunction":
        return RationalFunction(
            self.num.substitute(assignment), self.den.substitute(assignment)
        )

    def degree(self, var: str) -> int:
        return self.num.degree(var) - self.den.degree(var)

    def __str__(self):
        if self.is_polynomial():
            return str(self.num)
        return "(%s)/(%s)" % (self.num, self.den)

    def __repr__(self):
        return "RationalFunction(%s)" % self


def _reduce_fraction(num: MultiPoly, den: MultiPoly) -> tuple[MultiPoly, MultiPoly]:
    if num.is_zero():
        return POLY_ZERO, POLY_ONE
    if den.is_constant():
        c = den.constant_value()
        if c == 1:
            return num, POLY_ONE
        return num.scale(ONE / c), POLY_ONE
    g = poly_gcd(num, den)
    if not (g.is_constant()):
        num = num.divmod_exact(g)
        den = den.divmod_exact(g)
    content, den = den.primitive()
    num = num.scale(ONE / content)
    return num, den


RF_ZERO = RationalFunction.from_poly(POLY_ZERO)
RF_ONE = RationalFunction.from_poly(POLY_ONE)


# -- matrices -------------------------------------------------------------------


class RFMatrix:
    """Dense matrix over RationalFunction with exact arithmetic."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence[RationalFunction]]):
        self.rows = [list(r) for r in rows]

    @staticmethod
    def zero(nrows: int, ncols: int) -> "RFMatrix":
        return RFMatrix([[RF_ZERO] * ncols for _ in range(nrows)])

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        return self.rows[ij[0]][ij[1]]

    def transpose(self) -> "RFMatrix":
        return RFMatrix(list(map(list, zip(*self.rows))))

    def __add__(self, other: "RFMatrix") -> "RFMatrix":
        return RFMatrix(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.rows, other.rows)
            ]
        )

    def __sub__(self, other: "RFMatrix") -> "RFMatrix":
        return RFMatrix(
            [
                [a - b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.rows, other.rows)
            ]
        )

    def __neg__(self) -> "RFMatrix":
        return RFMatrix([[-a for a in row] for row in self.rows])

    def __mul__(self, other: "RFMatrix") -> "RFMatrix":
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise ValueError("shape mismatch in matrix product")
        cols = other.transpose().rows
        out = []
        for row in self.rows:
            out_row = []
            for col in cols:
                acc = RF_ZERO
                for a, b in zip(row, col):
                    if not (a.is_zero() or b.is_zero()):
                        acc = acc + a * b
                out_row.append(acc)
            out.append(out_row)
        return RFMatrix(out)

    def scale(self, value) -> "RFMatrix":
        value = RationalFunction._coerce(value)
        return RFMatrix([[a * value for a in row] for row in self.rows])

    def is_zero(self) -> bool:
        return all(a.is_zero() for row in self.rows for a in row)

    def __eq__(self, other):
        if not isinstance(other, RFMatrix):
            return NotImplemented
        return self.shape == other.shape and all(
            a == b
            for ra, rb in zip(self.rows, other.rows)
            for a, b in zip(ra, rb)
        )

    def __str__(self):
        return "\n".join(
            "[" + ", ".join(str(a) for a in row) + "]" for row in self.rows
        )


# -- fraction-free elimination ---------------------------------------------------


def _row_to_polys(row) -> dict[int, MultiPoly]:
    """Clear denominators in one row; returns sparse {col: MultiPoly}."""
    entries: dict[int, RationalFunction] = {}
    if isinstance(row, dict):
        items = row.items()
    else:
        items = enumerate(row)
    for j, value in items:
        rf = RationalFunction._coerce(value)
        if rf is not None and not rf.is_zero():
            entries[j] = rf
    if not entries:
        return {}
    den = POLY_ONE
    for rf in entries.values():
        if not rf.is_polynomial():
            den = poly_lcm(den, rf.den)
    out = {}
    for j, rf in entries.items():
        poly = rf.num * den.divmod_exact(rf.den)
        out[j] = poly
    return _strip_row_content(out)


def _strip_row_content(row: dict[int, MultiPoly]) -> dict[int, MultiPoly]:
    if not row:
        return row
    entries = list(row.values())
    if all(e.is_constant() for e in entries):
        g = 0
        lcm_den = 1
        for e in entries:
            c = e.constant_value()
            g = _scalar_gcd(g, c.numerator)
            d = c.denominator
            lcm_den = lcm_den // _scalar_gcd(lcm_den, d) * d
        scale = RAT(lcm_den, g)
    else:
        content = _content_of(entries)
        if not content.is_constant():
            row = {j: e.divmod_exact(content) for j, e in row.items()}
            entries = list(row.values())
        g = ONE
        lcm_den = 1
        num_gcd = 0
        for e in entries:
            c = e.rational_content()
            num_gcd = _scalar_gcd(num_gcd, c.numerator)
            d = c.denominator
            lcm_den = lcm_den // _scalar_gcd(lcm_den, d) * d
        scale = RAT(lcm_den, num_gcd)
    first = min(row)
    if row[first].leading_coeff() * scale < 0:
        scale = -scale
    return {j: e.scale(scale) for j, e in row.items()}


def _eliminate(rows: list[dict[int, MultiPoly]], ncols: int, parallel: bool = False):
    """Fraction-free forward elimination; returns echelon rows and pivot cols.

    Row updates are the cross-multiplied form p*row - q*pivot_row followed by
    content stripping, so entries stay polynomial throughout.  The pivot rule
    (sparsest row, then smallest entry, then lowest index) is deterministic;
    the parallel path partitions row updates and merges in index order, so
    results are bit-identical with or without it.
    """
    work = [r for r in rows if r]
    echelon: list[dict[int, MultiPoly]] = []
    pivot_cols: list[int] = []

    def _row_weight(row: dict[int, MultiPoly], col: int):
        entry = row[col]
        return (len(row), len(entry.terms), sum(len(e.terms) for e in row.values()))

    for col in range(ncols):
        candidates = [i for i, r in enumerate(work) if col in r]
        if not candidates:
            continue
        best = min(candidates, key=lambda i: (_row_weight(work[i], col), i))
        pivot_row = work.pop(best)
        pivot = pivot_row[col]
        pivot_cols.append(col)
        echelon.append(pivot_row)

        def _update(row: dict[int, MultiPoly]) -> dict[int, MultiPoly]:
            q = row.get(col)
            if q is None:
                return row
            new: dict[int, MultiPoly] = {}
            for j, e in row.items():
                if j == col:
                    continue
                pe = pivot_row.get(j)
                val = pivot * e if pe is None else pivot * e - q * pe
                if not val.is_zero():
                    new[j] = val
            for j, pe in pivot_row.items():
                if j != col and j not in row:
                    val = -q * pe
                    if not val.is_zero():
                        new[j] = val
            return _strip_row_content(new)

        if parallel and len(work) > 64:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor() as pool:
                work = [r for r in pool.map(_update, work) if r]
        else:
            work = [r for r in (_update(r) for r in work) if r]
    return echelon, pivot_cols


def nullspace(rows, ncols: int, parallel: bool = False) -> list[list[RationalFunction]]:
    """Exact right-nullspace basis of a matrix given as rows.

    Rows may be sequences or sparse dicts with entries that are rational
    functions, polynomials, or scalars.  The basis is deterministic: one
    vector per free column in ascending order, with 1 in the free column,
    and it is reduced (pivot coordinates are solved exactly).
    """
    cleared = [_row_to_polys(r) for r in rows]
    seen = set()
    unique = []
    for r in cleared:
        if not r:
            continue
        key = tuple(sorted((j, str(e)) for j, e in r.items()))
        if key not in seen:
            seen.add(key)
            unique.append(r)
    echelon, pivot_cols = _eliminate(unique, ncols, parallel=parallel)
    pivot_set = set(pivot_cols)
    free_cols = [j for j in range(ncols) if j not in pivot_set]
    basis = []
    for f in free_cols:
        vec: dict[int, RationalFunction] = {f: RF_ONE}
        for row, pc in zip(reversed(echelon), reversed(pivot_cols)):
            acc = RF_ZERO
            for j, e in row.items():
                if j == pc:
                    continue
                v = vec.get(j)
                if v is not None and not v.is_zero():
                    acc = acc + v * e
            if not acc.is_zero():
                vec[pc] = -acc / RationalFunction.from_poly(row[pc])
        basis.append([vec.get(j, RF_ZERO) for j in range(ncols)])
    return basis


def rref_rows(vectors: list[list[RationalFunction]]) -> list[list[RationalFunction]]:
    """Reduced row echelon form of vectors over the rational-function field.

    Deterministic canonical basis of the span: pivots are 1, pivot columns
    are cleared elsewhere, rows ordered by pivot column.
    """
    work = [list(v) for v in vectors]
    ncols = len(work[0]) if work else 0
    out: list[list[RationalFunction]] = []
    pivots: list[int] = []
    for col in range(ncols):
        idx = None
        for i, row in enumerate(work):
            if not row[col].is_zero():
                idx = i
                break
        if idx is None:
            continue
        row = work.pop(idx)
        inv = row[col]
        row = [e / inv for e in row]
        for other in work:
            c = other[col]
            if not c.is_zero():
                for j in range(ncols):
                    if not row[j].is_zero():
                        other[j] = other[j] - c * row[j]
        for prev, pc in zip(out, pivots):
            c = prev[col]
            if not c.is_zero():
                for j in range(ncols):
                    if not row[j].is_zero():
                        prev[j] = prev[j] - c * row[j]
        out.append(row)
        pivots.append(col)
        work = [r for r in work if any(not e.is_zero() for e in r)]
        if not work:
            break
    return out


def solve_in_span(
    basis: list[list[RationalFunction]], target: list[RationalFunction]
):
    """Coefficients expressing target in the span of basis, or None.

    Works through the nullspace of the augmented system sum(c_i b_i) + m*t = 0:
    the target lies in the span exactly when some basis vector of that
    nullspace has m != 0.
    """
    n = len(basis)
    if n == 0:
        return [] if all(e.is_zero() for e in target) else None
    rows = []
    for j in range(len(target)):
        rows.append([basis[i][j] for i in range(n)] + [target[j]])
    null = nullspace(rows, n + 1)
    for vec in null:
        if not vec[n].is_zero():
            scale = -(RF_ONE / vec[n])
            return [vec[i] * scale for i in range(n)]
    return None


# -- modular linear algebra --------------------------------------------------
#
# Large scalar systems (wave-equation matching at high filtration bounds) are
# solved mod several word-size primes, lifted by CRT, reconstructed to
# rationals, and then verified exactly against the original rows.  Verified
# vectors are exact nullspace elements; when every mod-p vector verifies, the
# mod-p nullity (always >= the rational nullity) equals the verified count,
# which certifies the exact dimension.


def _is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        y = pow(a, d, n)
        if y == 1 or y == n - 1:
            continue
        for _ in range(r - 1):
            y = (y * y) % n
            if y == n - 1:
                break
        else:
            return False
    return True


def _prime_stream(count: int, start: int = (1 << 62) - 1):
    primes = []
    n = start
    if n % 2 == 0:
        n -= 1
    while len(primes) < count:
        if _is_probable_prime(n):
            primes.append(n)
        n -= 2
    return primes


_SOLVER_PRIMES = _prime_stream(32)
# 31-bit primes keep products of two residues inside int64 for the dense path.
_SOLVER_PRIMES_DENSE = _prime_stream(48, start=(1 << 31) - 1)

try:
    import numpy as _np
except ImportError:  # pragma: no cover
    _np = None

# Above this many matrix cells the dense path's memory cost outweighs its
# vectorization win and the sparse dict elimination takes over.
_DENSE_CELL_LIMIT = 40_000_000


def _scalar_mod(value, p: int) -> int:
    num = int(value.numerator) % p
    den = int(value.denominator) % p
    if den == 0:
        raise ZeroDivisionError("denominator divisible by modulus")
    if den == 1:
        return num
    return (num * pow(den, p - 2, p)) % p


def nullspace_modp(rows: Iterable[dict], ncols: int, p: int):
    """Nullspace basis of sparse integer rows mod p.

    Rows are mappings column -> integer-like scalar.  Returns
    ``(pivot_cols, free_cols, basis)`` where each basis vector is a dict
    column -> residue and corresponds to one free column (that entry is 1).
    """
    echelon: dict[int, dict[int, int]] = {}
    work = []
    for raw in rows:
        row = {}
        for j, v in raw.items():
            r = int(v) % p if isinstance(v, int) else _scalar_mod(v, p)
            if r:
                row[j] = r
        if row:
            work.append(row)
    work.sort(key=len)
    for row in work:
        while row:
            c = min(row)
            piv = echelon.get(c)
            if piv is None:
                inv = pow(row[c], p - 2, p)
                echelon[c] = {j: (v * inv) % p for j, v in row.items()}
                break
            f = row[c]
            for j, v in piv.items():
                nv = (row.get(j, 0) - f * v) % p
                if nv:
                    row[j] = nv
                elif j in row:
                    del row[j]
    pivot_cols = sorted(echelon)
    pivot_set = set(pivot_cols)
    free_cols = [j for j in range(ncols) if j not in pivot_set]
    basis = []
    for f in free_cols:
        vec = {f: 1}
        for pc in reversed(pivot_cols):
            piv = echelon[pc]
            acc = 0
            for j, v in piv.items():
                if j != pc:
                    vj = vec.get(j)
                    if vj:
                        acc = (acc + v * vj) % p
            if acc:
                vec[pc] = (-acc) % p
        basis.append(vec)
    return pivot_cols, free_cols, basis


def _nullspace_modp_dense(rows, ncols: int, p: int):
    """Dense numpy RREF mod a 31-bit prime; same contract as nullspace_modp."""
    mat = _np.zeros((len(rows), ncols), dtype=_np.int64)
    for r, raw in enumerate(rows):
        for j, v in raw.items():
            mat[r, j] = (int(v) if isinstance(v, int) else
                         _scalar_mod(v, p)) % p
    nrows = mat.shape[0]
    pivot_cols = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = _np.nonzero(mat[r:, c])[0]
        if nz.size == 0:
            continue
        pr = r + int(nz[0])
        if pr != r:
            mat[[r, pr]] = mat[[pr, r]]
        inv = pow(int(mat[r, c]), p - 2, p)
        mat[r] = (mat[r] * inv) % p
        colvals = mat[:, c].copy()
        colvals[r] = 0
        hit = _np.nonzero(colvals)[0]
        if hit.size:
            mat[hit] = (mat[hit] - colvals[hit, None] * mat[r][None, :]) % p
        pivot_cols.append(c)
        r += 1
    pivot_set = set(pivot_cols)
    free_cols = [j for j in range(ncols) if j not in pivot_set]
    basis = []
    for f in free_cols:
        vec = {f: 1}
        for i, c in enumerate(pivot_cols):
            v = int(mat[i, f])
            if v:
                vec[c] = (-v) % p
        basis.append(vec)
    return pivot_cols, free_cols, basis


def rational_reconstruct(residue: int, modulus: int):
    """Rational a/b with a*b^-1 = residue (mod modulus), or None.

    Both |a| and b are bounded by sqrt(modulus/2), which makes the
    reconstruction unique when it exists.
    """
    from math import isqrt

    bound = isqrt(modulus // 2)
    r0, r1 = modulus, residue % modulus
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    a, b = r1, s1
    if b == 0:
        return None
    if b < 0:
        a, b = -a, -b
    if b > bound or _scalar_gcd(abs(a), b) != 1:
        return None
    if (a - b * residue) % modulus != 0:
        return None
    return RAT(a, b)


def _crt_pair(a1: int, m1: int, a2: int, m2: int):
    d = (a2 - a1) % m2
    t = (d * pow(m1 % m2, m2 - 2, m2)) % m2
    return a1 + m1 * t, m1 * m2


def nullspace_certified(rows: list, ncols: int, max_primes: int = 12):
    """Exact rational nullspace of sparse integer rows, via mod-p lifting.

    Rows are mappings column -> int.  Returns ``(basis, certified)``: basis
    vectors are lists of scalars, one per free column of the stable pivot
    structure.  ``certified`` is True when every mod-p nullspace vector
    reconstructed and verified exactly, which pins the exact dimension;
    otherwise the verified subset (possibly empty) is returned.
    """
    material = [r for r in rows if r]
    dense = _np is not None and len(material) * ncols <= _DENSE_CELL_LIMIT
    primes = _SOLVER_PRIMES_DENSE if dense else _SOLVER_PRIMES
    if dense:
        max_primes = max(max_primes, 24)
    best = None
    combined = None
    used = []
    for p in primes[:max_primes]:
        try:
            if dense:
                piv, free, basis = _nullspace_modp_dense(material, ncols, p)
            else:
                piv, free, basis = nullspace_modp(material, ncols, p)
        except ZeroDivisionError:
            continue
        rank = len(piv)
        if best is None or rank > best[0]:
            best = (rank, piv, free)
            combined = [(dict(v), p) for v in basis]
            used = [p]
        elif rank == best[0] and piv == best[1]:
            merged = []
            for (acc, m), extra in zip(combined, basis):
                cols = set(acc) | set(extra)
                out = {}
                for j in cols:
                    val, _ = _crt_pair(acc.get(j, 0), m, extra.get(j, 0), p)
                    if val:
                        out[j] = val
                merged.append((out, m * p))
            combined = merged
            used.append(p)
        else:
            continue
        candidates = []
        ok = True
        for vec, m in combined:
            lifted = {}
            for j, r in vec.items():
                val = rational_reconstruct(r, m)
                if val is None:
                    ok = False
                    break
                if val:
                    lifted[j] = val
            if not ok:
                break
            candidates.append(lifted)
        if not ok:
            continue
        verified = []
        for lifted in candidates:
            denlcm = 1
            for val in lifted.values():
                d = int(val.denominator)
                if d != 1:
                    g = _scalar_gcd(denlcm, d)
                    denlcm = denlcm * d // int(g)
            ints = {
                j: int(val.numerator) * (denlcm // int(val.denominator))
                for j, val in lifted.items()
            }
            good = True
            for row in material:
                acc = 0
                if len(row) < len(ints):
                    for j, c in row.items():
                        v = ints.get(j)
                        if v is not None:
                            acc += c * v
                else:
                    for j, v in ints.items():
                        c = row.get(j)
                        if c is not None:
                            acc += c * v
                if acc:
                    good = False
                    break
            if not good:
                break
            verified.append(lifted)
        if len(verified) == len(combined):
            out = []
            for lifted in verified:
                out.append([lifted.get(j, ZERO) for j in range(ncols)])
            return out, True
    return [], False
