"""Bilinear concomitant of a differential operator as a jet-space form.

For an operator R = sum_j d_j(x) D^j of order m, integration by parts
leaves the boundary bilinear form

    C_R(f, g; p) = sum_{j=1..m} sum_{k=0..j-1} (-1)^k f^(j-1-k)(p) (d_j g)^(k)(p),

which depends only on the m-jets of f and g at p.  This module assembles
that form as an explicit m x m matrix over the parameter field, proves the
product decomposition C_{AB}(f,g) = C_A(Bf,g) + C_B(f,A*g) at the matrix
level, and evaluates the closed-form pairing between kernel elements of
squared factorized operators.  The Wronskian constant of the Airy pair is
carried as the formal symbol pi with a configurable sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial, prod

from .exact import (
    MultiPoly,
    POLY_ONE,
    RAT,
    RFMatrix,
    RF_ZERO,
    RationalFunction,
)
from .weylops import DiffOperator, as_rational

_WRONSKIAN_SIGN = 1


def wronskian_sign() -> int:
    return _WRONSKIAN_SIGN


def set_wronskian_sign(sign: int) -> None:
    """Sign convention for W(Ai, Bi) = sign/pi; +1 and -1 are the options."""
    global _WRONSKIAN_SIGN
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    _WRONSKIAN_SIGN = sign


PI = MultiPoly.variable("pi")


def _point_poly(point) -> MultiPoly:
    if isinstance(point, MultiPoly):
        return point
    if isinstance(point, str):
        return MultiPoly.variable(point)
    return as_rational(point).as_poly()


def _at(value: RationalFunction, var: str, point: MultiPoly) -> RationalFunction:
    # a vanishing denominator raises ZeroDivisionError: coefficient pole at p
    return value.substitute({var: point})


@dataclass(frozen=True)
class ConcomitantMatrix:
    """m x m matrix M with C_R(f,g;p) = jet(f;p)^T M jet(g;p), jets 0..m-1."""

    point: MultiPoly
    size: int
    entries: RFMatrix

    def pair(self, fjet, gjet) -> RationalFunction:
        if len(fjet) != self.size or len(gjet) != self.size:
            raise ValueError("jet length must equal the matrix size")
        total = RF_ZERO
        for i in range(self.size):
            fi = as_rational(fjet[i])
            if fi.is_zero():
                continue
            for j in range(self.size):
                e = self.entries[i, j]
                if e.is_zero():
                    continue
                total = total + fi * e * as_rational(gjet[j])
        return total

    def is_zero(self) -> bool:
        return self.entries.is_zero()


def _coefficient_jets(op: DiffOperator, depth: int, point: MultiPoly):
    """Derivatives 0..depth of every coefficient, evaluated at the point."""
    jets = []
    for c in op.coeffs:
        row = [c]
        for _ in range(depth):
            row.append(row[-1].derivative(op.var))
        jets.append([_at(v, op.var, point) for v in row])
    return jets


def concomitant_matrix(op: DiffOperator, point) -> ConcomitantMatrix:
    """Assemble the concomitant of ``op`` at ``point`` (rational or symbolic)."""
    m = op.order
    if m < 1:
        raise ValueError("concomitant requires an operator of order >= 1")
    p = _point_poly(point)
    jets = _coefficient_jets(op, m - 1, p)
    rows = [[RF_ZERO] * m for _ in range(m)]
    for j in range(1, m + 1):
        dj = jets[j]
        for k in range(j):
            sign = -1 if k % 2 else 1
            for ell in range(k + 1):
                v = dj[k - ell]
                if v.is_zero():
                    continue
                rows[j - 1 - k][ell] = rows[j - 1 - k][ell] + (sign * comb(k, ell)) * v
    return ConcomitantMatrix(p, m, RFMatrix(rows))


def jet_transform(op: DiffOperator, rows: int, cols: int, point) -> list:
    """rows x cols matrix T with jet(op.f; p) = T jet(f; p).

    Entry T[r][c] collects C(r,i) d_j^{(i)}(p) over j + r - i = c.
    """
    p = _point_poly(point)
    jets = _coefficient_jets(op, max(rows - 1, 0), p)
    out = [[RF_ZERO] * cols for _ in range(rows)]
    for r in range(rows):
        for j in range(len(jets)):
            for i in range(r + 1):
                c = j + r - i
                if c >= cols:
                    continue
                v = jets[j][i]
                if v.is_zero():
                    continue
                out[r][c] = out[r][c] + comb(r, i) * v
    return out


def _matmul(a: list, b: list) -> list:
    if not a or not b:
        return []
    n, k, m = len(a), len(b), len(b[0])
    out = [[RF_ZERO] * m for _ in range(n)]
    for i in range(n):
        for t in range(k):
            v = a[i][t]
            if v.is_zero():
                continue
            for j in range(m):
                w = b[t][j]
                if not w.is_zero():
                    out[i][j] = out[i][j] + v * w
    return out


def _transpose(a: list) -> list:
    if not a:
        return []
    return [list(col) for col in zip(*a)]


def product_concomitant_check(a1: DiffOperator, a2: DiffOperator, point) -> bool:
    """Matrix form of C_{A1 A2}(f,g) = C_{A1}(A2 f, g) + C_{A2}(f, A1* g)."""
    if a1.var != a2.var:
        raise ValueError("operator variable mismatch")
    m1, m2 = a1.order, a2.order
    total = m1 + m2
    if total < 1:
        return True
    p = _point_poly(point)
    lhs = concomitant_matrix(a1 * a2, p).entries
    acc = [[RF_ZERO] * total for _ in range(total)]
    if m1 >= 1:
        t2 = jet_transform(a2, m1, total, p)
        m_a1 = concomitant_matrix(a1, p).entries
        proj = [
            [RF_ZERO if c != r else as_rational(1) for c in range(total)]
            for r in range(m1)
        ]
        part = _matmul(_transpose(t2), _matmul([list(r) for r in m_a1.rows], proj))
        acc = [[acc[i][j] + part[i][j] for j in range(total)] for i in range(total)]
    if m2 >= 1:
        t1s = jet_transform(a1.adjoint(), m2, total, p)
        m_a2 = concomitant_matrix(a2, p).entries
        proj = [
            [RF_ZERO if c != r else as_rational(1) for c in range(total)]
            for r in range(m2)
        ]
        part = _matmul(_transpose(proj), _matmul([list(r) for r in m_a2.rows], t1s))
        acc = [[acc[i][j] + part[i][j] for j in range(total)] for i in range(total)]
    return lhs == RFMatrix(acc)


# -- kernel pairing -------------------------------------------------------------


def _wronskian_constant(f_type: str, g_type: str) -> RationalFunction:
    """W(f, g) for f, g in {Ai, Bi} at a common shift, as a multiple of 1/pi."""
    if f_type == g_type:
        return RF_ZERO
    sign = _WRONSKIAN_SIGN if (f_type, g_type) == ("Ai", "Bi") else -_WRONSKIAN_SIGN
    return RationalFunction(MultiPoly.constant(sign), PI)


def kernel_pairing(roots, f_type: str, g_type: str, j: int, k: int, m: int, n: int):
    """Closed-form concomitant pairing on kernel elements of q(L)^2.

    ``roots`` lists (a_i, d_i); the pairing of f^(m) at root j against
    g^(n) at root k is delta_{jk} m! n! W(f,g) / (m+n-2d_k+1)! times the
    (m+n-2d_k+1)-th derivative of q(z)^2/(z-a_k)^{2 d_k} at a_k, and zero
    when m+n < 2d_k - 1.
    """
    if f_type not in ("Ai", "Bi") or g_type not in ("Ai", "Bi"):
        raise ValueError("function types must be Ai or Bi")
    if not (0 <= j < len(roots) and 0 <= k < len(roots)):
        raise IndexError("root index out of range")
    dj = roots[j][1]
    dk = roots[k][1]
    if not (0 <= m < 2 * dj):
        raise IndexError("derivative order m out of range")
    if not (0 <= n < 2 * dk):
        raise IndexError("derivative order n out of range")
    if j != k or m + n < 2 * dk - 1:
        return RF_ZERO
    w = _wronskian_constant(f_type, g_type)
    if w.is_zero():
        return RF_ZERO
    e = m + n - 2 * dk + 1
    z = MultiPoly.variable("z")
    g = POLY_ONE
    for i, (a_i, d_i) in enumerate(roots):
        if i == k:
            continue
        g = g * (z - _point_poly(a_i)) ** (2 * d_i)
    for _ in range(e):
        g = g.derivative("z")
    value = g.substitute({"z": _point_poly(roots[k][0])})
    scale = RAT(factorial(m) * factorial(n), factorial(e))
    return w * as_rational(value) * scale


# -- combinatorial identity -------------------------------------------------------


def _gbinom(top: int, m: int) -> int:
    """Binomial coefficient with integer (possibly negative) top."""
    if m < 0:
        return 0
    num = prod(range(top - m + 1, top + 1))
    assert num % factorial(m) == 0
    return num // factorial(m)


def binomial_identity(a: int, b: int, m: int) -> tuple[int, int]:
    """Both sides of sum_k (-1)^k C(k+a,k) C(b,m-k) = C(b-1-a, m)."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    lhs = sum(
        (-1 if k % 2 else 1) * comb(k + a, k) * comb(b, m - k)
        for k in range(m + 1)
        if m - k <= b
    )
    return lhs, _gbinom(b - 1 - a, m)
