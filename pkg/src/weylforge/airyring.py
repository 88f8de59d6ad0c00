"""Symbolic differential ring of Airy pairs at shifted arguments.

Generators Ai(x+a_k), Ai'(x+a_k), Bi(x+a_k), Bi'(x+a_k) are carried as
formal symbols over the field of rational functions in x and parameters.
Two rewriting rules keep every element in a unique normal form: second
derivatives reduce through the Airy equation Ai''(x+a) = (x+a) Ai(x+a),
and the Wronskian relation Ai'Bi - AiBi' = sign/pi eliminates the monomial
Ai'(x+a_k) Bi(x+a_k) at every shift.  On top of the ring sit Wronskian
determinants, the Lagrangian-subspace condition, and the bordered-Wronskian
construction of Darboux factorizations P*(1/p^2)P = q(L)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exact import (
    MultiPoly,
    POLY_ONE,
    RF_ZERO,
    RationalFunction,
    poly_coeffs_in,
)
from .concomitant import PI, _point_poly, kernel_pairing, wronskian_sign
from .weylops import DiffOperator, as_rational, substitute_airy

_SYMBOL_NAMES = ("Ai", "Ai'", "Bi", "Bi'")


class AiryRing:
    """The symbol table: one (Ai, Ai', Bi, Bi') quadruple per shift."""

    __slots__ = ("shifts", "sign", "_sigma_over_pi")

    def __init__(self, shifts, sign: int | None = None):
        self.shifts = tuple(_point_poly(a) for a in shifts)
        self.sign = wronskian_sign() if sign is None else sign
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        self._sigma_over_pi = RationalFunction(MultiPoly.constant(self.sign), PI)

    @property
    def width(self) -> int:
        return 4 * len(self.shifts)

    def __eq__(self, other):
        return (
            isinstance(other, AiryRing)
            and self.shifts == other.shifts
            and self.sign == other.sign
        )

    def __hash__(self):
        return hash((self.shifts, self.sign))

    # -- element constructors ---------------------------------------------

    def element(self, terms: dict) -> "AiryElement":
        return AiryElement(self, terms)

    def constant(self, value) -> "AiryElement":
        c = as_rational(value)
        if c.is_zero():
            return AiryElement(self, {})
        return AiryElement(self, {(0,) * self.width: c}, reduce=False)

    def zero(self) -> "AiryElement":
        return AiryElement(self, {})

    def symbol(self, root: int, slot: int) -> "AiryElement":
        """Slot 0..3 selects Ai, Ai', Bi, Bi' at the given root."""
        if not 0 <= root < len(self.shifts):
            raise IndexError("root index out of range")
        exps = [0] * self.width
        exps[4 * root + slot] = 1
        return AiryElement(self, {tuple(exps): as_rational(1)}, reduce=False)

    def kernel_generator(self, kind: str, root: int, m: int) -> "AiryElement":
        """The m-th derivative of Ai (or Bi) at shift a_root, reduced."""
        slot = 0 if kind == "Ai" else 2
        if kind not in ("Ai", "Bi"):
            raise ValueError("kind must be Ai or Bi")
        out = self.symbol(root, slot)
        for _ in range(m):
            out = out.derivative()
        return out


def _reduced(ring: AiryRing, terms: dict) -> dict:
    """Eliminate every Ai'(a_k)Bi(a_k) via Ai'Bi = AiBi' + sign/pi."""
    work = dict(terms)
    out: dict = {}
    nroots = len(ring.shifts)
    while work:
        exps, coeff = work.popitem()
        if coeff.is_zero():
            continue
        hit = -1
        for k in range(nroots):
            if exps[4 * k + 1] and exps[4 * k + 2]:
                hit = k
                break
        if hit < 0:
            acc = out.get(exps)
            acc = coeff if acc is None else acc + coeff
            if acc.is_zero():
                out.pop(exps, None)
            else:
                out[exps] = acc
            continue
        base = list(exps)
        base[4 * hit + 1] -= 1
        base[4 * hit + 2] -= 1
        swapped = list(base)
        swapped[4 * hit] += 1
        swapped[4 * hit + 3] += 1
        for e2, c2 in (
            (tuple(swapped), coeff),
            (tuple(base), coeff * ring._sigma_over_pi),
        ):
            acc = work.get(e2)
            acc = c2 if acc is None else acc + c2
            if acc.is_zero():
                work.pop(e2, None)
            else:
                work[e2] = acc
    return out


class AiryElement:
    """Normal-form polynomial in the Airy symbols over rational coefficients."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: AiryRing, terms: dict, reduce: bool = True):
        self.ring = ring
        if reduce:
            terms = _reduced(ring, terms)
        self.terms = terms
        self._hash = None

    # -- structure ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_rational(self) -> bool:
        """True when no Airy symbol survives reduction."""
        zero = (0,) * self.ring.width
        return all(e == zero for e in self.terms)

    def rational_part(self) -> RationalFunction:
        if not self.is_rational():
            raise ValueError("Airy symbols survive in %s" % self)
        if not self.terms:
            return RF_ZERO
        return next(iter(self.terms.values()))

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, AiryElement):
            if other.ring != self.ring:
                raise ValueError("Airy ring mismatch")
            return other
        c = RationalFunction._coerce(other)
        if c is None:
            return None
        return self.ring.constant(c)

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        terms = dict(self.terms)
        for e, c in other.terms.items():
            acc = terms.get(e)
            acc = c if acc is None else acc + c
            if acc.is_zero():
                terms.pop(e, None)
            else:
                terms[e] = acc
        return AiryElement(self.ring, terms, reduce=False)

    __radd__ = __add__

    def __neg__(self):
        return AiryElement(
            self.ring, {e: -c for e, c in self.terms.items()}, reduce=False
        )

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                c = c1 * c2
                acc = out.get(e)
                acc = c if acc is None else acc + c
                if acc.is_zero():
                    out.pop(e, None)
                else:
                    out[e] = acc
        return AiryElement(self.ring, out)

    __rmul__ = __mul__

    def scale(self, value) -> "AiryElement":
        c = as_rational(value)
        if c.is_zero():
            return self.ring.zero()
        return AiryElement(
            self.ring, {e: v * c for e, v in self.terms.items()}, reduce=False
        )

    def derivative(self) -> "AiryElement":
        """d/dx with Ai'' reduced through the Airy equation."""
        ring = self.ring
        x = MultiPoly.variable("x")
        out: dict = {}

        def put(e, c):
            acc = out.get(e)
            acc = c if acc is None else acc + c
            if acc.is_zero():
                out.pop(e, None)
            else:
                out[e] = acc

        for exps, coeff in self.terms.items():
            dc = coeff.derivative("x")
            if not dc.is_zero():
                put(exps, dc)
            for slot, e in enumerate(exps):
                if not e:
                    continue
                root, kind = divmod(slot, 4)
                lowered = list(exps)
                lowered[slot] -= 1
                if kind in (0, 2):
                    # Ai -> Ai', Bi -> Bi'
                    lowered[slot + 1] += 1
                    put(tuple(lowered), coeff * e)
                else:
                    # Ai' -> (x+a) Ai, Bi' -> (x+a) Bi
                    lowered[slot - 1] += 1
                    arg = as_rational(x + ring.shifts[root])
                    put(tuple(lowered), coeff * e * arg)
        return AiryElement(ring, out)

    def substitute_x(self, point) -> "AiryElement":
        """Evaluate the rational coefficients at x = point; symbols remain."""
        p = _point_poly(point)
        out: dict = {}
        for e, c in self.terms.items():
            v = c.substitute({"x": p})
            if not v.is_zero():
                out[e] = v
        return AiryElement(self.ring, out, reduce=False)

    # -- comparison -----------------------------------------------------------

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self.terms.items())))
        return self._hash

    def __str__(self):
        if not self.terms:
            return "0"
        names = []
        for root in range(len(self.ring.shifts)):
            for base in _SYMBOL_NAMES:
                names.append("%s[%d]" % (base, root))
        parts = []
        for exps in sorted(self.terms, reverse=True):
            coeff = self.terms[exps]
            factors = ["(%s)" % coeff]
            for slot, e in enumerate(exps):
                if e == 1:
                    factors.append(names[slot])
                elif e > 1:
                    factors.append("%s^%d" % (names[slot], e))
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self):
        return "AiryElement(%s)" % self


def derive(e: AiryElement) -> AiryElement:
    return e.derivative()


def wronskian(fs) -> AiryElement:
    """Wronskian determinant; row i holds the i-th derivatives."""
    fs = list(fs)
    if not fs:
        raise ValueError("wronskian of an empty list")
    rows = [fs]
    for _ in range(len(fs) - 1):
        rows.append([f.derivative() for f in rows[-1]])
    return _det(rows)


def _det(matrix) -> AiryElement:
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    total = None
    for j in range(n):
        piv = matrix[0][j]
        if piv.is_zero():
            continue
        minor = [row[:j] + row[j + 1 :] for row in matrix[1:]]
        term = piv * _det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    if total is None:
        return matrix[0][0].ring.zero()
    return total


# -- Lagrangian subspace data ----------------------------------------------------


@dataclass(frozen=True)
class SubspaceSpec:
    """Roots (a_k, d_k) of q and the pair generators of a kernel subspace.

    Each pair is (root index, alpha coefficients alpha_0..alpha_{2d_k-1});
    it stands for BOTH the Ai-combination f_i and the Bi-combination g_i
    built from the same alphas.
    """

    roots: tuple
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "roots",
            tuple((_point_poly(a), int(d)) for a, d in self.roots),
        )
        norm_pairs = []
        for idx, alphas in self.pairs:
            idx = int(idx)
            if not 0 <= idx < len(self.roots):
                raise ValueError("pair references root %d out of range" % idx)
            alphas = tuple(as_rational(a) for a in alphas)
            if len(alphas) != 2 * self.roots[idx][1]:
                raise ValueError(
                    "pair at root %d needs %d coefficients"
                    % (idx, 2 * self.roots[idx][1])
                )
            norm_pairs.append((idx, alphas))
        object.__setattr__(self, "pairs", tuple(norm_pairs))
        if len(self.pairs) != self.rank:
            raise ValueError(
                "expected %d pairs for total multiplicity, got %d"
                % (self.rank, len(self.pairs))
            )

    @property
    def rank(self) -> int:
        return sum(d for _, d in self.roots)

    def q_poly(self, var: str = "z") -> MultiPoly:
        z = MultiPoly.variable(var)
        q = POLY_ONE
        for a, d in self.roots:
            q = q * (z - a) ** d
        return q


def check_lagrangian(spec: SubspaceSpec):
    """Evaluate the pairing conditions; returns (ok, violations).

    Violations are (i, j, k, value) for pair indices i <= j at root k.
    """
    violations = []
    for i in range(len(spec.pairs)):
        ki, alpha_i = spec.pairs[i]
        for j in range(i, len(spec.pairs)):
            kj, alpha_j = spec.pairs[j]
            if ki != kj:
                continue
            total = RF_ZERO
            for m, am in enumerate(alpha_i):
                if am.is_zero():
                    continue
                for n, an in enumerate(alpha_j):
                    if an.is_zero():
                        continue
                    v = kernel_pairing(spec.roots, "Ai", "Bi", ki, ki, m, n)
                    if not v.is_zero():
                        total = total + am * an * v
            if not total.is_zero():
                violations.append((i, j, ki, total))
    return not violations, violations


def subspace_functions(spec: SubspaceSpec, ring: AiryRing | None = None):
    """The generators (f_1..f_d, g_1..g_d) as Airy-ring elements."""
    if ring is None:
        ring = AiryRing([a for a, _ in spec.roots])
    fs, gs = [], []
    for idx, alphas in spec.pairs:
        f = ring.zero()
        g = ring.zero()
        for m, a in enumerate(alphas):
            if a.is_zero():
                continue
            f = f + ring.kernel_generator("Ai", idx, m).scale(a)
            g = g + ring.kernel_generator("Bi", idx, m).scale(a)
        fs.append(f)
        gs.append(g)
    return ring, fs, gs


def _strip_pi(values):
    """Factor the common pi power out of rational coefficients.

    Each value must be a single pi power times a pi-free rational function
    and the power must agree across all nonzero values.
    """
    power = None
    split = []
    for v in values:
        if v.is_zero():
            split.append(None)
            continue
        num_parts = poly_coeffs_in(v.num, "pi")
        den_parts = poly_coeffs_in(v.den, "pi")
        if len(num_parts) != 1 or len(den_parts) != 1:
            raise ValueError("coefficient mixes pi degrees: %s" % v)
        (en, pn), (ed, pd) = num_parts.popitem(), den_parts.popitem()
        k = en - ed
        if power is None:
            power = k
        elif power != k:
            raise ValueError("coefficients disagree on the pi power")
        split.append(RationalFunction(pn, pd))
    if power is None:
        power = 0
    return power, [RF_ZERO if s is None else s for s in split]


def build_darboux_operator(spec: SubspaceSpec):
    """Bordered-Wronskian operator of a Lagrangian subspace.

    Returns (P, p, q): the order-2d operator P normalized pi-free with a
    positive-leading top coefficient, the factorization weight p = lead(P),
    and the monic q with q(L)^2 = P* (1/p^2) P (asserted exactly).
    """
    ok, violations = check_lagrangian(spec)
    if not ok:
        raise ValueError(
            "subspace is not Lagrangian; failing (i, j, root, value): %s"
            % ", ".join(
                "(%d, %d, %d, %s)" % (i, j, k, v) for i, j, k, v in violations
            )
        )
    ring, fs, gs = subspace_functions(spec)
    funcs = fs + gs
    n = len(funcs)
    rows = [funcs]
    for _ in range(n):
        rows.append([f.derivative() for f in rows[-1]])
    # cofactor of f^(j) in W(f_1..f_d, g_1..g_d, f): delete derivative row j
    raw = []
    for j in range(n + 1):
        minor = _det(rows[:j] + rows[j + 1 :])
        if not minor.is_rational():
            raise ValueError(
                "Wronskian cofactor %d is not rational: %s" % (j, minor)
            )
        c = minor.rational_part()
        if j % 2:
            c = -c
        raw.append(c)
    if raw[-1].is_zero():
        raise ValueError("pair generators are linearly dependent")
    _, coeffs = _strip_pi(raw)
    lead_num = coeffs[-1].num
    if str(lead_num).startswith("-"):
        coeffs = [-c for c in coeffs]
    P = DiffOperator("x", coeffs)
    p = P.leading_coeff()
    q = spec.q_poly("z")
    lhs = P.adjoint() * DiffOperator.mult("x", 1 / (p * p)) * P
    rhs = substitute_airy(q * q, var="x", q_var="z")
    if lhs != rhs:
        raise ValueError("factorization identity P*(1/p^2)P = q(L)^2 failed")
    return P, p, q


def concomitant_on_elements(matrix, f: AiryElement, g: AiryElement) -> AiryElement:
    """Evaluate a concomitant matrix on Airy-ring jets at its own point."""
    size = matrix.size
    point = matrix.point
    fj, gj = [f], [g]
    for _ in range(size - 1):
        fj.append(fj[-1].derivative())
        gj.append(gj[-1].derivative())
    fj = [e.substitute_x(point) for e in fj]
    gj = [e.substitute_x(point) for e in gj]
    total = f.ring.zero()
    for i in range(size):
        if fj[i].is_zero():
            continue
        for j in range(size):
            m = matrix.entries[i, j]
            if m.is_zero() or gj[j].is_zero():
                continue
            total = total + (fj[i] * gj[j]).scale(m)
    return total
