"""Dressed bispectral waves and the generalized Airy Fourier correspondence.

A wave is a function Psi(x,z) = a(x,z)Ai(x+z) + b(x,z)Ai'(x+z) with rational
a, b; the Airy wave itself is (a,b) = (1,0).  Differential operators in x and
in z act on waves through the Airy reduction Ai''(x+z) = (x+z)Ai(x+z), so
equality of actions is decidable by comparing rational functions.  On top of
the actions sit the generalized Fourier map b_Psi: operators R(x, dx) with
R Psi = S Psi for some S(z, dz), the map R -> S, and the dimensions of its
bidegree filtration.

The filtration solver matches coefficients of the joint equation
R Psi - S Psi = 0 and extracts the nullspace, mod-p certified when the wave
is parameter-free and by fraction-free elimination otherwise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .exact import (
    MultiPoly,
    POLY_ONE,
    RAT,
    RF_ONE,
    RF_ZERO,
    RationalFunction,
    ZERO,
    nullspace,
    nullspace_certified,
    poly_coeffs_in,
    poly_lcm,
)
from .weylops import DiffOperator, airy_operator, as_rational

_X = MultiPoly.variable("x")
_Z = MultiPoly.variable("z")
_XPZ = _X + _Z
_XPZ_RF = RationalFunction.from_poly(_XPZ)


class DressedWave:
    """Wave a*Ai(x+z) + b*Ai'(x+z) with reduced rational a, b.

    ``dressing`` records the triple (P, p, q) with Psi = P Psi_Ai / (p q)
    when the wave arose from a Darboux factorization; the bare Airy wave
    carries none.
    """

    __slots__ = ("a", "b", "dressing")

    def __init__(self, a, b, dressing=None):
        self.a = as_rational(a)
        self.b = as_rational(b)
        self.dressing = dressing

    def __eq__(self, other):
        if not isinstance(other, DressedWave):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))

    def is_airy(self) -> bool:
        return self.a == RF_ONE and self.b.is_zero()

    def params(self) -> tuple[str, ...]:
        names = set()
        for rf in (self.a, self.b):
            for poly in (rf.num, rf.den):
                names.update(poly.effective_vars())
        return tuple(sorted(names - {"x", "z"}))

    def __str__(self):
        return "(%s)*Ai(x+z) + (%s)*Ai'(x+z)" % (self.a, self.b)

    def __repr__(self):
        return "DressedWave(%r, %r)" % (str(self.a), str(self.b))


PSI_AI = DressedWave(RF_ONE, RF_ZERO)


def _pair_dx(a: RationalFunction, b: RationalFunction):
    return a.derivative("x") + _XPZ_RF * b, a + b.derivative("x")


def _pair_dz(a: RationalFunction, b: RationalFunction):
    return a.derivative("z") + _XPZ_RF * b, a + b.derivative("z")


def _act(op: DiffOperator, w: DressedWave, step) -> DressedWave:
    a, b = w.a, w.b
    acc_a, acc_b = RF_ZERO, RF_ZERO
    for k in range(op.order + 1):
        if k:
            a, b = step(a, b)
        c = op.coeff(k)
        if not c.is_zero():
            acc_a = acc_a + c * a
            acc_b = acc_b + c * b
    return DressedWave(acc_a, acc_b)


def act_x(R: DiffOperator, w: DressedWave) -> DressedWave:
    """Apply R(x, dx) to the wave."""
    if R.var != "x":
        raise ValueError("act_x expects an operator in x, got %r" % R.var)
    return _act(R, w, _pair_dx)


def act_z(S: DiffOperator, w: DressedWave) -> DressedWave:
    """Apply S(z, dz) to the wave; dz Ai(x+z) = Ai'(x+z) as well."""
    if S.var != "z":
        raise ValueError("act_z expects an operator in z, got %r" % S.var)
    return _act(S, w, _pair_dz)


def _as_poly(value, what: str) -> MultiPoly:
    rf = as_rational(value)
    if not rf.is_polynomial():
        raise ValueError("%s must be polynomial, got %s" % (what, rf))
    return rf.num


def dress(P: DiffOperator, p, q) -> DressedWave:
    """Wave (1/(p(x) q(z))) P(x, dx) Psi_Ai from a Darboux triple."""
    p_poly = _as_poly(p, "p")
    q_poly = _as_poly(q, "q")
    if p_poly.is_zero() or q_poly.is_zero():
        raise ValueError("dressing divisors must be nonzero")
    acted = act_x(P, PSI_AI)
    scale = RF_ONE / RationalFunction.from_poly(p_poly * q_poly)
    return DressedWave(acted.a * scale, acted.b * scale, dressing=(P, p_poly, q_poly))


_SWAP = {"x": _Z, "z": _X}


def transpose_wave(w: DressedWave) -> DressedWave:
    """The wave (x,z) -> Psi(z,x); Ai(x+z) and Ai'(x+z) are symmetric."""
    a = w.a.substitute(_SWAP)
    b = w.b.substitute(_SWAP)
    if w.dressing is None:
        return DressedWave(a, b)
    P, p, q = w.dressing
    Pt = fourier_airy(P).rename("x")
    pt = q.substitute({"z": _X})
    qt = p.substitute({"x": _Z})
    out = DressedWave(a, b, dressing=(Pt, pt, qt))
    if dress(Pt, pt, qt) != out:
        raise AssertionError("transposed dressing does not reproduce the wave")
    return out


# -- the Fourier anti-isomorphism for the bare Airy wave ---------------------


def fourier_airy(R: DiffOperator, inverse: bool = False) -> DiffOperator:
    """Anti-isomorphism x^j dx^k -> dz^k (dz^2 - z)^j on the Weyl algebra.

    Both directions have the same shape because Psi_Ai is symmetric in
    (x, z); ``inverse`` maps z^j dz^k -> dx^k (dx^2 - x)^j.
    """
    src, dst = ("z", "x") if inverse else ("x", "z")
    if R.var != src:
        raise ValueError("operator in %r expected, got %r" % (src, R.var))
    lam = airy_operator(dst)
    out = DiffOperator.zero(dst)
    lam_pows = [DiffOperator.identity(dst)]
    for k in range(R.order + 1):
        c = R.coeff(k)
        if c.is_zero():
            continue
        if src in c.den.effective_vars():
            raise ValueError("coefficient %s not polynomial in %s" % (c, src))
        dk = DiffOperator.derivative(dst, k)
        for j, gamma in sorted(poly_coeffs_in(c.num, src).items()):
            while len(lam_pows) <= j:
                lam_pows.append(lam_pows[-1] * lam)
            coef = RationalFunction(gamma, c.den)
            out = out + DiffOperator.mult(dst, coef) * dk * lam_pows[j]
    return out


def fourier_airy_inverse(S: DiffOperator) -> DiffOperator:
    return fourier_airy(S, inverse=True)


# -- ansatz bounds ------------------------------------------------------------


@dataclass(frozen=True)
class AnsatzBounds:
    """Degree envelope for filtration and Fourier-partner solves.

    ``numerator_degree`` caps the polynomial degree inside the sandwich
    (1/p^s) N (1/p^s) on the x side and (1/q^s) N (1/q^s) on the z side;
    None picks ord + cord + 8.  The sandwich powers cap s on each side.
    ``partner_order`` bounds the order of the unknown operator in
    single-sided solves; None picks given.order + 4.
    """

    numerator_degree: int | None = None
    p_power: int = 2
    q_power: int = 2
    partner_order: int | None = None


_ENV_CAP = "WEYL_FORGE_MAX_DEGREE"


def _resolve_cap(bounds: AnsatzBounds, default: int) -> tuple[int, bool]:
    cap = bounds.numerator_degree if bounds.numerator_degree is not None else default
    clipped = False
    env = os.environ.get(_ENV_CAP)
    if env:
        limit = int(env)
        if cap > limit:
            cap = limit
            clipped = True
    return cap, clipped


# -- scaled pairs: gcd-free wave action for the solvers -----------------------
#
# A solver state is (alpha, beta, i, j) representing the pair
# (alpha, beta) / (p(x)^i q(z)^j) with polynomial alpha, beta.  Derivatives
# and multiplications stay polynomial, so assembling the linear system never
# reduces a fraction.


class _WaveFrame:
    """Fixed data for scaled-pair arithmetic over one wave."""

    __slots__ = ("p", "q", "px", "qz", "state")

    def __init__(self, w: DressedWave):
        if w.dressing is not None:
            _, self.p, self.q = w.dressing
        else:
            self.p = POLY_ONE
            self.q = POLY_ONE
        self.px = self.p.derivative("x")
        self.qz = self.q.derivative("z")
        st = self.clear(w)
        if st is None:
            raise ValueError(
                "wave denominators are not powers of the dressing divisors")
        self.state = st

    def clear(self, w: DressedWave, limit: int = 12):
        """State (alpha, beta, i, j) with (a, b) = (alpha, beta)/(p^i q^j)."""
        pi = POLY_ONE
        for i in range(limit + 1):
            if i:
                pi = pi * self.p
            den = pi
            for j in range(limit + 1):
                if j:
                    den = den * self.q
                if w.a.den.divides(den) and w.b.den.divides(den):
                    return (
                        w.a.num * den.divmod_exact(w.a.den),
                        w.b.num * den.divmod_exact(w.b.den),
                        i,
                        j,
                    )
        return None

    def dx(self, st):
        alpha, beta, i, j = st
        na = (alpha.derivative("x") + _XPZ * beta) * self.p
        nb = (alpha + beta.derivative("x")) * self.p
        if i:
            na = na - alpha.scale(RAT(i)) * self.px
            nb = nb - beta.scale(RAT(i)) * self.px
        return (na, nb, i + 1, j)

    def dz(self, st):
        alpha, beta, i, j = st
        na = (alpha.derivative("z") + _XPZ * beta) * self.q
        nb = (alpha + beta.derivative("z")) * self.q
        if j:
            na = na - alpha.scale(RAT(j)) * self.qz
            nb = nb - beta.scale(RAT(j)) * self.qz
        return (na, nb, i, j + 1)

    def mul(self, st, f: MultiPoly):
        alpha, beta, i, j = st
        return (alpha * f, beta * f, i, j)

    def div_p(self, st, s: int):
        alpha, beta, i, j = st
        return (alpha, beta, i + s, j)

    def div_q(self, st, s: int):
        alpha, beta, i, j = st
        return (alpha, beta, i, j + s)

    def align(self, states):
        """Numerator pairs over the common denominator p^I q^J."""
        if not states:
            return []
        imax = max(st[2] for st in states)
        jmax = max(st[3] for st in states)
        out = []
        for alpha, beta, i, j in states:
            f = self.p ** (imax - i) * self.q ** (jmax - j)
            out.append((alpha * f, beta * f))
        return out


def _group_by_main(poly: MultiPoly):
    """Split into {(deg_x, deg_z): parameter-polynomial} blocks."""
    vars = poly.vars
    ix = vars.index("x") if "x" in vars else None
    iz = vars.index("z") if "z" in vars else None
    param_idx = [k for k, v in enumerate(vars) if v not in ("x", "z")]
    param_vars = tuple(vars[k] for k in param_idx)
    groups: dict = {}
    for exps, coeff in poly.terms.items():
        key = (
            exps[ix] if ix is not None else 0,
            exps[iz] if iz is not None else 0,
        )
        rest = tuple(exps[k] for k in param_idx)
        bucket = groups.setdefault(key, {})
        bucket[rest] = bucket.get(rest, ZERO) + coeff
    return {
        key: MultiPoly(param_vars, {e: c for e, c in terms.items() if c != 0})
        for key, terms in groups.items()
    }


def _assemble_rows(numerators, signs):
    """Rows of the joint linear system, one per (component, monomial).

    ``numerators`` is a list of aligned (alpha, beta) pairs, one per column;
    ``signs`` carries +1/-1 per column.  Returns (rows, scalar) where rows
    map column -> MultiPoly in the parameters and ``scalar`` reports whether
    every entry is constant.
    """
    rows: dict = {}
    scalar = True
    for col, (alpha, beta) in enumerate(numerators):
        sign = signs[col]
        for comp, poly in ((0, alpha), (1, beta)):
            for key, param_poly in _group_by_main(poly).items():
                if param_poly.is_zero():
                    continue
                if sign < 0:
                    param_poly = -param_poly
                if not param_poly.is_constant():
                    scalar = False
                row = rows.setdefault((comp, key), {})
                row[col] = param_poly
    return list(rows.values()), scalar


def _int_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _rows_to_int(rows):
    """Clear constant MultiPoly rows to integer rows."""
    out = []
    for row in rows:
        denlcm = 1
        vals = {}
        for col, poly in row.items():
            c = poly.constant_value()
            vals[col] = c
            d = int(c.denominator)
            if d != 1:
                denlcm = denlcm * d // _int_gcd(denlcm, d)
        cleared = {}
        for col, c in vals.items():
            v = int(c.numerator) * (denlcm // int(c.denominator))
            if v:
                cleared[col] = v
        if cleared:
            out.append(cleared)
    return out


def _solve_joint(rows, ncols: int, scalar: bool, parallel: bool):
    """Nullspace of the assembled system as scalar lists; (vectors, certified)."""
    if scalar:
        int_rows = _rows_to_int(rows)
        basis, certified = nullspace_certified(int_rows, ncols)
        if certified:
            return basis, True
    poly_rows = [
        {col: RationalFunction.from_poly(p) for col, p in row.items()}
        for row in rows
    ]
    vecs = nullspace(poly_rows, ncols, parallel=parallel)
    return vecs, True


def _rref_scalar(vectors, ncols: int):
    """Reduced row echelon form of scalar (non-RationalFunction) rows."""
    echelon = []
    for vec in vectors:
        row = list(vec)
        for piv, prow in echelon:
            c = row[piv]
            if c:
                for j in range(ncols):
                    if prow[j]:
                        row[j] = row[j] - c * prow[j]
        lead = next((j for j in range(ncols) if row[j]), None)
        if lead is None:
            continue
        c = row[lead]
        row = [e / c for e in row]
        for piv, prow in echelon:
            f = prow[lead]
            if f:
                for j in range(ncols):
                    if row[j]:
                        prow[j] = prow[j] - f * row[j]
        echelon.append((lead, row))
    echelon.sort(key=lambda t: t[0])
    return [row for _, row in echelon]


def _is_scalar_vec(vec) -> bool:
    return not vec or not isinstance(vec[0], RationalFunction)


def _vec_rf(vec):
    """Coerce a scalar vector to RationalFunction entries."""
    if _is_scalar_vec(vec):
        return [RationalFunction.constant(e) for e in vec]
    return list(vec)


def _rref_vectors(vectors, ncols: int):
    if not vectors:
        return []
    if _is_scalar_vec(vectors[0]):
        return _rref_scalar(vectors, ncols)
    from .exact import rref_rows

    return rref_rows([_vec_rf(v) for v in vectors])


# -- filtration subspaces -----------------------------------------------------


@dataclass
class FourierSubspace:
    """Span of operators R with R Psi = S Psi, ord R <= order, ord S <= coorder.

    ``basis`` holds the x-side operators and ``images`` the aligned z-side
    partners; ``pairs`` keeps every solution pair of the joint system,
    including any with vanishing x component.  ``certified`` reports exact
    linear algebra; the dimension is a lower bound whenever the ansatz
    envelope was truncated by the environment cap (``truncated``) and, as
    with any ansatz method, whenever the true space needs denominators or
    degrees outside the envelope.
    """

    side: str
    order: int
    coorder: int
    symmetric: bool
    basis: list
    images: list
    pairs: list
    certified: bool
    truncated: bool
    bounds: AnsatzBounds

    @property
    def dim(self) -> int:
        return len(self.basis)


def _side_elements(order: int, cap: int, symmetric: bool):
    """Descriptors (right, d, left) for d^left v^d d^right sandwich middles."""
    out = []
    if symmetric:
        for j in range(order // 2 + 1):
            for d in range(cap + 1):
                out.append((j, d, j))
    else:
        for k in range(order + 1):
            for d in range(cap + 1):
                out.append((k, d, 0))
    return out


def _element_operator(var: str, divisor: MultiPoly, power: int,
                      desc) -> DiffOperator:
    right, d, left = desc
    op = DiffOperator.mult(var, RationalFunction.from_poly(
        MultiPoly.variable(var) ** d))
    if right:
        op = op * DiffOperator.derivative(var, right)
    if left:
        op = DiffOperator.derivative(var, left) * op
    if power and not divisor.is_constant():
        inv = DiffOperator.mult(
            var, RF_ONE / RationalFunction.from_poly(divisor**power))
        op = inv * op * inv
    return op


def _element_states(frame: _WaveFrame, var: str, power: int, descs):
    """Scaled-pair states of each descriptor's action on the wave."""
    step = frame.dx if var == "x" else frame.dz
    div = frame.div_p if var == "x" else frame.div_q
    mono_var = _X if var == "x" else _Z
    base = div(frame.state, power)
    derivs = [base]
    states = []
    for right, d, left in descs:
        while len(derivs) <= right:
            derivs.append(step(derivs[-1]))
        st = frame.mul(derivs[right], mono_var**d)
        for _ in range(left):
            st = step(st)
        states.append(div(st, power))
    return states


def _entry_scalar(e):
    if isinstance(e, RationalFunction):
        if not e.is_constant():
            raise ValueError("non-constant solution entry %s" % e)
        return e.constant_value()
    return e


def _inverse_power_jets(g: MultiPoly, var: str, count: int):
    """Polynomials h_i with (1/g)^(i) = h_i / g^(i+1)."""
    jets = [POLY_ONE]
    gd = g.derivative(var)
    for i in range(count):
        h = jets[-1]
        jets.append(h.derivative(var) * g - h.scale(RAT(i + 1)) * gd)
    return jets


def _combine_ops_generic(vec, offset, descs, var, divisor, power):
    """Operator assembly by plain operator algebra; handles parameter entries."""
    op = DiffOperator.zero(var)
    for i, desc in enumerate(descs):
        c = vec[offset + i]
        if isinstance(c, RationalFunction):
            if c.is_zero():
                continue
        elif not c:
            continue
        op = op + DiffOperator.mult(var, as_rational(c)) * _element_operator(
            var, divisor, power, desc)
    return op


def _combine_ops(vec, offset, descs, var, divisor, power):
    """Operator (1/g) N (1/g), g = divisor^power, from solution entries.

    The middle N = sum over descs of entry * d^left v^d d^right is expanded
    with polynomial arithmetic only; the conjugation produces one rational
    coefficient per order, so at most ord+1 fraction reductions happen.
    Entries involving parameters fall back to operator-level assembly.
    """
    from math import comb

    for i in range(len(descs)):
        e = vec[offset + i]
        if isinstance(e, RationalFunction) and not e.is_constant():
            return _combine_ops_generic(vec, offset, descs, var, divisor, power)
    middles: dict = {}
    for i, (right, d, left) in enumerate(descs):
        val = _entry_scalar(vec[offset + i])
        if not val:
            continue
        key = (left, right)
        mono = MultiPoly.monomial((var,), (d,), val)
        middles[key] = middles.get(key, None)
        middles[key] = mono if middles[key] is None else middles[key] + mono
    if not middles:
        return DiffOperator.zero(var)
    max_ord = max(left + right for left, right in middles)
    coeffs = [MultiPoly.constant(0) for _ in range(max_ord + 1)]
    for (left, right), c in middles.items():
        deriv = c
        for i in range(left + 1):
            if i:
                deriv = deriv.derivative(var)
            term = deriv.scale(RAT(comb(left, i)))
            coeffs[left - i + right] = coeffs[left - i + right] + term
    while coeffs and coeffs[-1].is_zero():
        coeffs.pop()
    if not coeffs:
        return DiffOperator.zero(var)
    if not power or divisor.is_constant():
        return DiffOperator(var, tuple(
            RationalFunction.from_poly(c) for c in coeffs))
    g = divisor**power
    M = len(coeffs) - 1
    g_pows = [POLY_ONE]
    for _ in range(M + 2):
        g_pows.append(g_pows[-1] * g)
    jets = _inverse_power_jets(g, var, M)
    out = []
    for k in range(M + 1):
        num = MultiPoly.constant(0)
        for m in range(k, M + 1):
            n_m = coeffs[m]
            if n_m.is_zero():
                continue
            term = n_m * jets[m - k] * g_pows[M - m]
            num = num + term.scale(RAT(comb(m, m - k)))
        out.append(RationalFunction(num, g_pows[M - k + 2]))
    return DiffOperator(var, tuple(out))


def filtration_dim(w: DressedWave, ell: int, m: int, symmetric: bool = False,
                   bounds: AnsatzBounds | None = None,
                   parallel: bool = False) -> FourierSubspace:
    """Basis of the bidegree-(ell, m) piece of the Fourier algebra of w.

    Solves R Psi = S Psi jointly over sandwich ansatz spaces
    (1/p^s) N (1/p^s) with ord N <= ell on the x side and the q(z) mirror
    with ord <= m on the z side, then projects to the x component.  With
    ``symmetric`` the middles are restricted to sum_j d^j c_j(v) d^j, so
    every basis element equals its formal adjoint.
    """
    if bounds is None:
        bounds = AnsatzBounds()
    cap, clipped = _resolve_cap(bounds, ell + m + 8)
    frame = _WaveFrame(w)
    sp = bounds.p_power if not frame.p.is_constant() else 0
    sq = bounds.q_power if not frame.q.is_constant() else 0
    x_descs = _side_elements(ell, cap, symmetric)
    z_descs = _side_elements(m, cap, symmetric)
    states = _element_states(frame, "x", sp, x_descs)
    states += _element_states(frame, "z", sq, z_descs)
    ncols = len(states)
    nx = len(x_descs)
    signs = [1] * nx + [-1] * (ncols - nx)
    rows, scalar = _assemble_rows(frame.align(states), signs)
    vectors, certified = _solve_joint(rows, ncols, scalar, parallel)
    reduced = _rref_vectors(vectors, ncols)
    all_pairs = []
    for vec in reduced:
        rop = _combine_ops(vec, 0, x_descs, "x", frame.p, sp)
        sop = _combine_ops(vec, nx, z_descs, "z", frame.q, sq)
        all_pairs.append((rop, sop))
    proj = [vec[:nx] for vec in reduced]
    proj_red = _rref_vectors(proj, nx)
    basis, images = [], []
    for pvec in proj_red:
        lift = _lift_projection(pvec, reduced, nx, ncols)
        basis.append(_combine_ops(lift, 0, x_descs, "x", frame.p, sp))
        images.append(_combine_ops(lift, nx, z_descs, "z", frame.q, sq))
    return FourierSubspace(
        side="x", order=ell, coorder=m, symmetric=symmetric,
        basis=basis, images=images, pairs=all_pairs,
        certified=certified, truncated=clipped,
        bounds=replace(bounds, numerator_degree=cap),
    )


def _lift_projection(pvec, vectors, nx, ncols):
    """A full solution vector whose x part equals pvec."""
    work = [list(v) for v in vectors]
    acc = None
    res = list(pvec)
    for vec in work:
        lead = next((j for j in range(nx) if _truthy(res[j])), None)
        if lead is None:
            break
        if not _truthy(vec[lead]):
            continue
        c = _div(res[lead], vec[lead])
        if acc is None:
            acc = [_mulc(c, e) for e in vec]
        else:
            acc = [a + _mulc(c, e) for a, e in zip(acc, vec)]
        res = [r - _mulc(c, e) for r, e in zip(res, vec[:nx])]
    if acc is None or any(_truthy(r) for r in res):
        # greedy pass failed; fall back to an exact span solve
        from .exact import solve_in_span

        basis_rf = [[as_rational(e) for e in v[:nx]] for v in vectors]
        target_rf = [as_rational(e) for e in pvec]
        coeffs = solve_in_span(basis_rf, target_rf)
        if coeffs is None:
            raise AssertionError("projection lift failed")
        acc = [RF_ZERO] * ncols
        for c, vec in zip(coeffs, vectors):
            if not c.is_zero():
                acc = [a + c * as_rational(e) for a, e in zip(acc, vec)]
        res = []
    return acc


def _truthy(e):
    if isinstance(e, RationalFunction):
        return not e.is_zero()
    return bool(e)


def _div(a, b):
    return a / b


def _mulc(c, e):
    return c * e


# -- Fourier map for dressed waves --------------------------------------------


def _partner_solve(w: DressedWave, given: DiffOperator, want: str,
                   bounds: AnsatzBounds | None):
    """Operator T on side ``want`` with T Psi = given Psi, or None."""
    if bounds is None:
        bounds = AnsatzBounds()
    frame = _WaveFrame(w)
    order = bounds.partner_order
    if order is None:
        order = given.order + 4
    cap, _ = _resolve_cap(bounds, given.order + order + 8)
    power = bounds.q_power if want == "z" else bounds.p_power
    divisor = frame.q if want == "z" else frame.p
    if divisor.is_constant():
        power = 0
    descs = _side_elements(order, cap, False)
    states = _element_states(frame, want, power, descs)
    acted = act_x(given, w) if given.var == "x" else act_z(given, w)
    target = frame.clear(acted, limit=16)
    if target is None:
        return None
    ncols = len(states) + 1
    numerators = frame.align(states + [target])
    signs = [1] * len(states) + [-1]
    rows, scalar = _assemble_rows(numerators, signs)
    vectors, _ = _solve_joint(rows, ncols, scalar, False)
    for vec in vectors:
        last = vec[-1]
        if _truthy(last):
            scale = RF_ONE / as_rational(last)
            op = _combine_ops(
                [as_rational(e) * scale for e in vec[:-1]], 0, descs, want,
                divisor, power)
            return op
    return None


def fourier_dressed(R: DiffOperator, w: DressedWave,
                    bounds: AnsatzBounds | None = None) -> DiffOperator:
    """The operator S(z, dz) with R Psi = S Psi, verified exactly.

    Prefers the conjugation route S = (1/q) b_Ai[P* (1/p) R (1/p) P] (1/q)
    when the conjugated operator is polynomial, with a linear-solve ansatz
    as fallback.
    """
    if R.var != "x":
        raise ValueError("fourier_dressed expects an operator in x")
    target = act_x(R, w)
    if w.dressing is None:
        S = fourier_airy(R)
        if act_z(S, w) != target:
            raise AssertionError("Airy Fourier image failed verification")
        return S
    P, p, q = w.dressing
    pinv = DiffOperator.mult("x", RF_ONE / RationalFunction.from_poly(p))
    conj = P.adjoint() * pinv * R * pinv * P
    if all("x" not in conj.coeff(k).den.effective_vars()
           for k in range(conj.order + 1)):
        qinv = DiffOperator.mult("z", RF_ONE / RationalFunction.from_poly(q))
        S = qinv * fourier_airy(conj) * qinv
        if act_z(S, w) == target:
            return S
    S = _partner_solve(w, R, "z", bounds)
    if S is None:
        raise ValueError("no Fourier image within the ansatz bounds")
    if act_z(S, w) != target:
        raise AssertionError("Fourier image failed verification")
    return S


def fourier_dressed_inverse(S: DiffOperator, w: DressedWave,
                            bounds: AnsatzBounds | None = None) -> DiffOperator:
    """The operator R(x, dx) with R Psi = S Psi, via the transposed wave."""
    if S.var != "z":
        raise ValueError("fourier_dressed_inverse expects an operator in z")
    target = act_z(S, w)
    if w.dressing is None:
        R = fourier_airy_inverse(S)
        if act_x(R, w) != target:
            raise AssertionError("Airy Fourier preimage failed verification")
        return R
    try:
        wt = transpose_wave(w)
        U = fourier_dressed(S.rename("x"), wt, bounds)
        R = U.rename("x")
        if act_x(R, w) == target:
            return R
    except (ValueError, AssertionError):
        pass
    R = _partner_solve(w, S, "x", bounds)
    if R is None:
        raise ValueError("no Fourier preimage within the ansatz bounds")
    if act_x(R, w) != target:
        raise AssertionError("Fourier preimage failed verification")
    return R


# -- explicit symmetric generators for dressed waves --------------------------


def _weyl_symmetric_basis(ell: int, m: int) -> list:
    """Operators L^j x^k + x^k L^j spanning the symmetric Airy filtration."""
    L = airy_operator("x")
    out = []
    lj = DiffOperator.identity("x")
    for j in range(ell + 1):
        if j:
            lj = lj * L
        for k in range(m + 1):
            xk = DiffOperator.mult("x", RationalFunction.from_poly(_X**k))
            out.append(lj * xk + xk * lj)
    return out


def _op_vector_rows(ops: list):
    """Linear coefficient vectors of operators over a shared monomial index."""
    max_order = max((op.order for op in ops), default=0)
    dens = [POLY_ONE] * (max_order + 1)
    for op in ops:
        for k in range(op.order + 1):
            c = op.coeff(k)
            if not c.is_zero():
                dens[k] = poly_lcm(dens[k], c.den)
    index: dict = {}
    rows = []
    for op in ops:
        row = {}
        for k in range(op.order + 1):
            c = op.coeff(k)
            if c.is_zero():
                continue
            num = c.num * dens[k].divmod_exact(c.den)
            for exps, coeff in num.terms.items():
                mono = tuple(
                    (v, e) for v, e in zip(num.vars, exps) if e)
                col = index.setdefault((k, mono), len(index))
                row[col] = row.get(col, ZERO) + coeff
        rows.append(row)
    vecs = []
    for row in rows:
        vec = [ZERO] * len(index)
        for col, val in row.items():
            vec[col] = val
        vecs.append(vec)
    return vecs, len(index)


def _independent_ops(ops: list) -> list:
    """Subset of ops forming a basis of their span, in input order."""
    if not ops:
        return []
    vecs, ncols = _op_vector_rows(ops)
    kept = []
    echelon = []
    for op, vec in zip(ops, vecs):
        row = list(vec)
        for piv, prow in echelon:
            c = row[piv]
            if c:
                for j in range(ncols):
                    if prow[j]:
                        row[j] = row[j] - c * prow[j]
        lead = next((j for j in range(ncols) if row[j]), None)
        if lead is None:
            continue
        c = row[lead]
        row = [e / c for e in row]
        echelon.append((lead, row))
        kept.append(op)
    return kept


def build_symmetric_generators(w: DressedWave, ell: int, m: int) -> FourierSubspace:
    """Explicit symmetric generating set for a dressed wave's Fourier algebra.

    Blocks: symmetric Weyl elements conjugated through the dressing,
    multiplication-sandwiched low-order symmetric elements, the two mixed
    operators built from 1 and dx, and constants.  For the bare Airy wave
    the set reduces to L^j x^k + x^k L^j.  The result records per-block
    dimensions in ``block_dims``.
    """
    if w.dressing is None or w.dressing[0].order == 0:
        basis = _independent_ops(_weyl_symmetric_basis(ell, m))
        sub = FourierSubspace(
            side="x", order=2 * ell, coorder=2 * m, symmetric=True,
            basis=basis, images=[], pairs=[], certified=True,
            truncated=False, bounds=AnsatzBounds())
        sub.block_dims = {"conjugated": len(basis), "sandwich": 0,
                          "mixed": 0, "constants": 0}
        return sub
    P, p, q = w.dressing
    half = P.order // 2
    dp = p.degree("x")
    p_op = DiffOperator.mult("x", RationalFunction.from_poly(p))
    pinv = DiffOperator.mult("x", RF_ONE / RationalFunction.from_poly(p))
    Pstar = P.adjoint()
    L = airy_operator("x")
    blocks: dict[str, list] = {
        "constants": [DiffOperator.identity("x")],
        "conjugated": [],
        "sandwich": [],
        "mixed": [],
    }
    lj = DiffOperator.identity("x")
    for j in range(max(ell - P.order + 1, 0)):
        if j:
            lj = lj * L
        for k in range(m + 1):
            xk = DiffOperator.mult("x", RationalFunction.from_poly(_X**k))
            g = lj * xk + xk * lj
            blocks["conjugated"].append(pinv * Pstar * g * P * pinv)
    lj = DiffOperator.identity("x")
    for j in range(min(half, ell) + 1):
        if j:
            lj = lj * L
        for k in range(max(m - 2 * dp + 1, 0)):
            xk = DiffOperator.mult("x", RationalFunction.from_poly(_X**k))
            g = lj * xk + xk * lj
            blocks["sandwich"].append(p_op * g * p_op)
    for R in (DiffOperator.identity("x"), DiffOperator.derivative("x")):
        elt = pinv * P * R * p_op + p_op * R.adjoint() * Pstar * pinv
        blocks["mixed"].append(elt)
    order = ["constants", "conjugated", "sandwich", "mixed"]
    all_ops = []
    for name in order:
        all_ops.extend(blocks[name])
    basis = _independent_ops(all_ops)
    sub = FourierSubspace(
        side="x", order=2 * ell, coorder=2 * m, symmetric=True,
        basis=basis, images=[], pairs=[], certified=True,
        truncated=False, bounds=AnsatzBounds())
    sub.block_dims = {
        name: len(_independent_ops(blocks[name])) for name in order
    }
    return sub
