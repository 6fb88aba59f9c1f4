"""Degree bounds, twist classification and the explicit extremal families.

A family is affine in named rational parameters: every slot profile is
sum_k c_k T_k with UniRational templates T_k, and the parameters obey
exact linear constraint rows.  Upsilon coefficients are shared by the
slots of one group; integration constants are per slot.
"""

from gmpy2 import mpq

from .curvature import GeometrySpec, extremality_lhs, extremality_residual, group_block, image_polys
from .errors import Unsupported, check_token
from .linalg import independent_rows, nullspace, rank
from .linalg import solve as lin_solve
from .polynomial import MPoly, VarId, as_rational, complete_homogeneous, fmt_rational
from .rational import FactoredRational, UniRational, double_integral, partial_fraction
from .structures import (
    TwistElement,
    _decompose_axis,
    decomposability_test,
)

_ZERO = mpq(0)
_ONE = mpq(1)


def _twist(fs, beta):
    return beta if isinstance(beta, TwistElement) else TwistElement(fs, beta)


def _zero_profiles(fs):
    return {v: UniRational(v, []) for v in fs.partition.all_vars()}


def _mono(v, n):
    return UniRational(v, [_ZERO] * n + [_ONE])


def _lp(v, a, b, n):
    return UniRational.linear_power(v, a, b, n)


# degree profile

class DegreeProfile:
    """ell_p, L_p and the sets O_p, Obar_p for every group."""

    def __init__(self, ell, L, o_set, obar, e_vectors, decomposable_gammas, method):
        self.ell = ell
        self.L = L
        self.o_set = o_set
        self.obar = obar
        self.e_vectors = e_vectors
        self.decomposable_gammas = decomposable_gammas
        self.method = method

    def to_wire(self):
        groups = sorted(self.ell)
        return {
            "ell": [self.ell[p] for p in groups],
            "L": [self.L[p] for p in groups],
            "oSet": [sorted(self.o_set[p]) for p in groups],
            "obarSet": [sorted(self.obar[p]) for p in groups],
            "method": [self.method[p] for p in groups],
        }


def _gamma_axis(fs, j, p):
    """Decomposition of Gamma_j along the axis of group p."""
    others = [r for r in range(1, fs.k + 1) if r != j]
    axis = others.index(p)
    return _decompose_axis(fs.gammas[j - 1].coeffs, axis, fs.degrees[p - 1])


def _o_sets(fs, p):
    v = VarId(p, 1)
    obar, oset, evec = set(), set(), {}
    all_dec = True
    for j in range(1, fs.k + 1):
        if j == p:
            continue
        dec = _gamma_axis(fs, j, p)
        if fs.gamma_hat(j).degree(v) == 1:
            obar.add(j)
            if dec.decomposable:
                oset.add(j)
                evec[j] = (dec.a, dec.b)
        if not dec.decomposable:
            all_dec = False
    return obar, oset, evec, all_dec


def _slot_coefficients(g, w):
    """Coefficients of A_w, A_w', A_w'' in E (before any clearing)."""
    m = g.m
    M = g.mu()
    M1 = M.diff(w)
    lam = g.log_p_derivative(w)
    lam1 = lam.diff(w)
    den = g.delta(w) * g.gamma(w.group)
    MM = FactoredRational(M * M)
    c2 = MM
    c1 = lam * MM * 2 - FactoredRational(M * M1 * (2 * (m + 1)))
    c0 = FactoredRational(M1 * M1 * ((m + 1) * (m + 2)))
    c0 = c0 + (lam1 + lam * lam) * MM - lam * FactoredRational(M * M1 * (2 * (m + 1)))
    return [(c / den).reduce() for c in (c0, c1, c2)]


def _xdeg(fr, v):
    """x_v-degree of a reduced FactoredRational that is polynomial in x_v."""
    if fr.is_zero():
        return -1
    num = fr.numerator_poly().degree(v)
    den = sum(f.degree(v) * (-e) for f, e in fr.factors.items() if e < 0)
    return num - den


def _ell_direct(g, p):
    v = VarId(p, 1)
    mult = g.delta(v) * g.p_factor()
    degs = [1 + _xdeg(mult.reduce(), v)]
    for w in g.slots():
        if w == v:
            continue
        for c in _slot_coefficients(g, w):
            if not c.is_zero():
                degs.append(_xdeg((c * mult).reduce(), v))
    return max(degs)


def _L_direct(g, p):
    """Clear the x_v-dependent denominators by their lcm and read the top degree."""
    v = VarId(p, 1)
    coeffs = []
    for w in g.slots():
        if w == v:
            continue
        coeffs.extend(c for c in _slot_coefficients(g, w) if not c.is_zero())
    lcm = {}
    for c in coeffs:
        for f, e in c.factors.items():
            if e < 0 and f.depends_on(v):
                lcm[f] = max(lcm.get(f, 0), -e)
    W = FactoredRational(MPoly.const(1), lcm)
    degs = [1 + _xdeg(W.reduce(), v)]
    for c in coeffs:
        degs.append(_xdeg((c * W).reduce(), v))
    return max(degs)


def degree_profile(fs, beta, method="auto"):
    """ell_p from the multiplied equation; L_p by the decomposable-tensor count when it applies, else directly."""
    beta = _twist(fs, beta)
    g = GeometrySpec(fs, beta, _zero_profiles(fs), formal=True)
    M = beta.mu()
    ell, L, oset, obar, evecs, alldec, meth = {}, {}, {}, {}, {}, {}, {}
    for p in range(1, fs.k + 1):
        v = VarId(p, 1)
        ob, o, ev, ad = _o_sets(fs, p)
        obar[p], oset[p], evecs[p], alldec[p] = ob, o, ev, ad
        ell[p] = _ell_direct(g, p)
        d = fs.degrees[p - 1]
        if ad and method != "direct":
            if not M.depends_on(v) or (o | {p}) == set(range(1, fs.k + 1)):
                L[p] = d + len(o)
            else:
                L[p] = d + len(o) + 1
            meth[p] = "count"
        else:
            L[p] = _L_direct(g, p)
            meth[p] = "direct"
    return DegreeProfile(ell, L, oset, obar, evecs, alldec, meth)


def ell_predicted(fs, beta, p, profile):
    """ell_p predicted for decomposable defining tensors and non-constant <mu, beta>."""
    o = profile.o_set[p]
    if (o | {p}) == set(range(1, fs.k + 1)):
        return fs.m
    return 1 + sum(fs.degrees[b - 1] for b in o | {p})


# twist classification

class BetaClass:
    """Per-group classification of <mu, beta> and the set S of groups it depends on."""

    def __init__(self, per_group, S):
        self.per_group = per_group
        self.S = S

    def kind(self, p):
        return self.per_group[p]["kind"]

    def to_wire(self):
        out = []
        for p in sorted(self.per_group):
            entry = {}
            for key, val in self.per_group[p].items():
                if isinstance(val, (tuple, list)):
                    entry[key] = [fmt_rational(x) for x in val]
                elif isinstance(val, bool) or val is None or isinstance(val, str):
                    entry[key] = val
                else:
                    entry[key] = fmt_rational(val)
            out.append(entry)
        return {"perGroup": out, "S": sorted(self.S)}


def classify_beta(fs, beta):
    beta = _twist(fs, beta)
    M = beta.mu()
    per, S = {}, set()
    for p in range(1, fs.k + 1):
        v = VarId(p, 1)
        if not M.depends_on(v):
            per[p] = {"kind": "constant"}
            continue
        S.add(p)
        dec = decomposability_test(fs, beta, p)
        if dec.decomposable:
            per[p] = {"kind": "decomposable", "a": dec.a, "b": dec.b, "t": dec.t}
            continue
        entry = {"kind": "indecomposable", "diagonalDependent": bool(dec.diagonal_dependent)}
        if dec.diagonal_dependent and dec.quadratic is not None:
            a, b, c = dec.quadratic
            entry["quadratic"] = (a, b, c)
            entry["realRoot"] = bool(dec.real_root)
            rat = bool(dec.rational_root)
            entry["rationalRoot"] = rat
            entry["certificate"] = "rational" if rat else ("none" if dec.real_root else "negative-discriminant")
        per[p] = entry
    return BetaClass(per, S)


def t1_independent(M, v):
    """M^2, M M', M'^2 independent over R(x_v); M = M0 + x_v M1 reduces it to a rank test."""
    parts = M.coeffs_in(v)
    M0 = parts.get(0, MPoly())
    M1 = parts.get(1, MPoly())
    if M1.is_zero():
        return False
    return _poly_rank([M0 * M0, M0 * M1, M1 * M1]) == 3


def mu_dmu_independent(M, v):
    parts = M.coeffs_in(v)
    M1 = parts.get(1, MPoly())
    if M1.is_zero():
        return False
    return _poly_rank([parts.get(0, MPoly()), M1]) == 2


def _poly_rank(polys):
    keys = sorted(set().union(*(p.terms for p in polys)))
    if not keys:
        return 0
    return rank([[p.terms.get(k, _ZERO) for k in keys] for p in polys])


# families

def _rand_q(rng, lo=-6, hi=6, den=4):
    return mpq(rng.randint(lo, hi), rng.randint(1, den))


class SolutionFamily:
    """Affine family of profiles: A_v = sum_k c_k T_{v,k} with linear constraints on c."""

    def __init__(self, fs, beta, case_tag, params, templates, constraints, meta=None):
        self.fs = fs
        self.beta = _twist(fs, beta)
        self.case_tag = case_tag
        self.params = list(params)
        self.templates = templates
        self.constraints = [({k: as_rational(c) for k, c in row.items() if c}, as_rational(rhs))
                            for row, rhs in constraints]
        self.meta = dict(meta or {})
        names = set(self.params)
        for v, terms in templates.items():
            for name in terms:
                if name not in names:
                    raise ValueError(f"template uses unknown parameter {name}")

    def constraint_matrix(self):
        idx = {n: i for i, n in enumerate(self.params)}
        a, b = [], []
        for row, rhs in self.constraints:
            r = [_ZERO] * len(self.params)
            for n, c in row.items():
                r[idx[n]] = c
            a.append(r)
            b.append(rhs)
        return a, b

    def parameter_dimension(self):
        a, _ = self.constraint_matrix()
        return len(self.params) - (rank(a) if a else 0)

    def dimension(self):
        """Dimension of the profile space the family sweeps out."""
        a, _ = self.constraint_matrix()
        vecs = nullspace(a, len(self.params)) if a else nullspace([], len(self.params))
        if not vecs:
            return 0
        rows = [[] for _ in vecs]
        for v in self.fs.partition.all_vars():
            den = {}
            for t in self.templates.get(v, {}).values():
                for key, j in t.den:
                    den[key] = max(den.get(key, 0), j)
            clear = UniRational(v, UniRational(v, [_ONE], den).den_poly())
            polys = [(self.profiles(dict(zip(self.params, vec)))[v] * clear).num for vec in vecs]
            width = max((len(q) for q in polys), default=0)
            for row, q in zip(rows, polys):
                row.extend(list(q) + [_ZERO] * (width - len(q)))
        return rank(rows)

    def satisfies(self, values):
        return all(sum((c * as_rational(values[n]) for n, c in row.items()), _ZERO) == rhs
                   for row, rhs in self.constraints)

    def profiles(self, values):
        out = {}
        for v in self.fs.partition.all_vars():
            acc = UniRational(v, [])
            for name, t in self.templates.get(v, {}).items():
                c = as_rational(values[name])
                if c:
                    acc = acc + t * UniRational.const(v, c)
            out[v] = acc
        return out

    def geometry(self, values):
        return GeometrySpec(self.fs, self.beta, self.profiles(values), formal=True)

    def check(self, values, token=None):
        return extremality_residual(self.geometry(values), token)

    def random_values(self, rng):
        a, b = self.constraint_matrix()
        n = len(self.params)
        if a:
            x0 = lin_solve(a, b)
            if x0 is None:
                raise ValueError("inconsistent constraints")
            ns = nullspace(a, n)
        else:
            x0 = [_ZERO] * n
            ns = nullspace([], n)
        x = list(x0)
        for vec in ns:
            z = _rand_q(rng)
            x = [xi + z * vi for xi, vi in zip(x, vec)]
        return dict(zip(self.params, x))

    def slots_using(self, name):
        return [v for v in self.fs.partition.all_vars() if name in self.templates.get(v, {})]

    def essential_params(self):
        """Parameters in a constraint row or shared by several slots."""
        out = []
        for n in self.params:
            in_row = any(n in row for row, _ in self.constraints)
            if in_row or len(self.slots_using(n)) > 1:
                out.append(n)
        return out

    def perturbed_profiles(self, values, rng):
        """Add a nonzero multiple of one essential template to a single slot."""
        names = self.essential_params()
        if not names:
            return None
        name = rng.choice(names)
        v = rng.choice(self.slots_using(name))
        delta = _ZERO
        while not delta:
            delta = _rand_q(rng)
        prof = self.profiles(values)
        prof[v] = prof[v] + self.templates[v][name] * UniRational.const(v, delta)
        return prof, (name, v, delta)

    def to_wire(self):
        tmpl = []
        for v in self.fs.partition.all_vars():
            terms = self.templates.get(v, {})
            tmpl.append({
                "group": v.group,
                "slot": v.slot,
                "terms": [{"param": n, "template": terms[n].to_wire()} for n in self.params if n in terms],
            })
        meta = {}
        for k, val in self.meta.items():
            if isinstance(val, (list, tuple)):
                meta[k] = [fmt_rational(x) if not isinstance(x, (int, str)) else x for x in val]
            elif isinstance(val, (int, str, bool)):
                meta[k] = val
            else:
                meta[k] = fmt_rational(val)
        return {
            "caseTag": self.case_tag,
            "freeParams": list(self.params),
            "dimension": self.dimension(),
            "parameterDimension": self.parameter_dimension(),
            "profileTemplates": tmpl,
            "linearConstraints": [
                {"coeffs": {n: fmt_rational(row[n]) for n in self.params if n in row}, "rhs": fmt_rational(rhs)}
                for row, rhs in self.constraints
            ],
            "meta": meta,
        }

    def __repr__(self):
        return f"SolutionFamily({self.case_tag}, {len(self.params)} params, {len(self.constraints)} constraints)"


class _Builder:
    """Accumulates parameters and templates for one family."""

    def __init__(self):
        self.params = []
        self.templates = {}
        self.rows = []

    def add(self, v, name, template):
        if name not in self.params:
            self.params.append(name)
        if not template.is_zero():
            self.templates.setdefault(v, {})[name] = template

    def integral_slot(self, v, w, weight, group_name, degree, constants=True):
        """A_v = w * (int int Upsilon * weight + nu0 + nu1 x), deg Upsilon <= degree."""
        for j in range(degree + 1):
            self.add(v, f"g{group_name}_{j}", w * double_integral(_mono(v, j) * weight))
        if constants:
            tag = f"n{v.group}{v.slot}"
            self.add(v, f"{tag}_0", w)
            self.add(v, f"{tag}_1", w * _mono(v, 1))

    def poly_slot(self, v, prefix, degree):
        for j in range(degree + 1):
            self.add(v, f"{prefix}_{j}", _mono(v, j))

    def row(self, coeffs, rhs=0):
        self.rows.append((coeffs, rhs))

    def family(self, fs, beta, tag, meta=None):
        return SolutionFamily(fs, beta, tag, self.params, self.templates, self.rows, meta)


def _is_standard_product(fs):
    return all(fs.gamma_hat(j).is_constant() for j in range(1, fs.k + 1))


def solve(fs, beta):
    """Dispatch to the classification matching the structure kind."""
    beta = _twist(fs, beta)
    if fs.k == 1:
        return solve_veronese(fs, beta)
    if fs.kind == "two_point":
        return solve_two_point(fs, beta)
    if fs.kind in ("product_sv", "segre") and _is_standard_product(fs):
        if all(d == 1 for d in fs.degrees):
            return solve_segre(fs, beta)
        return solve_product_sv(fs, beta)
    raise Unsupported(f"no complete classification for {fs.kind} structures; use the necessary conditions")


def veronese_ambitoric_basis(v, a, b, c):
    """(b+cx)(ac-b^2+(b+cx)^2) and (ac-b^2)^2-(b+cx)^4 as UniRationals in v."""
    a, b, c = (as_rational(t) for t in (a, b, c))
    y = UniRational(v, [b, c])
    gam = UniRational.const(v, a * c - b * b)
    p0 = y * (gam + y * y)
    p1 = gam * gam - y * y * y * y
    return p0, p1


def solve_veronese(fs, beta):
    if fs.k != 1:
        raise ValueError("not a Veronese structure")
    beta = _twist(fs, beta)
    m = fs.m
    dec = decomposability_test(fs, beta, 1)
    B = _Builder()
    if dec.decomposable:
        a, b = dec.a, dec.b
        for v in fs.partition.vars(1):
            B.integral_slot(v, _lp(v, a, b, m + 1), _lp(v, a, b, -(m + 3)), "1", m)
        return [B.family(fs, beta, "veronese:1", {"a": a, "b": b, "t": dec.t})]
    if m == 2:
        coeffs = beta.tensor.coeffs
        a, b, c = (coeffs.get((i,), _ZERO) for i in range(3))
        if c == 0:
            a, b, c = c, b, a
            swapped = True
        else:
            swapped = False
        for v in fs.partition.vars(1):
            B.poly_slot(v, "g1", 4)
        for v in fs.partition.vars(1):
            p0, p1 = veronese_ambitoric_basis(v, a, b, c)
            if swapped:
                p0, p1 = _reflect(p0, 4), _reflect(p1, 4)
            B.add(v, f"n1{v.slot}_0", p0)
            B.add(v, f"n1{v.slot}_1", p1)
        qa, qb, qc = (coeffs.get((i,), _ZERO) for i in range(3))
        return [B.family(fs, beta, "veronese:2a", {"quadratic": (qa, qb, qc)})]
    for v in fs.partition.vars(1):
        B.poly_slot(v, "g1", m + 2)
    return [B.family(fs, beta, "veronese:2b")]


def _reflect(p, deg):
    """x^deg p(1/x) for a polynomial UniRational."""
    coeffs = list(p.num) + [_ZERO] * (deg + 1 - len(p.num))
    return UniRational(p.var, list(reversed(coeffs[: deg + 1])))


def _affine_twist(fs, beta):
    """beta_0 and the x_j coefficients of <mu, beta> on a Segre structure."""
    M = beta.mu()
    b0 = M.constant_term()
    coef = {}
    for j in range(1, fs.k + 1):
        c = M.coeffs_in(VarId(j, 1)).get(1)
        if c is not None and not c.is_zero():
            coef[j] = c.constant_value()
    return b0, coef


def solve_segre(fs, beta):
    """Twisted products of Riemann surfaces: all groups of degree one."""
    beta = _twist(fs, beta)
    m = fs.m
    b0, coef = _affine_twist(fs, beta)
    S = sorted(coef)
    B = _Builder()
    slots = fs.partition.all_vars()
    if not S:
        for v in slots:
            B.poly_slot(v, f"a{v.group}", 3)
        return [B.family(fs, beta, "segre:1")]
    if len(S) == 1:
        j = S[0]
        dec = decomposability_test(fs, beta, j)
        a, b = dec.a, dec.b
        for v in slots:
            if v.group == j:
                # Upsilon = sum_r gamma_r (a + b x)^r
                w = _lp(v, a, b, m + 1)
                for r in range(3):
                    B.add(v, f"g{j}_{r}", w * double_integral(_lp(v, a, b, r - m - 3)))
                B.add(v, f"n{j}1_0", w)
                B.add(v, f"n{j}1_1", w * _mono(v, 1))
            else:
                B.poly_slot(v, f"a{v.group}", 2)
        row = {f"g{j}_2": _ONE}
        for v in slots:
            if v.group != j:
                row[f"a{v.group}_2"] = mpq(2)
        B.row(row)
        return [B.family(fs, beta, "segre:2", {"S": S, "a": a, "b": b})]
    if m == 2:
        b1, b2 = coef[1], coef[2]
        for v in slots:
            B.poly_slot(v, f"a{v.group}", 4)
        B.row({"a2_4": _ONE, "a1_4": b2 * b2 / (b1 * b1)})
        B.row({"a2_3": _ONE, "a1_4": 4 * b0 * b2 / (b1 * b1), "a1_3": -b2 / b1})
        B.row({"a2_2": _ONE, "a1_4": 6 * b0 * b0 / (b1 * b1), "a1_3": -3 * b0 / b1, "a1_2": _ONE})
        return [B.family(fs, beta, "segre:3a", {"S": S, "beta0": b0, "beta1": b1, "beta2": b2})]
    row = {}
    for v in slots:
        if v.group in coef:
            B.poly_slot(v, f"a{v.group}", 1)
        else:
            B.poly_slot(v, f"a{v.group}", 2)
            row[f"a{v.group}_2"] = _ONE
    if row:
        B.row(row)
    return [B.family(fs, beta, "segre:3b", {"S": S})]


def _quick_group(fs):
    """Group of degree m-1 >= 2 when the structure has the shape S^d W* (x) <e> + <e^d> (x) W*."""
    if fs.k != 2:
        return None
    for p in (1, 2):
        if fs.degrees[p - 1] == fs.m - 1 and fs.degrees[p - 1] >= 2:
            return p
    return None


def solve_product_sv(fs, beta):
    beta = _twist(fs, beta)
    if fs.k == 1:
        return solve_veronese(fs, beta)
    if not _is_standard_product(fs):
        raise Unsupported("product Segre-Veronese families need the standard defining tensors")
    if all(d == 1 for d in fs.degrees):
        return solve_segre(fs, beta)
    m, k = fs.m, fs.k
    cls = classify_beta(fs, beta)
    S = sorted(cls.S)
    B = _Builder()
    groups = range(1, k + 1)
    if not S:
        for p in groups:
            d = fs.degrees[p - 1]
            for v in fs.partition.vars(p):
                B.integral_slot(v, UniRational.const(v, 1), UniRational.const(v, 1), str(p), d)
        return [B.family(fs, beta, "product_sv:1")]
    if len(S) == 1 and cls.kind(S[0]) == "decomposable":
        p = S[0]
        info = cls.per_group[p]
        a, b = info["a"], info["b"]
        row = {}
        for i in groups:
            d = fs.degrees[i - 1]
            for v in fs.partition.vars(i):
                if i == p:
                    B.integral_slot(v, _lp(v, a, b, m + 1), _lp(v, a, b, -(m + 3)), str(p), d + 1)
                else:
                    B.integral_slot(v, UniRational.const(v, 1), UniRational.const(v, 1), str(i), d - 1)
            if i == p:
                row[f"g{p}_{d + 1}"] = 1 / (b * b)
            else:
                row[f"g{i}_{d - 1}"] = _ONE
        B.row(row)
        return [B.family(fs, beta, "product_sv:2", {"p": p, "a": a, "b": b})]
    q = _quick_group(fs)
    if q is not None:
        o = 3 - q
        for v in fs.partition.vars(q):
            B.poly_slot(v, f"g{q}", m)
        for v in fs.partition.vars(o):
            B.poly_slot(v, f"a{o}", 2)
        B.row({f"g{q}_{m}": mpq(2), f"a{o}_2": mpq(2)})
        return [B.family(fs, beta, "product_sv:3", {"S": S, "p": q})]
    rest = [i for i in groups if i not in S]
    if len(S) == 1:
        tag = "product_sv:4a"
    elif len(S) == 2 and k == 2:
        tag = "product_sv:4b"
    else:
        tag = "product_sv:4c"
    for i in groups:
        d = fs.degrees[i - 1]
        for v in fs.partition.vars(i):
            if i in S:
                B.poly_slot(v, f"g{i}", d if tag == "product_sv:4c" else d + 1)
            else:
                B.integral_slot(v, UniRational.const(v, 1), UniRational.const(v, 1), str(i), d - 1)
    if tag == "product_sv:4a":
        p = S[0]
        d = fs.degrees[p - 1]
        row = {f"g{p}_{d + 1}": mpq((m - d) * (m + 1 - d))}
        for i in rest:
            row[f"g{i}_{fs.degrees[i - 1] - 1}"] = _ONE
        B.row(row)
    elif tag == "product_sv:4b":
        p, pt = S
        B.row({f"g{p}_{fs.degrees[p - 1] + 1}": _ONE, f"g{pt}_{fs.degrees[pt - 1] + 1}": _ONE})
    elif rest:
        B.row({f"g{i}_{fs.degrees[i - 1] - 1}": _ONE for i in rest})
    return [B.family(fs, beta, tag, {"S": S})]


def _upsilon_eval_row(name, degree, x, scale):
    return {f"g{name}_{j}": scale * x ** j for j in range(degree + 1)}


def solve_two_point(fs, beta):
    beta = _twist(fs, beta)
    if fs.kind != "two_point" or "pi" not in fs.meta:
        raise Unsupported("not a two-point structure")
    if fs.k < 3:
        raise Unsupported("the two-point families need at least three groups")
    m, k = fs.m, fs.k
    pi1, pi2 = (as_rational(x) for x in fs.meta["pi"])
    d1, dk = fs.degrees[0], fs.degrees[k - 1]
    M = beta.mu()
    B = _Builder()
    root = -pi1 / pi2
    if M.is_constant():
        for p in range(1, k + 1):
            d = fs.degrees[p - 1]
            for v in fs.partition.vars(p):
                one = UniRational.const(v, 1)
                if p == 1:
                    B.integral_slot(v, _lp(v, pi1, pi2, -dk), _lp(v, pi1, pi2, dk - 1), "1", d1 + 1)
                else:
                    B.integral_slot(v, one, one, str(p), d if p < k else d - 1)
        row = _upsilon_eval_row("1", d1 + 1, root, (-pi2) ** (d1 - 1))
        row[f"g{k}_{dk - 1}"] = _ONE
        B.row(row)
        return [B.family(fs, beta, "two_point:1", {"pi": (pi1, pi2)})]
    dec = decomposability_test(fs, beta, 1)
    if not dec.decomposable or not dec.b or any(M.depends_on(VarId(p, 1)) for p in range(2, k + 1)):
        raise Unsupported("twist element outside the spans covered by the two-point families")
    a, b = dec.a, dec.b
    parallel = a * pi2 - b * pi1 == 0
    for p in range(1, k + 1):
        d = fs.degrees[p - 1]
        for v in fs.partition.vars(p):
            one = UniRational.const(v, 1)
            if p == 1:
                w = _lp(v, a, b, m + 1) * _lp(v, pi1, pi2, -dk)
                weight = _lp(v, pi1, pi2, dk - 1) * _lp(v, a, b, -(m + 3))
                B.integral_slot(v, w, weight, "1", d1 + 2)
            else:
                top = d if (parallel and p == k) else d - 1
                B.integral_slot(v, one, one, str(p), top)
    if parallel:
        # the template was built with (a, b); rescale to (pi1, pi2) for the stated rows
        s = pi2 / b
        B.row(_upsilon_eval_row("1", d1 + 2, root, _ONE))
        row = {f"g1_{d1 + 2}": 1 / (pi2 ** 3) * s ** 2}
        for i in range(2, k):
            row[f"g{i}_{fs.degrees[i - 1] - 1}"] = _ONE
        B.row(row)
        return [B.family(fs, beta, "two_point:2", {"pi": (pi1, pi2), "a": a, "b": b})]
    row = _upsilon_eval_row("1", d1 + 2, root, (-pi2) ** (d1 - 1))
    row[f"g{k}_{dk - 1}"] = (a - b * pi1 / pi2) ** 2
    B.row(row)
    row = {f"g1_{d1 + 2}": 1 / (pi2 * b * b)}
    for i in range(2, k):
        row[f"g{i}_{fs.degrees[i - 1] - 1}"] = _ONE
    B.row(row)
    return [B.family(fs, beta, "two_point:3", {"pi": (pi1, pi2), "a": a, "b": b})]


# independent ansatz oracle

class AnsatzSpace:
    """Extremal profiles inside a finite ansatz, as numerator coefficient vectors."""

    def __init__(self, unknowns, basis, shapes):
        self.unknowns = unknowns
        self.basis = basis
        self.shapes = shapes

    @property
    def dimension(self):
        return len(self.basis)

    def profiles(self, vec):
        out = {}
        for (v, n), c in zip(self.unknowns, vec):
            den, _ = self.shapes[v]
            t = UniRational(v, [_ZERO] * n + [c], den)
            out[v] = out[v] + t if v in out else t
        return out


def _shape(shapes, v):
    s = shapes[v]
    if isinstance(s, int):
        return ({}, s)
    den, deg = s
    return (dict(den), deg)


def ansatz_solution_space(fs, beta, shapes, token=None):
    """Solve E in the image by linear algebra over N_v(x) / den_v(x), deg N_v <= cap_v.

    E is linear in the profiles, so one evaluation per unknown suffices.
    """
    beta = _twist(fs, beta)
    slots = fs.partition.all_vars()
    shp = {v: _shape(shapes, v) for v in slots}
    unknowns, cols = [], []
    zero = _zero_profiles(fs)
    for v in slots:
        den, deg = shp[v]
        for n in range(deg + 1):
            check_token(token)
            prof = dict(zero)
            prof[v] = UniRational(v, [_ZERO] * n + [_ONE], den)
            g = GeometrySpec(fs, beta, prof, formal=True)
            unknowns.append((v, n))
            cols.append(extremality_lhs(g, token))
    den = {}
    for e in cols:
        for f, ex in e.factors.items():
            if ex < 0:
                den[f] = max(den.get(f, 0), -ex)
    D = FactoredRational(MPoly.const(1), den)
    polys = [(e * D).to_poly() for e in cols]
    dpoly = D.reduce().numerator_poly()
    polys += [dpoly * p for p in image_polys(fs)]
    keys = sorted(set().union(*(p.terms for p in polys)))
    mat = [[p.terms.get(k, _ZERO) for p in polys] for k in keys]
    ns = nullspace(mat, len(polys))
    proj = [vec[: len(unknowns)] for vec in ns]
    proj = [vec for vec in proj if any(vec)]
    basis = [proj[i] for i in independent_rows(proj)] if proj else []
    return AnsatzSpace(unknowns, basis, shp)


def family_profile_space(family, space):
    """Profile vectors of a family in the coordinates of an ansatz space."""
    a, _ = family.constraint_matrix()
    n = len(family.params)
    ns = nullspace(a, n) if a else nullspace([], n)
    vecs = []
    for vec in ns:
        prof = family.profiles(dict(zip(family.params, vec)))
        row = []
        for (v, j) in space.unknowns:
            den, deg = space.shapes[v]
            scaled = prof[v] * UniRational(v, UniRational(v, [_ONE], den).den_poly())
            if not scaled.is_polynomial() or scaled.degree() > deg:
                raise ValueError(f"family profile at {v} leaves the ansatz")
            row.append(scaled.num[j] if j < len(scaled.num) else _ZERO)
        vecs.append(row)
    return vecs


# ODE in the decomposable-free quadratic case

def ode_polynomial_basis(m, a, b, c, cap, var=None):
    """Polynomial solutions of q^2 A'' - (m+1) q q' A' + (m+1)(m+2) q'^2 A / 4 = 0, q = a+2bx+cx^2.

    Solved in y = b + c x, gamma = ac - b^2, where the ansatz
    sum alpha_j (gamma+y^2)^j + beta_j y (gamma+y^2)^j splits into two recurrences.
    """
    a, b, c = (as_rational(t) for t in (a, b, c))
    if c == 0:
        raise ValueError("leading coefficient c must be nonzero")
    var = var or VarId(1, 1)
    gam = a * c - b * b
    na, nb = cap // 2, (cap - 1) // 2
    y = UniRational(var, [b, c])
    q = UniRational.const(var, gam) + y * y
    out = []

    def coef(j):
        return 4 * j * (m + 2 - j) - (m + 1) * (m + 2)

    if na >= 0:
        rows = [[_ONE] + [_ZERO] * na]
        if na >= 1:
            rows.append([_ZERO, mpq(m - 2)] + [_ZERO] * (na - 1))
        last = [_ZERO] * (na + 1)
        last[na] = mpq((m + 1 - 2 * na) * (m + 2 - 2 * na))
        rows.append(last)
        for j in range(2, na + 1):
            r = [_ZERO] * (na + 1)
            r[j - 1] = mpq((m + 3 - 2 * j) * (m + 4 - 2 * j))
            r[j] = gam * coef(j)
            rows.append(r)
        for vec in nullspace(rows, na + 1):
            out.append(sum((q ** j * UniRational.const(var, vec[j]) for j in range(na + 1)), UniRational(var, [])))
    if nb >= 0:
        rows = [[_ONE] + [_ZERO] * nb]
        last = [_ZERO] * (nb + 1)
        last[nb] = mpq((m - 2 * nb) * (m + 1 - 2 * nb))
        rows.append(last)
        for j in range(1, nb + 1):
            r = [_ZERO] * (nb + 1)
            r[j - 1] = mpq((m + 2 - 2 * j) * (m + 3 - 2 * j))
            r[j] = -gam * coef(j)
            rows.append(r)
        for vec in nullspace(rows, nb + 1):
            out.append(sum((y * q ** j * UniRational.const(var, vec[j]) for j in range(nb + 1)),
                           UniRational(var, [])))
    return [p for p in out if not p.is_zero()]


def ode_residual(m, a, b, c, A):
    """Left side of the quadratic-coefficient ODE applied to A."""
    a, b, c = (as_rational(t) for t in (a, b, c))
    var = A.var
    q = UniRational(var, [a, 2 * b, c])
    q1 = q.diff()
    A1 = A.diff()
    return (q * q * A1.diff() - q * q1 * A1 * UniRational.const(var, m + 1)
            + q1 * q1 * A * UniRational.const(var, mpq((m + 1) * (m + 2), 4)))


def ode_direct_basis(m, a, b, c, cap, var=None):
    """Same solution space from an x-coefficient ansatz."""
    var = var or VarId(1, 1)
    cols = [ode_residual(m, a, b, c, _mono(var, n)) for n in range(cap + 1)]
    top = max((len(t.num) for t in cols), default=0)
    mat = [[t.num[i] if i < len(t.num) else _ZERO for t in cols] for i in range(top)]
    return [UniRational(var, vec) for vec in nullspace(mat, cap + 1)]


def diagonal_ode_residual(fs, beta, p, A_q, A_r):
    """Difference ODE for A = A_q - A_r on the diagonal x_pq = x_pr."""
    beta = _twist(fs, beta)
    if fs.degrees[p - 1] < 2:
        raise ValueError("group needs two slots")
    m = fs.m
    vq, vr = VarId(p, 1), VarId(p, 2)
    P = MPoly.const(1)
    for j in range(1, fs.k + 1):
        if j != p:
            P = P * fs.gamma_hat(j) ** fs.degrees[j - 1]
    M = beta.mu()
    diag = {vr: MPoly.var(vq)}
    Mx = M.substitute(diag)
    M1 = M.diff(vq).substitute(diag)
    P0 = P.substitute(diag)
    P1 = P.diff(vq).substitute(diag)
    P2 = P.diff(vq, 2).substitute(diag)
    A = (A_q.with_var(vq) - A_r.with_var(vq)).to_factored()
    A1 = A.diff(vq)
    A2 = A1.diff(vq)
    t0 = Mx * Mx * P2 - Mx * M1 * P1 * (2 * (m + 1)) + M1 * M1 * P0 * ((m + 1) * (m + 2))
    t1 = Mx * Mx * P1 - P0 * Mx * M1 * (m + 1)
    t2 = P0 * Mx * Mx
    return (A * FactoredRational(t0) + A1 * FactoredRational(t1) * 2 + A2 * FactoredRational(t2)).reduce()


# closed form of a group block

def _group_lines(fs, beta, p):
    M = beta.mu()
    v = VarId(p, 1)
    ob, o, ev, ad = _o_sets(fs, p)
    if not ad:
        raise Unsupported("a defining tensor is not decomposable in the grouped slots of this group")
    if M.depends_on(v):
        dec = decomposability_test(fs, beta, p)
        if not dec.decomposable:
            raise Unsupported("twist element is not decomposable in this group")
        ab = (dec.a, dec.b)
    else:
        ab = None
    lines = [normalize_line(*e) for e in ev.values() if e[1]]
    if ab is not None and ab[1]:
        lines.append(normalize_line(*ab))
    if len(set(lines)) != len(lines):
        raise Unsupported("coincident lines in the partial fraction")
    return ab, {j: ev[j] for j in o}


def normalize_line(a, b):
    a, b = as_rational(a), as_rational(b)
    return (a / b, _ONE) if b else (_ONE, _ZERO)


def group_profiles(fs, beta, p, upsilon, constants=None):
    """Profiles of group p built from one Upsilon; other groups zero."""
    beta = _twist(fs, beta)
    m = fs.m
    ab, es = _group_lines(fs, beta, p)
    prof = _zero_profiles(fs)
    for v in fs.partition.vars(p):
        ups = UniRational(v, upsilon)
        w = UniRational.const(v, 1)
        weight = UniRational.const(v, 1)
        for j, (ea, eb) in es.items():
            d = fs.degrees[j - 1]
            w = w * _lp(v, ea, eb, -d)
            weight = weight * _lp(v, ea, eb, d - 1)
        if ab is not None:
            w = w * _lp(v, ab[0], ab[1], m + 1)
            weight = weight * _lp(v, ab[0], ab[1], -(m + 3))
        nu0, nu1 = (constants or {}).get(v, (0, 0))
        prof[v] = w * (double_integral(ups * weight) + UniRational(v, [nu0, nu1]))
    return prof


def closed_form_group_sum(fs, beta, p, upsilon):
    """Group-p block of E for the Upsilon family, with the symmetric sums in closed form."""
    beta = _twist(fs, beta)
    ab, es = _group_lines(fs, beta, p)
    d = fs.degrees[p - 1]
    xs = fs.partition.vars(p)
    u = VarId(p, 1)
    den = {}
    for j, (ea, eb) in es.items():
        den[(ea, eb)] = den.get((ea, eb), 0) + 1
    if ab is not None:
        den[ab] = den.get(ab, 0) + 2
    pf = partial_fraction(UniRational(u, upsilon, den))
    total = FactoredRational(MPoly())
    for n, c in enumerate(pf.poly):
        if c and n - d + 1 >= 0:
            total = total + FactoredRational(complete_homogeneous(n - d + 1, xs) * c)
    for (la, lb), j, c in pf.terms:
        lines = [_line_poly(la, lb, x) for x in xs]
        prod = FactoredRational(MPoly.const(1))
        for ell in lines:
            prod = prod * FactoredRational.atom(ell)
        sign = (-as_rational(lb)) ** (d - 1)
        if j == 1:
            total = total + FactoredRational(MPoly.const(c * sign)) / prod
        elif j == 2:
            num = MPoly()
            for i in range(d):
                t = MPoly.const(1)
                for q, ell in enumerate(lines):
                    if q != i:
                        t = t * ell
                num = num + t
            total = total + FactoredRational(num * (c * sign)) / (prod * prod)
        else:
            raise Unsupported("pole of order above two")
    M = beta.mu()
    return (FactoredRational(M * M) * total / fs.gamma_factored(p)).reduce()


def _line_poly(a, b, x):
    return MPoly.linear({x: as_rational(b)}, as_rational(a))


def direct_group_sum(fs, beta, p, upsilon, constants=None):
    prof = group_profiles(fs, beta, p, upsilon, constants)
    g = GeometrySpec(fs, _twist(fs, beta), prof, formal=True)
    return group_block(g, p)


# degree bounds as necessary conditions

class SlotBound:
    def __init__(self, slot, status, observed, cap, rule):
        self.slot = slot
        self.status = status
        self.observed = observed
        self.cap = cap
        self.rule = rule

    def to_wire(self):
        return {"slot": [self.slot.group, self.slot.slot], "status": self.status,
                "observedDeg": self.observed, "cap": self.cap, "rule": self.rule}


def degree_bound_check(fs, beta, profiles):
    """Necessary degree conditions on each slot of an extremal metric."""
    beta = _twist(fs, beta)
    if isinstance(profiles, GeometrySpec):
        profiles = profiles.profiles
    elif not isinstance(profiles, dict):
        profiles = dict(zip(fs.partition.all_vars(), profiles))
    prof = GeometrySpec(fs, beta, profiles, formal=True).profiles
    dp = degree_profile(fs, beta)
    M = beta.mu()
    m = fs.m
    out = []
    for p in range(1, fs.k + 1):
        v1 = VarId(p, 1)
        o, ob = dp.o_set[p], dp.obar[p]
        sub = sum(fs.degrees[j - 1] for j in ob - o)
        caps = [(m + 2 - sub, "solutions-bound")]
        if not M.depends_on(v1):
            caps.append((dp.ell[p] + 2 - sub, "constant-twist-bound"))
        if dp.ell[p] < m and ob == o and t1_independent(M, v1):
            caps.append((dp.ell[p], "independence-bound"))
        cap, rule = min(caps)
        for v in fs.partition.vars(p):
            N = prof[v]
            for j in o:
                ea, eb = dp.e_vectors[p][j]
                N = N * _lp(v, ea, eb, fs.degrees[j - 1])
            if not N.is_polynomial():
                out.append(SlotBound(v, "violation", None, cap, "denominator"))
                continue
            deg = N.degree()
            out.append(SlotBound(v, "within" if deg <= cap else "violation", deg, cap, rule))
    return out
