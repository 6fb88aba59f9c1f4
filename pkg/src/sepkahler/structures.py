"""Segre-Veronese factorization structures, twist elements and pairings.

Symmetric tensors in S^d W* are stored by their coefficients against the
elementary symmetric polynomials: (t_0, ..., t_d) pairs with
(1, x_1) x ... x (1, x_d) to sum_a t_a sigma_a(x).  A tensor over several
groups is a dict from multi-degrees to rationals.
"""

from functools import lru_cache
from itertools import product

from gmpy2 import mpq

from .errors import InvalidStructure, NotInImage
from .linalg import independent_rows, rank, rref, solve
from .polynomial import MPoly, VarId, as_rational, elementary_symmetric, fmt_rational, group_vars
from .rational import FactoredRational

_ZERO = mpq(0)
_ONE = mpq(1)


class Partition:
    """m = d_1 + ... + d_k with every d_j >= 1 and m >= 2."""

    __slots__ = ("degrees",)

    def __init__(self, degrees):
        degrees = tuple(int(d) for d in degrees)
        if not degrees:
            raise ValueError("partition needs at least one group")
        if any(d < 1 for d in degrees):
            raise ValueError("group degrees must be positive")
        if sum(degrees) < 2:
            raise ValueError("m must be at least 2")
        self.degrees = degrees

    @property
    def m(self):
        return sum(self.degrees)

    @property
    def k(self):
        return len(self.degrees)

    def vars(self, group):
        return group_vars(group, self.degrees[group - 1])

    def all_vars(self):
        return [v for j in range(1, self.k + 1) for v in self.vars(j)]

    def multi_degrees(self):
        return list(product(*(range(d + 1) for d in self.degrees)))

    def __eq__(self, other):
        return isinstance(other, Partition) and self.degrees == other.degrees

    def __hash__(self):
        return hash(self.degrees)

    def __repr__(self):
        return f"Partition({'+'.join(map(str, self.degrees))})"


def symmetric_power_coeffs(a, b, d):
    """(a, b)^{tensor d} in the sigma basis: t_j = a^(d-j) b^j."""
    a, b = as_rational(a), as_rational(b)
    return [a ** (d - j) * b ** j for j in range(d + 1)]


def curve_coeffs(x, d):
    """(x, -1)^{tensor d} in the sigma basis; x may be a rational or MPoly."""
    return [(x ** (d - j)) * (-1) ** j for j in range(d + 1)]


@lru_cache(maxsize=None)
def _sigma(group, d, a):
    return elementary_symmetric(a, group_vars(group, d))


def pair_symmetric_eval(t, variables):
    """sum_a t_a sigma_a(variables)."""
    variables = list(variables)
    if len(t) != len(variables) + 1:
        raise ValueError(f"tensor of degree {len(t) - 1} paired with {len(variables)} variables")
    out = MPoly()
    for a, c in enumerate(t):
        c = as_rational(c)
        if c:
            out = out + elementary_symmetric(a, variables).scale(c)
    return out


def pair_tensor(coeffs, groups, degrees):
    """Pair a multi-group sigma-basis tensor with the grouped point (1, x) factors."""
    out = MPoly()
    for idx, c in coeffs.items():
        if not c:
            continue
        term = MPoly.const(c)
        for g, d, a in zip(groups, degrees, idx):
            if a:
                term = term * _sigma(g, d, a)
        out = out + term
    return out


class GammaTensor:
    """Defining tensor for group j, indexed by multi-degrees over the other groups."""

    __slots__ = ("excluded", "coeffs")

    def __init__(self, excluded, coeffs):
        self.excluded = int(excluded)
        self.coeffs = {tuple(k): as_rational(c) for k, c in coeffs.items() if as_rational(c)}
        if not self.coeffs:
            raise ValueError("defining tensor must be nonzero")

    def __eq__(self, other):
        return isinstance(other, GammaTensor) and (self.excluded, self.coeffs) == (other.excluded, other.coeffs)

    def __repr__(self):
        return f"GammaTensor({self.excluded}, {self.coeffs})"


class HTensor:
    """Full multi-degree tensor (a_1, ..., a_k) -> rational."""

    __slots__ = ("degrees", "coeffs")

    def __init__(self, degrees, coeffs):
        self.degrees = tuple(degrees)
        clean = {}
        for k, c in coeffs.items():
            k = tuple(k)
            if len(k) != len(self.degrees) or any(a < 0 or a > d for a, d in zip(k, self.degrees)):
                raise ValueError(f"multi-degree {k} outside {self.degrees}")
            c = as_rational(c)
            if c:
                clean[k] = clean.get(k, _ZERO) + c
        self.coeffs = {k: c for k, c in clean.items() if c}

    @classmethod
    def from_vector(cls, degrees, vec):
        keys = list(product(*(range(d + 1) for d in degrees)))
        return cls(degrees, dict(zip(keys, vec)))

    def vector(self):
        keys = product(*(range(d + 1) for d in self.degrees))
        return [self.coeffs.get(k, _ZERO) for k in keys]

    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        c = dict(self.coeffs)
        for k, v in other.coeffs.items():
            c[k] = c.get(k, _ZERO) + v
        return HTensor(self.degrees, c)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, s):
        s = as_rational(s)
        return HTensor(self.degrees, {k: v * s for k, v in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, HTensor) and self.degrees == other.degrees and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.degrees, frozenset(self.coeffs.items())))

    def pairing(self):
        """<mu, T>: the polynomial sum_a T[a] prod_j sigma_{a_j}(group j)."""
        k = len(self.degrees)
        return pair_tensor(self.coeffs, range(1, k + 1), self.degrees)

    def to_wire(self):
        return {
            "coeffs": [
                {"degrees": list(k), "c": fmt_rational(c)} for k, c in sorted(self.coeffs.items())
            ]
        }

    @classmethod
    def from_wire(cls, degrees, data):
        return cls(degrees, {tuple(item["degrees"]): item["c"] for item in data["coeffs"]})

    def __repr__(self):
        return f"HTensor({self.degrees}, {{{', '.join(f'{k}: {fmt_rational(v)}' for k, v in sorted(self.coeffs.items()))}}})"


def ins(partition, j, t_j, gamma):
    """ins_j(T_j (x) Gamma_j) as an HTensor; t_j is a sigma-basis list of length d_j+1."""
    degs = partition.degrees
    out = {}
    for a, c in enumerate(t_j):
        c = as_rational(c)
        if not c:
            continue
        for rest, g in gamma.coeffs.items():
            idx = list(rest)
            idx.insert(j - 1, a)
            out[tuple(idx)] = out.get(tuple(idx), _ZERO) + c * g
    return HTensor(degs, out)


def decomposable_tensor(degrees, vectors, scale=1):
    """scale * prod_j (a_j, b_j)^{tensor d_j}."""
    parts = [symmetric_power_coeffs(a, b, d) for (a, b), d in zip(vectors, degrees)]
    out = {}
    s = as_rational(scale)
    for idx in product(*(range(d + 1) for d in degrees)):
        c = s
        for p, a in zip(parts, idx):
            c = c * p[a]
        if c:
            out[idx] = c
    return HTensor(degrees, out)


def gamma_from_points(degrees, j, points):
    """Gamma_j = prod_{r != j} (a_r, b_r)^{tensor d_r}; points maps r -> (a, b)."""
    others = [r for r in range(1, len(degrees) + 1) if r != j]
    parts = [symmetric_power_coeffs(*points[r], degrees[r - 1]) for r in others]
    out = {}
    for idx in product(*(range(degrees[r - 1] + 1) for r in others)):
        c = _ONE
        for p, a in zip(parts, idx):
            c = c * p[a]
        if c:
            out[idx] = c
    return GammaTensor(j, out)


class FactorizationStructure:
    """Validated structure: partition, defining tensors and a basis of the image."""

    def __init__(self, partition, gammas, kind="custom", meta=None):
        if not isinstance(partition, Partition):
            partition = Partition(partition)
        self.partition = partition
        self.gammas = list(gammas)
        self.kind = kind
        self.meta = dict(meta or {})
        if len(self.gammas) != partition.k:
            raise ValueError("need one defining tensor per group")
        for j, g in enumerate(self.gammas, start=1):
            if g.excluded != j:
                raise ValueError(f"defining tensor {j} labelled {g.excluded}")
            for key in g.coeffs:
                exp = [d for r, d in enumerate(partition.degrees, start=1) if r != j]
                if len(key) != len(exp) or any(a < 0 or a > d for a, d in zip(key, exp)):
                    raise ValueError(f"defining tensor {j} has bad index {key}")
        ok, r, basis = validate_dimension(partition, self.gammas)
        if not ok:
            raise InvalidStructure(
                f"image has dimension {r}, expected {partition.m + 1}", rank=r, expected=partition.m + 1
            )
        self.basis = basis
        self._gamma_polys = {}
        self._gamma_atoms = {}

    @property
    def m(self):
        return self.partition.m

    @property
    def k(self):
        return self.partition.k

    @property
    def degrees(self):
        return self.partition.degrees

    def generators(self):
        return structure_generators(self.partition, self.gammas)

    def gamma_hat(self, j):
        if j not in self._gamma_polys:
            g = self.gammas[j - 1]
            groups = [r for r in range(1, self.k + 1) if r != j]
            degs = [self.degrees[r - 1] for r in groups]
            self._gamma_polys[j] = pair_tensor(g.coeffs, groups, degs)
        return self._gamma_polys[j]

    def gamma_factored(self, j):
        """<x_hat_j, Gamma_j> as a FactoredRational with linear atoms split off."""
        if j not in self._gamma_atoms:
            g = self.gammas[j - 1]
            groups = [r for r in range(1, self.k + 1) if r != j]
            degs = [self.degrees[r - 1] for r in groups]
            self._gamma_atoms[j] = factor_pairing(g.coeffs, groups, degs)
        return self._gamma_atoms[j]

    def untwisted(self):
        return HTensor(self.degrees, {(0,) * self.k: 1})

    def to_wire(self):
        out = {"partition": list(self.degrees), "kind": self.kind}
        out["gammas"] = [
            {
                "excluded": g.excluded,
                "coeffs": [{"degrees": list(k), "c": fmt_rational(c)} for k, c in sorted(g.coeffs.items())],
            }
            for g in self.gammas
        ]
        return out

    def __repr__(self):
        return f"FactorizationStructure({self.kind}, {self.partition})"


def structure_generators(partition, gammas):
    gens = []
    for j, g in enumerate(gammas, start=1):
        d = partition.degrees[j - 1]
        for a in range(d + 1):
            e = [_ZERO] * (d + 1)
            e[a] = _ONE
            gens.append(ins(partition, j, e, g))
    return gens


def validate_dimension(partition, gammas):
    """(valid, rank, basis) with basis chosen greedily among the generators."""
    if not isinstance(partition, Partition):
        partition = Partition(partition)
    gens = structure_generators(partition, gammas)
    rows = [g.vector() for g in gens]
    chosen = independent_rows(rows)
    r = len(chosen)
    basis = [gens[i] for i in chosen]
    return r == partition.m + 1, r, basis


def build_structure(kind, partition=None, m=None, points=None, pi=None, gammas=None):
    """Constructors for the standard structure families."""
    if kind == "veronese":
        m = m if m is not None else Partition(partition).m
        return FactorizationStructure(Partition([m]), [GammaTensor(1, {(): 1})], "veronese")
    if kind == "segre":
        m = m if m is not None else Partition(partition).m
        fs = build_structure("product_sv", partition=[1] * m)
        fs.kind = "segre"
        return fs
    if kind == "product_sv":
        part = Partition(partition)
        pts = points or {r: (1, 0) for r in range(1, part.k + 1)}
        gs = [gamma_from_points(part.degrees, j, pts) for j in range(1, part.k + 1)]
        return FactorizationStructure(part, gs, "product_sv", {"points": pts})
    if kind == "decomposable":
        part = Partition(partition)
        gs = [gamma_from_points(part.degrees, j, points[j]) for j in range(1, part.k + 1)]
        return FactorizationStructure(part, gs, "decomposable", {"points": points})
    if kind == "two_point":
        part = Partition(partition)
        if part.k < 2:
            raise ValueError("two-point structure needs at least two groups")
        pi = tuple(as_rational(x) for x in (pi or (1, 1)))
        k = part.k
        pts = {}
        for j in range(1, k + 1):
            pts[j] = {r: (1, 0) for r in range(1, k + 1) if r != j}
        pts[k][1] = pi
        gs = [gamma_from_points(part.degrees, j, pts[j]) for j in range(1, k + 1)]
        return FactorizationStructure(part, gs, "two_point", {"pi": list(pi), "points": pts})
    if kind == "custom":
        part = Partition(partition)
        return FactorizationStructure(part, gammas, "custom")
    raise ValueError(f"unknown structure kind {kind!r}")


def gamma_hat_poly(fs, j):
    return fs.gamma_hat(j)


def mu_poly(beta):
    """<mu, beta> for a TwistElement or HTensor."""
    t = beta.tensor if isinstance(beta, TwistElement) else beta
    return t.pairing()


class Membership:
    def __init__(self, member, coords=None, residual=None):
        self.member = member
        self.coords = coords
        self.residual = residual

    def __bool__(self):
        return self.member


def membership_in_h(fs, t, basis=None):
    """Exact coordinates of t in the image basis, or the reduced residual."""
    basis = basis if basis is not None else fs.basis
    cols = [b.vector() for b in basis]
    target = t.vector()
    a = [list(row) for row in zip(*cols)]
    x = solve(a, target)
    if x is not None:
        return Membership(True, coords=x)
    red, piv = rref(cols, len(target))
    res = list(target)
    for row, c in zip(red, piv):
        f = res[c]
        if f:
            res = [ri - f * bi for ri, bi in zip(res, row)]
    return Membership(False, residual=HTensor.from_vector(fs.degrees, res))


class TwistElement:
    """beta in the image of the structure."""

    def __init__(self, fs, tensor):
        if isinstance(tensor, dict):
            tensor = HTensor(fs.degrees, tensor)
        mem = membership_in_h(fs, tensor)
        if not mem.member:
            raise NotInImage("twist element is not in the image of the structure")
        self.fs = fs
        self.tensor = tensor
        self.coords = mem.coords
        self._mu = None
        self._mu_fact = None

    def mu(self):
        if self._mu is None:
            self._mu = self.tensor.pairing()
            if self._mu.is_zero():
                raise ValueError("<mu, beta> is identically zero")
        return self._mu

    def mu_factored(self):
        if self._mu_fact is None:
            k = self.fs.k
            self._mu_fact = factor_pairing(self.tensor.coeffs, list(range(1, k + 1)), list(self.fs.degrees))
        return self._mu_fact

    def to_wire(self):
        return self.tensor.to_wire()


def slice_matrix(coeffs, axis, d):
    """Rows indexed by the axis degree 0..d, columns by the remaining indices."""
    rest = sorted({k[:axis] + k[axis + 1:] for k in coeffs})
    col = {r: i for i, r in enumerate(rest)}
    mat = [[_ZERO] * len(rest) for _ in range(d + 1)]
    for k, c in coeffs.items():
        mat[k[axis]][col[k[:axis] + k[axis + 1:]]] = c
    return mat, rest


class Decomposition:
    """Outcome of the grouped-slot decomposability test along one axis."""

    def __init__(self, decomposable, a=None, b=None, t=None, K=None, slice_rank=None, diagonal_dependent=False,
                 quadratic=None):
        self.decomposable = decomposable
        self.a = a
        self.b = b
        self.t = t
        self.K = K
        self.slice_rank = slice_rank
        self.diagonal_dependent = diagonal_dependent
        self.quadratic = quadratic

    def __bool__(self):
        return self.decomposable

    @property
    def real_root(self):
        """For a d=2 rank-one slice a+2bx+cx^2: sign(b^2 - ac) >= 0."""
        if self.quadratic is None:
            return None
        a, b, c = self.quadratic
        return b * b - a * c >= 0

    @property
    def rational_root(self):
        if self.quadratic is None:
            return None
        a, b, c = self.quadratic
        disc = b * b - a * c
        if c == 0:
            return b != 0 or a == 0
        if disc < 0:
            return False
        num, den = disc.numerator, disc.denominator
        from gmpy2 import is_square
        return bool(is_square(num) and is_square(den))


def _decompose_axis(coeffs, axis, d):
    """Test coeffs = (a,b)^{tensor d} (x) K along one axis."""
    if not coeffs:
        return Decomposition(False, slice_rank=0)
    mat, rest = slice_matrix(coeffs, axis, d)
    r = rank(mat)
    quad = None
    rowvec = None
    if r == 1:
        col = next(i for i in range(len(rest)) if any(mat[a][i] for a in range(d + 1)))
        rowvec = [mat[a][col] for a in range(d + 1)]
        if d == 2:
            quad = tuple(rowvec)
    if r != 1:
        return Decomposition(False, slice_rank=r)
    hankel_ok = d < 1 or rank([rowvec[:-1], rowvec[1:]]) <= 1
    if not hankel_ok:
        return Decomposition(False, slice_rank=1, diagonal_dependent=(d == 2), quadratic=quad)
    if rowvec[0]:
        a, b = _ONE, rowvec[1] / rowvec[0] if d >= 1 else _ZERO
    else:
        a, b = _ZERO, _ONE
    geo = symmetric_power_coeffs(a, b, d)
    lead = next(i for i in range(d + 1) if geo[i])
    col_vec = {}
    piv_row = mat[lead]
    for i, key in enumerate(rest):
        if piv_row[i]:
            col_vec[key] = piv_row[i] / geo[lead]
    first = col_vec[min(col_vec)]
    K = {k: v / first for k, v in col_vec.items()}
    t = first
    return Decomposition(True, a=a, b=b, t=t, K=K, slice_rank=1, quadratic=quad)


def decomposability_test(fs, t, p):
    """Decide whether t = ins_p((a,b)^{tensor d_p} (x) K) up to the scalar t."""
    tensor = t.tensor if isinstance(t, TwistElement) else t
    return _decompose_axis(tensor.coeffs, p - 1, fs.degrees[p - 1])


def factor_pairing(coeffs, groups, degrees):
    """Pairing as FactoredRational: linear factors per decomposable axis, then a remainder atom."""
    coeffs = dict(coeffs)
    groups = list(groups)
    degrees = list(degrees)
    out = FactoredRational(MPoly.const(1))
    changed = True
    while changed and groups:
        changed = False
        for axis in range(len(groups)):
            dec = _decompose_axis(coeffs, axis, degrees[axis])
            if not dec.decomposable:
                continue
            g, d = groups[axis], degrees[axis]
            if dec.b:
                for v in group_vars(g, d):
                    out = out * FactoredRational.atom(MPoly.linear({v: dec.b}, dec.a))
            elif dec.a != 1:
                out = out * (dec.a ** d)
            coeffs = {k: v * dec.t for k, v in dec.K.items()}
            del groups[axis]
            del degrees[axis]
            changed = True
            break
    rem = pair_tensor(coeffs, groups, degrees) if groups else MPoly.const(coeffs.get((), _ZERO))
    if rem.is_zero():
        raise ValueError("pairing is identically zero")
    if rem.is_constant():
        return out * rem.constant_value()
    return out * FactoredRational.atom(rem)


def curve_eval(fs, i, x):
    """psi_i(x) = ins_i((x, -1)^{tensor d_i} (x) Gamma_i) for rational x."""
    d = fs.degrees[i - 1]
    return ins(fs.partition, i, curve_coeffs(as_rational(x), d), fs.gammas[i - 1])


def curve_pairing(fs, i, y):
    """<mu, psi_i(y)> as a polynomial; y may be an MPoly."""
    d = fs.degrees[i - 1]
    g = fs.gammas[i - 1]
    y = y if isinstance(y, MPoly) else MPoly.const(y)
    t = curve_coeffs(y, d)
    others = [r for r in range(1, fs.k + 1) if r != i]
    out = MPoly()
    for a, ca in enumerate(t):
        base = ca * _sigma(i, d, a) if a else ca
        for rest, c in g.coeffs.items():
            term = base * c
            for r, ar in zip(others, rest):
                if ar:
                    term = term * _sigma(r, fs.degrees[r - 1], ar)
            out = out + term
    return out


def slot_delta(fs, i, r):
    """Delta_ir = prod_{s != r} (x_ir - x_is) within group i."""
    vi = VarId(i, r)
    out = MPoly.const(1)
    for s in range(1, fs.degrees[i - 1] + 1):
        if s != r:
            out = out * (MPoly.var(vi) - MPoly.var(VarId(i, s)))
    return out


def slot_delta_factored(fs, i, r):
    vi = VarId(i, r)
    out = FactoredRational(MPoly.const(1))
    for s in range(1, fs.degrees[i - 1] + 1):
        if s != r:
            out = out * FactoredRational.atom(MPoly.var(vi) - MPoly.var(VarId(i, s)))
    return out


def structure_from_wire(data):
    """Parse the JSON structure form or a constructor shorthand."""
    kind = data.get("kind")
    if kind and kind != "custom" and "gammas" not in data:
        part = data.get("partition")
        if kind == "veronese":
            return build_structure("veronese", m=int(data.get("m", sum(part or []))))
        if kind == "segre":
            return build_structure("segre", m=int(data.get("m", sum(part or []))))
        if kind == "two_point":
            return build_structure("two_point", partition=part, pi=data.get("pi", [1, 1]))
        if kind == "product_sv":
            pts = data.get("points")
            if pts is not None:
                pts = {r + 1: tuple(as_rational(x) for x in p) for r, p in enumerate(pts)}
            return build_structure("product_sv", partition=part, points=pts)
        if kind == "decomposable":
            raw = data["points"]
            pts = {int(j): {int(r): tuple(as_rational(x) for x in ab) for r, ab in row.items()}
                   for j, row in raw.items()}
            return build_structure("decomposable", partition=part, points=pts)
        raise ValueError(f"unknown structure kind {kind!r}")
    part = Partition(data["partition"])
    gs = [
        GammaTensor(int(g["excluded"]), {tuple(c["degrees"]): c["c"] for c in g["coeffs"]})
        for g in data["gammas"]
    ]
    gs.sort(key=lambda g: g.excluded)
    fs = FactorizationStructure(part, gs, kind or "custom")
    if fs.kind == "two_point":
        fs.meta.update(recover_two_point_meta(fs))
    return fs


def _rational_root(t, n):
    """A rational s with s^n = t, or None."""
    from gmpy2 import iroot
    t = as_rational(t)
    sign = 1
    if t < 0:
        if n % 2 == 0:
            return None
        sign, t = -1, -t
    num, ok1 = iroot(t.numerator, n)
    den, ok2 = iroot(t.denominator, n)
    if not (ok1 and ok2):
        return None
    return sign * mpq(num, den)


def recover_two_point_meta(fs):
    """pi for a structure whose tensors match the two-point construction exactly, else {}."""
    if fs.k < 2:
        return {}
    dec = _decompose_axis(fs.gammas[-1].coeffs, 0, fs.degrees[0])
    if not dec.decomposable:
        return {}
    s = _rational_root(dec.t, fs.degrees[0])
    for cand in ([s, -s] if s is not None else []):
        pi = (dec.a * cand, dec.b * cand)
        if not pi[1]:
            continue
        ref = build_structure("two_point", partition=list(fs.degrees), pi=pi)
        if all(g.coeffs == h.coeffs for g, h in zip(fs.gammas, ref.gammas)):
            return {"pi": list(ref.meta["pi"]), "points": ref.meta["points"]}
    return {}
