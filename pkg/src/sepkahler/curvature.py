"""Separable Kaehler geometry: Laplacian, Ricci ratio, scalar curvature, extremality.

Throughout, M = <mu, beta>, G_j = <x_hat_j, Gamma_j>, P = prod_j G_j^{d_j} and
Delta_ir is the product of intra-group differences.  The extremality
left-hand side E = sum_ir M^{m+3}/(Delta_ir G_i P) d^2_ir(A_ir P / M^{m+1})
satisfies Scal = -E/M; the geometry is extremal iff E = <mu, alpha>.
"""

from gmpy2 import mpq

from .errors import check_token
from .linalg import independent_rows, solve
from .polynomial import MPoly, VarId, as_rational
from .rational import FactoredRational, UniRational
from .structures import (
    FactorizationStructure,
    HTensor,
    TwistElement,
    curve_coeffs,
    membership_in_h,
    pair_tensor,
    slot_delta_factored,
    structure_generators,
)

_ZERO = mpq(0)


class GeometrySpec:
    """Structure, twist element and one profile function per slot."""

    def __init__(self, fs, beta, profiles, formal=False):
        if not isinstance(beta, TwistElement):
            beta = TwistElement(fs, beta)
        self.fs = fs
        self.beta = beta
        slots = fs.partition.all_vars()
        if isinstance(profiles, dict):
            prof = {}
            for v in slots:
                if v not in profiles:
                    raise ValueError(f"missing profile for {v}")
                prof[v] = _as_profile(profiles[v], v)
        else:
            profiles = list(profiles)
            if len(profiles) != len(slots):
                raise ValueError(f"expected {len(slots)} profiles, got {len(profiles)}")
            prof = {v: _as_profile(p, v) for v, p in zip(slots, profiles)}
        self.profiles = prof
        self.formal = formal
        if not formal and any(p.is_zero() for p in prof.values()):
            raise ValueError("zero profile requires formal=True")
        self._cache = {}

    @property
    def m(self):
        return self.fs.m

    def slots(self):
        return self.fs.partition.all_vars()

    def mu(self):
        return self.beta.mu()

    def mu_factored(self):
        return self.beta.mu_factored()

    def gamma(self, j):
        return self.fs.gamma_factored(j)

    def p_factor(self):
        if "P" not in self._cache:
            out = FactoredRational(MPoly.const(1))
            for j, d in enumerate(self.fs.degrees, start=1):
                out = out * self.gamma(j) ** d
            self._cache["P"] = out
        return self._cache["P"]

    def delta(self, v):
        return slot_delta_factored(self.fs, v.group, v.slot)

    def log_p_derivative(self, v):
        """d_v log P = sum_j d_j (d_v G_j) / G_j."""
        key = ("lam", v)
        if key not in self._cache:
            lam = FactoredRational(MPoly())
            for j, d in enumerate(self.fs.degrees, start=1):
                if j == v.group:
                    continue
                g = self.gamma(j)
                dg = g.diff(v)
                if not dg.is_zero():
                    lam = lam + (dg / g) * d
            self._cache[key] = lam
        return self._cache[key]

    def with_profiles(self, profiles, formal=None):
        return GeometrySpec(self.fs, self.beta, profiles, self.formal if formal is None else formal)

    def to_wire(self):
        out = self.fs.to_wire()
        out["beta"] = self.beta.tensor.to_wire()
        out["profiles"] = [
            dict(self.profiles[v].to_wire(), group=v.group, slot=v.slot) for v in self.slots()
        ]
        if self.formal:
            out["formal"] = True
        return out


def _as_profile(p, v):
    if isinstance(p, UniRational):
        if p.var != v:
            if p.is_constant():
                return p.with_var(v)
            raise ValueError(f"profile for {v} is in {p.var}")
        return p
    if isinstance(p, (list, tuple)):
        return UniRational(v, p)
    return UniRational(v, [as_rational(p)])


def _fr(x):
    return FactoredRational.coerce(x)


def slot_term(g, v):
    """E contribution of slot v before dividing by Delta_v G_i."""
    m = g.m
    A = g.profiles[v]
    A1 = A.diff()
    A2 = A1.diff()
    M = g.mu()
    M1 = M.diff(v)
    lam = g.log_p_derivative(v)
    base = _fr(A2) * (M * M) - _fr(A1) * (M * M1 * (2 * (m + 1)))
    base = base + _fr(A) * (M1 * M1 * ((m + 1) * (m + 2)))
    if not lam.is_zero():
        lam1 = lam.diff(v)
        base = base + _fr(A1) * lam * (M * M * 2)
        base = base + _fr(A) * ((lam1 + lam * lam) * (M * M) - lam * (M * M1 * (2 * (m + 1))))
    return base


def extremality_lhs(g, token=None):
    """E = -M * Scal, summed group by group and reduced."""
    total = FactoredRational(MPoly())
    for i, d in enumerate(g.fs.degrees, start=1):
        part = group_block(g, i, token)
        total = total + part
    return total.reduce(token)


def group_block(g, i, token=None):
    """Group-i block of E, reduced."""
    part = FactoredRational(MPoly())
    for r in range(1, g.fs.degrees[i - 1] + 1):
        check_token(token)
        v = VarId(i, r)
        part = part + slot_term(g, v) / g.delta(v)
    part = part / g.gamma(i)
    return part.reduce(token)


def scalar_curvature(g, method="expanded", token=None):
    """Scal as a reduced FactoredRational."""
    if method == "literal":
        return scalar_curvature_literal(g, token)
    E = extremality_lhs(g, token)
    return (-E / g.mu_factored()).reduce(token)


def scalar_curvature_literal(g, token=None):
    """Scal = -sum M^{m+2}/(Delta G_i P) d^2(A P / M^{m+1}) with factored derivatives."""
    m = g.m
    Mf = g.mu_factored()
    P = g.p_factor()
    total = FactoredRational(MPoly())
    for v in g.slots():
        check_token(token)
        F = _fr(g.profiles[v]) * P * Mf ** (-(m + 1))
        F2 = F.diff(v).diff(v)
        outer = Mf ** (m + 2) / (g.delta(v) * g.gamma(v.group) * P)
        total = total + outer * F2
    return (-total).reduce(token)


def laplacian_invariant(g, f, token=None):
    """Laplacian of an invariant function f (polynomial in x)."""
    m = g.m
    Mf = g.mu_factored()
    H = g.p_factor() * Mf ** (-m)
    f = _fr(f)
    total = FactoredRational(MPoly())
    for v in g.slots():
        check_token(token)
        inner = _fr(g.profiles[v]) * f.diff(v) * H
        total = total + Mf / (g.delta(v) * g.gamma(v.group) * H) * inner.diff(v)
    return (-total).reduce(token)


def ricci_volume_ratio(g):
    """(-1)^m P prod A / M^{m+2}, constant normalized to one."""
    m = g.m
    out = g.p_factor() * g.mu_factored() ** (-(m + 2))
    for v in g.slots():
        out = out * _fr(g.profiles[v])
    return out * ((-1) ** m)


class CurvatureReport:
    """Scal, the extremality verdict and alpha (or the residual)."""

    def __init__(self, scal, extremal, lhs, alpha_coords=None, alpha=None, residual=None, basis=None):
        self.scal = scal
        self.extremal = extremal
        self.lhs = lhs
        self.alpha_coords = alpha_coords
        self.alpha = alpha
        self.residual = residual
        self.basis = basis

    def alpha_poly(self):
        return self.alpha.pairing() if self.alpha is not None else None

    def to_wire(self):
        from .polynomial import fmt_rational

        out = {"scal": self.scal.to_wire(), "extremal": self.extremal}
        if self.extremal:
            out["alpha"] = {
                "coords": [fmt_rational(c) for c in self.alpha_coords],
                "tensor": self.alpha.to_wire(),
                "mu_alpha": self.alpha.pairing().to_wire(),
            }
        else:
            out["residual"] = self.residual.to_wire()
        return out


def image_polys(fs, basis=None):
    basis = basis if basis is not None else fs.basis
    return [b.pairing() for b in basis]


def killing_coordinates(fs, poly, basis=None):
    """Coordinates c with poly = sum c_b <mu, b>, or None."""
    basis = basis if basis is not None else fs.basis
    polys = image_polys(fs, basis)
    keys = set(poly.terms)
    for p in polys:
        keys.update(p.terms)
    keys = sorted(keys)
    a = [[p.terms.get(k, _ZERO) for p in polys] for k in keys]
    rhs = [poly.terms.get(k, _ZERO) for k in keys]
    if not keys:
        return [_ZERO] * len(basis)
    return solve(a, rhs)


def extremality_residual(g, token=None):
    """Decide extremality; on success return alpha in image-basis coordinates."""
    E = extremality_lhs(g, token)
    scal = (-E / g.mu_factored()).reduce(token)
    poly = E.to_poly()
    if poly is None:
        return CurvatureReport(scal, False, E, residual=E)
    coords = killing_coordinates(g.fs, poly)
    if coords is None:
        return CurvatureReport(scal, False, E, residual=E)
    alpha = HTensor(g.fs.degrees, {})
    for c, b in zip(coords, g.fs.basis):
        alpha = alpha + b.scale(c)
    return CurvatureReport(scal, True, E, alpha_coords=coords, alpha=alpha, basis=g.fs.basis)


# coordinate changes

def tensor_from_pairing(poly, groups, degrees):
    """Inverse of pair_tensor for multi-affine grouped-symmetric polynomials."""
    from itertools import product

    from .polynomial import mono_encode

    coeffs = {}
    for idx in product(*(range(d + 1) for d in degrees)):
        pairs = []
        for g, a in zip(groups, idx):
            pairs.extend((VarId(g, q), 1) for q in range(1, a + 1))
        c = poly.terms.get(mono_encode(pairs), _ZERO)
        if c:
            coeffs[idx] = c
    if pair_tensor(coeffs, groups, degrees) != poly:
        raise ValueError("polynomial is not a grouped symmetric pairing")
    return coeffs


def _moebius_pairing(poly, groups, degrees, maps):
    """Substitute x = (b + d y)/(a + c y) and clear (a + c y) per slot."""
    for g, dg in zip(groups, degrees):
        a, b, c, d = maps[g]
        for q in range(1, dg + 1):
            v = VarId(g, q)
            parts = poly.coeffs_in(v)
            p0 = parts.get(0, MPoly())
            p1 = parts.get(1, MPoly())
            if max(parts) > 1:
                raise ValueError("pairing is not multi-affine")
            y = MPoly.var(v)
            poly = p0 * (y * c + a) + p1 * (y * d + b)
    return poly


def _normalize_maps(fs, maps, inverse=False):
    out = {}
    for i in range(1, fs.k + 1):
        mat = maps[i] if isinstance(maps, dict) else maps[i - 1]
        (a, b), (c, d) = [[as_rational(x) for x in row] for row in mat]
        det = a * d - b * c
        if det == 0:
            raise ValueError(f"singular coordinate change for group {i}")
        if inverse:
            a, b, c, d = d / det, -b / det, -c / det, a / det
        out[i] = (a, b, c, d)
    return out


def transform_structure(fs, maps):
    from .structures import GammaTensor

    k = fs.k
    gammas = []
    for j in range(1, k + 1):
        groups = [r for r in range(1, k + 1) if r != j]
        degs = [fs.degrees[r - 1] for r in groups]
        poly = fs.gamma_hat(j)
        new = _moebius_pairing(poly, groups, degs, maps)
        gammas.append(GammaTensor(j, tensor_from_pairing(new, groups, degs)))
    return FactorizationStructure(fs.partition, gammas, fs.kind)


def transform_tensor(fs, tensor, maps):
    groups = list(range(1, fs.k + 1))
    poly = _moebius_pairing(tensor.pairing(), groups, list(fs.degrees), maps)
    return HTensor(fs.degrees, tensor_from_pairing(poly, groups, list(fs.degrees)))


def transform_coordinates(g, maps, inverse=False):
    """Projective change x_ir = (b_i + d_i y)/(a_i + c_i y) per group.

    maps holds [[a, b], [c, d]] per group; inverse=True applies the inverse matrices.
    """
    mp = _normalize_maps(g.fs, maps, inverse)
    fs2 = transform_structure(g.fs, mp)
    beta2 = transform_tensor(g.fs, g.beta.tensor, mp)
    prof = {}
    for v, A in g.profiles.items():
        a, b, c, d = mp[v.group]
        di = g.fs.degrees[v.group - 1]
        det = a * d - b * c
        prof[v] = A.moebius(a, b, c, d, di + 2) * (det ** (-(di + 1)))
    return GeometrySpec(fs2, TwistElement(fs2, beta2), prof, g.formal)


# metric blocks

class MetricBlocks:
    """u_ir, theta rows, psi-mod-beta rows and the basis used."""

    def __init__(self, basis, u, theta, psi, omega_theta):
        self.basis = basis
        self.u = u
        self.theta = theta
        self.psi = psi
        self.omega_theta = omega_theta


def basis_with_beta(fs, beta_tensor):
    gens = structure_generators(fs.partition, fs.gammas)
    rows = [beta_tensor.vector()] + [t.vector() for t in gens]
    chosen = independent_rows(rows)
    if not chosen or chosen[0] != 0 or len(chosen) != fs.m + 1:
        raise ValueError("twist element cannot be extended to a basis of the image")
    return [beta_tensor] + [gens[i - 1] for i in chosen[1:]]


def metric_blocks_symbolic(g):
    """u_ir = Delta G_i/(A M); theta_ir,a = d_ir(<mu,b_a>/M); psi^a_ir(x_ir) coordinates mod beta."""
    if "blocks" in g._cache:
        return g._cache["blocks"]
    fs = g.fs
    basis = basis_with_beta(fs, g.beta.tensor)
    Mf = g.mu_factored()
    polys = [b.pairing() for b in basis[1:]]
    u, theta, psi = {}, {}, {}
    for v in g.slots():
        i = v.group
        u[v] = g.delta(v) * g.gamma(i) / (_fr(g.profiles[v]) * Mf)
        theta[v] = [(_fr(p) / Mf).diff(v).reduce() for p in polys]
        d = fs.degrees[i - 1]
        gens = structure_generators(fs.partition, fs.gammas)
        offset = sum(fs.degrees[j] + 1 for j in range(i - 1))
        y = MPoly.var(v)
        coeff = curve_coeffs(y, d)
        row = [MPoly() for _ in polys]
        for jdeg in range(d + 1):
            mem = membership_in_h(fs, gens[offset + jdeg], basis)
            for a in range(len(polys)):
                c = mem.coords[a + 1]
                if c:
                    row[a] = row[a] + coeff[jdeg] * c
        psi[v] = row
    blocks = MetricBlocks(basis, u, theta, psi, theta)
    g._cache["blocks"] = blocks
    return blocks
