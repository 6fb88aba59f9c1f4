"""Floating-point oracle: assemble the metric and take finite differences.

Coordinates are (x_ir; t_a).  The metric depends on x only, so every
t-derivative vanishes and only x-directions are differenced.
"""

import numpy as np

from .curvature import metric_blocks_symbolic, scalar_curvature
from .errors import DomainError
from .rational import FactoredRational, peval

DEFAULT_MARGIN = 1e-3


class FloatPoly:
    """Dense float evaluator for an MPoly over a fixed variable order."""

    def __init__(self, poly, variables):
        pos = {v: i for i, v in enumerate(variables)}
        n = len(variables)
        terms = poly.monomials()
        self.coeffs = np.array([float(c) for _, c in terms], dtype=float)
        self.exps = np.zeros((len(terms), n), dtype=float)
        for t, (pairs, _) in enumerate(terms):
            for v, e in pairs:
                if v not in pos:
                    raise KeyError(f"variable {v} not in evaluation order")
                self.exps[t, pos[v]] = e

    def __call__(self, x):
        if not len(self.coeffs):
            return 0.0
        return float(self.coeffs @ np.prod(np.power(x, self.exps), axis=1))


class FloatRational:
    """num * prod atom^e in floating point, tracking denominator values."""

    def __init__(self, fr, variables):
        fr = FactoredRational.coerce(fr)
        self.num = FloatPoly(fr.num, variables)
        self.atoms = [(FloatPoly(f, variables), e, str(f)) for f, e in fr.factors.items()]

    def __call__(self, x):
        val = self.num(x)
        for f, e, _ in self.atoms:
            val *= f(x) ** e
        return val

    def denominators(self, x):
        return [(abs(f(x)), name) for f, e, name in self.atoms if e < 0]


class FloatGeometry:
    """Compiled metric blocks of a GeometrySpec."""

    def __init__(self, g):
        self.g = g
        self.vars = g.slots()
        self.m = len(self.vars)
        blocks = metric_blocks_symbolic(g)
        self.u = [FloatRational(blocks.u[v], self.vars) for v in self.vars]
        self.theta = [[FloatRational(t, self.vars) for t in blocks.theta[v]] for v in self.vars]
        self.psi = [[FloatPoly(p, self.vars) for p in blocks.psi[v]] for v in self.vars]
        self.profiles = [g.profiles[v] for v in self.vars]
        self.tracked = self._tracked_factors(g)
        self.poles = [(i, -float(a) / float(b)) for i, A in enumerate(self.profiles)
                      for (a, b), _ in A.den if b]
        self.scal = FloatRational(scalar_curvature(g), self.vars)

    def _tracked_factors(self, g):
        out = []
        fr = [g.mu_factored()]
        fr += [g.gamma(j) for j in range(1, g.fs.k + 1)]
        fr += [g.delta(v) for v in self.vars]
        for f in fr:
            for atom in f.factors:
                out.append((FloatPoly(atom, self.vars), str(atom)))
        for i, A in enumerate(self.profiles):
            out.append((_profile_value_fn(A, i), f"A[{self.vars[i]}]"))
            for (a, b), _ in A.den:
                out.append((_linear_fn(a, b, i), f"{a}+{b}*{self.vars[i]}"))
        return out

    def margin(self, x):
        vals = [(abs(f(x)), name) for f, name in self.tracked]
        return min(vals) if vals else (np.inf, "")

    def pole_distance(self, x):
        """Coordinate distance to the nearest profile pole."""
        return min((abs(x[i] - r) for i, r in self.poles), default=np.inf)

    def profile(self, i, x):
        A = self.profiles[i]
        xi = x[i]
        den = 1.0
        for (a, b), j in A.den:
            den *= (a + b * xi) ** j
        return float(peval([float(c) for c in A.num], xi)) / den

    def metric(self, x, flip_u=False):
        m = self.m
        G = np.zeros((2 * m, 2 * m))
        for i in range(m):
            u = self.u[i](x) * (-1.0 if flip_u else 1.0)
            G[i, i] = u
            th = np.array([t(x) for t in self.theta[i]])
            G[m:, m:] += np.outer(th, th) / u
        return G

    def complex_structure(self, x, flip_u=False):
        """Matrix of J on tangent vectors, built from the covector action."""
        m = self.m
        Jf = np.zeros((2 * m, 2 * m))
        for i in range(m):
            u = self.u[i](x) * (-1.0 if flip_u else 1.0)
            th = np.array([t(x) for t in self.theta[i]])
            Jf[m:, i] = th / u
            A = self.profile(i, x)
            for a in range(m):
                Jf[i, m + a] = self.psi[i][a](x) / A
        return -Jf.T

    def omega(self, x):
        m = self.m
        W = np.zeros((2 * m, 2 * m))
        for i in range(m):
            for a in range(m):
                t = self.theta[i][a](x)
                W[i, m + a] = t
                W[m + a, i] = -t
        return W


def _profile_value_fn(A, i):
    num = [float(c) for c in A.num]
    den = [((float(a), float(b)), j) for (a, b), j in A.den]

    def f(x):
        d = 1.0
        for (a, b), j in den:
            d *= (a + b * x[i]) ** j
        return peval(num, x[i]) / d

    return f


def _linear_fn(a, b, i):
    a, b = float(a), float(b)
    return lambda x: a + b * x[i]


class SamplePoint:
    def __init__(self, x, margin):
        self.x = np.asarray(x, dtype=float)
        self.margin = margin

    def to_wire(self):
        return [float(v) for v in self.x]


def make_point(fg, x, threshold=DEFAULT_MARGIN):
    x = np.asarray(x, dtype=float)
    margin, name = fg.margin(x)
    if margin <= threshold:
        raise DomainError(f"point not admissible: {name} has magnitude {margin:.3g}")
    return SamplePoint(x, margin)


def sample_points(g, n, seed=0, threshold=0.05, low=-1.5, high=1.5, fg=None, max_tries=10000,
                  pole_clearance=0.25):
    """n admissible points drawn uniformly from a box, deterministic in seed.

    Points closer than pole_clearance to a profile pole are skipped: the
    nested difference quotients lose accuracy like (h / distance)^4 there.
    """
    fg = fg or FloatGeometry(g)
    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > max_tries:
            raise DomainError("could not find admissible sample points")
        x = rng.uniform(low, high, size=fg.m)
        margin, _ = fg.margin(x)
        if margin <= threshold or fg.pole_distance(x) <= pole_clearance:
            continue
        if _degenerate(fg.metric(x)):
            continue
        out.append(SamplePoint(x, margin))
    return out


class NumericMetric:
    def __init__(self, G, point):
        self.G = G
        self.point = point


def _as_point(fg, pt):
    if isinstance(pt, SamplePoint):
        return pt
    return make_point(fg, pt)


def _degenerate(G):
    scale = np.max(np.abs(G)) ** G.shape[0] if G.size else 1.0
    return abs(np.linalg.det(G)) <= 1e-10 * max(scale, 1e-300)


def numeric_metric(g, pt, fg=None):
    fg = fg or FloatGeometry(g)
    pt = _as_point(fg, pt)
    G = fg.metric(pt.x)
    if _degenerate(G):
        raise DomainError("metric is degenerate at the sample point")
    return NumericMetric(G, pt)


def _christoffel(fg, x, h):
    m = fg.m
    n = 2 * m
    G = fg.metric(x)
    Ginv = np.linalg.inv(G)
    dG = np.zeros((n, n, n))
    for c in range(m):
        e = np.zeros(m)
        e[c] = h
        dG[c] = (fg.metric(x + e) - fg.metric(x - e)) / (2 * h)
    # dG[c, i, j] = d_c g_ij; term[i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
    term = dG + dG.transpose(1, 0, 2) - dG.transpose(1, 2, 0)
    return 0.5 * np.einsum("kl,ijl->kij", Ginv, term), Ginv


def _scalar_fd(fg, x, h):
    m = fg.m
    n = 2 * m
    Gam, Ginv = _christoffel(fg, x, h)
    dGam = np.zeros((n, n, n, n))
    for c in range(m):
        e = np.zeros(m)
        e[c] = h
        gp, _ = _christoffel(fg, x + e, h)
        gm, _ = _christoffel(fg, x - e, h)
        dGam[c] = (gp - gm) / (2 * h)
    # dGam[a, l, i, k] = d_a Gamma^l_ik
    # R^l_ijk = d_j G^l_ik - d_k G^l_ij + G^l_jm G^m_ik - G^l_km G^m_ij
    R = (
        np.einsum("jlik->lijk", dGam)
        - np.einsum("klij->lijk", dGam)
        + np.einsum("ljm,mik->lijk", Gam, Gam)
        - np.einsum("lkm,mij->lijk", Gam, Gam)
    )
    Ric = np.einsum("jijk->ik", R)
    return float(np.einsum("ik,ik->", Ginv, Ric))


def fd_scalar_curvature(g, pt, h=1e-3, fg=None):
    """Richardson-extrapolated finite-difference scalar curvature."""
    fg = fg or FloatGeometry(g)
    pt = _as_point(fg, pt)
    x = pt.x
    for c in range(fg.m):
        for s in (-2, 2):
            e = np.zeros(fg.m)
            e[c] = s * h
            margin, name = fg.margin(x + e)
            if margin <= DEFAULT_MARGIN:
                raise DomainError(f"stencil leaves the admissible set at {name}")
    s1 = _scalar_fd(fg, x, h)
    s2 = _scalar_fd(fg, x, h / 2)
    return (4 * s2 - s1) / 3


class CompatibilityReport:
    def __init__(self, residuals, tolerances):
        self.residuals = residuals
        self.tolerances = tolerances
        self.passed = {k: bool(residuals[k] < tolerances[k]) for k in residuals}

    @property
    def ok(self):
        return all(self.passed.values())

    def to_wire(self):
        return {k: {"residual": self.residuals[k], "passed": self.passed[k]} for k in self.residuals}


def compatibility_check(g, pt, h=1e-4, fg=None, flip_u=False, tol_alg=1e-8, tol_dw=1e-5):
    """Check J^2 = -1, J-invariance of g, omega = g(J., .) and d omega = 0."""
    fg = fg or FloatGeometry(g)
    pt = _as_point(fg, pt)
    x = pt.x
    n = 2 * fg.m
    G = fg.metric(x, flip_u)
    J = fg.complex_structure(x, flip_u)
    W = fg.omega(x)
    scale_g = max(1.0, np.max(np.abs(G)))
    scale_w = max(1.0, np.max(np.abs(W)))
    res = {}
    res["J2"] = float(np.max(np.abs(J @ J + np.eye(n))))
    res["g_invariant"] = float(np.max(np.abs(J.T @ G @ J - G))) / scale_g
    res["omega_gJ"] = float(np.max(np.abs(J.T @ G - W))) / scale_w
    dW = np.zeros((n, n, n))
    for c in range(fg.m):
        e = np.zeros(fg.m)
        e[c] = h
        dW[c] = (fg.omega(x + e) - fg.omega(x - e)) / (2 * h)
    cyc = dW + dW.transpose(1, 2, 0) + dW.transpose(2, 0, 1)
    res["d_omega"] = float(np.max(np.abs(cyc))) / scale_w
    tols = {"J2": tol_alg, "g_invariant": tol_alg, "omega_gJ": tol_alg, "d_omega": tol_dw}
    return CompatibilityReport(res, tols)


class CompareSummary:
    def __init__(self, points, max_rel_err, failures, records):
        self.points = points
        self.max_rel_err = max_rel_err
        self.failures = failures
        self.records = records

    def to_wire(self):
        return {"points": self.points, "maxRelErr": self.max_rel_err, "failures": self.failures}


def relative_error(fd, exact):
    return abs(fd - exact) / max(1.0, abs(exact))


def compare(g, pts, h=1e-3, tol=1e-3, fg=None):
    """Max relative error of FD Scal against the exact formula over pts."""
    if not pts:
        raise ValueError("compare needs at least one point")
    fg = fg or FloatGeometry(g)
    worst = 0.0
    failures = []
    records = []
    for pt in pts:
        try:
            pt = _as_point(fg, pt)
            fd = fd_scalar_curvature(g, pt, h, fg)
        except DomainError as exc:
            failures.append({"point": [float(v) for v in np.asarray(getattr(pt, "x", pt))], "kind": f"domain: {exc}"})
            continue
        exact = fg.scal(pt.x)
        err = relative_error(fd, exact)
        records.append((pt, fd, exact, err))
        worst = max(worst, err)
        if not err < tol:
            failures.append({"point": pt.to_wire(), "kind": "mismatch"})
    return CompareSummary(len(pts), worst, failures, records)
