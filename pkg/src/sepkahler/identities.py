"""Symmetric-function identities behind the closed-form sums, as exact checks.

Each check builds both sides as FactoredRationals over a common denominator
and compares them exactly.  The two twisted-sum checks compare modulo the span of
the image polynomials <mu, b>, which are affine in the momenta.
"""

import random
import time

from gmpy2 import mpq

from .curvature import killing_coordinates
from .errors import check_token
from .polynomial import MPoly, VarId, aux, complete_homogeneous, elementary_symmetric, fmt_rational
from .rational import FactoredRational
from .structures import build_structure, slot_delta_factored

_ZERO = mpq(0)
_ONE = mpq(1)


class IdentityResult:
    def __init__(self, name, params, holds, lhs=None, rhs=None, difference=None):
        self.name = name
        self.params = dict(params)
        self.holds = holds
        self.lhs = lhs
        self.rhs = rhs
        self.difference = difference

    def __bool__(self):
        return self.holds

    def to_wire(self):
        out = {"name": self.name, "params": {k: _wire_param(v) for k, v in self.params.items()},
               "holds": self.holds}
        if not self.holds and self.difference is not None:
            out["counterexample"] = str(self.difference)
        return out


def _wire_param(v):
    if isinstance(v, (list, tuple)):
        return [_wire_param(x) for x in v]
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    return fmt_rational(v)


def _fr(x):
    return x if isinstance(x, FactoredRational) else FactoredRational(MPoly.const(x) if not isinstance(x, MPoly) else x)


def _x(m):
    return [VarId(1, j) for j in range(1, m + 1)]


def _veronese_delta(m):
    xs = _x(m)
    out = []
    for j in range(m):
        d = FactoredRational(MPoly.const(1))
        for i in range(m):
            if i != j:
                d = d * FactoredRational.atom(MPoly.var(xs[j]) - MPoly.var(xs[i]))
        out.append(d)
    return out


def _sigma(r, xs):
    if r < 0 or r > len(xs):
        return MPoly()
    return elementary_symmetric(r, xs)


def _hat(r, xs, j):
    return _sigma(r, [x for i, x in enumerate(xs) if i != j])


def _xpow(v, n):
    if n >= 0:
        return FactoredRational(MPoly.var(v, n))
    return FactoredRational.atom(MPoly.var(v), n)


def _sum_over_slots(m, term):
    xs = _x(m)
    deltas = _veronese_delta(m)
    total = FactoredRational(MPoly())
    for j in range(m):
        total = total + term(xs, j) / deltas[j]
    return total.reduce()


def _compare(name, params, lhs, rhs):
    lhs, rhs = _fr(lhs).reduce(), _fr(rhs).reduce()
    diff = (lhs - rhs).reduce()
    return IdentityResult(name, params, diff.is_zero(), lhs, rhs, None if diff.is_zero() else diff)


# Vandermonde family

def vandermonde(m, r, s):
    lhs = _sum_over_slots(m, lambda xs, j: FactoredRational(MPoly.var(xs[j], m - s) * _hat(r - 1, xs, j)))
    rhs = mpq((-1) ** (s - 1)) if r == s else _ZERO
    return _compare("vandermonde", {"m": m, "r": r, "s": s}, lhs, rhs)


def higher_vandermonde(m, r, k):
    xs = _x(m)
    lhs = _sum_over_slots(m, lambda xs, j: FactoredRational(MPoly.var(xs[j], m + k) * _hat(r - 1, xs, j)))
    rhs = MPoly()
    for s in range(k + 1):
        rhs = rhs + complete_homogeneous(k - s, xs) * _sigma(r + s, xs) * ((-1) ** s)
    return _compare("higher_vandermonde", {"m": m, "r": r, "k": k}, lhs, rhs)


def extended_vandermonde(m, p):
    xs = _x(m)
    lhs = _sum_over_slots(m, lambda xs, j: FactoredRational(MPoly.var(xs[j], m - 1 + p)))
    return _compare("extended_vandermonde", {"m": m, "p": p}, lhs, complete_homogeneous(p, xs))


def negative_vandermonde(m, s):
    """s = 1..m for the x^{s-2} sums; s = 0 for the x^{-2} sum."""
    xs = _x(m)
    lhs = _sum_over_slots(m, lambda xs, j: _xpow(xs[j], s - 2 if s else -2))
    sm = FactoredRational.atom(_sigma(m, xs))
    sign = mpq((-1) ** (m - 1))
    if s == 0:
        rhs = FactoredRational(_sigma(m - 1, xs) * sign) / (sm * sm)
    elif s == 1:
        rhs = FactoredRational(MPoly.const(sign)) / sm
    else:
        rhs = FactoredRational(MPoly())
    return _compare("negative_vandermonde", {"m": m, "s": s}, lhs, rhs)


def _ab():
    return MPoly.var(aux(1)), MPoly.var(aux(2))


def affine_vandermonde(m, variant, s=1):
    """Sums of (a + b x_j)^e / Delta_j with symbolic a, b.

    variant: "inverse", "inverse_square", "power" (exponent m - s) or "top" (exponent m).
    """
    a, b = _ab()
    xs = _x(m)
    lines = [a + b * MPoly.var(x) for x in xs]
    prod = FactoredRational(MPoly.const(1))
    for ell in lines:
        prod = prod * FactoredRational.atom(ell)
    nb = (b * (-1)) ** (m - 1)
    if variant == "inverse":
        lhs = _sum_over_slots(m, lambda xs, j: FactoredRational.atom(lines[j], -1))
        rhs = FactoredRational(nb) / prod
    elif variant == "inverse_square":
        lhs = _sum_over_slots(m, lambda xs, j: FactoredRational.atom(lines[j], -2))
        num = MPoly()
        for i in range(m):
            t = MPoly.const(1)
            for j in range(m):
                if j != i:
                    t = t * lines[j]
            num = num + t
        rhs = FactoredRational(nb * num) / (prod * prod)
    elif variant == "power":
        lhs = _sum_over_slots(m, lambda xs, j: FactoredRational(lines[j] ** (m - s)))
        rhs = b ** (m - 1) if s == 1 else MPoly()
    elif variant == "top":
        lhs = _sum_over_slots(m, lambda xs, j: FactoredRational(lines[j] ** m))
        rhs = b ** m * _sigma(1, xs) + b ** (m - 1) * a * m
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return _compare("affine_vandermonde", {"m": m, "variant": variant, "s": s}, lhs, rhs)


# the sigma-product sums

def linear_sigma(m, r, s, l):
    xs = _x(m)
    lhs = _sum_over_slots(
        m, lambda xs, j: FactoredRational(_hat(r - 1, xs, j) * _hat(s - 1, xs, j) * MPoly.var(xs[j], m - l)))
    idx = r + s - l - 1
    if r >= l + 1 and s >= l + 1:
        rhs = _sigma(idx, xs) * ((-1) ** l)
    elif r <= l and s <= l:
        rhs = _sigma(idx, xs) * ((-1) ** (l - 1)) if idx >= 0 else MPoly()
    else:
        rhs = MPoly()
    return _compare("linear_sigma", {"m": m, "r": r, "s": s, "l": l}, lhs, rhs)


def sigma_shift(m, r, s, power):
    """Sums with x_j^{m+power}, power = 1, 2, 3."""
    xs = _x(m)
    lhs = _sum_over_slots(
        m, lambda xs, j: FactoredRational(_hat(r - 1, xs, j) * _hat(s - 1, xs, j) * MPoly.var(xs[j], m + power)))

    def sg(i):
        return _sigma(i, xs)

    if power == 1:
        rhs = sg(r) * sg(s) - sg(r + s)
    elif power == 2:
        rhs = sg(1) * sg(r) * sg(s) - sg(r + 1) * sg(s) - sg(r) * sg(s + 1) + sg(r + s + 1)
    elif power == 3:
        rhs = ((sg(1) * sg(1) - sg(2)) * sg(r) * sg(s) - sg(1) * (sg(r) * sg(s + 1) + sg(r + 1) * sg(s))
               + sg(r) * sg(s + 2) + sg(r + 2) * sg(s) + sg(r + 1) * sg(s + 1) - sg(r + s + 2))
    else:
        raise ValueError("power must be 1, 2 or 3")
    return _compare("sigma_shift", {"m": m, "r": r, "s": s, "power": power}, lhs, rhs)


def product_derivative_sum(d):
    """sum_nu prod_{q != nu} (a/b + x_q) with symbolic a, b."""
    a, b = _ab()
    xs = _x(d)
    binv = FactoredRational.atom(b, -1)
    ratio = FactoredRational(a) * binv
    lhs = FactoredRational(MPoly())
    for nu in range(d):
        t = FactoredRational(MPoly.const(1))
        for q in range(d):
            if q != nu:
                t = t * (ratio + FactoredRational(MPoly.var(xs[q])))
        lhs = lhs + t
    rhs = FactoredRational(MPoly())
    for j in range(d):
        rhs = rhs + ratio ** (d - j - 1) * FactoredRational(_sigma(j, xs) * (d - j))
    return _compare("product_derivative_sum", {"d": d}, lhs, rhs)


# twisted second sums modulo affine-linear terms

def _twisted_second_sum(fs, M, p, ups):
    """sum_q M^{m+3} / Delta_pq * d^2/dx^2 (Upsilon(x_pq) / M^{m+1}), as a polynomial."""
    m = fs.m
    total = FactoredRational(MPoly())
    for q in range(1, fs.degrees[p - 1] + 1):
        v = VarId(p, q)
        U = MPoly()
        for n, c in enumerate(ups):
            if c:
                U = U + MPoly.var(v, n) * c
        U1, U2, M1 = U.diff(v), U.diff(v, 2), M.diff(v)
        body = M * M * U2 - M * M1 * U1 * (2 * (m + 1)) + M1 * M1 * U * ((m + 1) * (m + 2))
        total = total + FactoredRational(body) / slot_delta_factored(fs, p, q)
    return total.reduce()


def _mod_affine(name, params, fs, lhs, rhs):
    lhs, rhs = _fr(lhs).reduce(), _fr(rhs).reduce()
    diff = (lhs - rhs).reduce()
    poly = diff.to_poly()
    ok = poly is not None and killing_coordinates(fs, poly) is not None
    return IdentityResult(name, params, ok, lhs, rhs, None if ok else diff)


def _psv_twist(fs, beta0, coeffs):
    """<mu, beta> = beta0 + sum_i sum_r beta_ir sigma_r(group i) and the f_i."""
    fs_f = []
    M = MPoly.const(beta0)
    for i, d in enumerate(fs.degrees, start=1):
        xs = [VarId(i, r) for r in range(1, d + 1)]
        f = MPoly()
        for r, c in enumerate(coeffs[i - 1], start=1):
            if c:
                f = f + _sigma(r, xs) * c
        fs_f.append(f)
        M = M + f
    return M, fs_f


def _shifted_f(fs, coeffs, i, shift):
    d = fs.degrees[i - 1]
    xs = [VarId(i, r) for r in range(1, d + 1)]
    f = MPoly()
    for r, c in enumerate(coeffs[i - 1], start=1):
        if c:
            f = f + _sigma(r + shift, xs) * c
    return f


def twisted_second_sum(degrees, p, beta0, coeffs, upsilon):
    """Upsilon of degree <= d_p + 1 with f_p non-constant."""
    fs = build_structure("product_sv", partition=list(degrees))
    m, d = fs.m, fs.degrees[p - 1]
    coeffs = [[mpq(c) for c in row] for row in coeffs]
    ups = [mpq(c) for c in upsilon] + [_ZERO] * (d + 2 - len(upsilon))
    if len(ups) > d + 2:
        raise ValueError("Upsilon degree exceeds d_p + 1")
    M, f = _psv_twist(fs, mpq(beta0), coeffs)
    if f[p - 1].is_zero():
        raise ValueError("f_p must be non-constant")
    lhs = _twisted_second_sum(fs, M, p, ups)
    g = ups[d + 1]
    F = sum(f, MPoly())
    fp = f[p - 1]
    rhs = (F * F * (d * (d + 1)) - F * fp * (2 * (m + 1) * (d + 1)) + fp * fp * ((m + 1) * (m + 2))) * g
    params = {"degrees": list(degrees), "p": p, "beta0": mpq(beta0), "coeffs": coeffs, "upsilon": ups}
    return _mod_affine("twisted_second_sum", params, fs, lhs, rhs)


def twisted_second_sum_top(degrees, p, beta0, coeffs, upsilon):
    """m = d_p + 1, only f_p non-constant, Upsilon of degree <= d_p + 3."""
    fs = build_structure("product_sv", partition=list(degrees))
    m, d = fs.m, fs.degrees[p - 1]
    if m != d + 1:
        raise ValueError("needs m = d_p + 1")
    coeffs = [[mpq(c) for c in row] for row in coeffs]
    ups = [mpq(c) for c in upsilon] + [_ZERO] * (d + 4 - len(upsilon))
    if len(ups) > d + 4:
        raise ValueError("Upsilon degree exceeds d_p + 3")
    M, f = _psv_twist(fs, mpq(beta0), coeffs)
    if f[p - 1].is_zero() or any(not fi.is_zero() for i, fi in enumerate(f) if i != p - 1):
        raise ValueError("exactly f_p must be non-constant")
    lhs = _twisted_second_sum(fs, M, p, ups)
    b0 = mpq(beta0)
    xs = [VarId(p, r) for r in range(1, d + 1)]
    s1 = _sigma(1, xs)
    fp = f[p - 1]
    fpp = _shifted_f(fs, coeffs, p, 1)
    g1, g2, g3 = ups[d + 1], ups[d + 2], ups[d + 3]
    rhs = (s1 * s1 * ((m + 2) * (m + 1) * b0 * b0 * g3)
           - s1 * fp * (2 * (m + 1) * b0 * g2)
           + fp * fp * (2 * g1)
           - fp * fpp * (2 * (m + 1) * g2)
           + s1 * fpp * (2 * (m + 1) * (m + 2) * b0 * g3)
           + fpp * fpp * ((m + 1) * (m + 2) * g3))
    params = {"degrees": list(degrees), "p": p, "beta0": b0, "coeffs": coeffs, "upsilon": ups}
    return _mod_affine("twisted_second_sum_top", params, fs, lhs, rhs)


IDENTITIES = {
    "vandermonde": vandermonde,
    "higher_vandermonde": higher_vandermonde,
    "extended_vandermonde": extended_vandermonde,
    "negative_vandermonde": negative_vandermonde,
    "affine_vandermonde": affine_vandermonde,
    "linear_sigma": linear_sigma,
    "sigma_shift": sigma_shift,
    "product_derivative_sum": product_derivative_sum,
    "twisted_second_sum": twisted_second_sum,
    "twisted_second_sum_top": twisted_second_sum_top,
}


def verify_identity(name, params):
    if name not in IDENTITIES:
        raise KeyError(f"unknown identity {name!r}")
    return IDENTITIES[name](**params)


# grid

def _partitions(m, max_part=None):
    if m == 0:
        yield []
        return
    for first in range(1, m + 1):
        for rest in _partitions(m - first):
            yield [first] + rest


def _rand_row(rng, d, nonzero):
    while True:
        row = [mpq(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(d)]
        if not nonzero or any(row):
            return row


def identity_grid(max_m=6, max_sigma_m=5, max_twist_m=5, max_dp=3, max_k=3, seed=0):
    """Parameter sets for the full grid."""
    rng = random.Random(seed)
    out = []
    for m in range(1, max_m + 1):
        for r in range(1, m + 1):
            for s in range(1, m + 1):
                out.append(("vandermonde", {"m": m, "r": r, "s": s}))
            for k in range(max_k + 1):
                out.append(("higher_vandermonde", {"m": m, "r": r, "k": k}))
        for p in range(max_k + 1):
            out.append(("extended_vandermonde", {"m": m, "p": p}))
        for s in range(m + 1):
            out.append(("negative_vandermonde", {"m": m, "s": s}))
        out.append(("affine_vandermonde", {"m": m, "variant": "inverse"}))
        out.append(("affine_vandermonde", {"m": m, "variant": "inverse_square"}))
        out.append(("affine_vandermonde", {"m": m, "variant": "top"}))
        for s in range(1, m + 1):
            out.append(("affine_vandermonde", {"m": m, "variant": "power", "s": s}))
    for m in range(1, max_sigma_m + 1):
        for r in range(1, m + 1):
            for s in range(1, m + 1):
                for l in range(m + 1):
                    out.append(("linear_sigma", {"m": m, "r": r, "s": s, "l": l}))
                for power in (1, 2, 3):
                    out.append(("sigma_shift", {"m": m, "r": r, "s": s, "power": power}))
    for d in range(1, 6):
        out.append(("product_derivative_sum", {"d": d}))
    for m in range(2, max_twist_m + 1):
        for part in _partitions(m):
            if len(part) < 2:
                continue
            for p, d in enumerate(part, start=1):
                if d > max_dp:
                    continue
                coeffs = [_rand_row(rng, di, i == p) for i, di in enumerate(part, start=1)]
                for n in range(d + 2):
                    ups = [_ZERO] * n + [_ONE]
                    out.append(("twisted_second_sum", {"degrees": part, "p": p, "beta0": mpq(rng.randint(-3, 3)),
                                                      "coeffs": coeffs, "upsilon": ups}))
                if m == d + 1:
                    solo = [row if i == p else [_ZERO] * di
                            for i, (row, di) in enumerate(zip(coeffs, part), start=1)]
                    for n in range(d + 4):
                        ups = [_ZERO] * n + [_ONE]
                        out.append(("twisted_second_sum_top", {"degrees": part, "p": p,
                                                              "beta0": mpq(rng.randint(-3, 3)),
                                                              "coeffs": solo, "upsilon": ups}))
    return out


class GridSummary:
    def __init__(self, results, seconds):
        self.results = results
        self.seconds = seconds

    @property
    def passed(self):
        return sum(1 for r in self.results if r.holds)

    @property
    def failed(self):
        return [r for r in self.results if not r.holds]

    @property
    def all_hold(self):
        return not self.failed

    def by_name(self):
        out = {}
        for r in self.results:
            c = out.setdefault(r.name, [0, 0])
            c[0] += 1
            c[1] += int(r.holds)
        return out

    def to_wire(self):
        return {
            "total": len(self.results),
            "passed": self.passed,
            "allHold": self.all_hold,
            "byName": {k: {"total": v[0], "passed": v[1]} for k, v in sorted(self.by_name().items())},
            "failures": [r.to_wire() for r in self.failed],
            "seconds": round(self.seconds, 3),
        }


def run_grid(token=None, **kwargs):
    start = time.perf_counter()
    results = []
    for name, params in identity_grid(**kwargs):
        check_token(token)
        results.append(verify_identity(name, params))
    return GridSummary(results, time.perf_counter() - start)
