"""Rational functions: factored multivariate quotients and univariate profiles.

FactoredRational keeps a polynomial numerator times a product of tracked
atoms raised to integer powers.  Negative powers are denominator factors.
Cancellation is by trial division against the tracked atoms only.

UniRational is a univariate quotient whose denominator is a product of
linear factors a + b*x, which is the shape of every profile function.
"""

from math import gcd, lcm

from gmpy2 import mpq

from .errors import DomainError, LogTermError
from .polynomial import MPoly, VarId, as_rational, fmt_rational

_ZERO = mpq(0)
_ONE = mpq(1)


class FactoredRational:
    """num * prod(atom ** e) with atoms normalized to leading coefficient 1."""

    __slots__ = ("num", "factors")

    def __init__(self, num, factors=None):
        if not isinstance(num, MPoly):
            num = MPoly.const(num)
        self.num = num
        self.factors = {} if num.is_zero() else {f: e for f, e in (factors or {}).items() if e}

    @classmethod
    def atom(cls, poly, exp=1):
        """poly ** exp with poly tracked as a factor."""
        if poly.is_zero():
            if exp < 0:
                raise ZeroDivisionError("zero denominator")
            return cls(MPoly())
        lc, monic = poly.content_normalized()
        if monic.is_constant():
            return cls(MPoly.const(lc ** exp))
        return cls(MPoly.const(lc ** exp), {monic: exp})

    @classmethod
    def coerce(cls, x):
        if isinstance(x, FactoredRational):
            return x
        if isinstance(x, MPoly):
            return cls(x)
        if isinstance(x, UniRational):
            return x.to_factored()
        return cls(MPoly.const(x))

    def is_zero(self):
        return self.num.is_zero()

    def denominator_factors(self):
        return {f: -e for f, e in self.factors.items() if e < 0}

    # arithmetic
    def __mul__(self, other):
        if not isinstance(other, FactoredRational):
            if isinstance(other, (MPoly, UniRational)):
                other = FactoredRational.coerce(other)
            else:
                return FactoredRational(self.num.scale(as_rational(other)), self.factors)
        fac = dict(self.factors)
        for f, e in other.factors.items():
            fac[f] = fac.get(f, 0) + e
        return FactoredRational(self.num * other.num, fac)

    __rmul__ = __mul__

    def inverse(self):
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero")
        if self.num.is_constant():
            base = FactoredRational(MPoly.const(1 / self.num.constant_value()))
        else:
            base = FactoredRational.atom(self.num, -1)
        return base * FactoredRational(MPoly.const(1), {f: -e for f, e in self.factors.items()})

    def __truediv__(self, other):
        return self * FactoredRational.coerce(other).inverse()

    def __rtruediv__(self, other):
        return FactoredRational.coerce(other) * self.inverse()

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        return FactoredRational(self.num ** n, {f: e * n for f, e in self.factors.items()})

    def __neg__(self):
        return FactoredRational(-self.num, self.factors)

    def __add__(self, other):
        other = FactoredRational.coerce(other)
        if self.num.is_zero():
            return other
        if other.num.is_zero():
            return self
        n1, n2 = self.num, other.num
        common = {}
        for f in set(self.factors) | set(other.factors):
            e1 = self.factors.get(f, 0)
            e2 = other.factors.get(f, 0)
            e = min(e1, e2)
            if e:
                common[f] = e
            if e1 > e:
                n1 = n1 * f ** (e1 - e)
            if e2 > e:
                n2 = n2 * f ** (e2 - e)
        return FactoredRational(n1 + n2, common)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-FactoredRational.coerce(other))

    def __rsub__(self, other):
        return FactoredRational.coerce(other) - self

    # calculus
    def diff(self, v):
        dep = [(f, e) for f, e in self.factors.items() if f.depends_on(v)]
        if not dep:
            return FactoredRational(self.num.diff(v), self.factors)
        prod_dep = MPoly.const(1)
        for f, _ in dep:
            prod_dep = prod_dep * f
        bracket = self.num.diff(v) * prod_dep
        for idx, (f, e) in enumerate(dep):
            rest = MPoly.const(e)
            for j, (g, _) in enumerate(dep):
                if j != idx:
                    rest = rest * g
            bracket = bracket + self.num * f.diff(v) * rest
        fac = dict(self.factors)
        for f, e in dep:
            fac[f] = e - 1
        return FactoredRational(bracket, fac)

    # simplification
    def reduce(self, token=None):
        """Fold numerator atoms in, then cancel denominator atoms by trial division."""
        num = self.num
        den = {}
        for f, e in self.factors.items():
            if e > 0:
                num = num * f ** e
            else:
                den[f] = e
        if num.is_zero():
            return FactoredRational(MPoly())
        for f in sorted(den, key=lambda p: len(p.terms)):
            e = den[f]
            while e < 0:
                if token is not None:
                    token.check()
                q = num.exact_div(f)
                if q is None:
                    break
                num = q
                e += 1
            den[f] = e
        return FactoredRational(num, den)

    def is_polynomial(self):
        return all(e > 0 for e in self.reduce().factors.values())

    def to_poly(self):
        """Expanded polynomial, or None if a denominator atom survives reduction."""
        r = self.reduce()
        if r.factors:
            return None
        return r.num

    def numerator_poly(self):
        """Numerator with positive atoms expanded."""
        num = self.num
        for f, e in self.factors.items():
            if e > 0:
                num = num * f ** e
        return num

    def denominator_poly(self):
        den = MPoly.const(1)
        for f, e in self.factors.items():
            if e < 0:
                den = den * f ** (-e)
        return den

    def equals(self, other):
        return (self - FactoredRational.coerce(other)).num.is_zero()

    def variables(self):
        vs = set(self.num.variables())
        for f in self.factors:
            vs.update(f.variables())
        return sorted(vs)

    def evaluate(self, point):
        if self.num.is_zero():
            return _ZERO
        vals = {f: f.evaluate(point) for f in self.factors}
        for f, e in self.factors.items():
            if e < 0 and vals[f] == 0:
                raise DomainError(f"denominator factor {f} vanishes", factor=f)
        val = self.num.evaluate(point)
        for f, e in self.factors.items():
            val = val * vals[f] ** e
        return val

    def substitute(self, mapping):
        out = FactoredRational(self.num.substitute(mapping))
        for f, e in self.factors.items():
            out = out * FactoredRational.atom(f.substitute(mapping), e)
        return out

    def __repr__(self):
        return f"FactoredRational({self})"

    def __str__(self):
        parts = [f"({self.num})"]
        for f, e in sorted(self.factors.items(), key=lambda t: str(t[0])):
            parts.append(f"({f})^{e}")
        return "*".join(parts)

    def to_wire(self):
        return {
            "numerator": self.num.to_wire(),
            "factors": [
                {"poly": f.to_wire(), "exp": e}
                for f, e in sorted(self.factors.items(), key=lambda t: str(t[0]))
            ],
        }

    @classmethod
    def from_wire(cls, data):
        out = cls(MPoly.from_wire(data["numerator"]))
        for item in data.get("factors", []):
            out = out * cls.atom(MPoly.from_wire(item["poly"]), int(item["exp"]))
        return out


def differentiate(p, v):
    if isinstance(p, (MPoly, FactoredRational, UniRational)):
        return p.diff(v)
    raise TypeError(f"cannot differentiate {type(p).__name__}")


def evaluate(p, point):
    return p.evaluate(point)


def reduce_factored(f, token=None):
    return f.reduce(token)


# univariate dense polynomials as lists of mpq, low degree first

def ptrim(p):
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def padd(p, q):
    n = max(len(p), len(q))
    return ptrim([(p[i] if i < len(p) else _ZERO) + (q[i] if i < len(q) else _ZERO) for i in range(n)])


def pscale(p, c):
    return ptrim([x * c for x in p])


def psub(p, q):
    return padd(p, pscale(q, -1))


def pmul(p, q):
    if not p or not q:
        return []
    out = [_ZERO] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return ptrim(out)


def ppow(p, n):
    out = [_ONE]
    for _ in range(n):
        out = pmul(out, p)
    return out


def pdivmod(p, q):
    q = ptrim(q)
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(ptrim(p))
    quot = [_ZERO] * max(len(r) - len(q) + 1, 0)
    lc = q[-1]
    while len(r) >= len(q) and r:
        k = len(r) - len(q)
        c = r[-1] / lc
        quot[k] = c
        for i, b in enumerate(q):
            r[k + i] -= c * b
        r = ptrim(r)
    return ptrim(quot), r


def peval(p, x):
    acc = _ZERO if not isinstance(x, float) else 0.0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def pderiv(p):
    return ptrim([p[i] * i for i in range(1, len(p))])


def pcompose_linear(p, a, b):
    """p(a + b*t) as a polynomial in t."""
    out = []
    lin = [as_rational(a), as_rational(b)]
    for c in reversed(p):
        out = padd(pmul(out, lin), [c])
    return out


def normalize_linear(a, b):
    """(a, b) -> ((a', b') coprime integers, first nonzero positive), scale s with a+bx = s(a'+b'x)."""
    a, b = as_rational(a), as_rational(b)
    if not a and not b:
        raise ValueError("zero linear factor")
    den = lcm(int(a.denominator), int(b.denominator))
    ai, bi = int(a * den), int(b * den)
    g = gcd(ai, bi)
    ai, bi = ai // g, bi // g
    sign = 1 if (ai > 0 or (ai == 0 and bi > 0)) else -1
    ai, bi = sign * ai, sign * bi
    scale = mpq(sign * g, den)
    return (ai, bi), scale


class UniRational:
    """N(x) / prod (a + b x)^j in one variable; factors kept in lowest terms."""

    __slots__ = ("var", "num", "den")

    def __init__(self, var, num, den=None):
        self.var = var
        num = ptrim([as_rational(c) for c in num])
        merged = {}
        for (a, b), j in (den.items() if isinstance(den, dict) else (den or [])):
            if j == 0:
                continue
            if j < 0:
                raise ValueError("factor multiplicity must be positive")
            key, s = normalize_linear(a, b)
            num = pscale(num, s ** (-j))
            if key[1] == 0:
                num = pscale(num, mpq(1, key[0] ** j))
                continue
            merged[key] = merged.get(key, 0) + j
        if not num:
            merged = {}
        for key in list(merged):
            a, b = key
            root = mpq(-a, b)
            while merged[key] and num and peval(num, root) == 0:
                num, _ = pdivmod(num, [mpq(a), mpq(b)])
                merged[key] -= 1
            if not merged[key]:
                del merged[key]
        self.num = num
        self.den = tuple(sorted(merged.items()))

    # constructors
    @classmethod
    def poly(cls, var, coeffs):
        return cls(var, coeffs)

    @classmethod
    def const(cls, var, c):
        return cls(var, [as_rational(c)])

    @classmethod
    def linear_power(cls, var, a, b, n):
        """(a + b x)^n for any integer n."""
        if n >= 0:
            return cls(var, ppow([as_rational(a), as_rational(b)], n))
        return cls(var, [_ONE], {(a, b): -n})

    def is_zero(self):
        return not self.num

    def is_polynomial(self):
        return not self.den

    def den_dict(self):
        return dict(self.den)

    def den_poly(self):
        out = [_ONE]
        for (a, b), j in self.den:
            out = pmul(out, ppow([mpq(a), mpq(b)], j))
        return out

    def degree(self):
        """Numerator degree (-1 for zero)."""
        return len(self.num) - 1

    def _check(self, other):
        if isinstance(other, UniRational):
            if other.var != self.var and not (other.is_constant() or self.is_constant()):
                raise ValueError("variables differ")
            return other
        return UniRational(self.var, [as_rational(other)])

    def is_constant(self):
        return not self.den and len(self.num) <= 1

    def __add__(self, other):
        other = self._check(other)
        var = self.var if not self.is_constant() else other.var
        d1, d2 = dict(self.den), dict(other.den)
        full = {k: max(d1.get(k, 0), d2.get(k, 0)) for k in set(d1) | set(d2)}
        n1, n2 = self.num, other.num
        for k, j in full.items():
            lin = [mpq(k[0]), mpq(k[1])]
            if j > d1.get(k, 0):
                n1 = pmul(n1, ppow(lin, j - d1.get(k, 0)))
            if j > d2.get(k, 0):
                n2 = pmul(n2, ppow(lin, j - d2.get(k, 0)))
        return UniRational(var, padd(n1, n2), full)

    __radd__ = __add__

    def __neg__(self):
        return UniRational(self.var, pscale(self.num, -1), dict(self.den))

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if not isinstance(other, UniRational):
            return UniRational(self.var, pscale(self.num, as_rational(other)), dict(self.den))
        other = self._check(other)
        var = self.var if not self.is_constant() else other.var
        d = dict(self.den)
        for k, j in other.den:
            d[k] = d.get(k, 0) + j
        return UniRational(var, pmul(self.num, other.num), d)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power of a profile")
        out = UniRational(self.var, [_ONE])
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, UniRational):
            try:
                other = self._check(other)
            except (TypeError, ValueError):
                return NotImplemented
        same_var = self.var == other.var or (self.is_constant() and other.is_constant())
        return same_var and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.var, tuple(self.num), self.den))

    def with_var(self, var):
        return UniRational(var, self.num, dict(self.den))

    def diff(self, v=None):
        if v is not None and v != self.var:
            return UniRational(self.var, [])
        # (N/D)' with D = prod f^j: N'/D - N * sum j b / f / D
        out = UniRational(self.var, pderiv(self.num), dict(self.den))
        for (a, b), j in self.den:
            d = dict(self.den)
            d[(a, b)] = j + 1
            out = out + UniRational(self.var, pscale(self.num, mpq(-j * b)), d)
        return out

    def evaluate(self, x):
        if isinstance(x, dict):
            x = x[self.var]
        x = as_rational(x)
        den = _ONE
        for (a, b), j in self.den:
            f = a + b * x
            if f == 0:
                raise DomainError(f"profile factor {a}+{b}*{self.var} vanishes", factor=(a, b))
            den *= f ** j
        return peval(self.num, x) / den

    def numerator_poly(self):
        return _lift(self.num, self.var)

    def to_factored(self):
        out = FactoredRational(_lift(self.num, self.var))
        for (a, b), j in self.den:
            out = out * FactoredRational.atom(MPoly.linear({self.var: b}, a), -j)
        return out

    def to_mpoly(self):
        if self.den:
            raise ValueError("profile is not a polynomial")
        return _lift(self.num, self.var)

    def moebius(self, a, b, c, d, weight):
        """f((b + d y)/(a + c y)) * (a + c y)^weight in the same variable."""
        a, b, c, d = (as_rational(t) for t in (a, b, c, d))
        deg = max(len(self.num) - 1, 0)
        p = []
        for k, nk in enumerate(self.num):
            if nk:
                term = pmul(ppow([b, d], k), ppow([a, c], deg - k))
                p = padd(p, pscale(term, nk))
        den = {}
        shift = weight - deg
        for (al, be), j in self.den:
            key = (al * a + be * b, al * c + be * d)
            den[key] = den.get(key, 0) + j
            shift += j
        if shift >= 0:
            p = pmul(p, ppow([a, c], shift))
        else:
            den[(a, c)] = den.get((a, c), 0) - shift
        return _from_rational_den(self.var, p, den)

    def __repr__(self):
        return f"UniRational({self})"

    def __str__(self):
        n = " + ".join(f"{fmt_rational(c)}*x^{i}" for i, c in enumerate(self.num) if c) or "0"
        if not self.den:
            return f"[{self.var}] {n}"
        d = "*".join(f"({a}+{b}x)^{j}" for (a, b), j in self.den)
        return f"[{self.var}] ({n})/({d})"

    def to_wire(self):
        return {
            "var": [self.var.group, self.var.slot],
            "num": [fmt_rational(c) for c in self.num],
            "den": [{"factor": [fmt_rational(a), fmt_rational(b)], "mult": j} for (a, b), j in self.den],
        }

    @classmethod
    def from_wire(cls, data, var=None):
        if var is None:
            var = VarId(*data["var"])
        den = {}
        for item in data.get("den", []):
            a, b = (as_rational(t) for t in item["factor"])
            den[(a, b)] = den.get((a, b), 0) + int(item["mult"])
        return cls(var, [as_rational(c) for c in data["num"]], den)


def _from_rational_den(var, num, den):
    """Build a UniRational from rational (a, b) factor keys."""
    return UniRational(var, num, {k: j for k, j in den.items() if j})


def _lift(coeffs, var):
    return MPoly.from_terms(((([(var, i)] if i else []), c) for i, c in enumerate(coeffs) if c))


class PartialFractions:
    """f = poly + sum_k c_k / (a_k + b_k x)^{j_k}."""

    def __init__(self, var, poly, terms):
        self.var = var
        self.poly = ptrim(poly)
        self.terms = terms

    def recombine(self):
        out = UniRational(self.var, self.poly)
        for (a, b), j, c in self.terms:
            out = out + UniRational(self.var, [c], {(a, b): j})
        return out

    def coefficient(self, factor, j):
        for f, jj, c in self.terms:
            if f == factor and jj == j:
                return c
        return _ZERO

    def to_wire(self):
        return {
            "poly": [fmt_rational(c) for c in self.poly],
            "terms": [
                {"factor": [int(a), int(b)], "mult": j, "coeff": fmt_rational(c)}
                for (a, b), j, c in self.terms
            ],
        }


def _series_div(num, den, n):
    """First n Taylor coefficients of num/den at 0 (den(0) != 0)."""
    num = list(num) + [_ZERO] * n
    out = []
    inv = 1 / den[0]
    for k in range(n):
        c = num[k]
        for i in range(1, min(k, len(den) - 1) + 1):
            c -= den[i] * out[k - i]
        out.append(c * inv)
    return out


def partial_fraction(f):
    """Decompose a UniRational into polynomial part and simple fractions."""
    D = f.den_poly()
    poly, rem = pdivmod(f.num, D)
    terms = []
    for (a, b), n in f.den:
        others = [_ONE]
        for (a2, b2), j2 in f.den:
            if (a2, b2) != (a, b):
                others = pmul(others, ppow([mpq(a2), mpq(b2)], j2))
        # x = (t - a) / b
        shift = (mpq(-a, b), mpq(1, b))
        rt = pcompose_linear(rem, *shift)
        qt = pcompose_linear(others, *shift)
        ser = _series_div(rt, qt, n)
        for j in range(n, 0, -1):
            c = ser[n - j]
            if c:
                terms.append(((a, b), j, c))
    terms.sort(key=lambda t: (t[0], t[1]))
    return PartialFractions(f.var, poly, terms)


def integrate_poly(p):
    return ptrim([_ZERO] + [c / (i + 1) for i, c in enumerate(p)])


def double_integral(f):
    """Particular second antiderivative with zero linear part; rejects log terms."""
    pf = partial_fraction(f)
    out = UniRational(f.var, integrate_poly(integrate_poly(pf.poly)))
    for (a, b), j, c in pf.terms:
        if j <= 2:
            raise LogTermError(f"1/({a}+{b}x)^{j} term has no rational double integral")
        coeff = c / (mpq(b) ** 2 * (j - 1) * (j - 2))
        out = out + UniRational(f.var, [coeff], {(a, b): j - 2})
    return out
