"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is packed into a single Python int: every variable owns a
16-bit field, so multiplying monomials is integer addition.  Field
positions come from a Cantor pairing of (group, slot), which keeps the
layout independent of the order in which variables are first seen.
Group 0 is reserved for auxiliary symbolic parameters.
"""

from fractions import Fraction
from heapq import heapify, heappop, heappush
from itertools import combinations, combinations_with_replacement
from typing import NamedTuple

from gmpy2 import mpq, mpz

BITS = 16
FIELD = (1 << BITS) - 1
MAX_EXP = (1 << (BITS - 1)) - 1

_ZERO = mpq(0)
_ONE = mpq(1)


class VarId(NamedTuple):
    group: int
    slot: int

    def __str__(self):
        if self.group == 0:
            return f"p{self.slot}"
        return f"x{self.group}_{self.slot}"


def aux(slot):
    """Auxiliary parameter variable (group 0)."""
    return VarId(0, slot)


def var_index(v):
    g, s = v.group, v.slot - 1
    if g < 0 or s < 0:
        raise ValueError(f"bad variable {v!r}")
    n = g + s
    return n * (n + 1) // 2 + s


def index_var(i):
    n = int(((8 * i + 1) ** 0.5 - 1) // 2)
    while n * (n + 1) // 2 > i:
        n -= 1
    while (n + 1) * (n + 2) // 2 <= i:
        n += 1
    s = i - n * (n + 1) // 2
    return VarId(n - s, s + 1)


def var_shift(v):
    return BITS * var_index(v)


_GUARDS = [0]


def _guard(nfields):
    while len(_GUARDS) <= nfields:
        k = len(_GUARDS)
        _GUARDS.append(_GUARDS[-1] | (1 << (BITS * (k - 1) + BITS - 1)))
    return _GUARDS[nfields]


def mono_divides(a, b):
    """True when packed monomial a divides packed monomial b."""
    if a > b:
        return False
    g = _guard(b.bit_length() // BITS + 1)
    return ((b | g) - a) & g == g


def mono_decode(key):
    """Packed monomial -> list of (VarId, exponent)."""
    out = []
    i = 0
    while key:
        e = key & FIELD
        if e:
            out.append((index_var(i), e))
        key >>= BITS
        i += 1
    return out


def mono_encode(pairs):
    key = 0
    for v, e in pairs:
        if e < 0 or e > MAX_EXP:
            raise ValueError(f"exponent {e} out of range")
        key += e << var_shift(v)
    return key


def as_rational(x):
    """Coerce int, Fraction, mpq or 'p/q' string to mpq."""
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, (int, type(mpz(0)))):
        return mpq(x)
    if isinstance(x, type(_ZERO)):
        return x
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    raise TypeError(f"cannot use {type(x).__name__} as an exact rational")


def fmt_rational(q):
    q = as_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _sort_key(key):
    return tuple((v.group, v.slot, e) for v, e in mono_decode(key))


class MPoly:
    """Immutable sparse polynomial: dict packed-monomial -> mpq."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms=None):
        self.terms = terms if terms is not None else {}
        self._hash = None

    # construction
    @classmethod
    def const(cls, c):
        c = as_rational(c)
        return cls({0: c} if c else {})

    @classmethod
    def var(cls, v, power=1):
        return cls({mono_encode([(v, power)]): _ONE})

    @classmethod
    def from_terms(cls, items):
        """Build from an iterable of ({VarId: exp} or pairs, coeff)."""
        terms = {}
        for exps, c in items:
            pairs = exps.items() if isinstance(exps, dict) else exps
            k = mono_encode(pairs)
            terms[k] = terms.get(k, _ZERO) + as_rational(c)
        return cls({k: c for k, c in terms.items() if c})

    @classmethod
    def linear(cls, coeffs, const=0):
        """const + sum c_v * v."""
        terms = {}
        c0 = as_rational(const)
        if c0:
            terms[0] = c0
        for v, c in coeffs.items():
            c = as_rational(c)
            if c:
                terms[mono_encode([(v, 1)])] = c
        return cls(terms)

    # predicates
    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    def constant_value(self):
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get(0, _ZERO)

    def constant_term(self):
        return self.terms.get(0, _ZERO)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            try:
                other = MPoly.const(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, MPoly):
            return other
        return MPoly.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        if len(self.terms) < len(other.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        res = dict(a)
        for k, c in b.items():
            v = res.get(k)
            if v is None:
                res[k] = c
            else:
                v = v + c
                if v:
                    res[k] = v
                else:
                    del res[k]
        return MPoly(res)

    __radd__ = __add__

    def __neg__(self):
        return MPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c):
        c = as_rational(c)
        if not c:
            return MPoly()
        return MPoly({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        a, b = self.terms, other.terms
        if not a or not b:
            return MPoly()
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (m2, c2), = b.items()
            return MPoly({m1 + m2: c1 * c2 for m1, c1 in a.items()})
        res = {}
        get = res.get
        for m2, c2 in b.items():
            for m1, c1 in a.items():
                k = m1 + m2
                v = get(k)
                res[k] = c1 * c2 if v is None else v + c1 * c2
        return MPoly({k: c for k, c in res.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial power needs a non-negative integer")
        result = MPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mul_monomial(self, key, c=_ONE):
        return MPoly({k + key: v * c for k, v in self.terms.items()})

    # structure
    def variables(self):
        acc = 0
        for k in self.terms:
            acc |= k
        out = []
        i = 0
        while acc:
            if acc & FIELD:
                out.append(index_var(i))
            acc >>= BITS
            i += 1
        return sorted(out)

    def depends_on(self, v):
        sh = var_shift(v)
        return any((k >> sh) & FIELD for k in self.terms)

    def degree(self, v=None):
        """Degree in v, or total degree when v is None; -1 for zero."""
        if not self.terms:
            return -1
        if v is None:
            return max(sum(e for _, e in mono_decode(k)) for k in self.terms)
        sh = var_shift(v)
        return max((k >> sh) & FIELD for k in self.terms)

    def coeffs_in(self, v):
        """Dict power -> MPoly coefficient with respect to v."""
        sh = var_shift(v)
        out = {}
        for k, c in self.terms.items():
            e = (k >> sh) & FIELD
            out.setdefault(e, {})[k - (e << sh)] = c
        return {e: MPoly(t) for e, t in out.items()}

    def leading(self):
        k = max(self.terms)
        return k, self.terms[k]

    def monomials(self):
        """Canonically ordered list of ([(VarId, exp)...], coeff)."""
        keys = sorted(self.terms, key=_sort_key)
        return [(mono_decode(k), self.terms[k]) for k in keys]

    # calculus and evaluation
    def diff(self, v, times=1):
        p = self
        sh = var_shift(v)
        unit = 1 << sh
        for _ in range(times):
            res = {}
            for k, c in p.terms.items():
                e = (k >> sh) & FIELD
                if e:
                    res[k - unit] = c * e
            p = MPoly(res)
        return p

    def evaluate(self, point):
        """Exact value; point maps VarId -> rational and must cover all variables."""
        vals = {}
        for v in self.variables():
            if v not in point:
                raise KeyError(f"no value for {v}")
            vals[var_index(v)] = as_rational(point[v])
        total = _ZERO
        for k, c in self.terms.items():
            t = c
            i = 0
            while k:
                e = k & FIELD
                if e:
                    t = t * vals[i] ** e
                k >>= BITS
                i += 1
            total += t
        return total

    def substitute(self, mapping):
        """Replace variables by polynomials (or rationals), all at once."""
        if not self.terms:
            return MPoly()
        repl = {v: (q if isinstance(q, MPoly) else MPoly.const(q)) for v, q in mapping.items()}
        powers = {}

        def power(v, e):
            key = (v, e)
            if key not in powers:
                powers[key] = repl[v] ** e
            return powers[key]

        acc = {}
        for key, c in self.terms.items():
            kept = []
            term = MPoly.const(c)
            for v, e in mono_decode(key):
                if v in repl:
                    term = term * power(v, e)
                else:
                    kept.append((v, e))
            shift = mono_encode(kept)
            for k, t in term.terms.items():
                k += shift
                acc[k] = acc.get(k, _ZERO) + t
        return MPoly({k: t for k, t in acc.items() if t})

    def exact_div(self, other):
        """Quotient if other divides self exactly, else None."""
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        if not self.terms:
            return MPoly()
        lm, lc = other.leading()
        if len(other.terms) == 1:
            out = {}
            for k, c in self.terms.items():
                if not mono_divides(lm, k):
                    return None
                out[k - lm] = c / lc
            return MPoly(out)
        rem = dict(self.terms)
        heap = [-k for k in rem]
        heapify(heap)
        quot = {}
        gterms = list(other.terms.items())
        while heap:
            k = -heappop(heap)
            c = rem.get(k)
            if c is None:
                continue
            if not mono_divides(lm, k):
                return None
            qm = k - lm
            qc = c / lc
            quot[qm] = qc
            for gm, gc in gterms:
                key = qm + gm
                old = rem.get(key)
                if old is None:
                    rem[key] = -qc * gc
                    heappush(heap, -key)
                else:
                    val = old - qc * gc
                    if val:
                        rem[key] = val
                    else:
                        del rem[key]
        return MPoly(quot)

    def content_normalized(self):
        """(scalar, monic) with the coefficient at the largest monomial equal to 1."""
        if not self.terms:
            raise ValueError("zero polynomial has no normal form")
        _, lc = self.leading()
        return lc, self.scale(1 / lc)

    # display and wire format
    def __repr__(self):
        return f"MPoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for pairs, c in self.monomials():
            mono = "*".join(str(v) if e == 1 else f"{v}^{e}" for v, e in pairs)
            cs = fmt_rational(c)
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_wire(self):
        return [
            {"exponents": [[v.group, v.slot, e] for v, e in pairs], "coeff": fmt_rational(c)}
            for pairs, c in self.monomials()
        ]

    @classmethod
    def from_wire(cls, data):
        return cls.from_terms(
            ([(VarId(g, s), e) for g, s, e in t["exponents"]], t["coeff"]) for t in data
        )


def poly_arith(op, a, b):
    """Dispatch add, mul or pow; for pow, b is an int or a constant MPoly."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "pow":
        n = b
        if isinstance(b, MPoly):
            n = b.constant_value()
            if n.denominator != 1:
                raise ValueError("non-integer exponent")
            n = int(n)
        if n < 0:
            raise ValueError("negative exponent")
        return a ** int(n)
    raise ValueError(f"unknown op {op!r}")


def group_vars(group, count):
    return [VarId(group, s) for s in range(1, count + 1)]


def elementary_symmetric(r, variables):
    """sigma_r of the given variables; zero when r exceeds their number."""
    if r < 0:
        raise ValueError("negative index for elementary symmetric polynomial")
    variables = list(variables)
    if r > len(variables):
        return MPoly()
    shifts = [1 << var_shift(v) for v in variables]
    return MPoly({sum(c): _ONE for c in combinations(shifts, r)})


def complete_homogeneous(p, variables):
    """h_p of the given variables."""
    if p < 0:
        raise ValueError("negative index for complete homogeneous polynomial")
    variables = list(variables)
    if not variables:
        return MPoly.const(1) if p == 0 else MPoly()
    shifts = [1 << var_shift(v) for v in variables]
    return MPoly({sum(c): _ONE for c in combinations_with_replacement(shifts, p)})


def power_sum(p, variables):
    return sum((MPoly.var(v, p) for v in variables), MPoly())
