"""Shared builders for the test suite."""

from sepkahler.curvature import GeometrySpec
from sepkahler.polynomial import VarId
from sepkahler.rational import UniRational
from sepkahler.structures import HTensor, TwistElement, build_structure


def x(group, slot=1):
    return VarId(group, slot)


def twist(fs, coeffs):
    return TwistElement(fs, HTensor(fs.degrees, coeffs))


def untwisted(fs):
    return TwistElement(fs, fs.untwisted())


def geometry(fs, beta, coeff_lists, formal=False):
    """GeometrySpec from one polynomial coefficient list per slot, in canonical slot order."""
    slots = fs.partition.all_vars()
    prof = {v: UniRational(v, c) for v, c in zip(slots, coeff_lists)}
    return GeometrySpec(fs, beta, prof, formal=formal)


def veronese(m):
    return build_structure("veronese", m=m)


def segre(m):
    return build_structure("segre", m=m)


def product_sv(*degrees):
    return build_structure("product_sv", partition=list(degrees))


def two_point(*degrees, pi=(1, 1)):
    return build_structure("two_point", partition=list(degrees), pi=pi)
