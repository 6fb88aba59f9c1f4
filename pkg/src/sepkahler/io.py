"""Geometry-spec files: parsing, canonical serialization and text rendering."""

import json

from .curvature import GeometrySpec
from .errors import ParseError
from .polynomial import VarId, as_rational
from .rational import UniRational
from .structures import HTensor, TwistElement, structure_from_wire


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc


def _structure_part(data):
    return data["structure"] if "structure" in data else data


def parse_structure(data):
    try:
        return structure_from_wire(_structure_part(data))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed structure: missing or bad field {exc}") from exc


def parse_beta(fs, data):
    if "beta" not in data:
        return None
    raw = data["beta"]
    try:
        if isinstance(raw, dict) and "coeffs" in raw:
            tensor = HTensor.from_wire(fs.degrees, raw)
        else:
            raise ParseError("beta needs a coeffs list")
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed beta: {exc}") from exc
    return TwistElement(fs, tensor)


def parse_profiles(fs, data):
    if "profiles" not in data:
        return None
    raw = data["profiles"]
    slots = fs.partition.all_vars()
    out = {}
    try:
        if isinstance(raw, list) and raw and isinstance(raw[0], dict):
            for item in raw:
                v = VarId(int(item["group"]), int(item["slot"]))
                out[v] = UniRational.from_wire({"num": item["num"], "den": item.get("den", [])}, var=v)
        elif isinstance(raw, list):
            if len(raw) != len(slots):
                raise ParseError(f"expected {len(slots)} profiles, got {len(raw)}")
            for v, coeffs in zip(slots, raw):
                out[v] = UniRational(v, [as_rational(c) for c in coeffs])
        else:
            raise ParseError("profiles must be a list")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed profiles: {exc}") from exc
    missing = [v for v in slots if v not in out]
    if missing:
        raise ParseError(f"missing profile for {missing[0]}")
    return out


def parse_geometry(data):
    """Structure, twist element and optional profiles; returns (fs, beta, GeometrySpec or None)."""
    fs = parse_structure(data)
    beta = parse_beta(fs, data)
    prof = parse_profiles(fs, data)
    g = None
    if beta is not None and prof is not None:
        g = GeometrySpec(fs, beta, prof, formal=bool(data.get("formal", False)))
    return fs, beta, g


def parse_maps(raw):
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"maps: invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, list):
        raise ParseError("maps must be a list of 2x2 matrices")
    return raw


def canonical(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def render_text(obj, indent=0):
    """Plain key: value rendering of a report."""
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list)) and val:
                lines.append(f"{pad}{key}:")
                lines.append(render_text(val, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar(val)}")
    elif isinstance(obj, list):
        for item in obj:
            if isinstance(item, (dict, list)):
                lines.append(f"{pad}-")
                lines.append(render_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(item)}")
    else:
        lines.append(f"{pad}{_scalar(obj)}")
    return "\n".join(lines)


def _scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (dict, list)):
        return "{}" if isinstance(v, dict) else "[]"
    return str(v)
