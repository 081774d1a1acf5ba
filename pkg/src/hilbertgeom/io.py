"""JSON body specifications.

A body file is a JSON object with a ``type`` tag and the variant's fields::

    {"type": "ellipse", "semi_axes": [2, 1], "center": [0, 0], "angle": 0.3,
     "basepoint": [0.5, 0], "transform": {"matrix": [[1, 0.2], [0, 1]],
                                           "translation": [1, 0]}}

Types: ``ellipse`` (``semi_axes``/``angle`` or ``shape``), ``ellipsoid``
(``shape``), ``pball`` (``p``, ``semi_axes``), ``superellipse``
(``exponents``, ``semi_axes``), ``polygon`` (``vertices``) and
``implicit-poly`` (``terms`` as ``[coefficient, [exponents...]]`` pairs and
``interior_point``).  ``center`` is optional everywhere it applies.
``transform`` is applied after construction; ``basepoint`` is given in the
final (transformed) coordinates and defaults to the body's center.
"""
import hashlib
import json

import numpy as np

from . import body as B
from .errors import InvalidInputError

BODY_TYPES = ("ellipse", "ellipsoid", "pball", "superellipse", "polygon", "implicit-poly")


def _get(spec, key, default=None, required=False):
    if key in spec:
        return spec[key]
    if required:
        raise InvalidInputError(f"body spec of type {spec.get('type')!r} needs field {key!r}")
    return default


def body_from_spec(spec):
    """Build ``(ConvexBody, basepoint or None)`` from a parsed spec mapping."""
    if not isinstance(spec, dict):
        raise InvalidInputError("body spec must be a JSON object")
    kind = spec.get("type")
    try:
        if kind == "ellipse":
            if "shape" in spec:
                body = B.ellipsoid(spec["shape"], _get(spec, "center"))
                if body.dim != 2:
                    raise InvalidInputError("ellipse shape must be 2x2")
            else:
                body = B.ellipse(_get(spec, "semi_axes", (1.0, 1.0)), _get(spec, "center"),
                                 float(_get(spec, "angle", 0.0)))
        elif kind == "ellipsoid":
            body = B.ellipsoid(_get(spec, "shape", required=True), _get(spec, "center"))
        elif kind == "pball":
            body = B.p_ball(_get(spec, "p", required=True), _get(spec, "semi_axes", (1.0, 1.0)),
                            _get(spec, "center"))
        elif kind == "superellipse":
            body = B.superellipse(_get(spec, "exponents", required=True),
                                  _get(spec, "semi_axes", (1.0, 1.0)), _get(spec, "center"))
        elif kind == "polygon":
            body = B.polygon(_get(spec, "vertices", required=True))
        elif kind == "implicit-poly":
            body = B.implicit_poly(_get(spec, "terms", required=True),
                                   _get(spec, "interior_point", required=True))
        else:
            raise InvalidInputError(f"unknown body type {kind!r}; expected one of {', '.join(BODY_TYPES)}")
        tf = spec.get("transform")
        if tf is not None:
            if not isinstance(tf, dict):
                raise InvalidInputError("transform must be an object with matrix and translation")
            L = np.asarray(tf.get("matrix", np.eye(body.dim)), dtype=np.float64)
            t = np.asarray(tf.get("translation", np.zeros(body.dim)), dtype=np.float64)
            body = body.transformed(L, t)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed {kind!r} body spec: {exc}") from None
    bp = spec.get("basepoint")
    return body, (None if bp is None else B._vec(bp, "basepoint"))


def load_body(path, basepoint=None):
    """Read a body file and return the :class:`BasedBody` it describes.

    ``basepoint`` overrides the file's own basepoint.
    """
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read body file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"body file {path} is not valid JSON: {exc}") from None
    body, bp = body_from_spec(spec)
    return B.based(body, basepoint if basepoint is not None else bp)


def spec_of(obj):
    """Spec mapping of a body or based body; implicit callables have none."""
    body = obj.body if isinstance(obj, B.BasedBody) else obj
    if body.spec is None:
        raise InvalidInputError("this body has no serialisable spec")
    spec = dict(body.spec)
    if isinstance(obj, B.BasedBody):
        spec["basepoint"] = obj.basepoint.tolist()
    return spec


def dump_body(obj, path):
    with open(path, "w") as fh:
        json.dump(spec_of(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def digest(payload):
    """Stable SHA-256 of a JSON-serialisable payload."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()
