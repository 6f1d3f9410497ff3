"""Datum files: a small canonical JSON format.

    {"entries": [{"B": [[0, 1]], "p": "2/3"}, ...], "format_version": 1, "n": 2}

Keys are sorted, matrix entries are written with 17 significant digits and
exponents as exact ``"a/b"`` strings, so serialize -> parse -> serialize is
byte-identical.
"""

from __future__ import annotations

import json
import sys
from fractions import Fraction

import numpy as np

from .datum import BLDatum, as_exponent
from .matcore import ValidationError, as_matrix

FORMAT_VERSION = 1


def _num(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # drop the sign of -0.0
    return format(x, ".17g")


def _frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _matrix(B) -> str:
    return "[" + ", ".join("[" + ", ".join(_num(x) for x in row) + "]" for row in B) + "]"


def dumps_datum(d: BLDatum) -> str:
    entries = ", ".join(f'{{"B": {_matrix(B)}, "p": {json.dumps(_frac(q))}}}'
                        for B, q in zip(d.maps, d.exponents))
    return f'{{"entries": [{entries}], "format_version": {FORMAT_VERSION}, "n": {d.n}}}\n'


def loads_datum(text: str) -> BLDatum:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not valid JSON: {exc}") from exc
    return datum_from_doc(doc)


def datum_from_doc(doc) -> BLDatum:
    if not isinstance(doc, dict):
        raise ValidationError("datum document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    n = doc.get("n")
    if not isinstance(n, int) or n < 1:
        raise ValidationError("'n' must be a positive integer")
    entries = doc.get("entries")
    if not isinstance(entries, list) or not entries:
        raise ValidationError("'entries' must be a nonempty list")
    maps, ps = [], []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or "B" not in e or "p" not in e:
            raise ValidationError(f"entry {i} needs keys 'B' and 'p'")
        p = e["p"]
        if isinstance(p, bool) or not isinstance(p, (str, int, float)):
            raise ValidationError(f"entry {i}: exponent must be a number or an 'a/b' string")
        B = as_matrix(e["B"], f"entry {i} map")
        if B.shape[1] != n:
            raise ValidationError(f"entry {i}: map has {B.shape[1]} columns, expected n = {n}")
        maps.append(B)
        ps.append(as_exponent(p))
    return BLDatum(tuple(maps), tuple(ps))


def datum_to_doc(d: BLDatum) -> dict:
    return json.loads(dumps_datum(d))


def read_datum(path) -> BLDatum:
    if path in (None, "-"):
        return loads_datum(sys.stdin.read())
    try:
        with open(path) as fh:
            return loads_datum(fh.read())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc


def write_text(text: str, path=None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def parse_list(s: str, conv=float) -> list:
    try:
        return [conv(x) for x in s.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad list {s!r}") from exc


def to_jsonable(x):
    """Plain-JSON view of reports (Fractions as strings, arrays as lists)."""
    if isinstance(x, Fraction):
        return _frac(x)
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x
