"""Map, annotation, point and box file formats.

Map files: 20-byte little-endian header (magic ``FIDT``, version, height,
width, kind; each field u32 after the magic) followed by ``height*width``
float32 LE values, row-major, top row first.
"""
from __future__ import annotations

import enum
import io
import json
import math
import os
import struct
import warnings
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .boxes import PseudoBox
from .types import PointSet

MAGIC = b"FIDT"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")
HEADER_SIZE = _HEADER.size
ANNOTATION_KEYS = ("image_id", "width", "height", "points", "boxes")


class MapKind(enum.IntEnum):
    DISTANCE = 0
    IDT = 1
    FIDT = 2
    PREDICTED = 3


class FormatError(ValueError):
    """Malformed input. ``line`` or ``offset`` locate the problem when known."""

    def __init__(self, message, source=None, line=None, offset=None):
        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")
        self.source = source
        self.line = line
        self.offset = offset


class MapFormatError(FormatError):
    pass


class TruncatedMapError(MapFormatError):
    pass


class AnnotationFormatError(FormatError):
    pass


class CsvFormatError(FormatError):
    pass


@contextmanager
def _opened(target, mode):
    if isinstance(target, (str, os.PathLike)):
        with open(target, mode, **({} if "b" in mode else {"encoding": "utf-8", "newline": ""})) as fh:
            yield fh
    else:
        yield target


def _name(target):
    return str(target) if isinstance(target, (str, os.PathLike)) else getattr(target, "name", None)


# -- maps ---------------------------------------------------------------------

def encode_map(values, kind=MapKind.PREDICTED) -> bytes:
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"map must be a non-empty 2-D array, got shape {arr.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = arr.astype("<f4")
    if not np.all(np.isfinite(out)):
        raise ValueError("map contains non-finite values (or values that overflow float32)")
    h, w = arr.shape
    return _HEADER.pack(MAGIC, VERSION, h, w, int(MapKind(kind))) + out.tobytes(order="C")


def decode_map(data: bytes, source=None):
    if len(data) < HEADER_SIZE:
        raise TruncatedMapError(f"header needs {HEADER_SIZE} bytes, got {len(data)}", source, offset=len(data))
    magic, version, h, w, kind = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MapFormatError(f"bad magic {magic!r}", source, offset=0)
    if version != VERSION:
        raise MapFormatError(f"unsupported version {version}", source, offset=4)
    if h < 1 or w < 1:
        raise MapFormatError(f"invalid dimensions {h}x{w}", source, offset=8)
    try:
        kind = MapKind(kind)
    except ValueError:
        raise MapFormatError(f"unknown map kind {kind}", source, offset=16) from None
    need = HEADER_SIZE + 4 * h * w
    if len(data) < need:
        raise TruncatedMapError(f"payload needs {need} bytes, got {len(data)}", source, offset=len(data))
    if len(data) > need:
        raise MapFormatError(f"{len(data) - need} trailing bytes after payload", source, offset=need)
    arr = np.frombuffer(data, dtype="<f4", count=h * w, offset=HEADER_SIZE).reshape(h, w).astype(np.float32)
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise MapFormatError("non-finite value in payload", source, offset=HEADER_SIZE + 4 * int(bad[0]))
    return arr, kind


def write_map(values, kind, destination):
    data = encode_map(values, kind)
    with _opened(destination, "wb") as fh:
        fh.write(data)


def read_map(source):
    """Return ``(float32 array, MapKind)``."""
    with _opened(source, "rb") as fh:
        data = fh.read()
    return decode_map(data, _name(source))


# -- numbers ------------------------------------------------------------------

def format_number(v) -> str:
    """Shortest text that parses back to exactly ``v``; integral values print without a fraction."""
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {v}")
    if v.is_integer() and abs(v) < 2 ** 53:
        return str(int(v))
    return repr(v)


def _parse_number(text, source, line):
    try:
        v = float(text)
    except ValueError:
        raise CsvFormatError(f"not a number: {text.strip()!r}", source, line=line) from None
    if not math.isfinite(v):
        raise CsvFormatError(f"non-finite value {text.strip()!r}", source, line=line)
    return v


# -- annotations --------------------------------------------------------------

def _as_number(v, where, source):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise AnnotationFormatError(f"{where} must be a number, got {v!r}", source)
    return float(v)


def _pairs(v, key, source):
    if not isinstance(v, list):
        raise AnnotationFormatError(f"{key} must be a list", source)
    out = []
    for i, item in enumerate(v):
        if not isinstance(item, list) or len(item) != 2:
            raise AnnotationFormatError(f"{key}[{i}] must be a 2-element list", source)
        out.append([_as_number(x, f"{key}[{i}]", source) for x in item])
    return np.array(out, dtype=np.float64).reshape(-1, 2)


def parse_annotations(doc, source=None, strict=True) -> PointSet:
    if not isinstance(doc, dict):
        raise AnnotationFormatError("top level must be a JSON object", source)
    extra = sorted(set(doc) - set(ANNOTATION_KEYS))
    if extra:
        if strict:
            raise AnnotationFormatError(f"unknown keys {extra}", source)
        warnings.warn(f"{source or 'annotation'}: ignoring unknown keys {extra}", stacklevel=3)
    for key in ("image_id", "width", "height", "points"):
        if key not in doc:
            raise AnnotationFormatError(f"missing key {key!r}", source)
    if not isinstance(doc["image_id"], str):
        raise AnnotationFormatError("image_id must be a string", source)
    dims = []
    for key in ("width", "height"):
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise AnnotationFormatError(f"{key} must be a positive integer, got {v!r}", source)
        dims.append(v)
    points = _pairs(doc["points"], "points", source)
    boxes = _pairs(doc["boxes"], "boxes", source) if doc.get("boxes") is not None else None
    try:
        return PointSet(dims[0], dims[1], points, boxes, image_id=doc["image_id"])
    except ValueError as exc:
        raise AnnotationFormatError(str(exc), source) from None


def read_annotations(source, strict=True) -> PointSet:
    name = _name(source)
    with _opened(source, "r") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationFormatError(f"invalid JSON: {exc.msg} (column {exc.colno})", name, line=exc.lineno) from None
    return parse_annotations(doc, name, strict)


def annotations_to_json(points: PointSet) -> str:
    def pairs(arr):
        return "[" + ", ".join(f"[{format_number(a)}, {format_number(b)}]" for a, b in arr) + "]"

    parts = [
        f'"image_id": {json.dumps(points.image_id)}',
        f'"width": {points.image_width}',
        f'"height": {points.image_height}',
        f'"points": {pairs(points.points)}',
    ]
    if points.boxes is not None:
        parts.append(f'"boxes": {pairs(points.boxes)}')
    return "{" + ", ".join(parts) + "}\n"


def write_annotations(points: PointSet, destination):
    with _opened(destination, "w") as fh:
        fh.write(annotations_to_json(points))


# -- CSV ----------------------------------------------------------------------

def _read_rows(source, width, positive_last=False):
    name = _name(source)
    with _opened(source, "r") as fh:
        text = fh.read()
    rows = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        if not line.strip():
            continue
        fields = line.rstrip("\r\n").split(",")
        if len(fields) != width:
            raise CsvFormatError(f"expected {width} fields, got {len(fields)}", name, line=lineno)
        row = [_parse_number(f, name, lineno) for f in fields]
        if positive_last and row[-1] <= 0:
            raise CsvFormatError(f"size must be positive, got {fields[-1]!r}", name, line=lineno)
        rows.append(row)
    return np.array(rows, dtype=np.float64).reshape(-1, width)


def _write_rows(rows, destination, width):
    arr = np.asarray(rows, dtype=np.float64).reshape(-1, width)
    text = "".join(",".join(format_number(v) for v in row) + "\n" for row in arr)
    with _opened(destination, "w") as fh:
        fh.write(text)


def read_points_csv(source) -> np.ndarray:
    """``(N, 2)`` array of x,y records."""
    return _read_rows(source, 2)


def write_points_csv(points, destination):
    _write_rows(points.points if isinstance(points, PointSet) else points, destination, 2)


def read_boxes_csv(source) -> np.ndarray:
    """``(N, 3)`` array of x,y,s records."""
    return _read_rows(source, 3, positive_last=True)


def write_boxes_csv(boxes, destination):
    rows = [(b.x, b.y, b.size) if isinstance(b, PseudoBox) else b for b in boxes]
    _write_rows(rows, destination, 3)


def stem(path) -> str:
    return Path(path).stem
