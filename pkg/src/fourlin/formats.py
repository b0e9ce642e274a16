"""On-disk formats: FLF1 fields, FOP1 operators, CSV tables and JSON lines.

All writers go through :func:`atomic_write`, which writes a sibling temp file
and renames it into place so readers never observe a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidFieldError
from .operators import DiagonalOperator
from .spectral import GridField, GridSpec


class FormatError(InvalidFieldError):
    """A file does not follow the expected layout."""


def atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_header(line: bytes, magic: str) -> dict[str, str]:
    try:
        text = line.decode("ascii").rstrip("\n")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{magic} header is not ASCII") from exc
    parts = text.split(" ")
    if parts[0] != magic:
        raise FormatError(f"expected {magic} header, got {parts[0]!r}")
    fields = {}
    for p in parts[1:]:
        key, sep, val = p.partition("=")
        if not sep:
            raise FormatError(f"malformed header token {p!r}")
        fields[key] = val
    return fields


def _split(raw: bytes) -> tuple[bytes, bytes]:
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError("missing header line")
    return raw[: nl + 1], raw[nl + 1 :]


def encode_field(values: np.ndarray) -> bytes:
    values = np.asarray(values)
    d, N = values.ndim, values.shape[0]
    if any(n != N for n in values.shape):
        raise InvalidFieldError(f"field must be (N,)*d, got {values.shape}")
    kind = "complex" if np.iscomplexobj(values) else "real"
    dtype = "<c16" if kind == "complex" else "<f8"
    head = f"FLF1 d={d} N={N} kind={kind}\n".encode("ascii")
    return head + np.ascontiguousarray(values, dtype=dtype).tobytes()


def decode_field(raw: bytes) -> np.ndarray:
    head, body = _split(raw)
    h = _parse_header(head, "FLF1")
    try:
        d, N, kind = int(h["d"]), int(h["N"]), h["kind"]
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad FLF1 header {head!r}") from exc
    if kind not in ("real", "complex") or d < 1 or N < 1:
        raise FormatError(f"bad FLF1 header {head!r}")
    dtype = "<c16" if kind == "complex" else "<f8"
    count = N**d
    if len(body) != count * np.dtype(dtype).itemsize:
        raise FormatError(f"FLF1 payload has {len(body)} bytes, expected {count * np.dtype(dtype).itemsize}")
    return np.frombuffer(body, dtype=dtype).reshape((N,) * d).astype(dtype[1:])


def write_field(path, u: GridField | np.ndarray):
    atomic_write(path, encode_field(u.values if isinstance(u, GridField) else u))


def read_field(path) -> GridField:
    values = decode_field(Path(path).read_bytes())
    if np.iscomplexobj(values):
        raise FormatError(f"{path}: expected a real field")
    return GridField(GridSpec(values.ndim, values.shape[0]), values)


def encode_operator(T: DiagonalOperator) -> bytes:
    head = f"FOP1 d={T.d} K={T.K} C={float(T.C)!r} real={int(T.real_output)}\n".encode("ascii")
    return head + np.ascontiguousarray(T.lambdas, dtype="<c16").tobytes()


def decode_operator(raw: bytes) -> DiagonalOperator:
    head, body = _split(raw)
    h = _parse_header(head, "FOP1")
    try:
        d, K, C, real = int(h["d"]), int(h["K"]), float(h["C"]), int(h["real"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad FOP1 header {head!r}") from exc
    shape = (2 * K + 1,) * d
    if len(body) != 16 * int(np.prod(shape)):
        raise FormatError("FOP1 payload size does not match header")
    T = DiagonalOperator(d, K, C, np.frombuffer(body, dtype="<c16").reshape(shape))
    if real and not T.real_output:
        raise FormatError("FOP1 marked real but parameters are not conjugate-symmetric")
    return T


def write_operator(path, T: DiagonalOperator):
    atomic_write(path, encode_operator(T))


def read_operator(path) -> DiagonalOperator:
    return decode_operator(Path(path).read_bytes())


def fmt_float(x: float) -> str:
    """17 significant digits: parses back to the identical float64."""
    return "%.17g" % float(x)


def csv_bytes(header: list[str], rows) -> bytes:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt_float(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue().encode("utf-8")


def append_csv_row(path, header: list[str], row):
    """Append one row, writing the header first if the file is new.

    The whole file is rewritten atomically; existing headers must match.
    """
    path = Path(path)
    old = path.read_bytes() if path.exists() else b""
    if old:
        first = old.split(b"\n", 1)[0].decode("utf-8")
        if first.split(",") != header:
            raise FormatError(f"{path}: header {first!r} does not match {','.join(header)!r}")
        new = csv_bytes(header, [row]).split(b"\n", 1)[1]
        if not old.endswith(b"\n"):
            old += b"\n"
        atomic_write(path, old + new)
    else:
        atomic_write(path, csv_bytes(header, [row]))


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def jsonl_bytes(records) -> bytes:
    return "".join(json.dumps(r, sort_keys=True, default=_json_default) + "\n" for r in records).encode("utf-8")


def write_jsonl(path, records):
    atomic_write(path, jsonl_bytes(records))


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj):
    atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n").encode("utf-8"))
