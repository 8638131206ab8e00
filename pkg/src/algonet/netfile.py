"""Self-describing binary container for ReLU networks.

Layout::

    RELUNET <version>\\n
    <header: one line of JSON, sorted keys>\\n
    <payload: little-endian arrays, per layer indptr, indices, data, bias>

Index arrays are int64; values keep the working precision.  The SHA-256
covers the header (minus the digest itself and any timestamp) and the
payload, so identical networks give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .network import ReluNetwork
from .sparse import DimensionError, SparseAffineMap, SparseMatrix

MAGIC = b"RELUNET"
FORMAT_VERSION = 1
_VALUE_CODES = {"float64": "<f8", "float32": "<f4"}
_UNHASHED = ("sha256", "created")


class NetworkFileError(ValueError):
    pass


class VersionMismatchError(NetworkFileError):
    pass


class ChecksumError(NetworkFileError):
    pass


class MalformedFileError(NetworkFileError):
    pass


def _canonical(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def _digest(header: dict, payload: bytes) -> str:
    hashed = {k: v for k, v in header.items() if k not in _UNHASHED}
    h = hashlib.sha256(_canonical(hashed))
    h.update(b"\n")
    h.update(payload)
    return h.hexdigest()


def _jsonable(meta) -> dict:
    try:
        return json.loads(json.dumps(dict(meta), sort_keys=True, allow_nan=False))
    except (TypeError, ValueError) as e:
        raise NetworkFileError(f"metadata is not JSON-serializable: {e}") from None


def serialize(net: ReluNetwork, timestamp: bool = False) -> bytes:
    """Encode ``net``; deterministic unless ``timestamp`` is set (the stamp is not hashed)."""
    vcode = _VALUE_CODES[net.dtype.name]
    chunks, layers = [], []
    for f in net.layers:
        w = f.weights
        layers.append({"rows": w.rows, "cols": w.cols, "nnz": w.nnz()})
        chunks += [
            np.asarray(w.indptr, dtype="<i8").tobytes(),
            np.asarray(w.indices, dtype="<i8").tobytes(),
            np.asarray(w.data, dtype=vcode).tobytes(),
            np.asarray(f.bias, dtype=vcode).tobytes(),
        ]
    payload = b"".join(chunks)
    header = {
        "dtype": net.dtype.name,
        "layers": layers,
        "metadata": _jsonable(net.metadata),
        "payload_bytes": len(payload),
    }
    header["sha256"] = _digest(header, payload)
    if timestamp:
        header["created"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return b"%s %d\n" % (MAGIC, FORMAT_VERSION) + _canonical(header) + b"\n" + payload


def _take(buf: memoryview, pos: int, n: int, code: str) -> tuple[np.ndarray, int]:
    size = n * np.dtype(code).itemsize
    if pos + size > len(buf):
        raise MalformedFileError("payload ends early")
    return np.frombuffer(buf[pos:pos + size], dtype=code).copy(), pos + size


def deserialize(data: bytes) -> ReluNetwork:
    """Decode and validate; raises a :class:`NetworkFileError` subclass on bad input."""
    nl = data.find(b"\n")
    if nl < 0:
        raise MalformedFileError("missing format line")
    first = data[:nl].split(b" ")
    if len(first) != 2 or first[0] != MAGIC:
        raise MalformedFileError("not a network file")
    try:
        version = int(first[1])
    except ValueError:
        raise MalformedFileError("bad format version field") from None
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"format version {version} is not supported (expected {FORMAT_VERSION})")
    nl2 = data.find(b"\n", nl + 1)
    if nl2 < 0:
        raise MalformedFileError("missing header")
    try:
        header = json.loads(data[nl + 1:nl2])
        payload = data[nl2 + 1:]
        declared = int(header["payload_bytes"])
        dtype = header["dtype"]
        layer_info = header["layers"]
        digest = header["sha256"]
    except (ValueError, KeyError, TypeError) as e:
        raise MalformedFileError(f"unreadable header: {e}") from None
    if len(payload) != declared:
        raise MalformedFileError(f"payload is {len(payload)} bytes, header declares {declared}")
    if _digest(header, payload) != digest:
        raise ChecksumError("checksum mismatch")
    if dtype not in _VALUE_CODES or not layer_info:
        raise MalformedFileError("bad dtype or empty layer list")

    vcode = _VALUE_CODES[dtype]
    buf, pos, layers = memoryview(payload), 0, []
    try:
        for info in layer_info:
            rows, cols, nnz = int(info["rows"]), int(info["cols"]), int(info["nnz"])
            if min(rows, cols, nnz) < 0:
                raise MalformedFileError("negative dimension")
            indptr, pos = _take(buf, pos, rows + 1, "<i8")
            indices, pos = _take(buf, pos, nnz, "<i8")
            vals, pos = _take(buf, pos, nnz, vcode)
            bias, pos = _take(buf, pos, rows, vcode)
            if indptr[0] != 0 or indptr[-1] != nnz or np.any(np.diff(indptr) < 0):
                raise MalformedFileError("inconsistent row offsets")
            if nnz and (indices.min() < 0 or indices.max() >= cols):
                raise MalformedFileError("column index out of range")
            csr = sp.csr_array((vals.astype(dtype), indices, indptr), shape=(rows, cols))
            layers.append(SparseAffineMap(SparseMatrix(csr), bias.astype(dtype)))
        if pos != len(buf):
            raise MalformedFileError("trailing bytes after last layer")
        return ReluNetwork(tuple(layers), header.get("metadata", {}))
    except (KeyError, TypeError) as e:
        raise MalformedFileError(f"bad layer record: {e}") from None
    except DimensionError as e:
        raise MalformedFileError(str(e)) from None


def save(net: ReluNetwork, path, timestamp: bool = False) -> None:
    Path(path).write_bytes(serialize(net, timestamp=timestamp))


def load(path) -> ReluNetwork:
    return deserialize(Path(path).read_bytes())


def checksum(data: bytes) -> str:
    """SHA-256 of a whole serialized file (used for golden files)."""
    return hashlib.sha256(data).hexdigest()
