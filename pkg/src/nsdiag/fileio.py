"""Binary field ("F3B1") and space-time record ("ST31") files.

F3B1 layout (little-endian)::

    b"F3B1" | u32 n | f64 L | ncomp * n^3 f64 samples, x fastest

``ncomp`` (1 or 3) is implied by the payload length.  An ST31 file is::

    b"ST31" | u32 count | count * (f64 t | F3B1 velocity | F3B1 pressure)
"""

from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField, VectorField

__all__ = [
    "F3B1_MAGIC",
    "ST31_MAGIC",
    "encode_field",
    "decode_field",
    "write_field",
    "read_field",
    "write_record",
    "read_record",
    "file_digest",
]

F3B1_MAGIC = b"F3B1"
ST31_MAGIC = b"ST31"
_HEADER = struct.Struct("<4sId")


def encode_field(f) -> bytes:
    g = f.grid
    header = _HEADER.pack(F3B1_MAGIC, g.n, g.box_length)
    vals = f.values if f.values.ndim == 4 else f.values[None]
    # [c, ix, iy, iz] -> x fastest means Fortran order over the spatial axes
    body = b"".join(np.asfortranarray(c).astype("<f8").tobytes(order="F") for c in vals)
    return header + body


def _read_field(buf: io.BufferedIOBase, ncomp: int | None = None):
    head = buf.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise ValueError("truncated F3B1 header")
    magic, n, L = _HEADER.unpack(head)
    if magic != F3B1_MAGIC:
        raise ValueError(f"bad F3B1 magic {magic!r}")
    grid = Grid(n, L)
    nbytes = n**3 * 8
    if ncomp is None:
        rest = buf.read()
        if len(rest) not in (nbytes, 3 * nbytes):
            raise ValueError(f"F3B1 payload of {len(rest)} bytes fits neither 1 nor 3 components")
        ncomp = len(rest) // nbytes
    else:
        rest = buf.read(ncomp * nbytes)
        if len(rest) != ncomp * nbytes:
            raise ValueError("truncated F3B1 payload")
    comps = [
        np.frombuffer(rest, dtype="<f8", count=n**3, offset=c * nbytes).reshape((n, n, n), order="F")
        for c in range(ncomp)
    ]
    if ncomp == 3:
        return VectorField(grid, np.stack(comps))
    return ScalarField(grid, comps[0])


def decode_field(data: bytes):
    return _read_field(io.BytesIO(data))


def write_field(path, f) -> None:
    Path(path).write_bytes(encode_field(f))


def read_field(path):
    with open(path, "rb") as fh:
        return _read_field(fh)


def write_record(path, record) -> None:
    with open(path, "wb") as fh:
        fh.write(ST31_MAGIC)
        fh.write(struct.pack("<I", len(record.snapshots)))
        for snap in record.snapshots:
            if snap.pressure is None:
                raise ValueError("ST31 requires a pressure for every snapshot")
            fh.write(struct.pack("<d", snap.t))
            fh.write(encode_field(snap.velocity))
            fh.write(encode_field(snap.pressure))


def read_record(path, viscosity: float = 1.0):
    from .quantities import Snapshot, SpaceTimeRecord

    snaps = []
    with open(path, "rb") as fh:
        if fh.read(4) != ST31_MAGIC:
            raise ValueError("bad ST31 magic")
        (count,) = struct.unpack("<I", fh.read(4))
        for _ in range(count):
            (t,) = struct.unpack("<d", fh.read(8))
            v = _read_field(fh, ncomp=3)
            q = _read_field(fh, ncomp=1)
            snaps.append(Snapshot(v, q, t))
    return SpaceTimeRecord(snaps, viscosity=viscosity, metadata={"source": str(path)})


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
