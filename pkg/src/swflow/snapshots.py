"""Binary field snapshots and CSV traces.

Snapshot layout (all little-endian):

    bytes 0..7   magic "SWLATT1\\0"
    4 x uint32   sites per direction
    4 x float64  physical periods
    6 x int32    integer fluxes, plane order (12,13,14,23,24,34)
    4*V float64  connection components a(x, mu), mu-major, sites x1-fastest
    2*V cfloat   spinor components as interleaved (re, im) float64 pairs,
                 component-major, sites x1-fastest

V is the site count.  "x1-fastest" is Fortran flat order on the site axes.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .errors import SwflowError
from .lattice import LatticeSpec
from .fields import Configuration, GaugeField, SpinorField

MAGIC = b"SWLATT1\x00"


def save_snapshot(path, c: Configuration, flux) -> None:
    spec = c.spec
    flux = tuple(int(v) for v in flux)
    if len(flux) != 6:
        raise ValueError("flux must have 6 entries")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<4I", *spec.dims))
        f.write(struct.pack("<4d", *spec.lengths))
        f.write(struct.pack("<6i", *flux))
        for mu in range(4):
            f.write(c.A.a[mu].ravel(order="F").astype("<f8").tobytes())
        for comp in range(2):
            flat = c.phi.psi[comp].ravel(order="F")
            inter = np.empty(2 * flat.size)
            inter[0::2] = flat.real
            inter[1::2] = flat.imag
            f.write(inter.astype("<f8").tobytes())


def load_snapshot(path) -> tuple[Configuration, tuple[int, ...]]:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:8] != MAGIC:
        raise SwflowError(f"{path}: not a SWLATT1 snapshot")
    off = 8
    dims = struct.unpack_from("<4I", raw, off); off += 16
    lengths = struct.unpack_from("<4d", raw, off); off += 32
    flux = struct.unpack_from("<6i", raw, off); off += 24
    spec = LatticeSpec(dims, lengths)
    V = spec.site_count
    expected = off + 8 * 4 * V + 8 * 4 * V
    if len(raw) != expected:
        raise SwflowError(f"{path}: truncated snapshot "
                          f"({len(raw)} bytes, expected {expected})")
    a = np.empty((4,) + spec.dims)
    for mu in range(4):
        block = np.frombuffer(raw, dtype="<f8", count=V, offset=off)
        a[mu] = block.reshape(spec.dims, order="F")
        off += 8 * V
    psi = np.empty((2,) + spec.dims, dtype=np.complex128)
    for comp in range(2):
        block = np.frombuffer(raw, dtype="<f8", count=2 * V, offset=off)
        psi[comp] = (block[0::2] + 1j * block[1::2]).reshape(spec.dims, order="F")
        off += 16 * V
    c = Configuration(GaugeField(spec, a), SpinorField(spec, psi))
    return c, tuple(int(v) for v in flux)


def write_trace_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])
