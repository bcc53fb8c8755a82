"""Flat binary field container and schema-versioned CSV emission.

Container layout (little-endian):
    magic   4 bytes  b"HCL1"
    n       uint32   complex dimension
    rank    uint32   number of array axes (spatial axes first)
    dims    rank x uint32
    flags   rank x uint8   (1 = periodic spatial axis, 0 otherwise)
    data    float64, C order (first axis slowest)

Complex fields are stored with a trailing axis of size 2 (re, im).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import GridDomain, HermitianField, ScalarField

__all__ = [
    "write_array",
    "read_array",
    "write_scalar_field",
    "read_scalar_field",
    "write_hermitian_field",
    "read_hermitian_values",
    "export_csv",
    "CsvWriter",
]

MAGIC = b"HCL1"
SCHEMA_LINE = "# hcl-schema v1"


def write_array(path, values: np.ndarray, n: int, flags) -> None:
    values = np.ascontiguousarray(values, dtype=np.float64)
    flags = list(flags)
    if len(flags) != values.ndim:
        raise ConfigError("one flag per array axis required")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", int(n), values.ndim))
        fh.write(struct.pack(f"<{values.ndim}I", *values.shape))
        fh.write(struct.pack(f"<{values.ndim}B", *[1 if f else 0 for f in flags]))
        fh.write(values.tobytes(order="C"))


def read_array(path):
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ConfigError(f"{path}: not an HCL1 container")
    n, rank = struct.unpack_from("<II", raw, 4)
    dims = struct.unpack_from(f"<{rank}I", raw, 12)
    flags = struct.unpack_from(f"<{rank}B", raw, 12 + 4 * rank)
    off = 12 + 5 * rank
    count = int(np.prod(dims))
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(dims)
    return values.copy(), int(n), tuple(bool(f) for f in flags)


def write_scalar_field(path, f: ScalarField) -> None:
    write_array(path, f.values, f.domain.n, f.domain.periodic)


def read_scalar_field(path, domain: GridDomain) -> ScalarField:
    values, n, flags = read_array(path)
    if n != domain.n or values.shape != domain.shape:
        raise ConfigError(f"{path}: container does not match the domain")
    return ScalarField(domain, values)


def write_hermitian_field(path, f: HermitianField) -> None:
    v = f.values
    stacked = np.stack([v.real, v.imag], axis=-1)
    flags = list(f.domain.periodic) + [0, 0, 0]
    write_array(path, stacked, f.domain.n, flags)


def read_hermitian_values(path, domain: GridDomain) -> HermitianField:
    values, n, _ = read_array(path)
    want = domain.shape + (domain.n, domain.n, 2)
    if n != domain.n or values.shape != want:
        raise ConfigError(f"{path}: container does not match the domain")
    return HermitianField(domain, values[..., 0] + 1j * values[..., 1])


def export_csv(path, f: ScalarField) -> None:
    """Axis indices plus value, one node per row."""
    d = len(f.domain.shape)
    header = ",".join(f"i{a}" for a in range(d)) + ",value"
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        fh.write(header + "\n")
        for idx in np.ndindex(*f.domain.shape):
            fh.write(",".join(str(i) for i in idx)
                     + "," + format(f.values[idx], ".17g") + "\n")


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


class CsvWriter:
    """Single-writer CSV emission with the frozen schema header.

    Identical (columns, rows, seed) produce identical bytes.
    """

    def __init__(self, path, columns, seed):
        self.path = Path(path)
        self.columns = list(columns)
        self.seed = seed
        self._rows: list[list] = []

    def add(self, *row) -> None:
        if len(row) != len(self.columns):
            raise ConfigError("row width does not match the column schema")
        self._rows.append(list(row))

    def flush(self) -> None:
        with open(self.path, "w", newline="") as fh:
            fh.write(SCHEMA_LINE + "\n")
            fh.write(f"# seed {self.seed}\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self._rows:
                fh.write(",".join(_cell(x) for x in row) + "\n")
