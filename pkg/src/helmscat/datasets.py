"""On-disk dataset format and labelled-triple generation.

A dataset directory holds ``manifest.json`` plus one binary blob per
record named ``rec_<index>.hfd``.

``.hfd`` byte layout (normative, bit-exact)
-------------------------------------------
32-byte header, little-endian::

    magic        4 bytes   b"HFD1"
    version      u16       format version (currently 1)
    nx           u32
    ny           u32
    field_count  u16       1 (q only) or 3 (q, f, u)
    reserved     16 bytes  zeros

followed by the payload, row-major:

* q: nx*ny float64
* f: nx*ny complex128 (interleaved re/im float64) when field_count == 3
* u: nx*ny complex128 when field_count == 3

``manifest.json`` stores the grid, wavenumber, sampler specs, master
seed and a sha256 checksum per record; reads validate magic, sizes and
checksums, and a write-then-read round trip is bitwise lossless.
Record writes are independent; the manifest is written last as the
commit point.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import fdm
from .fields import ComplexField, Grid2D, RealField, l2_norm, pde_residual
from .scenes import ScattererSpec, SourceSpec, sample_f, sample_q

MAGIC = b"HFD1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIIH16s")
assert _HEADER.size == 32

LABEL_SOLVER = "fdm-direct"
#: write-time guard on the label quality, relative to ||f||
LABEL_RESIDUAL_TOL = 1e-8


class DatasetFormatError(ValueError):
    """Base class for .hfd / manifest format violations."""


class MagicMismatchError(DatasetFormatError):
    pass


class TruncatedRecordError(DatasetFormatError):
    pass


class ChecksumMismatchError(DatasetFormatError):
    pass


@dataclass(frozen=True)
class DatasetRecord:
    """One (q, f, u) training triple."""

    index: int
    q: RealField
    f: ComplexField
    u: ComplexField


@dataclass
class DatasetManifest:
    format_version: int
    nx: int
    ny: int
    k: float
    count: int
    q_spec: dict
    f_spec: dict
    master_seed: int
    label_solver: str = LABEL_SOLVER
    created: str = ""
    checksums: dict = field(default_factory=dict)  # str(index) -> sha256 hex
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        return cls(**json.loads(text))

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.nx, self.ny)


def record_filename(index: int) -> str:
    return f"rec_{index}.hfd"


def record_streams(master_seed: int, index: int) -> tuple[tuple, tuple]:
    """Independent (q, f) sampler streams for one record."""
    return (master_seed, index, 0), (master_seed, index, 1)


def encode_record(record: DatasetRecord) -> bytes:
    grid = record.q.grid
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, grid.nx, grid.ny, 3, b"\x00" * 16)
    return (
        header
        + record.q.values.astype("<f8").tobytes()
        + record.f.values.astype("<c16").tobytes()
        + record.u.values.astype("<c16").tobytes()
    )


def encode_field(q: RealField) -> bytes:
    """Single-field blob (field_count 1), used for reconstruction outputs."""
    grid = q.grid
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, grid.nx, grid.ny, 1, b"\x00" * 16)
    return header + q.values.astype("<f8").tobytes()


def _parse_header(blob: bytes, name: str):
    if len(blob) < _HEADER.size:
        raise TruncatedRecordError(f"{name}: file shorter than the 32-byte header")
    magic, version, nx, ny, field_count, _ = _HEADER.unpack(blob[: _HEADER.size])
    if magic != MAGIC:
        raise MagicMismatchError(f"{name}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"{name}: unsupported format version {version}")
    if field_count not in (1, 3):
        raise DatasetFormatError(f"{name}: unsupported field count {field_count}")
    return nx, ny, field_count


def decode_record(blob: bytes, index: int, name: str = "record"):
    """Decode a blob into (q, f, u) fields; f and u are None for q-only files."""
    nx, ny, field_count = _parse_header(blob, name)
    n = nx * ny
    expected = _HEADER.size + 8 * n + (32 * n if field_count == 3 else 0)
    if len(blob) != expected:
        raise TruncatedRecordError(
            f"{name}: expected {expected} bytes for {nx}x{ny}, got {len(blob)}"
        )
    grid = Grid2D(nx, ny)
    off = _HEADER.size
    q = RealField(grid, np.frombuffer(blob, "<f8", n, off).reshape(grid.shape))
    if field_count == 1:
        return q, None, None
    off += 8 * n
    f = ComplexField(grid, np.frombuffer(blob, "<c16", n, off).reshape(grid.shape))
    off += 16 * n
    u = ComplexField(grid, np.frombuffer(blob, "<c16", n, off).reshape(grid.shape))
    return q, f, u


def write_dataset(manifest: DatasetManifest, records, path) -> None:
    """Write records then the manifest (the manifest commits the dataset)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for record in records:
        blob = encode_record(record)
        (path / record_filename(record.index)).write_bytes(blob)
        checksums[str(record.index)] = hashlib.sha256(blob).hexdigest()
    manifest.checksums = checksums
    (path / "manifest.json").write_text(manifest.to_json())


def read_manifest(path) -> DatasetManifest:
    return DatasetManifest.from_json((Path(path) / "manifest.json").read_text())


def read_record(path, index: int, manifest: DatasetManifest | None = None) -> DatasetRecord:
    """Read and validate one record; checksum-verified when a manifest is given."""
    name = record_filename(index)
    expected = None
    if manifest is not None:
        expected = manifest.checksums.get(str(index))
        if expected is None:
            raise DatasetFormatError(f"{name}: record not listed in the manifest")
    blob = (Path(path) / name).read_bytes()
    if expected is not None:
        actual = hashlib.sha256(blob).hexdigest()
        if actual != expected:
            raise ChecksumMismatchError(
                f"{name}: checksum mismatch (expected {expected[:12]}..., got {actual[:12]}...)"
            )
    q, f, u = decode_record(blob, index, name)
    if f is None or u is None:
        raise DatasetFormatError(f"{name}: not a full (q, f, u) record")
    return DatasetRecord(index=index, q=q, f=f, u=u)


def read_dataset(path) -> tuple[DatasetManifest, list[DatasetRecord]]:
    manifest = read_manifest(path)
    records = [read_record(path, i, manifest) for i in range(manifest.count)]
    return manifest, records


def generate_record(
    grid: Grid2D,
    k: float,
    q_spec: ScattererSpec,
    f_spec: SourceSpec,
    master_seed: int,
    index: int,
) -> DatasetRecord:
    """Sample (q, f) from their per-record streams and label u by direct solve."""
    q_seed, f_seed = record_streams(master_seed, index)
    q = sample_q(q_spec, grid, seed=q_seed)
    f = sample_f(f_spec, grid, seed=f_seed)
    u = fdm.solve_direct(fdm.HelmholtzProblem(k, q, f))
    res = pde_residual(u, k, q, f)
    if res > LABEL_RESIDUAL_TOL * l2_norm(f):
        raise fdm.FactorizationError(
            f"record {index}: label residual {res:.3e} exceeds tolerance"
        )
    return DatasetRecord(index=index, q=q, f=f, u=u)


def generate_dataset(
    grid: Grid2D,
    k: float,
    q_spec: ScattererSpec,
    f_spec: SourceSpec,
    master_seed: int,
    count: int,
    out_path,
    timestamp: str | None = None,
) -> DatasetManifest:
    """Generate ``count`` records and commit them under ``out_path``."""
    records = (
        generate_record(grid, k, q_spec, f_spec, master_seed, i) for i in range(count)
    )
    manifest = DatasetManifest(
        format_version=FORMAT_VERSION,
        nx=grid.nx,
        ny=grid.ny,
        k=float(k),
        count=count,
        q_spec=dataclasses.asdict(q_spec),
        f_spec=dataclasses.asdict(f_spec),
        master_seed=int(master_seed),
        created=timestamp or datetime.now(timezone.utc).isoformat(),
    )
    write_dataset(manifest, records, out_path)
    return manifest
