"""Reader for .hfd datasets produced by the helmscat solver package.

Implements the published byte layout independently (the file format is
the interface between the two packages): a 32-byte little-endian header

    magic "HFD1" | version u16 | nx u32 | ny u32 | field_count u16 | 16 reserved

followed by q (nx*ny float64), f and u (nx*ny complex128, interleaved
re/im), all row-major with shape (ny, nx).  ``manifest.json`` carries
grid, wavenumber and per-record sha256 checksums, which reads verify.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

MAGIC = b"HFD1"
_HEADER = struct.Struct("<4sHIIH16s")


class DatasetReadError(ValueError):
    pass


@dataclass(frozen=True)
class GridInfo:
    nx: int
    ny: int

    @property
    def hx(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def hy(self) -> float:
        return 1.0 / (self.ny - 1)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy


def read_manifest(path) -> dict:
    manifest = json.loads((Path(path) / "manifest.json").read_text())
    for key in ("nx", "ny", "k", "count", "checksums"):
        if key not in manifest:
            raise DatasetReadError(f"manifest.json is missing {key!r}")
    return manifest


def read_record_arrays(path, index: int, manifest: dict | None = None):
    """Raw float64/complex128 arrays (q, f, u) of one record, checksum-verified."""
    name = f"rec_{index}.hfd"
    expected = None
    if manifest is not None:
        expected = manifest["checksums"].get(str(index))
        if expected is None:
            raise DatasetReadError(f"{name}: not listed in the manifest")
    blob = (Path(path) / name).read_bytes()
    if expected is not None and hashlib.sha256(blob).hexdigest() != expected:
        raise DatasetReadError(f"{name}: checksum mismatch")
    if len(blob) < _HEADER.size:
        raise DatasetReadError(f"{name}: truncated header")
    magic, version, nx, ny, field_count, _ = _HEADER.unpack(blob[: _HEADER.size])
    if magic != MAGIC:
        raise DatasetReadError(f"{name}: bad magic {magic!r}")
    if field_count != 3:
        raise DatasetReadError(f"{name}: expected a (q, f, u) record, got {field_count} fields")
    n = nx * ny
    if len(blob) != _HEADER.size + 8 * n + 32 * n:
        raise DatasetReadError(f"{name}: wrong payload size for {nx}x{ny}")
    off = _HEADER.size
    q = np.frombuffer(blob, "<f8", n, off).reshape(ny, nx)
    f = np.frombuffer(blob, "<c16", n, off + 8 * n).reshape(ny, nx)
    u = np.frombuffer(blob, "<c16", n, off + 24 * n).reshape(ny, nx)
    return q, f, u


def _complex_to_channels(arr: np.ndarray, dtype) -> torch.Tensor:
    return torch.stack(
        [torch.as_tensor(arr.real.copy(), dtype=dtype),
         torch.as_tensor(arr.imag.copy(), dtype=dtype)]
    )


class FieldTripleDataset(torch.utils.data.Dataset):
    """In-memory (q, f, u) tensors: q (1,H,W), f and u (2,H,W) re/im."""

    def __init__(self, path, dtype=torch.float32, indices=None):
        self.path = Path(path)
        self.manifest = read_manifest(self.path)
        self.grid = GridInfo(int(self.manifest["nx"]), int(self.manifest["ny"]))
        self.k = float(self.manifest["k"])
        if indices is None:
            indices = range(int(self.manifest["count"]))
        self.indices = list(indices)
        qs, fs, us = [], [], []
        for i in self.indices:
            q, f, u = read_record_arrays(self.path, i, self.manifest)
            qs.append(torch.as_tensor(q.copy(), dtype=dtype)[None])
            fs.append(_complex_to_channels(f, dtype))
            us.append(_complex_to_channels(u, dtype))
        self.q = torch.stack(qs)
        self.f = torch.stack(fs)
        self.u = torch.stack(us)

    def __len__(self) -> int:
        return len(self.indices)

    def __getitem__(self, i):
        return self.q[i], self.f[i], self.u[i]
