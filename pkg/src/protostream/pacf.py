"""PACF binary feature files.

Little-endian layout:

    offset  size  field
    0       4     magic "PACF"
    4       4     format version (u32, currently 1)
    8       8     record count (u64)
    16      4     feature dimension (u32)
    20      1     labeled flag (u8, 0 or 1)
    21      ...   records

Each record is an optional signed 32-bit label (present only when the
labeled flag is 1; -1 marks an unlabeled record) followed by `dimension`
IEEE-754 float32 feature values. The total byte length is therefore
exactly 21 + count * (4 * labeled + 4 * dimension).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    BadVersion,
    DimMismatch,
    FeatureFileError,
    LengthMismatch,
    TruncatedFile,
)

MAGIC = b"PACF"
VERSION = 1
_HEADER = struct.Struct("<4sIQIB")
HEADER_SIZE = _HEADER.size  # 21 bytes


def write_feature_file(path, features, labels=None) -> None:
    """Serialize features (and optional labels) to a PACF file.

    Features are converted to float32; the round trip through the file is
    exact at that precision.
    """
    arr = np.ascontiguousarray(np.asarray(features), dtype=np.float32)
    if arr.ndim != 2:
        raise DimMismatch(f"features must be 2-D, got ndim={arr.ndim}")
    count, dim = arr.shape
    labeled = labels is not None
    if labeled:
        lab = np.asarray(labels, dtype=np.int32)
        if lab.ndim != 1 or lab.shape[0] != count:
            raise LengthMismatch(
                f"{lab.shape[0] if lab.ndim == 1 else lab.shape} labels for {count} records"
            )
    header = _HEADER.pack(MAGIC, VERSION, count, dim, 1 if labeled else 0)
    if labeled:
        record_dtype = np.dtype([("label", "<i4"), ("vec", "<f4", (dim,))])
        records = np.empty(count, dtype=record_dtype)
        records["label"] = lab
        records["vec"] = arr
        body = records.tobytes()
    else:
        body = arr.astype("<f4", copy=False).tobytes()
    Path(path).write_bytes(header + body)


def read_feature_file(path, expected_dim: int | None = None) -> tuple:
    """Parse and strictly validate a PACF file.

    Returns (features, labels) where features is a (count, dimension)
    float32 array and labels is an int32 array or None for unlabeled
    files. Raises BadMagic / BadVersion / TruncatedFile / DimMismatch.
    """
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise TruncatedFile(
            f"{path}: {len(data)} bytes is shorter than the {HEADER_SIZE}-byte header"
        )
    magic, version, count, dim, labeled = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"{path}: magic {magic!r} != {MAGIC!r}")
    if version != VERSION:
        raise BadVersion(f"{path}: version {version} unsupported (expected {VERSION})")
    if labeled not in (0, 1):
        raise FeatureFileError(f"{path}: labeled flag must be 0 or 1, got {labeled}")
    expected = HEADER_SIZE + count * (4 * labeled + 4 * dim)
    if len(data) != expected:
        raise TruncatedFile(
            f"{path}: expected {expected} bytes for {count} records of dim {dim}, "
            f"found {len(data)}"
        )
    if expected_dim is not None and dim != expected_dim:
        raise DimMismatch(f"{path}: file dimension {dim} != expected {expected_dim}")
    body = data[HEADER_SIZE:]
    if labeled:
        record_dtype = np.dtype([("label", "<i4"), ("vec", "<f4", (dim,))])
        records = np.frombuffer(body, dtype=record_dtype, count=count)
        return records["vec"].reshape(count, dim).copy(), records["label"].copy()
    features = np.frombuffer(body, dtype="<f4", count=count * dim)
    return features.reshape(count, dim).copy(), None
