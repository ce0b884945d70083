"""CTEN: a tiny binary container for complex tensors.

Layout (little-endian throughout):

  magic   4 bytes  b"CTEN"
  version u8       1
  dtype   u8       0 = 32-bit float pairs, 1 = 64-bit float pairs
  ndim    u8
  dims    ndim x u32
  payload product(dims) elements, row-major, each stored as (real, imag)

Write/read round trips are bit-exact for matching dtypes.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = ["CtenFormatError", "write_cten", "read_cten"]

MAGIC = b"CTEN"
VERSION = 1
_FLOAT_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class CtenFormatError(ValueError):
    """Raised for malformed CTEN payloads or headers."""


def write_cten(path, array: np.ndarray, dtype_code: int = 1) -> None:
    if dtype_code not in _FLOAT_DTYPES:
        raise CtenFormatError(f"unknown dtype code {dtype_code}")
    array = np.asarray(array, dtype=np.complex128)
    if array.ndim < 1:
        array = array.reshape(1)
    float_dtype = _FLOAT_DTYPES[dtype_code]
    pairs = np.empty(array.shape + (2,), dtype=float_dtype)
    pairs[..., 0] = array.real
    pairs[..., 1] = array.imag
    header = MAGIC + struct.pack("<BBB", VERSION, dtype_code, array.ndim)
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pairs.tobytes(order="C"))


def read_cten(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 7 or blob[:4] != MAGIC:
        raise CtenFormatError(f"{path}: not a CTEN file")
    version, dtype_code, ndim = struct.unpack("<BBB", blob[4:7])
    if version != VERSION:
        raise CtenFormatError(f"{path}: unsupported CTEN version {version}")
    if dtype_code not in _FLOAT_DTYPES:
        raise CtenFormatError(f"{path}: unknown dtype code {dtype_code}")
    header_end = 7 + 4 * ndim
    if len(blob) < header_end:
        raise CtenFormatError(f"{path}: truncated dim table")
    dims = struct.unpack(f"<{ndim}I", blob[7:header_end])
    float_dtype = _FLOAT_DTYPES[dtype_code]
    count = int(np.prod(dims)) * 2
    expected = header_end + count * float_dtype.itemsize
    if len(blob) != expected:
        raise CtenFormatError(
            f"{path}: payload is {len(blob) - header_end} bytes, expected {expected - header_end}"
        )
    flat = np.frombuffer(blob[header_end:], dtype=float_dtype)
    pairs = flat.reshape(dims + (2,))
    out = pairs[..., 0].astype(np.complex128)
    out += 1j * pairs[..., 1].astype(np.float64)
    return out
