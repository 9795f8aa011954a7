"""Core containers, box-constraint projection, and the FMAT binary format.

Images are plain 2D float64 arrays wherever possible; :class:`Image` is a
thin wrapper that carries the feasible-set ceiling ``bound`` across API
boundaries (phantoms, CLI). Complex k-space data and count vectors are bare
1D ``complex128`` / ``float64`` arrays.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FMAT_MAGIC = b"FMAT"
TAG_REAL64 = 0x01
TAG_COMPLEX128 = 0x02

_HEADER = struct.Struct("<4sBII")
_MAX_ELEMENTS = 2**31  # refuse absurd headers before allocating


class FormatError(ValueError):
    """Malformed FMAT file; ``offset`` is the byte position of the defect."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Image:
    """Real 2D image with values meant to live in [0, bound]."""

    data: np.ndarray
    bound: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be a nonempty 2D array, got shape {arr.shape}")
        if not self.bound > 0:
            raise ValueError(f"bound must be positive, got {self.bound}")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]


def project_box(x, lo, hi):
    """Clamp every entry of ``x`` to [lo, hi].

    Accepts an ndarray or an :class:`Image` and returns the same kind.
    """
    if lo > hi:
        raise ValueError(f"invalid range: lo={lo} > hi={hi}")
    if isinstance(x, Image):
        return Image(np.clip(x.data, lo, hi), bound=x.bound)
    return np.clip(np.asarray(x, dtype=np.float64), lo, hi)


def write_matrix(path, value):
    """Write a real float64 or complex128 array in the FMAT format.

    1D arrays are stored as single-column matrices. The round trip through
    :func:`read_matrix` is bit-exact.
    """
    arr = np.asarray(value)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"FMAT stores 1D or 2D arrays, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"invalid dimensions {arr.shape}: rows and cols must be >= 1")
    if np.issubdtype(arr.dtype, np.complexfloating):
        tag, payload = TAG_COMPLEX128, np.ascontiguousarray(arr, dtype="<c16")
    else:
        tag, payload = TAG_REAL64, np.ascontiguousarray(arr, dtype="<f8")
    header = _HEADER.pack(FMAT_MAGIC, tag, arr.shape[0], arr.shape[1])
    Path(path).write_bytes(header + payload.tobytes(order="C"))


def read_matrix(path):
    """Read an FMAT file back into a 2D ndarray (float64 or complex128)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("truncated header", offset=len(raw))
    magic, tag, rows, cols = _HEADER.unpack_from(raw)
    if magic != FMAT_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if tag == TAG_REAL64:
        dtype, esize = "<f8", 8
    elif tag == TAG_COMPLEX128:
        dtype, esize = "<c16", 16
    else:
        raise FormatError(f"unknown element tag 0x{tag:02x}", offset=4)
    if rows == 0 or cols == 0:
        raise FormatError(f"invalid dimensions {rows}x{cols}", offset=5)
    if rows * cols > _MAX_ELEMENTS:
        raise FormatError(f"dimension overflow {rows}x{cols}", offset=5)
    expected = _HEADER.size + rows * cols * esize
    if len(raw) != expected:
        raise FormatError(
            f"payload has {len(raw) - _HEADER.size} bytes, expected {expected - _HEADER.size}",
            offset=min(len(raw), expected),
        )
    arr = np.frombuffer(raw, dtype=dtype, count=rows * cols, offset=_HEADER.size)
    return arr.astype(arr.dtype.newbyteorder("=")).reshape(rows, cols)


def to_uint8(arr, bound=1.0):
    """Map [0, bound] linearly onto 0..255 with round-half-up."""
    scaled = np.clip(np.asarray(arr, dtype=np.float64), 0.0, bound) * (255.0 / bound)
    return np.floor(scaled + 0.5).astype(np.uint8)


def write_pgm(path, arr, bound=1.0):
    gray = to_uint8(arr, bound)
    header = f"P5\n{gray.shape[1]} {gray.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + gray.tobytes(order="C"))


def write_png(path, arr, bound=1.0):
    from PIL import Image as PILImage

    PILImage.fromarray(to_uint8(arr, bound), mode="L").save(str(path), format="PNG")
