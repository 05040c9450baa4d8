"""Flow and image file interchange.

Flow fields travel as Middlebury .flo files: a float32 magic (the bytes
"PIEH"), int32 width and height, then height x width x 2 little-endian
float32 vectors interleaved (u = x, v = y), row-major. The format carries
neither mask nor reference: invalid cells are written as the sentinel 1e9
in both channels and recovered as mask-false zeros on read, while the
reference lives in an optional one-line sidecar next to the file (same
basename, suffix .ref, containing 's' or 't').

Since the container is float32, a written-then-read field is bit-exact
only for float32-representable vectors.

Images are written as binary portable pixmaps: P6 for RGB, P5 for masks
and grayscale (masks encode as 0/255).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import FlowError, FlowField, Reference

__all__ = [
    "FLO_MAGIC",
    "INVALID_SENTINEL",
    "load_flow",
    "read_flo",
    "read_image",
    "read_reference_sidecar",
    "save_flow",
    "write_flo",
    "write_image",
    "write_mask",
    "write_reference_sidecar",
]

FLO_MAGIC = 202021.25  # float32 bytes spell "PIEH"
INVALID_SENTINEL = 1e9
MAX_DIM = 65535


def write_flo(path, field: FlowField) -> None:
    """Write a flow field as a .flo file (mask via the sentinel value)."""
    h, w = field.shape
    if h > MAX_DIM or w > MAX_DIM:
        raise FlowError(f"flow dims {(h, w)} exceed the .flo limit of {MAX_DIM}")
    data = field.vectors.astype("<f4")
    data[~field.mask] = INVALID_SENTINEL
    with open(path, "wb") as fh:
        fh.write(struct.pack("<fii", FLO_MAGIC, w, h))
        fh.write(data.tobytes())


def read_flo(path, reference: Reference | str = Reference.SOURCE) -> FlowField:
    """Read a .flo file; sentinel cells become mask-false zero vectors.

    The format does not store the reference; it defaults to source and
    can be overridden (see also `load_flow` for sidecar handling).
    """
    with open(path, "rb") as fh:
        header = fh.read(12)
        if len(header) < 12:
            raise FlowError(f"{path}: truncated .flo header")
        magic, w, h = struct.unpack("<fii", header)
        if magic != FLO_MAGIC:  # exactly representable in float32
            raise FlowError(f"{path}: bad .flo magic {magic!r}")
        if not (0 < w <= MAX_DIM and 0 < h <= MAX_DIM):
            raise FlowError(f"{path}: implausible .flo dims {w}x{h}")
        payload = fh.read(h * w * 2 * 4)
    if len(payload) < h * w * 2 * 4:
        raise FlowError(f"{path}: truncated .flo payload")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(h, w, 2).astype(np.float64)
    mask = ~np.all(vectors == INVALID_SENTINEL, axis=2)
    vectors = np.where(mask[..., None], vectors, 0.0)
    return FlowField(vectors, Reference.parse(reference), mask)


def _sidecar_path(flo_path) -> Path:
    return Path(flo_path).with_suffix(".ref")


def write_reference_sidecar(flo_path, reference: Reference | str) -> None:
    _sidecar_path(flo_path).write_text(f"{Reference.parse(reference)}\n")


def read_reference_sidecar(flo_path) -> Reference | None:
    """Reference recorded next to a .flo file, or None without a sidecar."""
    sidecar = _sidecar_path(flo_path)
    if not sidecar.exists():
        return None
    return Reference.parse(sidecar.read_text().strip())


def save_flow(path, field: FlowField) -> None:
    """Write a .flo file plus its .ref reference sidecar."""
    write_flo(path, field)
    write_reference_sidecar(path, field.reference)


def load_flow(path, reference: Reference | str | None = None) -> FlowField:
    """Read a .flo file, taking the reference from the sidecar if present.

    An explicit `reference` overrides the sidecar; without either, the
    flow comes back in source reference.
    """
    if reference is None:
        reference = read_reference_sidecar(path) or Reference.SOURCE
    return read_flo(path, reference)


def write_image(path, image) -> None:
    """Write an RGB (H, W, 3) or grayscale (H, W) uint8 image as a pixmap."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        raise FlowError(f"image dtype must be uint8, got {arr.dtype}")
    if arr.ndim == 3 and arr.shape[2] == 3:
        kind = b"P6"
    elif arr.ndim == 2:
        kind = b"P5"
    else:
        raise FlowError(f"image shape must be (H, W, 3) or (H, W), got {arr.shape}")
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(kind + b"\n%d %d\n255\n" % (w, h))
        fh.write(arr.tobytes())


def write_mask(path, mask) -> None:
    """Write a boolean mask as a 0/255 grayscale pixmap."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise FlowError(f"mask must be 2-D, got shape {arr.shape}")
    write_image(path, np.where(arr.astype(bool), 255, 0).astype(np.uint8))


def _read_pnm_tokens(blob: bytes, count: int) -> tuple[list[int], int]:
    """First `count` whitespace/comment-delimited integers and end offset."""
    tokens: list[int] = []
    pos = 0
    current = b""
    while len(tokens) < count and pos < len(blob):
        ch = blob[pos : pos + 1]
        pos += 1
        if ch == b"#":
            while pos < len(blob) and blob[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            if current:
                tokens.append(int(current))
                current = b""
        else:
            current += ch
    if len(tokens) < count:
        raise FlowError("truncated pixmap header")
    return tokens, pos


def read_image(path):
    """Read a binary pixmap: P6 gives (H, W, 3) uint8, P5 gives (H, W)."""
    blob = Path(path).read_bytes()
    if blob[:2] not in (b"P5", b"P6"):
        raise FlowError(f"{path}: not a binary pixmap (P5/P6)")
    channels = 3 if blob[:2] == b"P6" else 1
    (w, h, maxval), offset = _read_pnm_tokens(blob[2:], 3)
    if maxval != 255:
        raise FlowError(f"{path}: only maxval 255 pixmaps are supported")
    pixels = blob[2 + offset :]
    expected = h * w * channels
    if len(pixels) < expected:
        raise FlowError(f"{path}: truncated pixmap payload")
    arr = np.frombuffer(pixels[:expected], dtype=np.uint8)
    return arr.reshape(h, w, 3) if channels == 3 else arr.reshape(h, w)
