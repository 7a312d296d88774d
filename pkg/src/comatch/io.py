"""File formats: TSR1 tensors, binary PGM images, match CSV, parameter bundles.

TSR1 layout: ``b"TSR1"``, u32 little-endian rank, ``rank`` u32 dims, then the
raw little-endian float32 payload in row-major order.
"""

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import TensorFormatError

MAGIC = b"TSR1"


def encode_tsr1(array):
    a = np.ascontiguousarray(array, dtype="<f4")
    header = MAGIC + struct.pack(f"<I{a.ndim}I", a.ndim, *a.shape)
    return header + a.tobytes()


def decode_tsr1(buf, offset=0, source="<bytes>"):
    """Decode one TSR1 record starting at ``offset``.

    Returns ``(array, next_offset)``.  Malformed input raises
    :class:`TensorFormatError` naming the offending byte offset.
    """
    if buf[offset : offset + 4] != MAGIC:
        raise TensorFormatError(f"{source}: bad magic {bytes(buf[offset:offset + 4])!r} at offset {offset}")
    pos = offset + 4
    if len(buf) < pos + 4:
        raise TensorFormatError(f"{source}: truncated rank field at offset {pos}")
    (rank,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    if rank > 16:
        raise TensorFormatError(f"{source}: implausible rank {rank} at offset {pos - 4}")
    if len(buf) < pos + 4 * rank:
        raise TensorFormatError(f"{source}: truncated dims at offset {pos}")
    dims = struct.unpack_from(f"<{rank}I", buf, pos)
    pos += 4 * rank
    nbytes = 4 * int(np.prod(dims, dtype=np.int64))
    if len(buf) < pos + nbytes:
        raise TensorFormatError(
            f"{source}: payload truncated at offset {pos}: need {nbytes} bytes, have {len(buf) - pos}"
        )
    a = np.frombuffer(buf, dtype="<f4", count=nbytes // 4, offset=pos).astype(np.float32).reshape(dims)
    return a, pos + nbytes


def save_tsr1(path, array):
    Path(path).write_bytes(encode_tsr1(array))


def load_tsr1(path):
    buf = Path(path).read_bytes()
    a, end = decode_tsr1(buf, 0, source=str(path))
    if end != len(buf):
        raise TensorFormatError(f"{path}: {len(buf) - end} trailing bytes at offset {end}")
    return a


def save_bundle(directory, tensors, meta=None):
    """Write named tensors as concatenated TSR1 records plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    blob = bytearray()
    entries = []
    for name in sorted(tensors):
        rec = encode_tsr1(tensors[name])
        entries.append({"name": name, "offset": len(blob), "shape": list(np.shape(tensors[name]))})
        blob += rec
    (directory / "params.tsr").write_bytes(bytes(blob))
    manifest = {"format": "TSR1-concat", "file": "params.tsr", "tensors": entries, "meta": meta or {}}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_bundle(directory):
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    path = directory / manifest["file"]
    buf = path.read_bytes()
    out = {}
    for e in manifest["tensors"]:
        a, _ = decode_tsr1(buf, e["offset"], source=str(path))
        if list(a.shape) != e["shape"]:
            raise TensorFormatError(f"{path}: record {e['name']} at offset {e['offset']} has shape {a.shape}")
        out[e["name"]] = a
    return out, manifest.get("meta", {})


def _pgm_tokens(buf):
    """Yield ``(token, end_offset)`` for the PGM header, skipping comments."""
    pos = 0
    n = len(buf)
    while True:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TensorFormatError(f"PGM header truncated at offset {pos}")
        yield buf[start:pos], pos


def read_pgm(path):
    """Read an 8-bit binary PGM (P5) as float32 in [0, 1], shape ``[H, W]``."""
    buf = Path(path).read_bytes()
    toks = _pgm_tokens(buf)
    magic, _ = next(toks)
    if magic != b"P5":
        raise TensorFormatError(f"{path}: not a binary PGM (magic {magic!r} at offset 0)")
    try:
        w = int(next(toks)[0])
        h = int(next(toks)[0])
        maxval_tok, end = next(toks)
        maxval = int(maxval_tok)
    except ValueError as exc:
        raise TensorFormatError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise TensorFormatError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    start = end + 1
    data = np.frombuffer(buf, dtype=np.uint8, count=h * w, offset=start) if len(buf) >= start + h * w else None
    if data is None:
        raise TensorFormatError(f"{path}: pixel data truncated at offset {start}")
    return data.reshape(h, w).astype(np.float32) / 255.0


def to_u8(img):
    return np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, img):
    """Write a ``[H, W]`` array in [0, 1] as P5, value ``round(255 * v)``."""
    u8 = to_u8(img)
    h, w = u8.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + u8.tobytes())


MATCH_HEADER = ["xA", "yA", "xB", "yB", "score"]


def write_matches_csv(path, xa, xb, score):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(MATCH_HEADER)
        for (ax, ay), (bx, by), s in zip(np.asarray(xa), np.asarray(xb), np.asarray(score)):
            wr.writerow([f"{ax:.6f}", f"{ay:.6f}", f"{bx:.6f}", f"{by:.6f}", f"{s:.6f}"])


def read_matches_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0)
    arr = np.array([[float(r[k]) for k in MATCH_HEADER] for r in rows])
    return arr[:, 0:2], arr[:, 2:4], arr[:, 4]


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
