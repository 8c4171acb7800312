"""File formats: signal CSV, loss-history CSV, PGM (binary P5, 8/16-bit),
PNG, raw float grids, and orientation maps.

All writers are deterministic: identical data produces identical bytes.
"""

import hashlib
import math
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError

SIGNAL_HEADER = "# tgd-signal v1"
GRID_MAGIC = b"TGDF"


# --- signals ---------------------------------------------------------------

def write_signal(path, values: np.ndarray, header: bool = False):
    values = np.asarray(values, dtype=np.float64)
    lines = []
    if header:
        lines.append(f"{SIGNAL_HEADER} N={values.size}")
    lines.extend(f"{v:.17g}" for v in values)
    Path(path).write_text("\n".join(lines) + "\n")


def read_signal(path) -> np.ndarray:
    path = Path(path)
    values = []
    offset = 0
    declared = None
    for line in path.read_text().splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            if stripped.startswith(SIGNAL_HEADER):
                try:
                    declared = int(stripped.split("N=")[1])
                except (IndexError, ValueError):
                    raise DataError(f"{path}: byte {offset}: bad signal header {stripped!r}") from None
        elif stripped:
            try:
                values.append(float(stripped))
            except ValueError:
                raise DataError(f"{path}: byte {offset}: not a number: {stripped!r}") from None
        offset += len(line.encode()) + 1
    if declared is not None and declared != len(values):
        raise DataError(f"{path}: header declares N={declared} but found {len(values)} values")
    if not values:
        raise DataError(f"{path}: byte 0: empty signal file")
    return np.array(values)


def write_history(path, history: np.ndarray):
    """Loss history rows (epoch, total, first, second, offset, lr)."""
    with open(path, "w") as fh:
        fh.write("epoch,L_total,L_1st,L_2nd,L_offset,lr\n")
        for row in history:
            fh.write(f"{int(row[0])},{row[1]:.17g},{row[2]:.17g},"
                     f"{row[3]:.17g},{row[4]:.17g},{row[5]:.17g}\n")


# --- PGM -------------------------------------------------------------------

def write_pgm(path, image: np.ndarray, max_value: int | None = None):
    """Binary P5; 16-bit big-endian samples when max_value > 255."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise DataError(f"PGM wants a 2D image, got rank {image.ndim}")
    if max_value is None:
        max_value = 65535 if image.dtype == np.uint16 else 255
    if not 0 < max_value < 65536:
        raise DataError(f"PGM max value out of range: {max_value}")
    data = np.clip(np.round(image), 0, max_value)
    h, w = image.shape
    header = f"P5\n{w} {h}\n{max_value}\n".encode()
    payload = data.astype(">u2" if max_value > 255 else "u1").tobytes()
    Path(path).write_bytes(header + payload)


def _parse_pgm(buf: bytes, start: int, source: str):
    """One P5 block from ``buf`` at ``start``; returns (image, next_offset)."""
    pos = start
    fields = []
    while len(fields) < 4:
        if pos >= len(buf):
            raise DataError(f"{source}: byte {pos}: truncated PGM header")
        if buf[pos:pos + 1] == b"#":
            nl = buf.find(b"\n", pos)
            pos = len(buf) if nl < 0 else nl + 1
            continue
        if buf[pos:pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(buf) and not buf[end:end + 1].isspace():
            end += 1
        fields.append(buf[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise DataError(f"{source}: byte {start}: not binary PGM (P5), got {fields[0]!r}")
    try:
        w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    except ValueError:
        raise DataError(f"{source}: byte {start}: malformed PGM dimensions") from None
    if not (w > 0 and h > 0 and 0 < maxval < 65536):
        raise DataError(f"{source}: byte {start}: bad PGM dimensions {w}x{h} max {maxval}")
    pos += 1  # single whitespace after maxval
    itemsize = 2 if maxval > 255 else 1
    nbytes = w * h * itemsize
    if len(buf) - pos < nbytes:
        raise DataError(f"{source}: byte {pos}: expected {nbytes} pixel bytes, "
                        f"found {len(buf) - pos}")
    dtype = ">u2" if itemsize == 2 else "u1"
    img = np.frombuffer(buf[pos:pos + nbytes], dtype=dtype).reshape(h, w)
    return img.astype(np.uint16 if itemsize == 2 else np.uint8), pos + nbytes


def read_pgm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    img, _ = _parse_pgm(buf, 0, str(path))
    return img


def read_pgm_stream(path) -> list[np.ndarray]:
    """All frames from a concatenated multi-frame P5 stream."""
    buf = Path(path).read_bytes()
    frames = []
    pos = 0
    while pos < len(buf):
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(buf):
            break
        img, pos = _parse_pgm(buf, pos, str(path))
        frames.append(img)
    if not frames:
        raise DataError(f"{path}: byte 0: no PGM frames found")
    return frames


# --- PNG -------------------------------------------------------------------

def write_png(path, image: np.ndarray):
    """Grayscale (2D) or RGB (3D, last axis 3) 8-bit PNG."""
    image = np.asarray(image)
    if image.ndim == 2:
        arr = np.clip(np.round(image), 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(path, format="PNG")
    elif image.ndim == 3 and image.shape[2] == 3:
        arr = np.clip(np.round(image), 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="RGB").save(path, format="PNG")
    else:
        raise DataError(f"PNG wants 2D grayscale or HxWx3 RGB, got shape {image.shape}")


def read_image(path) -> np.ndarray:
    """Grayscale image from PGM or PNG, by extension."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"))
    except Exception as exc:
        raise DataError(f"{path}: byte 0: cannot read image: {exc}") from None


def read_frame_dir(path) -> np.ndarray:
    """Stack of lexicographically ordered PGM/PNG frames from a directory."""
    path = Path(path)
    files = sorted(p for p in path.iterdir()
                   if p.suffix.lower() in (".pgm", ".png"))
    if not files:
        raise DataError(f"{path}: no .pgm or .png frames in directory")
    frames = [np.asarray(read_image(p), dtype=np.float64) for p in files]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise DataError(f"{path}: frames have mixed shapes {shapes}")
    return np.stack(frames)


# --- raw float grids -------------------------------------------------------

def write_float_grid(path, data: np.ndarray):
    """Rank-1/2 float32 grid; 16-byte header: magic, rank, rows, cols."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 1:
        rank, rows, cols = 1, 1, data.shape[0]
    elif data.ndim == 2:
        rank, (rows, cols) = 2, data.shape
    else:
        raise DataError(f"float grid supports rank 1 or 2, got rank {data.ndim}")
    header = GRID_MAGIC + struct.pack("<III", rank, rows, cols)
    Path(path).write_bytes(header + data.tobytes())


def read_float_grid(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if len(buf) < 16 or buf[:4] != GRID_MAGIC:
        raise DataError(f"{path}: byte 0: not a {GRID_MAGIC.decode()} grid")
    rank, rows, cols = struct.unpack("<III", buf[4:16])
    if rank not in (1, 2):
        raise DataError(f"{path}: byte 4: unsupported rank {rank}")
    expected = rows * cols * 4
    if len(buf) - 16 != expected:
        raise DataError(f"{path}: byte 16: expected {expected} data bytes, "
                        f"found {len(buf) - 16}")
    data = np.frombuffer(buf[16:], dtype="<f4")
    return data.copy() if rank == 1 else data.reshape(rows, cols).copy()


# --- orientation maps ------------------------------------------------------

def write_orientation_csv(path, orientation: np.ndarray, edges: np.ndarray):
    """(x, y, angle_degrees) rows for every edge pixel."""
    orientation = np.asarray(orientation, dtype=np.float64)
    edges = np.asarray(edges, dtype=bool)
    with open(path, "w") as fh:
        fh.write("x,y,angle_degrees\n")
        for r, c in np.argwhere(edges):
            fh.write(f"{c},{r},{math.degrees(orientation[r, c]):.6f}\n")


def orientation_png(orientation: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Edge pixels colored by angle (hue), background black."""
    from .edge3d import _hsv_to_rgb

    orientation = np.asarray(orientation, dtype=np.float64)
    edges = np.asarray(edges, dtype=bool)
    hue = (orientation + math.pi / 2.0) / math.pi * 360.0
    sat = np.where(edges, 1.0, 0.0)
    val = np.where(edges, 1.0, 0.0)
    return _hsv_to_rgb(hue, sat, val)


# --- manifests -------------------------------------------------------------

def sha256_file(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def write_manifest(path, command: str, params: dict, inputs: list):
    """Reproducibility record: command, sorted parameters, input hashes."""
    lines = ["tgd-manifest v1", f"command = {command}"]
    for key in sorted(params):
        lines.append(f"{key} = {params[key]}")
    for name in inputs:
        lines.append(f"input {name} sha256 {sha256_file(name)}")
    Path(path).write_text("\n".join(str(l) for l in lines) + "\n")
