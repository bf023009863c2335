"""Map serialization: 8-bit binary PGM and row-major CSV, written atomically."""

import os
import tempfile

import numpy as np


def _atomic_write(path, data):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_pgm_bytes(grid):
    """P5 PGM with values linearly mapped to 0..255; constant maps render
    mid-gray. Row 0 of the array is the bottom of the image."""
    grid = np.asarray(grid, dtype=float)
    lo, hi = float(grid.min()), float(grid.max())
    if hi - lo < 1e-300:
        pix = np.full(grid.shape, 128, dtype=np.uint8)
    else:
        pix = np.round((grid - lo) / (hi - lo) * 255.0).astype(np.uint8)
    pix = pix[::-1]  # y-up world rows to top-down raster rows
    header = f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode()
    return header + pix.tobytes()


def write_pgm(grid, path):
    _atomic_write(path, to_pgm_bytes(grid))


def write_csv(grid, path):
    grid = np.asarray(grid, dtype=float)
    lines = [",".join(f"{v:.6g}" for v in row) for row in grid]
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def read_csv(path):
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    return np.array(rows)
