"""Image files: flat little-endian float64 with a JSON sidecar, plus 16-bit PGM previews."""
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _stem(path):
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".f64", ".json") else path


def save_image(path, image, **meta):
    """Write ``<stem>.f64`` and ``<stem>.json``; returns the stem path."""
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("expected a square 2-D image")
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    x.astype("<f8").tofile(stem.with_suffix(".f64"))
    side = {"schema_version": SCHEMA_VERSION, "N": int(x.shape[0]), "dtype": "float64",
            "byte_order": "little", "range": [float(x.min()), float(x.max())]}
    side.update(meta)
    stem.with_suffix(".json").write_text(json.dumps(side, indent=1, sort_keys=True))
    return stem


def load_image(path):
    """Return ``(image, sidecar dict)``."""
    stem = _stem(path)
    side = json.loads(stem.with_suffix(".json").read_text())
    N = int(side["N"])
    dtype = "<f8" if side.get("byte_order", "little") == "little" else ">f8"
    data = np.fromfile(stem.with_suffix(".f64"), dtype=dtype)
    if data.size != N * N:
        raise ValueError(f"{stem}.f64 holds {data.size} values, sidecar says {N}x{N}")
    return data.reshape(N, N).astype(np.float64), side


def write_pgm(path, image, value_range=(-1.0, 1.0)):
    """16-bit binary PGM, values clipped to ``value_range``."""
    lo, hi = value_range
    if not hi > lo:
        raise ValueError("empty value range")
    x = np.clip((np.asarray(image, float) - lo) / (hi - lo), 0.0, 1.0)
    data = np.round(x * 65535).astype(">u2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())
    return path


def read_pgm(path, value_range=(-1.0, 1.0)):
    raw = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        fields.append(raw[pos:end].decode("ascii"))
        pos = end
    if fields[0] != "P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    dtype = ">u2" if maxval > 255 else "u1"
    data = np.frombuffer(raw[pos + 1:], dtype=dtype, count=w * h).reshape(h, w)
    lo, hi = value_range
    return lo + (hi - lo) * data.astype(float) / maxval
