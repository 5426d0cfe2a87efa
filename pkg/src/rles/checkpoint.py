"""Binary checkpoints with bit-exact restart.

Layout (all integers little-endian)::

    magic    8 bytes  b"RLESCKPT"
    version  uint32
    hlen     uint64   length of the JSON header
    header   hlen bytes, UTF-8 JSON
    payload  u, v, w as float64 '<f8' in (x, z, y) order, y fastest;
             then, if present, the Adams-Bashforth history as three
             complex128 '<c16' spectral arrays; then statistics arrays
             in the order listed by the header
    crc      uint32   CRC-32 of every preceding byte

Floats in the header are written with ``repr`` and therefore round-trip
exactly.
"""

from dataclasses import asdict
import json
import os
import struct
import zlib

import numpy as np

from .config import config_digest, config_from_json, config_to_json
from .errors import CheckpointError
from .fields import VelocityField
from .grid import GridConfig, build_grid
from .solver import SolverState
from .stats import FlowStatistics

MAGIC = b"RLESCKPT"
FORMAT_VERSION = 1
SUPPORTED_VERSIONS = (1,)


def _encode(state, config, stats=None):
    grid_cfg = config.grid
    shape = (grid_cfg.Nx, grid_cfg.Nz, grid_cfg.Ny)
    spec_shape = (grid_cfg.Nx // 2 + 1, grid_cfg.Nz, grid_cfg.Ny)
    chunks = []
    for c in state.vel.to_physical().components:
        a = np.asarray(c.data)
        if a.shape != shape:
            raise CheckpointError(f"velocity shape {a.shape} does not match grid {shape}")
        chunks.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    has_history = state.history is not None
    if has_history:
        for h in state.history:
            chunks.append(np.ascontiguousarray(h, dtype="<c16").reshape(spec_shape).tobytes())
    stats_info = None
    if stats is not None:
        arrays = stats.state_arrays()
        stats_info = {"n_samples": stats.n_samples, "t0": stats.t0, "t1": stats.t1,
                      "y": [float(v) for v in stats.y],
                      "arrays": [[k, int(np.size(v))] for k, v in arrays.items()]}
        for v in arrays.values():
            chunks.append(np.ascontiguousarray(v, dtype="<f8").tobytes())
    header = {
        "version": FORMAT_VERSION,
        "grid": asdict(grid_cfg),
        "config": config_to_json(config),
        "config_digest": config_digest(config),
        "step": int(state.step),
        "t": float(state.t),
        "dpdx": float(state.dpdx),
        "nu": float(state.nu),
        "has_history": has_history,
        "stats": stats_info,
    }
    head = json.dumps(header, sort_keys=True).encode()
    body = MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(head)) + head + b"".join(chunks)
    return body + struct.pack("<I", zlib.crc32(body))


def write_checkpoint(path, state, config, stats=None):
    """Write atomically: a temporary file is renamed over ``path``."""
    data = _encode(state, config, stats)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return path


class Checkpoint:
    """Decoded checkpoint contents."""

    def __init__(self, header, state, config, stats):
        self.header = header
        self.state = state
        self.config = config
        self.stats = stats

    @property
    def version(self):
        return self.header["version"]


def read_checkpoint(path):
    """Load and verify a checkpoint; raises :class:`CheckpointError` on any defect."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 16 or data[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError(f"{path}: CRC mismatch (file corrupt or truncated)")
    version, hlen = struct.unpack_from("<IQ", body, len(MAGIC))
    if version not in SUPPORTED_VERSIONS:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    pos = len(MAGIC) + 12
    try:
        header = json.loads(body[pos:pos + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header ({exc})") from None
    pos += hlen

    grid_cfg = GridConfig(**header["grid"])
    config = config_from_json(header["config"])
    if config.grid != grid_cfg:
        raise CheckpointError(f"{path}: grid in header disagrees with run configuration")
    shape = (grid_cfg.Nx, grid_cfg.Nz, grid_cfg.Ny)
    spec_shape = (grid_cfg.Nx // 2 + 1, grid_cfg.Nz, grid_cfg.Ny)

    def take(dtype, count, shape_):
        nonlocal pos
        nbytes = np.dtype(dtype).itemsize * count
        if pos + nbytes > len(body):
            raise CheckpointError(f"{path}: payload shorter than the header describes")
        arr = np.frombuffer(body, dtype=dtype, count=count, offset=pos).reshape(shape_)
        pos += nbytes
        return arr.astype(np.dtype(dtype).newbyteorder("="))

    n = int(np.prod(shape))
    comps = [take("<f8", n, shape) for _ in range(3)]
    history = None
    if header["has_history"]:
        m = int(np.prod(spec_shape))
        history = tuple(take("<c16", m, spec_shape) for _ in range(3))
    stats = None
    info = header.get("stats")
    if info is not None:
        stats = FlowStatistics(np.array(info["y"]))
        arrays = {k: take("<f8", size, (size,)) for k, size in info["arrays"]}
        for k in list(arrays):
            if not k.startswith("dpdx."):
                arrays[k] = arrays[k].reshape(stats.y.shape)
        stats.restore_arrays(arrays, info["n_samples"], info["t0"], info["t1"])
    if pos != len(body):
        raise CheckpointError(f"{path}: {len(body) - pos} unexpected trailing bytes")

    grid = build_grid(grid_cfg)
    vel = VelocityField.from_arrays(grid, *comps)
    state = SolverState(vel=vel, dpdx=header["dpdx"], t=header["t"], step=header["step"],
                        nu=header["nu"], history=history)
    return Checkpoint(header, state, config, stats)


def states_bitwise_equal(a, b):
    """True when every stored quantity of two solver states matches bit for bit."""
    if (a.step, a.t, a.dpdx, a.nu) != (b.step, b.t, b.dpdx, b.nu):
        return False
    for x, y in zip(a.vel.to_physical().arrays(), b.vel.to_physical().arrays()):
        if x.shape != y.shape or x.tobytes() != y.tobytes():
            return False
    if (a.history is None) != (b.history is None):
        return False
    if a.history is not None:
        return all(x.tobytes() == y.tobytes() for x, y in zip(a.history, b.history))
    return True
