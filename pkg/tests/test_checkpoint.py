import math
import os
import struct

import numpy as np
import pytest

from rles.checkpoint import (FORMAT_VERSION, MAGIC, read_checkpoint, states_bitwise_equal,
                             write_checkpoint)
from rles.errors import CheckpointError
from rles.grid import GridConfig
from rles.sgs import SgsConfig
from rles.solver import ChannelSolver, RunConfig
from rles.stats import FlowStatistics, finalize

FIXTURE = os.path.join(os.path.dirname(__file__), "fixtures", "checkpoint_v1.bin")
CONFIG = RunConfig(dt=1e-3, n_steps=20, u_m=1.0, re=100.0, perturbation=0.2, seed=1,
                   sgs=SgsConfig(model="smagorinsky"), stabilizer_alpha=0.02,
                   grid=GridConfig(Lx=2 * math.pi, Lz=math.pi, Nx=16, Ny=17, Nz=16))


@pytest.fixture(scope="module")
def advanced():
    solver = ChannelSolver(CONFIG)
    state = solver.initial_state()
    stats = FlowStatistics(solver.grid.y)
    for _ in range(4):
        state = solver.step(state)
        stats.accumulate(state.vel, solver.last_tau12_mean, state.dpdx, state.t)
    return state, stats


def test_round_trip_is_bitwise(tmp_path, advanced):
    state, stats = advanced
    path = tmp_path / "c.bin"
    write_checkpoint(path, state, CONFIG, stats)
    ck = read_checkpoint(path)
    assert states_bitwise_equal(ck.state, state)
    assert ck.config == CONFIG
    assert ck.stats.n_samples == stats.n_samples
    for k, v in stats.state_arrays().items():
        assert np.asarray(v).tobytes() == np.asarray(ck.stats.state_arrays()[k]).tobytes()
    assert (ck.stats.t0, ck.stats.t1) == (stats.t0, stats.t1)


def test_round_trip_without_history_or_stats(tmp_path):
    solver = ChannelSolver(CONFIG)
    state = solver.initial_state()
    write_checkpoint(tmp_path / "c.bin", state, CONFIG)
    ck = read_checkpoint(tmp_path / "c.bin")
    assert ck.state.history is None and ck.stats is None
    assert states_bitwise_equal(ck.state, state)


def test_payload_is_little_endian_y_fastest(tmp_path, advanced):
    state, _ = advanced
    path = tmp_path / "c.bin"
    write_checkpoint(path, state, CONFIG)
    data = path.read_bytes()
    assert data[:8] == MAGIC
    version, hlen = struct.unpack_from("<IQ", data, 8)
    assert version == FORMAT_VERSION
    start = 20 + hlen
    first = np.frombuffer(data, dtype="<f8", count=CONFIG.grid.Ny, offset=start)
    assert first.tobytes() == state.vel.u.data[0, 0, :].astype("<f8").tobytes()


def test_restart_continues_bitwise(tmp_path):
    solver = ChannelSolver(CONFIG)
    ref = solver.advance(solver.initial_state(), 12)
    part = solver.advance(solver.initial_state(), 5)
    write_checkpoint(tmp_path / "c.bin", part, CONFIG)
    resumed = read_checkpoint(tmp_path / "c.bin").state
    fresh = ChannelSolver(CONFIG)
    out = fresh.advance(resumed, 7)
    assert states_bitwise_equal(out, ref)


@pytest.mark.parametrize("where", ["payload", "header", "crc"])
def test_corruption_detected(tmp_path, advanced, where):
    state, stats = advanced
    path = tmp_path / "c.bin"
    write_checkpoint(path, state, CONFIG, stats)
    data = bytearray(path.read_bytes())
    pos = {"payload": len(data) - 100, "header": 40, "crc": len(data) - 1}[where]
    data[pos] ^= 0x01
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError):
        read_checkpoint(path)


def test_truncated_and_foreign_files(tmp_path, advanced):
    state, _ = advanced
    path = tmp_path / "c.bin"
    write_checkpoint(path, state, CONFIG)
    path.write_bytes(path.read_bytes()[:-50])
    with pytest.raises(CheckpointError):
        read_checkpoint(path)
    other = tmp_path / "x.bin"
    other.write_bytes(b"not a checkpoint at all, really")
    with pytest.raises(CheckpointError):
        read_checkpoint(other)


def test_unsupported_version_rejected(tmp_path, advanced):
    import zlib
    state, _ = advanced
    path = tmp_path / "c.bin"
    write_checkpoint(path, state, CONFIG)
    body = bytearray(path.read_bytes()[:-4])
    struct.pack_into("<I", body, 8, 99)
    path.write_bytes(bytes(body) + struct.pack("<I", zlib.crc32(bytes(body))))
    with pytest.raises(CheckpointError, match="version 99"):
        read_checkpoint(path)


def test_version_one_fixture_loads():
    ck = read_checkpoint(FIXTURE)
    assert ck.version == 1
    assert ck.state.step == 3
    assert ck.state.t == pytest.approx(0.003, rel=1e-12)
    assert ck.config.sgs.model == "rles"
    assert (ck.config.grid.Nx, ck.config.grid.Ny, ck.config.grid.Nz) == (8, 9, 8)
    assert ck.state.history is not None
    assert ck.stats.n_samples == 3
    rep = finalize(ck.stats, ck.config.nu)
    assert rep.u_tau > 0
    # the loaded state can be advanced
    solver = ChannelSolver(ck.config)
    nxt = solver.step(ck.state)
    assert nxt.step == 4 and np.isfinite(nxt.vel.u.data).all()
