"""Run orchestration: transient and sampling phases, checkpoints, artifacts."""

import json
import logging
import os
import subprocess
import time

from . import __version__
from .checkpoint import read_checkpoint, write_checkpoint
from .config import config_digest, config_to_json, format_config
from .errors import SolverDivergenceError
from .solver import ChannelSolver
from .stats import FlowStatistics, finalize

log = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.bin"
ARTIFACTS = ("config.txt", "profiles.csv", "shear_balance.csv", "manifest.json")


def version_string():
    """Package version plus the short git hash of the source tree when available."""
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        rev = out.stdout.strip() if out.returncode == 0 else ""
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{__version__}+g{rev}" if rev else f"{__version__}+unknown"


class RunResult:
    def __init__(self, output, state, stats, report, manifest):
        self.output = output
        self.state = state
        self.stats = stats
        self.report = report
        self.manifest = manifest


def _write_manifest(path, manifest):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def run_simulation(config, output, state=None, stats=None, stop_at=None):
    """Run (or continue) a simulation and write its artifacts into ``output``.

    The run covers ``config.transient_steps`` unsampled steps followed by
    ``config.n_steps`` steps that are each sampled.  ``state`` and
    ``stats`` resume an earlier run; ``stop_at`` ends early at that step
    number (used to emulate an interrupted job).
    """
    os.makedirs(output, exist_ok=True)
    with open(os.path.join(output, "config.txt"), "w") as fh:
        fh.write(format_config(config))
    solver = ChannelSolver(config)
    if state is None:
        state = solver.initial_state()
    if stats is None:
        stats = FlowStatistics(solver.grid.y)
    total = config.transient_steps + config.n_steps
    end = total if stop_at is None else min(stop_at, total)
    ckpt_path = os.path.join(output, CHECKPOINT_NAME)
    start_clock = time.perf_counter()
    status = "completed"
    try:
        while state.step < end:
            state = solver.step(state)
            if state.step > config.transient_steps:
                stats.accumulate(state.vel, solver.last_tau12_mean, state.dpdx, state.t)
            if config.checkpoint_every and state.step % config.checkpoint_every == 0:
                write_checkpoint(ckpt_path, state, config, stats)
                log.info("step %d t=%.5f dpdx=%.6f checkpoint written", state.step, state.t, state.dpdx)
    except SolverDivergenceError:
        _write_manifest(os.path.join(output, "manifest.json"), {
            "status": "diverged", "step": state.step, "version": version_string(),
            "config": config_to_json(config), "config_digest": config_digest(config),
            "last_checkpoint": ckpt_path if os.path.exists(ckpt_path) else None,
        })
        raise
    wall = time.perf_counter() - start_clock
    if state.step < total:
        status = "interrupted"
    write_checkpoint(ckpt_path, state, config, stats)

    manifest = {
        "status": status,
        "version": version_string(),
        "config": config_to_json(config),
        "config_digest": config_digest(config),
        "step": state.step,
        "t": state.t,
        "dpdx": state.dpdx,
        "n_samples": stats.n_samples,
        "wall_clock_s": wall,
        "artifacts": [CHECKPOINT_NAME, "config.txt"],
    }
    report = None
    if stats.n_samples > 0:
        report = finalize(stats, config.nu) if config.nu > 0 else None
    if report is not None:
        report.write_csv(os.path.join(output, "profiles.csv"))
        report.write_shear_balance_csv(os.path.join(output, "shear_balance.csv"))
        manifest.update({
            "u_tau": report.u_tau, "re_tau": report.re_tau,
            "u_tau_lower": report.u_tau_lower, "u_tau_upper": report.u_tau_upper,
            "shear_residual": report.shear_residual, "flow_reversal": report.flow_reversal,
            "mean_dpdx": report.mean_dpdx,
        })
        manifest["artifacts"] += ["profiles.csv", "shear_balance.csv"]
    manifest["artifacts"].append("manifest.json")
    _write_manifest(os.path.join(output, "manifest.json"), manifest)
    return RunResult(output, state, stats, report, manifest)


def restart_simulation(checkpoint, extra_steps=None, output=None):
    """Continue from a checkpoint file.

    Without ``extra_steps`` the run proceeds to the end of its configured
    schedule; otherwise the sampling phase is extended so that exactly
    ``extra_steps`` further steps are taken.
    """
    from dataclasses import replace

    ckpt = read_checkpoint(checkpoint)
    config = ckpt.config
    if extra_steps is not None:
        target = ckpt.state.step + int(extra_steps)
        config = replace(config, n_steps=max(0, target - config.transient_steps))
    output = output or os.path.dirname(os.path.abspath(checkpoint))
    return run_simulation(config, output, state=ckpt.state, stats=ckpt.stats)
