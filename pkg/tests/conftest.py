"""Shared fixtures: the acceptance-scale runs, executed once per session.

Each fixture returns a dict with the RunResult, the wall-clock time of the
run() call, and (where needed) the per-step states captured through the
on_step hook, prepended with the initial intact state at t=0.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from plastdam.evolution import run
from plastdam.fields import State
from plastdam.io_cli import parse_config


def _timed_run(overrides: dict, capture: bool):
    config = parse_config(overrides)
    states: list[tuple[float, State]] = []
    on_step = (lambda k, t, state, record: states.append((t, state))) \
        if capture else None
    t0 = time.perf_counter()
    result = run(config, on_step=on_step)
    wall = time.perf_counter() - t0
    if capture:
        initial = State(u=np.zeros((result.mesh.n_nodes, 2)),
                        pi=np.zeros((result.mesh.n_elements, 2, 2)),
                        zeta=np.ones(result.mesh.n_nodes))
        states.insert(0, (0.0, initial))
    return {"result": result, "wall": wall, "states": states,
            "config": config}


@pytest.fixture(scope="session")
def asym_tau1():
    """Asymmetric preset, n_sub=12, tau=1, with per-step state capture."""
    return _timed_run({"variant": "asymmetric", "n_sub": 12, "tau": 1.0},
                      capture=True)


@pytest.fixture(scope="session")
def asym_tau05():
    """Asymmetric preset, n_sub=12, tau=0.5."""
    return _timed_run({"variant": "asymmetric", "n_sub": 12, "tau": 0.5},
                      capture=False)


@pytest.fixture(scope="session")
def sym_tau1():
    """Symmetric preset, n_sub=12, tau=1, with per-step state capture."""
    return _timed_run({"variant": "symmetric", "n_sub": 12, "tau": 1.0},
                      capture=True)


@pytest.fixture(scope="session")
def coarse_run():
    """Asymmetric preset on a coarse mesh (n_sub=6, tau=1), states kept."""
    return _timed_run({"variant": "asymmetric", "n_sub": 6, "tau": 1.0},
                      capture=True)
