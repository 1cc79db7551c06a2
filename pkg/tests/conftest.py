from __future__ import annotations

import os
import shutil
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from alpha_patch.cli import main
from alpha_patch.config import load_config
from alpha_patch.io import RunLog
from alpha_patch.model import OddProfile, log_nodes
from alpha_patch.parallel import THREADS_ENV

settings.register_profile(
    "repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = ROOT / "configs" / "default.json"

ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"ACCEPTANCE {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def barrier_profile(a: float = 1.0, p: float = 0.25, n: int = 1800, lo: float = 1e-6,
                    hi: float = 1e12) -> OddProfile:
    """``(x+a)^p - a^p`` on log nodes with exact slopes; the far end makes the tail law exact to ~1e-12."""
    x = log_nodes(n, lo * a, hi * a)
    v = (x + a) ** p - a**p
    coef = (v[-1] + a**p) / x[-1] ** p
    return OddProfile(x, v, p, float(coef), -(a**p), p * (x + a) ** (p - 1.0))


def _simulate(out: Path, threads: str, extra=()) -> Path:
    old = os.environ.get(THREADS_ENV)
    os.environ[THREADS_ENV] = threads
    try:
        code = main(["simulate", "--config", str(DEFAULT_CONFIG), "--out", str(out), *extra])
    finally:
        if old is None:
            os.environ.pop(THREADS_ENV, None)
        else:
            os.environ[THREADS_ENV] = old
    assert code == 0
    return out


@pytest.fixture(scope="session")
def default_config():
    return load_config(DEFAULT_CONFIG)


@pytest.fixture(scope="session")
def default_run_dir(tmp_path_factory) -> Path:
    return _simulate(tmp_path_factory.mktemp("run_a") / "out", "1")


@pytest.fixture(scope="session")
def default_run_dir_threaded(tmp_path_factory, default_config) -> Path:
    """Same run with a four-worker pool, forced even on a single-core host."""
    from alpha_patch.io import write_run
    from alpha_patch.solver import run

    old = os.environ.pop(THREADS_ENV, None)
    try:
        result = run(default_config, workers=4)
    finally:
        if old is not None:
            os.environ[THREADS_ENV] = old
    return write_run(result, tmp_path_factory.mktemp("run_b") / "out", plots=False)


@pytest.fixture(scope="session")
def default_run_dir_env(tmp_path_factory) -> Path:
    return _simulate(tmp_path_factory.mktemp("run_c") / "out", "3", ["--no-plots"])


@pytest.fixture(scope="session")
def default_log(default_run_dir) -> RunLog:
    return RunLog.from_directory(default_run_dir)


@pytest.fixture(scope="session")
def half_dt_result(default_config):
    from alpha_patch.solver import run

    return run(default_config, dt_scale=0.5)


@pytest.fixture()
def run_copy(default_run_dir, tmp_path) -> Path:
    dst = tmp_path / "copy"
    shutil.copytree(default_run_dir, dst)
    return dst


@pytest.fixture(scope="session")
def phi_one():
    return barrier_profile(1.0)


def rel(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(np.abs(b), 1e-300)))
