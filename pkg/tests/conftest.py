"""Shared flow runs for the harness and acceptance suites (computed once)."""

import math
import time

import pytest

from sphereflow import flow_engine
from sphereflow.config import GeneratorSpec, RunConfig


def _timed_run(cfg):
    start = time.perf_counter()
    series, outcome = flow_engine.run(cfg)
    return {"config": cfg, "series": series, "outcome": outcome,
            "wall_seconds": time.perf_counter() - start}


@pytest.fixture(scope="session")
def parallel_run():
    cfg = RunConfig(generator=GeneratorSpec(kind="parallel", theta0=math.pi / 3),
                    n=512, dt=1e-4, t_max=5.0, checkpoint_every=500)
    return _timed_run(cfg)


@pytest.fixture(scope="session")
def parallel_run_hires():
    cfg = RunConfig(generator=GeneratorSpec(kind="parallel", theta0=math.pi / 3),
                    n=1024, dt=5e-5, t_max=5.0, checkpoint_every=1000, z_every=10 ** 9)
    return _timed_run(cfg)


@pytest.fixture(scope="session")
def perturbed_equator_run():
    gen = GeneratorSpec(kind="fourier_perturbed", axis=(0.0, 0.0, 1.0),
                        modes=(1, 3), amplitudes=(0.2, 0.1), antipodal_symmetric=True)
    cfg = RunConfig(generator=gen, n=512, dt=2e-4, t_max=2.0, seed=7,
                    checkpoint_every=500)
    return _timed_run(cfg)


@pytest.fixture(scope="session")
def symmetrized_equator_run():
    gen = GeneratorSpec(kind="fourier_perturbed", axis=(0.0, 0.0, 1.0),
                        modes=(1, 3), amplitudes=(0.2, 0.1), antipodal_symmetric=True)
    cfg = RunConfig(generator=gen, n=512, dt=2e-4, t_max=4.0, seed=7,
                    checkpoint_every=500, symmetrize=True)
    return _timed_run(cfg)


@pytest.fixture(scope="session")
def perturbed_parallel_run():
    gen = GeneratorSpec(kind="fourier_perturbed", axis=(0.0, 0.0, 1.0),
                        modes=(0, 2, 3), amplitudes=(0.45, 0.08, 0.05))
    cfg = RunConfig(generator=gen, n=512, dt=1e-4, t_max=5.0, seed=11,
                    checkpoint_every=500)
    return _timed_run(cfg)
