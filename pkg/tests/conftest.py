"""Shared fixtures: model specs and small simulated series.

Series fixtures are module-scoped where generation is cheap and the
tests only read them; anything that mutates goes through a factory.
"""

from __future__ import annotations

import numpy as np
import pytest

from qlscan import (
    CriticalTable,
    ModelFamily,
    ModelSpec,
    SeriesSegment,
    SimPlan,
    generate,
)


@pytest.fixture(scope="session")
def ar1_spec() -> ModelSpec:
    return ModelSpec(family=ModelFamily.AR, p=1)


@pytest.fixture(scope="session")
def ar2_spec() -> ModelSpec:
    return ModelSpec(family=ModelFamily.AR, p=2)


@pytest.fixture(scope="session")
def arch_spec() -> ModelSpec:
    return ModelSpec(family=ModelFamily.ARCH, p=1)


@pytest.fixture(scope="session")
def garch_spec() -> ModelSpec:
    return ModelSpec(family=ModelFamily.GARCH, p=1)


@pytest.fixture(scope="session")
def all_specs(ar1_spec, arch_spec, garch_spec) -> dict[str, ModelSpec]:
    return {"ar": ar1_spec, "arch": arch_spec, "garch": garch_spec}


# Interior parameter points used throughout: comfortably inside every
# family's feasible domain so derivative and optimizer tests never sit
# on a boundary by accident.
THETA0 = {
    "ar": (0.5,),
    "arch": (1.0, 0.3),
    "garch": (1.0, 0.4, 0.3),
}


def make_series(
    spec: ModelSpec,
    n: int,
    theta0: tuple[float, ...],
    seed: int | tuple[int, ...] = 0,
    theta1: tuple[float, ...] | None = None,
    break_index: int | None = None,
) -> SeriesSegment:
    plan = SimPlan(
        spec=spec,
        n=n,
        theta0=theta0,
        theta1=theta1,
        break_index=break_index,
        seed=seed,
    )
    return generate(plan)


@pytest.fixture(scope="session")
def builtin_table() -> CriticalTable:
    return CriticalTable.builtin()


@pytest.fixture(scope="session")
def ar1_series(ar1_spec) -> SeriesSegment:
    return make_series(ar1_spec, 400, THETA0["ar"], seed=(101, 0))


@pytest.fixture(scope="session")
def arch_series(arch_spec) -> SeriesSegment:
    return make_series(arch_spec, 400, THETA0["arch"], seed=(102, 0))


@pytest.fixture(scope="session")
def garch_series(garch_spec) -> SeriesSegment:
    return make_series(garch_spec, 600, THETA0["garch"], seed=(103, 0))


def theta_near(
    rng: np.random.Generator, spec: ModelSpec, base: tuple[float, ...]
) -> np.ndarray:
    """A random interior point near ``base`` for derivative probes."""
    base_arr = np.asarray(base, dtype=float)
    jitter = rng.uniform(-0.05, 0.05, size=base_arr.size)
    out = base_arr * (1.0 + jitter)
    out[0] = max(out[0], 0.05)
    return out
