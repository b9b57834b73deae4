import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from emompc.config import BuildConfig, grid_dims
from emompc.library import GridSpec, Library, build_library, load_library, save_library
from emompc.pareto import ParetoEntry, ParetoSet

CACHE_DIR = Path(__file__).parent / "_cache"


def _cached_build(name: str, config: BuildConfig, workers: int) -> tuple[Library, float]:
    """Build (or reload) a library plus its recorded build wall time."""
    CACHE_DIR.mkdir(exist_ok=True)
    lib_path = CACHE_DIR / f"{name}.emompc.json"
    meta_path = CACHE_DIR / f"{name}.meta.json"
    if lib_path.exists() and meta_path.exists():
        import json

        meta = json.loads(meta_path.read_text())
        return load_library(lib_path), float(meta["build_seconds"])
    t0 = time.time()
    library = build_library(config, workers=workers)
    elapsed = time.time() - t0
    save_library(library, lib_path)
    import json

    meta_path.write_text(
        json.dumps({"build_seconds": elapsed, "workers": workers, "failures": len(library.failures)})
    )
    return library, elapsed


@pytest.fixture(scope="session")
def desk_library():
    """The 3125-node desk-scale library; built once and cached on disk."""
    library, _ = _cached_build("desk_w8", BuildConfig(), workers=8)
    return library


@pytest.fixture(scope="session")
def desk_build_seconds():
    _, elapsed = _cached_build("desk_w8", BuildConfig(), workers=8)
    return elapsed


@pytest.fixture(scope="session")
def small_library():
    """A 243-node library for cheaper closed-loop smoke tests."""
    library, _ = _cached_build("small_w8", BuildConfig(grid=grid_dims((3, 3, 3, 3, 3))), workers=8)
    return library


@pytest.fixture(scope="session")
def operating_library():
    """The closed-loop operating-envelope library."""
    from emompc.config import operating_config

    library, _ = _cached_build("operating_w8", operating_config(), workers=8)
    return library


@pytest.fixture()
def synthetic_library():
    """A library with hand-made single-entry fronts encoding their node index.

    Controls are constant sequences whose value encodes the flattened
    node index; no solver runs, so lookup and interpolation logic can be
    tested exactly.
    """
    config = BuildConfig(grid=grid_dims((3, 3, 3, 3, 3)))
    spec = GridSpec.from_dims(config.grid)
    entries = {}
    for flat, index in enumerate(spec.indices()):
        value = 1e-6 * flat  # unique per node yet small enough to track straight
        entries[index] = ParetoSet(
            [ParetoEntry(np.full(10, value), np.array([0.0, -15.0 + value]))]
        )
    return Library(grid=spec, config=config, entries=entries)


def pytest_sessionfinish(session, exitstatus):
    # keep the cache across runs; wipe only when explicitly requested
    if session.config.getoption("--fresh-cache", default=False):
        shutil.rmtree(CACHE_DIR, ignore_errors=True)


def pytest_addoption(parser):
    parser.addoption(
        "--fresh-cache",
        action="store_true",
        default=False,
        help="delete the cached libraries after the run",
    )
