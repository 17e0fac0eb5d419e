import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from veritas.criteria import registry_load
from veritas.twin import generate_twin


@pytest.fixture(scope="session")
def registry():
    return registry_load(None)


@pytest.fixture(scope="session")
def twin(tmp_path_factory):
    """One synthetic-twin build shared across the session; wall time recorded."""
    root = tmp_path_factory.mktemp("twin")
    start = time.monotonic()
    bundle = generate_twin(root, seed=7)
    elapsed = time.monotonic() - start
    bundle.generation_seconds = elapsed
    return bundle
