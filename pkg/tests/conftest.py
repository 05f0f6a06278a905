import os
import sys
from pathlib import Path

import pytest

# Add the project root directory to Python path
project_root = str(Path(__file__).parent.parent)
sys.path.insert(0, project_root)

# Set up test environment variables
os.environ["PROSWAP_LOG_LEVEL"] = "WARNING"
for var in ("PROSWAP_SEED", "PROSWAP_ELL", "PROSWAP_LAMBDA", "PROSWAP_NU", "PROSWAP_T_P", "PROSWAP_T_D",
            "PROSWAP_WORKERS"):
    os.environ.pop(var, None)

from adaptor import keygen  # noqa: E402
from algebra import make_rng  # noqa: E402
from experiments import RunConfig  # noqa: E402


@pytest.fixture
def rng():
    """Deterministic generator; each test gets a fresh one."""
    return make_rng(1234)


@pytest.fixture
def keys(rng):
    return keygen(rng), keygen(rng)


@pytest.fixture
def small_cfg():
    """Small but complete swap configuration used across protocol tests."""
    return RunConfig(ell=2, lam=4, nu=8, t_p=10, t_d=20, seed=99)


@pytest.fixture(autouse=True)
def clean_env():
    """Undo any variables a test loads from a .env file."""
    saved = dict(os.environ)
    yield
    os.environ.clear()
    os.environ.update(saved)
