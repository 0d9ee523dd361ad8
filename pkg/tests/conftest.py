import os
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

# Headless plotting during tests
os.environ.setdefault("MPLBACKEND", "Agg")


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    """
    Ignore any user/repo settings file and env overrides while a test runs.
    """
    import common

    monkeypatch.delenv(common.CONFIG_ENV, raising=False)
    monkeypatch.delenv(common.MAX_DIM_ENV, raising=False)
    monkeypatch.setattr(common, "_loaded_config", {})
    yield
