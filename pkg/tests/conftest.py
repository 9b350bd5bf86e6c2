from __future__ import annotations

from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def cases_root() -> Path:
    return REPO_ROOT / "cases"


@pytest.fixture(scope="session")
def case_dir(cases_root):
    def _dir(name: str) -> Path:
        return cases_root / name
    return _dir
