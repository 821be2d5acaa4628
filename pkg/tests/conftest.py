from __future__ import annotations

from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def fixtures_dir(tmp_path_factory) -> Path:
    """Bundled scenario fixtures; regenerated into a tmp dir if the repo
    copy is absent (they are deterministic)."""
    bundled = REPO_ROOT / "fixtures"
    if (bundled / "grid.json").exists():
        return bundled
    from edgeattend.evalharness.fixtures import build_all

    out = tmp_path_factory.mktemp("fixtures")
    build_all(out)
    return out
