from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

REPO = Path(__file__).resolve().parent.parent
CORPUS = REPO / "corpus"


@pytest.fixture(scope="session")
def corpus_root() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO


def load_case(name: str):
    """Parsed analysis + stimulus text for one corpus case."""
    from cdckit.pipeline import analyze_sources

    d = CORPUS / name
    analysis = analyze_sources(
        [(str(d / "rtl.v"), (d / "rtl.v").read_text())],
        (d / "constraints.cdc").read_text())
    stim_file = d / "stimulus.stim"
    return analysis, stim_file.read_text() if stim_file.exists() else ""


@pytest.fixture(scope="session")
def case_loader():
    cache: dict[str, tuple] = {}

    def get(name: str):
        if name not in cache:
            cache[name] = load_case(name)
        return cache[name]

    return get
