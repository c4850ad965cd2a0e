from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fixture_corpus_bytes() -> bytes:
    return (DATA_DIR / "fixture_corpus.jsonl").read_bytes()
