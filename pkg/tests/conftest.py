from pathlib import Path

import pytest

from socratic import HashEmbeddingBackend, OrthogonalEmbeddingBackend, load_exercises
from socratic.question_gen import load_question_bank

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "data"


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(label): emit a [PASS]/[FAIL] line for this test under the given label",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    setattr(item, "rep_" + report.when, report)


@pytest.fixture
def ortho():
    return OrthogonalEmbeddingBackend()


@pytest.fixture
def hash_backend():
    return HashEmbeddingBackend(seed=0)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture
def banked_exercises():
    exercises = load_exercises(DATA / "exercises.jsonl")
    load_question_bank(DATA / "question_bank.jsonl", exercises)
    return exercises
