import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from proofflow.bench import BUNDLED_DATASET, load_dataset
from proofflow.gateway import RetryPolicy
from proofflow.prompts import PromptLibrary
from proofflow.verifier import MockVerifier


@pytest.fixture(scope="session")
def prompts():
    return PromptLibrary()


@pytest.fixture(scope="session")
def dataset():
    return load_dataset(BUNDLED_DATASET)


@pytest.fixture
def mock_verifier():
    return MockVerifier()


@pytest.fixture
def policy():
    return RetryPolicy(max_attempts=5)
