"""Shared fixtures and the acceptance-summary terminal hook."""

import numpy as np
import pytest

from dialogcl.corpus import corpus_from_rows
from dialogcl.embeddings import EmbeddingTable


@pytest.fixture
def toy_corpus():
    """Six exchanges, half with a follow-up turn."""
    return corpus_from_rows([
        ("how are you", "i am fine thanks", "glad to hear it"),
        ("what is your name", "my name is sam", "nice to meet you sam"),
        ("do you like tea", "yes i like tea a lot", None),
        ("where do you live", "i live in the city", "which city"),
        ("tell me a joke", "i only know one joke", None),
        ("good morning", "good morning to you too", None),
    ])


@pytest.fixture
def ortho_table():
    """File-mode table whose vectors are orthogonal unit axes."""
    dim = 6
    tokens = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta")
    vectors = {tok: np.eye(dim)[i] for i, tok in enumerate(tokens)}
    return EmbeddingTable(dim=dim, vectors=vectors, source="file")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from tests.test_acceptance import CRITERION_RESULTS
    except ImportError:
        try:
            from test_acceptance import CRITERION_RESULTS
        except ImportError:
            return
    if not CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed in CRITERION_RESULTS:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}")
