import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cfltrace.core import Multiset

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SYMS = ("p", "q", "r", "s")


def multisets(symbols=SYMS, max_count=3):
    return st.dictionaries(st.sampled_from(symbols), st.integers(0, max_count)).map(Multiset)


@pytest.fixture
def corpus_dir():
    return CORPUS
