import pytest
from hypothesis import settings

from equivhp import corpus

settings.register_profile("exact", max_examples=25, deadline=None)
settings.load_profile("exact")


@pytest.fixture(params=corpus.CORPUS)
def corpus_name(request):
    return request.param


@pytest.fixture
def G(corpus_name):
    return corpus.groupoid(corpus_name)
