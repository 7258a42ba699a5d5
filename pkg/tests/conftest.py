import pytest

from provq.fixtures import sample_run, sample_spec


@pytest.fixture(scope="session")
def spec():
    return sample_spec()


@pytest.fixture(scope="session")
def run():
    return sample_run()


@pytest.fixture(scope="session")
def by_display(run):
    return run.by_display()
