import pathlib

import pytest

from gctl.hsm import flatten
from gctl.modelfile import parse_model

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def fig2_model():
    return parse_model((MODELS / "fig2.gctl").read_text())


@pytest.fixture(scope="session")
def fig2_flat(fig2_model):
    return flatten(fig2_model)


@pytest.fixture(scope="session")
def retry_model():
    return parse_model((MODELS / "retry.gctl").read_text())


@pytest.fixture(scope="session")
def retry_flat(retry_model):
    return flatten(retry_model)
