import json

import pytest

from tests.factories import ExperimentConfigFactory


@pytest.fixture
def write_config(tmp_path):
    """Write an experiment config (factory defaults updated with ``overrides``) and return its path."""

    def _write(name="config.json", **overrides):
        path = tmp_path / name
        path.write_text(json.dumps(ExperimentConfigFactory(**overrides)), encoding="utf-8")
        return path

    return _write
