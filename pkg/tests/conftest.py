import numpy as np
import pytest

from paynowcast.pipeline import PipelineConfig, fixture_config_path, run_pipeline


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixture_run(tmp_path_factory):
    """One full pipeline run on the bundled fixture, shared by the suite."""
    out = tmp_path_factory.mktemp("fixture_run")
    config = PipelineConfig.load(fixture_config_path(), output_dir=out)
    return run_pipeline(config)
