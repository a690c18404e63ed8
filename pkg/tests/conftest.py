import os

import hypothesis
import numpy as np
import pytest

from darts_plus.space import OpKind, SpaceConfig

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_space():
    """Two reduction cells, two channels: seconds per forward/backward on 8x8 inputs."""
    return SpaceConfig(channels=2, layers=2, num_nodes=4, stem_multiplier=1, num_classes=2)


@pytest.fixture
def skip_zero_space():
    return SpaceConfig(
        channels=2,
        layers=2,
        num_nodes=4,
        stem_multiplier=1,
        num_classes=2,
        candidates=[OpKind.ZERO, OpKind.SKIP_CONNECT, OpKind.SEP_CONV_3X3],
    )
