"""Shared fixtures: a small trained scene reused across model-level tests."""

import numpy as np
import pytest

from mvdet import datasets, multiview, nnet, synthscene


@pytest.fixture(scope="session")
def tiny_scene():
    """Small scenario with extracted samples and retained frame images."""
    spec = synthscene.make_scenario(
        n_cameras=3, grid_rows=10, grid_cols=10, n_persons=2, n_frames=40, seed=101
    )
    sample_set = datasets.generate_dataset(spec, negatives_per_frame=6)
    return spec, sample_set


@pytest.fixture(scope="session")
def tiny_mono(tiny_scene):
    """Monocular network trained briefly on the tiny scene."""
    spec, sample_set = tiny_scene
    X, y = sample_set.mono_arrays()
    net = nnet.mono_network(seed=7)
    cfg = multiview.TrainConfig(
        epochs=4, batch_size=32, r=0.33, optimizer="adam",
        optimizer_options={"lr": 1e-3}, seed=7, input_dropout=True, patience=None,
    )
    net, history = multiview.train_monocular(net, X, y, cfg)
    assert history[-1]["val_acc"] > 0.9
    return net
