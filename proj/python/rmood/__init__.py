"""Isolation-forest OOD detection for multivariate episodes.

Episodes are numpy arrays of shape (N, T): one row per state dimension.
"""

from ._rmood import (
    MODEL_FORMAT_VERSION,
    BoundsError,
    ConfigError,
    ContaminationError,
    DataError,
    Error,
    InsufficientDataError,
    IoError,
    LoadError,
    Model,
    ShapeError,
    SizeError,
    UndefinedMetricError,
    VersionError,
    ar_sample,
    auroc,
    c_factor,
    calibrate_threshold,
    cusum,
    extract_features,
    generate_scenario,
    rbf_distance,
    rbf_similarity,
    train,
    tune_sigma,
    window_mean,
)


def labels_for(length, onset):
    """Per-timestep labels: 1 from the onset on, 0 before (all 0 when onset is None)."""
    return [0 if onset is None or t < onset else 1 for t in range(length)]


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.save())


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return Model.load(fh.read())


__version__ = "0.1.0"
