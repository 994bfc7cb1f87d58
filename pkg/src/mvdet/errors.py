"""Exception types shared across the toolkit.

Two broad families: configuration/validation problems (bad files, bad
options) and runtime contract violations (shape mismatches, exhausted
data).  The CLI maps ConfigError to exit code 2 and everything else
to exit code 1.
"""


class MvdetError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MvdetError):
    """Invalid configuration, command-line options, or input files."""


class PointBehindCamera(MvdetError):
    """World point projects to non-positive depth in this camera."""


class IndexOutOfRange(MvdetError):
    """Grid cell index outside [0, G)."""


class EmptyAfterTrim(MvdetError):
    """Horizontal trim removed the whole crop width."""


class ShapeMismatch(MvdetError):
    """Tensor shape incompatible with a layer or model."""


class NoRecordedForward(MvdetError):
    """backward() called without a preceding training-mode forward()."""


class LabelOutOfRange(MvdetError):
    """Class label outside the model's output range."""


class StateShapeMismatch(MvdetError):
    """Optimizer state does not match the network's parameter shapes."""


class InsufficientPositives(MvdetError):
    """Sampler or trainer needs positive samples that the dataset lacks."""


class InsufficientData(MvdetError):
    """Dataset too small or single-class where both classes are required."""


class DepthOutOfRange(MvdetError):
    """Requested truncation depth exceeds the source network."""


class CalibrationMismatch(MvdetError):
    """Image dimensions disagree with the camera calibration."""


class NotEnoughPersons(MvdetError):
    """Mixing hard negatives requires two persons in the same frame."""


class DimensionMismatch(MvdetError):
    """Feature vector length disagrees with the trained model."""


class NoGroundTruth(MvdetError):
    """Metric undefined: no ground-truth objects in any frame."""


class NoMatches(MvdetError):
    """Metric undefined: no matched detections in any frame."""


class UndefinedMetric(MvdetError):
    """Metric denominator is zero."""


class SingleClass(MvdetError):
    """ROC/AUC needs both positive and negative labels."""
