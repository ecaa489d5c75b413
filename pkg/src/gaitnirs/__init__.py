"""fNIRS walking-task classification: preprocessing, features, classifiers, experiments."""

__version__ = "0.1.0"
