"""inkpark: handwriting-kinematics pipeline for PD/HC screening.

Stages: synthetic cohort generation, kinematic feature extraction,
statistical aggregation, feature selection (RF Gini ranking, SFFS),
kernel SVM with LOOCV/k-fold evaluation, and weighted task ensembles.
"""

from .backends import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
