"""
koopman-distill

Extracts a linear Koopman classifier (PCA, monomial dictionary, one matrix K)
from a trained multilayer perceptron, by least squares or by distillation.
"""

__version__ = "0.3.0"

from koopman_distill.error_handler import KoopmanDistillError

__all__ = ['KoopmanDistillError', '__version__']
