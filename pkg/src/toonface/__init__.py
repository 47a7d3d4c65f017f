"""Cartoon-face recognition toolkit.

Subpackages: engine (differentiable tensors), data (datasets and
augmentation), models (recognizer and landmark networks), shallow
(SVM and gradient boosting), plus metrics and the command line.
"""

__version__ = "0.1.0"
