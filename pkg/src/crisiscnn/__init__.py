"""Crisis tweet classification: CNN and MLP-CNN models, linear baselines,
domain adaptation and evaluation."""

__version__ = "0.1.0"
