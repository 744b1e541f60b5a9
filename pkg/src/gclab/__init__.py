"""Graph-classification training lab: label-noise robustness methods with
Dirichlet-energy instrumentation."""

__version__ = "0.1.0"
