"""Classical simulation and post-processing for multidimensional quantum period finding."""

__version__ = "0.1.0"
