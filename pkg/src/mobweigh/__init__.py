"""Mob-based cattle weight-gain forecasting.

Raw CSV ingestion, cleaning and monthly aggregation, lag-feature
extraction, MinMax scaling, three from-scratch regressors (forest, kernel
SVR, LSTM), k-fold evaluation and report emission.
"""
__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: E402

__all__ = ["__version__", "KERNEL_BACKEND"]
