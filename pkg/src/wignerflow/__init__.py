"""Wigner phase-space flow for weakly anharmonic one-dimensional potentials."""
import os

__version__ = "0.1.0"

# WIGNERFLOW_THREADS caps the BLAS/FFT pools; it only takes effect before numpy loads
_threads = os.environ.get("WIGNERFLOW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)
