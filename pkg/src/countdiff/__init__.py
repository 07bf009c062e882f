"""Counting and density autocorrelations and diffraction of point sets on the line."""
from __future__ import annotations

from .autocorr import DiracComb, EtaSeries, eta_series, finite_autocorr
from .errors import BudgetExceeded, CountdiffError, SpecError
from .pointsets import GeneratorSpec, PointSet, generate
from .spectrum import SpectrumGrid, comb_fourier, patterson_direct, patterson_fft
from .windows import Interval, WindowFamily, builtin_family, classify, parse_window, verify_van_hove

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "CountdiffError",
    "DiracComb",
    "EtaSeries",
    "GeneratorSpec",
    "Interval",
    "PointSet",
    "SpecError",
    "SpectrumGrid",
    "WindowFamily",
    "builtin_family",
    "classify",
    "comb_fourier",
    "eta_series",
    "finite_autocorr",
    "generate",
    "parse_window",
    "patterson_direct",
    "patterson_fft",
    "verify_van_hove",
]
