"""Recover component spectra, concentration kinetics and first-order rate
matrices from time-resolved spectroscopic measurements via separable NMF."""

__version__ = "0.1.0"

from .datagen import InterferenceSpec, MeasurementSet, NoiseSpec, add_noise, apply_interference, synthesize
from .kinetics import (KineticsMatrix, RateMatrix, RateMatrixError, ReactionNetwork, TimeGrid,
                       discretize_kinetics, propagate, validate_rate_matrix)
from .linalg import expm, nnls_solve, singular_values
from .pipeline import AnalysisResult, analyze
from .preprocess import Preprocessor, estimate_noise_level, filter_rows, normalize_rows, smooth_time
from .ratefit import (RateFitError, RateFitResult, RateFitter, fit_rates, kinetics_error,
                      regenerate_kinetics, score_recovery, spectra_error)
from .scenario import ScenarioConfig, bundled_scenario, canonical_scenario, load_scenario
from .sepnmf import (SeparableNMF, align_species, estimate_species_count, recover_spectra,
                     rescale_kinetics, snpa_select, unmix)
from .spectra import Fingerprint, FrequencyGrid, Peak, assemble_W

__all__ = [
    "__version__",
    "AnalysisResult", "Fingerprint", "FrequencyGrid", "InterferenceSpec", "KineticsMatrix",
    "MeasurementSet", "NoiseSpec", "Peak", "Preprocessor", "RateFitError", "RateFitResult",
    "RateFitter", "RateMatrix", "RateMatrixError", "ReactionNetwork", "ScenarioConfig",
    "SeparableNMF", "TimeGrid",
    "add_noise", "align_species", "analyze", "apply_interference", "assemble_W",
    "bundled_scenario", "canonical_scenario", "discretize_kinetics", "estimate_noise_level",
    "estimate_species_count", "expm", "filter_rows", "fit_rates", "kinetics_error",
    "load_scenario", "nnls_solve", "normalize_rows", "propagate", "recover_spectra",
    "regenerate_kinetics", "rescale_kinetics", "score_recovery", "singular_values",
    "smooth_time", "snpa_select", "spectra_error", "synthesize", "unmix", "validate_rate_matrix",
]
