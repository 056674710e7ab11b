"""End-to-end analysis: preprocess, choose the species count, factorise."""

from dataclasses import dataclass

import numpy as np

from .preprocess import Preprocessor, PreprocessReport
from .sepnmf import UnmixResult, estimate_species_count, unmix
from .linalg import singular_values

__all__ = ["AnalysisResult", "analyze"]


@dataclass(eq=False)
class AnalysisResult:
    unmix: UnmixResult
    W: np.ndarray  # spectra on the full frequency grid, zero on removed rows
    H: np.ndarray
    characteristic_rows: list
    preprocess: PreprocessReport
    auto_rank: bool
    singular_values: np.ndarray

    @property
    def r(self):
        return self.H.shape[0]


def analyze(M, r=None, window=5, threshold_multiplier=3.0, drop_ratio=0.01):
    """Run filter -> smooth -> (rank estimate) -> SNPA unmixing on ``M``.

    ``r=None`` picks the species count from the singular values of the
    preprocessed matrix.
    """
    if r is not None and (int(r) != r or r < 1):
        raise ValueError(f"species count must be a positive integer, got {r}")
    pre = Preprocessor(threshold_multiplier=threshold_multiplier, window=window)
    Mp = pre.fit_transform(M)
    sv = singular_values(Mp, min(Mp.shape[0], Mp.shape[1], 11))
    auto = r is None
    if auto:
        r = estimate_species_count(Mp, drop_ratio)
    res = unmix(Mp, int(r))
    kept = pre.kept_rows_
    res.selected.original_indices = kept[res.selected.indices].tolist()
    W = np.zeros((np.asarray(M).shape[0], res.r))
    W[kept] = res.W
    return AnalysisResult(res, W, res.H, res.selected.original_indices, pre.report_, auto, sv)
