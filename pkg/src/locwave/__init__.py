"""Localization, uncertainty and sparsity for wavelet-type transforms.

Built-in transforms: finite STFT (``fstft``), finite affine wavelets
(``finwave``), 1D wavelets with reflections (``wavelet1d``) and shearlets
(``shearlet``).
"""
from .groups import (AffineGroup, Circle, CyclicRoots, FiniteAffineGroup, FSTFTGroup, GroupElement,
                     GroupSpec, Integers, PhysicalQuantity, RealLine, ShearletGroup, project)
from .spaces import Axis, DomainMap, SampledSpace, Signal, inner_product
from .observables import MultiObservable, Observable, expected_value, variance
from .representations import (FSTFT, FiniteWavelet, InadmissibleWindowError, PhaseFunction, Shearlet,
                              TransformSpec, Wavelet1D, make_transform)
from .uncertainty import WeightProfile, global_uncertainty
from .window_design import MinimizerFamily, OptimizerConfig, optimize_window, verify_minimizer
from .ambiguity import SparsePhase, ambiguity, chebyshev_bound, matching_pursuit

__version__ = "0.1.0"
