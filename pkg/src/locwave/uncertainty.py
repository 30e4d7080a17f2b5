"""Global variances and the global uncertainty ``S(f)``.

A plain variance changes along the orbit ``pi(G) f``: translations move
the expected values and dilations rescale the spread.  The global variance
of block ``m`` undoes this by evaluating the covariance in the frame of the
orbit element whose expected values sit at the identity.  For a
self-adjoint block this amounts to a corrected weight matrix

    Sigma^W_f = sigma^{A^* W A}_f,    A = A_m([E_f^{-1}]_{h_m})

where ``E_f`` collects the projected expected values of the blocks after
``m``.  Unitary blocks whose automorphisms are trivial keep their plain
variance; the finite-wavelet time block uses the mean-square form
``1 - (sum |f|^4)^2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .groups import FiniteAffineGroup, GroupElement, UndefinedProjectionError, project
from .observables import (SELF_ADJOINT, block_expected_values, check_weight_matrix,
                          covariance_matrix)
from .spaces import Signal


class WeightProfile:
    """Per-block Hermitian PSD weight matrices ``W_m``."""

    def __init__(self, matrices: Sequence):
        self.matrices = tuple(check_weight_matrix(W) for W in matrices)

    @classmethod
    def preset(cls, name: str, sizes: Sequence[int], scale: float = 1.0) -> "WeightProfile":
        """``identity`` (``I`` per block) or ``isotropic`` (``scale * I`` per block)."""
        if name == "identity":
            return cls([np.eye(k) for k in sizes])
        if name == "isotropic":
            if scale < 0:
                raise ValueError("isotropic weight must be nonnegative")
            return cls([scale * np.eye(k) for k in sizes])
        raise ValueError(f"unknown weight preset {name!r}")

    @classmethod
    def from_scalars(cls, weights: Sequence[float], sizes: Sequence[int]) -> "WeightProfile":
        if len(weights) != len(sizes):
            raise ValueError("one weight per block is required")
        return cls([float(w) * np.eye(k) for w, k in zip(weights, sizes)])

    @classmethod
    def for_transform(cls, spec, weights=None) -> "WeightProfile":
        """Profile from a preset name, per-block scalars or per-block matrices."""
        sizes = [len(b) for b in spec.canonical_observables().blocks]
        if weights is None:
            return cls.preset("identity", sizes)
        if isinstance(weights, str):
            return cls.preset(weights, sizes)
        if isinstance(weights, WeightProfile):
            prof = weights
        elif all(np.ndim(w) == 0 for w in weights):
            prof = cls.from_scalars(weights, sizes)
        else:
            prof = cls([np.asarray(w, dtype=complex) if np.iscomplexobj(np.asarray(w))
                        else np.asarray(w, dtype=float) for w in weights])
        if [W.shape[0] for W in prof.matrices] != sizes:
            raise ValueError(f"weight matrices must have sizes {sizes}")
        return prof

    @classmethod
    def from_dict(cls, d) -> "WeightProfile":
        """``{"matrices": [[[re, ...]], ...]}`` with optional ``"imag"`` parts."""
        if "matrices" not in d:
            raise ValueError("weight profile needs a 'matrices' entry")
        mats = [np.asarray(M, dtype=float) for M in d["matrices"]]
        if "imag" in d:
            mats = [M + 1j * np.asarray(I, dtype=float) for M, I in zip(mats, d["imag"])]
        return cls(mats)

    @classmethod
    def from_json(cls, text: str) -> "WeightProfile":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        d = {"matrices": [np.real(W).tolist() for W in self.matrices]}
        if any(np.iscomplexobj(W) and np.any(W.imag) for W in self.matrices):
            d["imag"] = [np.imag(W).tolist() for W in self.matrices]
        return d

    def __getitem__(self, m):
        return self.matrices[m]

    def __len__(self):
        return len(self.matrices)


# ---------------------------------------------------------------------------
# corrections

def block_expectations(spec, f: Signal) -> list:
    """Expected values of every canonical block."""
    return [block_expected_values(f, b) for b in spec.canonical_observables().blocks]


def projected_expected_element(spec, expected: list, start: int = 0, strict: bool = False):
    """``E_f`` as a group element from per-block expected values.

    Blocks before ``start`` are set to the identity.  Returns
    ``(element, degenerate)`` where ``degenerate`` lists the blocks whose
    circle-kind expected value vanished; those are set to the identity
    unless ``strict`` is true, in which case the projection error is raised.
    """
    grp = spec.group
    coords = []
    degenerate = []
    for m, b in enumerate(grp.blocks):
        q = b.quantity
        if m < start:
            coords.append(q.identity((b.size,)))
            continue
        try:
            coords.append(q.canon(project(q, expected[m])))
        except UndefinedProjectionError:
            if strict:
                raise
            degenerate.append(m)
            coords.append(q.identity((b.size,)))
    return GroupElement(tuple(coords)), degenerate


def correction_from_expected(spec, m: int, expected: list, strict: bool = False):
    """``A_m([E^{-1}]_{h_m})`` for given expected values, plus degenerate blocks.

    If any block feeding ``h_m`` is degenerate the correction is ``I``.
    """
    grp = spec.group
    K = grp.blocks[m].size
    if m == grp.n_blocks - 1:
        return np.eye(K), []
    E, degenerate = projected_expected_element(spec, expected, start=m + 1, strict=strict)
    if degenerate:
        return np.eye(K), degenerate
    Einv = grp.inverse(E)
    A = np.asarray(grp.automorphism_matrix(m, Einv.tail(m)), dtype=float)
    return A.reshape(K, K), []


def correction_matrix(spec, f: Signal, m: int, strict: bool = False):
    """``A_m([E_f^{-1}]_{h_m})`` for the window ``f``."""
    return correction_from_expected(spec, m, block_expectations(spec, f), strict=strict)


def global_variance_selfadjoint(spec, f: Signal, m: int, W=None, strict: bool = False,
                                return_details: bool = False):
    """Global scalar variance of a self-adjoint block.

    Parameters
    ----------
    spec : TransformSpec
    f : Signal
        Window (normalized internally).
    m : int
        Block index; the block must have a self-adjoint kind.
    W : array_like, optional
        Hermitian PSD weight matrix, identity by default.
    strict : bool
        Raise instead of falling back to ``A = I`` when a circle-kind
        expected value feeding the correction vanishes.
    """
    block = spec.canonical_observables().block(m)
    if block[0].kind != SELF_ADJOINT:
        raise ValueError(f"block {m} is not self-adjoint")
    K = len(block)
    W = np.eye(K) if W is None else check_weight_matrix(W, K)
    A, degenerate = correction_matrix(spec, f, m, strict=strict)
    Wc = A.conj().T @ W @ A
    cov = covariance_matrix(f, block)
    val = max(float(np.real(np.sum(Wc.conj() * cov))), 0.0)
    if return_details:
        return val, A, degenerate
    return val


def _trivial_action(spec, m: int) -> bool:
    """True when ``A_m`` is the identity for every group element."""
    grp = spec.group
    return m == grp.n_blocks - 1 or getattr(grp, "family", "") == "fstft"


def mean_square_expected_value(f: Signal, block) -> float:
    """``sum |F|^4 w`` of the normalized window in the block's quantity domain."""
    F = block[0].domain_map.forward(f).values
    w = block[0].domain_map.target.weights
    p = w * np.abs(F) ** 2
    p = p / p.sum()
    return float(np.sum(p * p / w))


def global_variance_unitary(spec, f: Signal, m: int, W=None) -> float:
    """Global variance of a circle-kind block.

    Blocks with trivial automorphisms keep their plain variance
    ``sigma^W``.  The finite-wavelet time block, whose dilation orbit of
    characters covers every nontrivial frequency, uses
    ``1 - (sum_n |f(n)|^4)^2`` for the unit-norm window.
    """
    block = spec.canonical_observables().block(m)
    if block[0].kind == SELF_ADJOINT:
        raise ValueError(f"block {m} is self-adjoint")
    K = len(block)
    if _trivial_action(spec, m):
        W = np.eye(K) if W is None else check_weight_matrix(W, K)
        cov = covariance_matrix(f, block)
        return max(float(np.real(np.sum(W.conj() * cov))), 0.0)
    if isinstance(spec.group, FiniteAffineGroup) and m == 0:
        scale = 1.0 if W is None else float(np.real(check_weight_matrix(W, K)[0, 0]))
        ms = mean_square_expected_value(f, block)
        return scale * max(1.0 - ms * ms, 0.0)
    raise ValueError(f"block {m}: the character orbit does not cover all frequencies")


def global_variance(spec, f: Signal, m: int, W=None, strict: bool = False) -> float:
    block = spec.canonical_observables().block(m)
    if block[0].kind == SELF_ADJOINT:
        return global_variance_selfadjoint(spec, f, m, W, strict=strict)
    return global_variance_unitary(spec, f, m, W)


@dataclass
class UncertaintyReport:
    """Per-block plain and global variances and the total ``S(f)``."""

    transform: str
    plain: list
    global_: list
    corrections: list
    total: float
    product: Optional[float] = None
    degenerate: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"transform": self.transform,
             "plain_variance": [float(x) for x in self.plain],
             "global_variance": [float(x) for x in self.global_],
             "correction": [None if A is None else np.asarray(A, dtype=float).tolist() for A in self.corrections],
             "S": float(self.total),
             "degenerate_blocks": list(self.degenerate)}
        if self.product is not None:
            d["S_product"] = float(self.product)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def global_uncertainty(spec, f: Signal, weights=None, product: bool = False,
                       strict: bool = False) -> UncertaintyReport:
    """``S(f) = sum_m Sigma^{W_m}_f(T_m)`` with every component reported."""
    prof = WeightProfile.for_transform(spec, weights)
    multi = spec.canonical_observables()
    plain, glob, corr, degen = [], [], [], []
    for m, block in enumerate(multi.blocks):
        W = prof[m]
        cov = covariance_matrix(f, block)
        plain.append(max(float(np.real(np.sum(W.conj() * cov))), 0.0))
        if block[0].kind == SELF_ADJOINT:
            val, A, d = global_variance_selfadjoint(spec, f, m, W, strict=strict, return_details=True)
            corr.append(A)
            degen.extend(d)
        else:
            val = global_variance_unitary(spec, f, m, W)
            corr.append(None)
        glob.append(val)
    total = float(sum(glob))
    prod = float(np.prod(glob)) if product else None
    return UncertaintyReport(spec.name, plain, glob, corr, total, prod, sorted(set(degen)))


def uncertainty_value(spec, f: Signal, weights=None) -> float:
    return global_uncertainty(spec, f, weights).total


def orbit_invariance_check(spec, f: Signal, weights, g_samples) -> float:
    """Max over ``g`` of ``|S(pi(g) f) - S(f)| / S(f)``."""
    s0 = uncertainty_value(spec, f, weights)
    if s0 == 0:
        raise ArithmeticError("S(f) = 0; relative deviation undefined")
    dev = 0.0
    for g in g_samples:
        s = uncertainty_value(spec, spec.rep_apply(g, f), weights)
        dev = max(dev, abs(s - s0) / s0)
    return dev


def random_group_elements(spec, rng, count: int, translation: float = 2.0, bound: float = 1.0) -> list:
    """Random elements inside the supported parameter ranges of ``spec``.

    Finite groups draw uniformly; continuum groups draw translations in
    ``[-translation, translation]`` and shears/dilations in ``[-bound, bound]``.
    """
    grp = spec.group
    out = []
    for _ in range(count):
        coords = []
        for m, b in enumerate(grp.blocks):
            q = b.quantity
            if q.kind == "CyclicRoots":
                coords.append(rng.integers(0, q.n, size=b.size))
            elif m == 0:
                coords.append(rng.uniform(-translation, translation, size=b.size))
            else:
                coords.append(rng.uniform(-bound, bound, size=b.size))
        out.append(grp.element(*coords))
    return out
