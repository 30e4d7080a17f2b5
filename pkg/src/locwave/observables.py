"""Observables realized as multipliers behind a domain map.

An observable ``T`` is diagonal after a unitary map ``M``: ``M T M^{-1}``
multiplies by ``u(x)``.  Moments of a window ``f`` then reduce to weighted
sums against the density ``|M f|^2``:

    e_f(T) = sum_x w(x) u(x) |Mf(x)|^2,    sigma_f(T) = sum_x w(x) |u(x) - e|^2 |Mf(x)|^2

Windows are normalized internally; the squared norm is reported as
``scale`` where relevant.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .groups import PhysicalQuantity, project
from .spaces import DomainMap, Signal

SELF_ADJOINT = "selfadjoint"
UNITARY = "unitary"


@dataclass(frozen=True, eq=False)
class Observable:
    """Multiplier ``u`` on the target of ``domain_map``.

    ``tag`` identifies the observable inside a canonical multi-observable
    as ``(block, component)``; representation operators use it to look up
    their commutation action.
    """

    name: str
    domain_map: DomainMap
    multiplier: np.ndarray
    kind: str
    quantity: Optional[PhysicalQuantity] = None
    tag: Optional[tuple] = None

    def __post_init__(self):
        u = np.asarray(self.multiplier)
        if u.shape != self.domain_map.target.shape:
            raise ValueError("multiplier shape does not match the mapped space")
        if self.kind == SELF_ADJOINT:
            if np.iscomplexobj(u) and np.any(np.abs(u.imag) > 0):
                raise ValueError("self-adjoint observables need real multipliers")
            u = u.real.astype(float)
        elif self.kind == UNITARY:
            u = u.astype(complex)
            if np.any(np.abs(np.abs(u) - 1) > 1e-12):
                raise ValueError("unitary observables need unit-modulus multipliers")
        else:
            raise ValueError(f"unknown observable kind {self.kind!r}")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "multiplier", u)

    def with_multiplier(self, u, name: Optional[str] = None) -> "Observable":
        return Observable(name or self.name, self.domain_map, u, self.kind, self.quantity, self.tag)


@dataclass(frozen=True, eq=False)
class MultiObservable:
    """Observables grouped per block; a block shares one domain map."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(b) for b in self.blocks)
        for b in blocks:
            if not b:
                raise ValueError("empty observable block")
            dm = b[0].domain_map
            if any(t.domain_map is not dm for t in b):
                raise ValueError("observables of a block must share a domain map")
            if len({t.kind for t in b}) != 1:
                raise ValueError("observables of a block must share a kind")
        object.__setattr__(self, "blocks", blocks)

    def block(self, m: int) -> tuple:
        return self.blocks[m]

    def __len__(self):
        return len(self.blocks)


def _density(f: Signal, dm: DomainMap):
    F = dm.forward(f).values
    p = dm.target.weights * np.abs(F) ** 2
    scale = float(p.sum())
    if scale <= 0:
        raise ValueError("moments of the zero signal are undefined")
    return F, p / scale, scale


def _block(T) -> tuple:
    if isinstance(T, Observable):
        return (T,)
    return tuple(T)


def moments(f: Signal, T: Observable):
    """``(e, sigma, scale)`` for a single observable."""
    _, p, scale = _density(f, T.domain_map)
    u = T.multiplier
    e = complex(np.sum(u * p))
    sigma = float(np.sum(np.abs(u - e) ** 2 * p))
    if T.kind == SELF_ADJOINT:
        e = e.real
    return e, sigma, scale


def expected_value(f: Signal, T: Observable):
    """``e_f(T)``; a float for self-adjoint ``T``."""
    return moments(f, T)[0]


def variance(f: Signal, T: Observable) -> float:
    """``sigma_f(T) = ||(T - e) f||^2`` for the normalized window."""
    return moments(f, T)[1]


def block_expected_values(f: Signal, block) -> np.ndarray:
    block = _block(block)
    _, p, _ = _density(f, block[0].domain_map)
    e = np.array([np.sum(t.multiplier * p) for t in block])
    return e.real if block[0].kind == SELF_ADJOINT else e


def covariance_matrix(f: Signal, block) -> np.ndarray:
    """``Cov_{kk'} = <(T^k - e^k) f, (T^{k'} - e^{k'}) f>``."""
    block = _block(block)
    _, p, _ = _density(f, block[0].domain_map)
    e = [np.sum(t.multiplier * p) for t in block]
    dev = np.stack([(t.multiplier - ek).reshape(-1) for t, ek in zip(block, e)])
    cov = (dev * p.reshape(-1)) @ dev.conj().T
    return 0.5 * (cov + cov.conj().T)


def directional_variance(f: Signal, block, w) -> float:
    """``w^* Cov w``, the variance of ``sum_k conj(w_k) T^k``."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if not np.any(w):
        raise ValueError("direction must be nonzero")
    cov = covariance_matrix(f, block)
    if w.shape != (cov.shape[0],):
        raise ValueError("direction length does not match the block")
    return float(np.real(w.conj() @ cov @ w))


def check_weight_matrix(W, K: Optional[int] = None, tol: float = 1e-10) -> np.ndarray:
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    if W.shape[0] != W.shape[1]:
        raise ValueError("weight matrix must be square")
    if K is not None and W.shape[0] != K:
        raise ValueError(f"weight matrix must be {K}x{K}")
    if not np.allclose(W, W.conj().T, atol=1e-12, rtol=1e-12):
        raise ValueError("weight matrix must be Hermitian")
    if np.linalg.eigvalsh(W).min() < -tol:
        raise ValueError("weight matrix must be positive semidefinite")
    return W


def scalar_variance(f: Signal, block, W) -> float:
    """Frobenius pairing ``<W, Cov>_F = tr(W^* Cov)``."""
    cov = covariance_matrix(f, block)
    W = check_weight_matrix(W, cov.shape[0])
    return float(np.real(np.sum(W.conj() * cov)))


def projected_expected_value(f: Signal, T: Observable):
    """Expected value snapped to the observable's quantity (group value)."""
    if T.quantity is None:
        raise ValueError("observable has no physical quantity attached")
    e = expected_value(f, T)
    return T.quantity.value(project(T.quantity, e))


def apply_observable(T: Observable, f: Signal) -> Signal:
    F = T.domain_map.forward(f)
    return T.domain_map.inverse(F.with_values(T.multiplier * F.values))


def commutator_expectation(f: Signal, T1: Observable, T2: Observable) -> complex:
    """``<[T1, T2] f, f>`` for the normalized window (self-adjoint pair)."""
    f = f.normalized()
    a = apply_observable(T1, f).values
    b = apply_observable(T2, f).values
    w = f.space.weights
    ba = np.sum(w * b * np.conj(a))
    return complex(2j * ba.imag)


def conjugate_observable(T: Observable, rep_op) -> Observable:
    """``U^* T U`` from the commutation action known to ``rep_op``."""
    conj = getattr(rep_op, "conjugate_multiplier", None)
    if conj is None:
        raise ValueError("operator has no known commutation action")
    return T.with_multiplier(conj(T), name=T.name + "'")


@dataclass
class LocalizationReport:
    """Per-block moments of one window."""

    e: list
    E: list
    cov: list
    scalar_variances: dict = field(default_factory=dict)
    scale: float = 1.0

    def to_dict(self) -> dict:
        def enc(x):
            x = np.asarray(x)
            if np.iscomplexobj(x):
                return [[float(v.real), float(v.imag)] for v in x.reshape(-1)]
            return [float(v) for v in x.reshape(-1)]

        return {"e": [enc(v) for v in self.e],
                "E": [enc(v) if v is not None else None for v in self.E],
                "cov": [enc(c) for c in self.cov],
                "scalar_variances": {k: [float(x) for x in v] for k, v in sorted(self.scalar_variances.items())},
                "scale": float(self.scale)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def localization_report(f: Signal, multi: MultiObservable, weights: Optional[dict] = None) -> LocalizationReport:
    """Collect ``e``, ``E``, covariance and named scalar variances per block.

    ``weights`` maps a name to a list of per-block weight matrices.
    """
    es, Es, covs = [], [], []
    for block in multi.blocks:
        e = block_expected_values(f, block)
        es.append(e)
        q = block[0].quantity
        try:
            Es.append(None if q is None else q.value(project(q, e)))
        except ValueError:
            Es.append(None)
        covs.append(covariance_matrix(f, block))
    sv = {}
    for name, Ws in (weights or {}).items():
        sv[name] = [float(np.real(np.sum(check_weight_matrix(W, c.shape[0]).conj() * c)))
                    for W, c in zip(Ws, covs)]
    return LocalizationReport(es, Es, covs, sv, scale=f.norm() ** 2)
