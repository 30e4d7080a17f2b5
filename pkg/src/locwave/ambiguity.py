"""Ambiguity functions, Chebyshev decay bounds and sparse phase functions.

If two unit vectors are each concentrated near different expected values
of some observable, they are nearly orthogonal.  Applied to ``f`` and
``pi(g) f`` this bounds the ambiguity function ``|V_f[f](g)|`` by the
window's variances and the distance between the expected values, which
grows with ``g``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .groups import GroupElement
from .observables import SELF_ADJOINT, block_expected_values, covariance_matrix
from .representations import PhaseFunction, TransformSpec
from .spaces import Signal
from .uncertainty import block_expectations, projected_expected_element


def ambiguity(spec: TransformSpec, f: Signal) -> PhaseFunction:
    """``V_f[f]`` on the phase grid."""
    return spec.analyze(f, f)


def chebyshev_bound(e1, sigma1, e2, sigma2):
    """``2 sqrt(s1)/|D| + 2 sqrt(s2)/|D| + 4 sqrt(s1 s2)/D^2`` with ``D = e1 - e2``.

    Bounds ``|<f, h>|`` for unit ``f, h`` with the given moments of one
    self-adjoint observable.  Vectorized; ``+inf`` where ``D = 0``.
    """
    s1 = np.asarray(sigma1, dtype=float)
    s2 = np.asarray(sigma2, dtype=float)
    if np.any(s1 < 0) or np.any(s2 < 0):
        raise ValueError("variances must be nonnegative")
    d = np.abs(np.asarray(e1, dtype=float) - np.asarray(e2, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        b = 2 * np.sqrt(s1) / d + 2 * np.sqrt(s2) / d + 4 * np.sqrt(s1 * s2) / d ** 2
    b = np.where(d == 0, np.inf, b)
    return float(b) if b.ndim == 0 else b


def chebyshev_bound_radius(r, sigma1, sigma2):
    """``sqrt(s1)/r + sqrt(s2)/r + sqrt(s1 s2)/r^2``; ``+inf`` where ``r = 0``."""
    r = np.asarray(r, dtype=float)
    s1 = np.maximum(np.asarray(sigma1, dtype=float), 0.0)
    s2 = np.maximum(np.asarray(sigma2, dtype=float), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.sqrt(s1) / r + np.sqrt(s2) / r + np.sqrt(s1 * s2) / r ** 2
    return np.where(r <= 0, np.inf, b)


@dataclass
class DecayBoundReport:
    """Pointwise ``|V_f[f]|`` against its bound over the phase grid."""

    transform: str
    block: int
    coords: np.ndarray
    amplitude: np.ndarray
    bound: np.ndarray
    tolerance: float
    axis_names: list = field(default_factory=list)

    @property
    def margin(self) -> np.ndarray:
        return self.bound - self.amplitude

    @property
    def unbounded(self) -> int:
        return int(np.sum(~np.isfinite(self.bound)))

    @property
    def violations(self) -> int:
        fin = np.isfinite(self.bound)
        return int(np.sum(self.amplitude[fin] > self.bound[fin] + self.tolerance))

    def summary(self) -> dict:
        fin = np.isfinite(self.bound)
        return {"transform": self.transform, "block": self.block, "points": int(self.amplitude.size),
                "violations": self.violations, "unbounded": self.unbounded, "tolerance": self.tolerance,
                "min_margin": float(self.margin[fin].min()) if fin.any() else None}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.axis_names) + ["abs_ambiguity", "bound", "margin"])
        for c, a, b in zip(self.coords, self.amplitude, self.bound):
            w.writerow([repr(float(x)) for x in c] + [repr(float(a)), repr(float(b)), repr(float(b - a))])
        return buf.getvalue()


def _tolerance(spec) -> float:
    return 1e-12 if spec.finite else 1e-6


def center_window(spec: TransformSpec, f: Signal) -> Signal:
    """``pi(E_f^{-1}) f``: moves the projected expected values to the identity."""
    E, _ = projected_expected_element(spec, block_expectations(spec, f))
    return spec.rep_apply(spec.group.inverse(E), f)


def _flat_elements(spec):
    els = spec.grid.elements
    flat = GroupElement(tuple(np.asarray(c).reshape(-1, c.shape[-1]) for c in els.coords))
    return flat


def decay_bound_selfadjoint(spec: TransformSpec, f: Signal, m: int, w=None,
                            center: bool = True, tol: Optional[float] = None,
                            amplitude: Optional[np.ndarray] = None) -> DecayBoundReport:
    """Chebyshev bound for a self-adjoint block at every grid point.

    With ``e`` and ``C`` the expected values and covariance of block ``m``
    for the unit window, ``pi(g) f`` has expected values ``g_m + A e`` and
    directional variance ``sigma^{A^T w}``.  Without ``w`` the smallest
    bound over the coordinate directions and the displacement direction is
    taken (each is a valid bound).  ``amplitude`` may pass a precomputed
    ``|V_f[f]|`` of the (centered) unit window.
    """
    block = spec.canonical_observables().block(m)
    if block[0].kind != SELF_ADJOINT:
        raise ValueError(f"block {m} is not self-adjoint")
    f = f.normalized()
    if center:
        f = center_window(spec, f).normalized()
    K = len(block)
    e = np.asarray(block_expected_values(f, block), dtype=float)
    C = np.real(covariance_matrix(f, block))
    flat = _flat_elements(spec)
    gm = np.asarray(flat.coords[m], dtype=float)
    P = gm.shape[0]
    grp = spec.group
    if m < grp.n_blocks - 1:
        A = np.asarray(grp.automorphism_matrix(m, flat.tail(m)), dtype=float).reshape(P, K, K)
    else:
        A = np.broadcast_to(np.eye(K), (P, K, K))
    e2 = gm + np.einsum("pkl,l->pk", A, e)
    if w is not None:
        dirs = [np.broadcast_to(np.asarray(w, dtype=float).reshape(K), (P, K))]
    else:
        dirs = [np.broadcast_to(np.eye(K)[k], (P, K)) for k in range(K)]
        if K > 1:
            d = e2 - e
            n = np.linalg.norm(d, axis=1, keepdims=True)
            dirs.append(np.where(n > 0, d / np.where(n > 0, n, 1.0), dirs[0]))
    bound = np.full(P, np.inf)
    for W in dirs:
        s1 = np.einsum("pk,kl,pl->p", W, C, W)
        Aw = np.einsum("plk,pl->pk", A, W)          # A^T w
        s2 = np.einsum("pk,kl,pl->p", Aw, C, Aw)
        b = chebyshev_bound(np.einsum("pk,k->p", W, e), np.maximum(s1, 0), np.einsum("pk,pk->p", W, e2),
                            np.maximum(s2, 0))
        bound = np.minimum(bound, b)
    amp = np.abs(ambiguity(spec, f).values).reshape(-1) if amplitude is None else np.asarray(amplitude).reshape(-1)
    return DecayBoundReport(spec.name, m, spec.grid.coords_table(), amp, bound,
                            _tolerance(spec) if tol is None else tol, [a.name for a in spec.grid.axes])


def decay_bound_unitary(spec: TransformSpec, f: Signal, m: int, tol: Optional[float] = None,
                        amplitude: Optional[np.ndarray] = None) -> DecayBoundReport:
    """Isotropic Chebyshev bound for a circle-kind block at every grid point.

    ``pi(g) f`` has expected value ``g_m . e_f(T^A)`` where ``T^A`` has the
    multiplier ``u^A``; with ``r = |e' - e| / 2`` the bound reads
    ``sqrt(s)/r + sqrt(s')/r + sqrt(s s')/r^2`` and ``s = 1 - |e|^2``.
    """
    block = spec.canonical_observables().block(m)
    if block[0].kind == SELF_ADJOINT:
        raise ValueError(f"block {m} is self-adjoint")
    if len(block) != 1:
        raise ValueError("unitary bounds are implemented for single-observable blocks")
    T = block[0]
    f = f.normalized()
    dm = T.domain_map
    F = dm.forward(f).values
    p = dm.target.weights * np.abs(F) ** 2
    p = p / p.sum()
    e = complex(np.sum(T.multiplier * p))
    if abs(e) < 1e-12:
        raise ValueError("expected value vanishes; the unitary bound needs e_f != 0")
    flat = _flat_elements(spec)
    P = flat.batch_shape[0]
    grp = spec.group
    q = grp.blocks[m].quantity
    if m < grp.n_blocks - 1:
        A = np.asarray(grp.automorphism_matrix(m, flat.tail(m))).reshape(P).astype(np.int64)
    else:
        A = np.ones(P, dtype=np.int64)
    # e_f(T^a) for each distinct exponent
    eA = {}
    for a in np.unique(A):
        eA[int(a)] = complex(np.sum(T.multiplier ** int(a) * p))
    ep = np.array([eA[int(a)] for a in A])
    e2 = q.value(np.asarray(flat.coords[m]).reshape(P)) * ep
    r = 0.5 * np.abs(e2 - e)
    s1 = max(1.0 - abs(e) ** 2, 0.0)
    s2 = np.maximum(1.0 - np.abs(ep) ** 2, 0.0)
    bound = chebyshev_bound_radius(r, s1, s2)
    amp = np.abs(ambiguity(spec, f).values).reshape(-1) if amplitude is None else np.asarray(amplitude).reshape(-1)
    return DecayBoundReport(spec.name, m, spec.grid.coords_table(), amp, bound,
                            _tolerance(spec) if tol is None else tol, [a.name for a in spec.grid.axes])


def decay_bound(spec: TransformSpec, f: Signal, m: int, **kw) -> DecayBoundReport:
    if spec.canonical_observables().block(m)[0].kind == SELF_ADJOINT:
        return decay_bound_selfadjoint(spec, f, m, **kw)
    return decay_bound_unitary(spec, f, m, **kw)


def decay_bounds(spec: TransformSpec, f: Signal, blocks: Optional[Sequence[int]] = None,
                 skipped: Optional[list] = None) -> list:
    """Reports for several blocks, sharing one ambiguity evaluation per window.

    With a ``skipped`` list, circle-kind blocks whose expected value
    vanishes (no bound exists) are recorded there instead of raising.
    """
    multi = spec.canonical_observables()
    if blocks is None:
        blocks = range(len(multi))
    f = f.normalized()
    fc = None
    amp_c = amp_u = None
    out = []
    for m in blocks:
        if multi.block(m)[0].kind == SELF_ADJOINT:
            if fc is None:
                fc = center_window(spec, f).normalized()
                amp_c = np.abs(ambiguity(spec, fc).values)
            out.append(decay_bound_selfadjoint(spec, fc, m, center=False, amplitude=amp_c))
        else:
            if skipped is not None and abs(block_expected_values(f, multi.block(m))[0]) < 1e-12:
                skipped.append(m)
                continue
            if amp_u is None:
                amp_u = np.abs(ambiguity(spec, f).values)
            out.append(decay_bound_unitary(spec, f, m, amplitude=amp_u))
    return out


# ---------------------------------------------------------------------------
# sparse phase functions

@dataclass
class SparsePhase:
    """Finite sum ``sum_n c_n delta_{g_n}`` of grid-point deltas."""

    elements: list
    coefficients: list

    def __post_init__(self):
        if len(self.elements) != len(self.coefficients):
            raise ValueError("one coefficient per element is required")

    def __len__(self):
        return len(self.elements)

    def to_list(self) -> list:
        out = []
        for g, c in zip(self.elements, self.coefficients):
            out.append({"coords": [float(x) for x in g.flat().reshape(-1)],
                        "re": float(np.real(c)), "im": float(np.imag(c))})
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_list(), indent=2, sort_keys=True)

    @classmethod
    def from_list(cls, spec: TransformSpec, items) -> "SparsePhase":
        els, cs = [], []
        sizes = [b.size for b in spec.group.blocks]
        for it in items:
            coords = list(it["coords"])
            if len(coords) != sum(sizes):
                raise ValueError(f"expected {sum(sizes)} coordinates per atom")
            parts, k = [], 0
            for s in sizes:
                parts.append(coords[k:k + s])
                k += s
            g = spec.group.element(*parts)
            spec.grid.locate(g)
            els.append(g)
            cs.append(complex(it.get("re", 0.0), it.get("im", 0.0)))
        return cls(els, cs)

    @classmethod
    def from_json(cls, spec, text: str) -> "SparsePhase":
        return cls.from_list(spec, json.loads(text))

    def to_phase_function(self, spec) -> PhaseFunction:
        """Grid function with ``c_n / w(g_n)`` at ``g_n``, so that synthesis sums ``c_n pi(g_n) f``."""
        v = np.zeros(spec.grid.shape, dtype=complex)
        for g, c in zip(self.elements, self.coefficients):
            idx = spec.grid.locate(g)
            v[idx] += c / spec.grid.weights[idx]
        return PhaseFunction(spec, v)


def sparse_synthesize(spec: TransformSpec, f: Signal, F: SparsePhase) -> Signal:
    """``sum_n c_n pi(g_n) f`` with ``f`` scaled to ``||A f|| = 1``."""
    f = f * (1.0 / spec.duflo_moore_apply(f).norm())
    out = spec.space.zeros()
    for g, c in zip(F.elements, F.coefficients):
        spec.grid.locate(g)
        out = out + spec.rep_apply(g, f) * c
    return out


@dataclass
class PursuitResult:
    recovered: SparsePhase
    residual: Signal
    residual_norms: list
    indices: list


def matching_pursuit(spec: TransformSpec, f: Signal, s: Signal, max_iter: int = 10,
                     stop_tol: float = 1e-8) -> PursuitResult:
    """Greedy peeling of ``s`` with atoms ``pi(g) f`` on the phase grid.

    The window is normalized; at each step the largest coefficient (first in
    grid order on ties) is removed.  Repeated picks of one grid point are
    merged.  Stops after ``max_iter`` steps or once ``||s_k|| <= stop_tol ||s||``.
    """
    f = f.normalized()
    r = s
    n0 = s.norm()
    norms = [n0]
    picks: dict = {}
    order = []
    for _ in range(max_iter):
        if norms[-1] <= stop_tol * max(n0, 1e-300):
            break
        V = spec.analyze(f, r).values
        k = int(np.argmax(np.abs(V).reshape(-1)))
        idx = np.unravel_index(k, V.shape)
        c = V[idx]
        g = spec.grid.element_at(idx)
        r = r - spec.rep_apply(g, f) * c
        norms.append(r.norm())
        if idx not in picks:
            picks[idx] = 0j
            order.append(idx)
        picks[idx] += c
    els = [spec.grid.element_at(i) for i in order]
    return PursuitResult(SparsePhase(els, [picks[i] for i in order]), r, norms, order)


def grid_distance(spec: TransformSpec, g: GroupElement, h: GroupElement) -> float:
    """Euclidean distance in grid cells; circle-kind axes wrap around."""
    d2 = 0.0
    for a in spec.grid.axes:
        x = float(np.asarray(g.coords[a.block]).reshape(-1)[a.component])
        y = float(np.asarray(h.coords[a.block]).reshape(-1)[a.component])
        q = spec.group.blocks[a.block].quantity
        diff = abs(x - y)
        if q.kind == "CyclicRoots":
            diff = min(diff % q.n, q.n - diff % q.n)
        elif q.kind == "Circle":
            diff = min(diff % (2 * np.pi), 2 * np.pi - diff % (2 * np.pi))
        d2 += (diff / a.cell) ** 2
    return float(np.sqrt(d2))


def separation_metric(spec: TransformSpec, F_true: SparsePhase, F_rec: SparsePhase,
                      radius: float = 1.0) -> dict:
    """Greedy matching of recovered atoms to true atoms within ``radius`` grid cells.

    Returns the matched fraction of true atoms, the l2 error of matched
    coefficients and the l2 norm of matched location offsets (grid cells).
    """
    pairs = []
    for i, g in enumerate(F_true.elements):
        for j, h in enumerate(F_rec.elements):
            d = grid_distance(spec, g, h)
            if d <= radius:
                pairs.append((d, i, j))
    pairs.sort()
    used_i, used_j = set(), set()
    cerr = 0.0
    lerr = 0.0
    for d, i, j in pairs:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        cerr += abs(F_true.coefficients[i] - F_rec.coefficients[j]) ** 2
        lerr += d * d
    n = len(F_true)
    return {"fraction": len(used_i) / n if n else 1.0,
            "coefficient_error": float(np.sqrt(cerr)),
            "location_error": float(np.sqrt(lerr)),
            "matched": len(used_i)}


def random_sparse_phase(spec: TransformSpec, rng, n_atoms: int = 5, min_separation: float = 3.0,
                        max_tries: int = 10000) -> SparsePhase:
    """Atoms at grid points pairwise more than ``min_separation`` cells apart.

    Coefficients have modulus in ``[1, 2]`` and uniform phase.
    """
    shape = spec.grid.shape
    els = []
    for _ in range(max_tries):
        if len(els) == n_atoms:
            break
        idx = tuple(int(rng.integers(0, s)) for s in shape)
        g = spec.grid.element_at(idx)
        if all(grid_distance(spec, g, h) > min_separation for h in els):
            els.append(g)
    if len(els) < n_atoms:
        raise ValueError("could not place well-separated atoms; lower min_separation")
    mag = rng.uniform(1.0, 2.0, n_atoms)
    ph = rng.uniform(0, 2 * np.pi, n_atoms)
    return SparsePhase(els, list(mag * np.exp(1j * ph)))


def mp_trial(spec, f: Signal, F: SparsePhase, radius: float = 1.0, extra_iter: int = 0) -> dict:
    """Synthesize ``F`` with ``f`` and recover it by matching pursuit."""
    f = f.normalized()
    s = sparse_synthesize(spec, f, F)
    res = matching_pursuit(spec, f, s, max_iter=len(F) + extra_iter)
    out = separation_metric(spec, F, res.recovered, radius)
    out["residual"] = float(res.residual_norms[-1] / res.residual_norms[0])
    return out


def mp_bench(spec, windows: dict, n_instances: int = 50, n_atoms: int = 5, seed: int = 0,
             radius: float = 1.0, min_separation: float = 3.0) -> list:
    """Paired trials: every window sees the same seeded sparse phase functions."""
    rows = []
    for i in range(n_instances):
        rng = np.random.default_rng([seed, i])
        F = random_sparse_phase(spec, rng, n_atoms, min_separation)
        for name, f in windows.items():
            r = mp_trial(spec, f, F, radius)
            rows.append({"instance": i, "window": name, **r})
    return rows


def mp_bench_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["instance", "window", "fraction", "coefficient_error", "location_error", "residual"]
    w.writerow(cols)
    for r in rows:
        w.writerow([r["instance"], r["window"]] + [repr(float(r[c])) for c in cols[2:]])
    return buf.getvalue()


def mp_bench_summary(rows: Sequence[dict]) -> dict:
    out = {}
    for name in sorted({r["window"] for r in rows}):
        fr = [r["fraction"] for r in rows if r["window"] == name]
        out[name] = {"mean_fraction": float(np.mean(fr)), "instances": len(fr)}
    return out
