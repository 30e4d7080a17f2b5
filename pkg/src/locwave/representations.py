"""The four built-in transforms ``V_f[s](g) = <s, pi(g) f>``.

* :class:`FSTFT` -- finite short-time Fourier transform on ``Z/N``.
* :class:`FiniteWavelet` -- affine group of the prime field ``Z/N``.
* :class:`Wavelet1D` -- translations, dilations and reflections on a
  sampled line.
* :class:`Shearlet` -- translations, shears, anisotropic dilations and the
  point reflection on a sampled plane.

Finite transforms are exact: every ``pi(g) f`` is an index permutation
times a phase.  On sampled lines, translations are exact modulations of the
spectrum, shears are exact modulations in the mixed (frequency, position)
domain, and dilations evaluate the trigonometric interpolant of the
spectrum at scaled frequencies with a chirp-z transform.  For signals
contained in the sampling box these operators agree with the continuum
ones up to the tails of the signal.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .groups import (AffineGroup, FSTFTGroup, FiniteAffineGroup, GroupElement, GroupSpec,
                     ShearletGroup, reflection_sign)
from .observables import SELF_ADJOINT, UNITARY, MultiObservable, Observable
from .spaces import (Axis, SampledSpace, Signal, centered_fft, centered_ifft, dft_map,
                     dtft_scaled, identity_map)


class InadmissibleWindowError(ValueError):
    """Window outside the admissible space (infinite ``||A f||``)."""


# ---------------------------------------------------------------------------
# phase-space grids

@dataclass(frozen=True, eq=False)
class GridAxis:
    """One sampled coordinate of the phase-space grid.

    ``values`` are native coordinates; ``cell`` is the grid spacing in the
    same units (used by Haar weights and by grid distances).
    """

    name: str
    block: int
    component: int
    values: np.ndarray
    cell: float


class PhaseGrid:
    """Product grid over sampled coordinates of ``G_z``.

    Coordinates not listed as axes are held fixed (``fixed`` maps
    ``(block, component)`` to a native value).
    """

    def __init__(self, group: GroupSpec, axes: Sequence[GridAxis], fixed: Optional[dict] = None,
                 density=None):
        self.group = group
        self.axes = tuple(axes)
        self.fixed = dict(fixed or {})
        self._density = density
        seen = {(a.block, a.component) for a in self.axes} | set(self.fixed)
        need = {(m, k) for m, b in enumerate(group.blocks) for k in range(b.size)}
        if seen != need:
            raise ValueError("grid axes and fixed coordinates must cover every coordinate")

    @property
    def shape(self) -> tuple:
        return tuple(len(a.values) for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def elements(self) -> GroupElement:
        """All grid points as one batched group element."""
        shape = self.shape
        blocks = []
        for m, b in enumerate(self.group.blocks):
            comps = []
            for k in range(b.size):
                ax = [i for i, a in enumerate(self.axes) if (a.block, a.component) == (m, k)]
                if ax:
                    i = ax[0]
                    sh = [1] * len(shape)
                    sh[i] = shape[i]
                    comps.append(np.broadcast_to(self.axes[i].values.reshape(sh), shape))
                else:
                    comps.append(np.full(shape, self.fixed[(m, k)]))
            blocks.append(b.quantity.canon(np.stack(comps, axis=-1)))
        return GroupElement(tuple(blocks))

    @cached_property
    def weights(self) -> np.ndarray:
        cell = float(np.prod([a.cell for a in self.axes]))
        w = np.full(self.shape, cell)
        if self._density is not None:
            w = w * self._density(self.elements)
        w.setflags(write=False)
        return w

    def coords_table(self) -> np.ndarray:
        """Native coordinates of every grid point, row-major, one column per axis."""
        mesh = np.meshgrid(*[a.values for a in self.axes], indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1).astype(float)

    def locate(self, g: GroupElement, tol: float = 1e-9) -> tuple:
        """Grid index of a single element; ``ValueError`` if off-grid."""
        idx = []
        for m, b in enumerate(self.group.blocks):
            for k in range(b.size):
                v = float(np.asarray(g.coords[m]).reshape(-1)[k])
                if (m, k) in self.fixed:
                    if abs(v - float(self.fixed[(m, k)])) > tol:
                        raise ValueError("element differs from the grid's fixed coordinate")
        for a in self.axes:
            v = float(np.asarray(g.coords[a.block]).reshape(-1)[a.component])
            j = int(np.argmin(np.abs(a.values - v)))
            if abs(a.values[j] - v) > tol * max(1.0, abs(v)):
                raise ValueError(f"coordinate {a.name}={v} is not on the grid")
            idx.append(j)
        return tuple(idx)

    def element_at(self, idx) -> GroupElement:
        return self.elements[tuple(idx)]

    def same_as(self, other: "PhaseGrid") -> bool:
        return self is other or (self.shape == other.shape and all(
            np.array_equal(a.values, b.values) for a, b in zip(self.axes, other.axes)))


@dataclass(frozen=True, eq=False)
class PhaseFunction:
    """Complex values over a transform's phase-space grid."""

    transform: "TransformSpec"
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.transform.grid.shape:
            raise ValueError("phase function does not match the grid")
        object.__setattr__(self, "values", v)

    def inner(self, other: "PhaseFunction") -> complex:
        return complex(np.sum(self.transform.grid.weights * self.values * np.conj(other.values)))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def __add__(self, other):
        return PhaseFunction(self.transform, self.values + other.values)

    def __sub__(self, other):
        return PhaseFunction(self.transform, self.values - other.values)

    def __mul__(self, c):
        return PhaseFunction(self.transform, self.values * c)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# representation operators

class RepresentationOperator:
    """``pi(g)`` for one group element, with its commutation action."""

    def __init__(self, spec: "TransformSpec", g: GroupElement):
        spec.group.check(g)
        self.spec = spec
        self.g = g

    def apply(self, f: Signal) -> Signal:
        return self.spec.rep_apply(self.g, f)

    def conjugate_multiplier(self, T: Observable) -> np.ndarray:
        """Multiplier of ``pi(g)^* T pi(g) = g . T``."""
        if T.tag is None:
            raise ValueError("observable is not a canonical observable of this transform")
        m, k = T.tag
        block = self.spec.canonical_observables().block(m)
        if block[k].domain_map is not T.domain_map:
            raise ValueError("observable is not a canonical observable of this transform")
        grp = self.spec.group
        gm = np.asarray(self.g.coords[m]).reshape(-1)
        if m < grp.n_blocks - 1:
            A = np.asarray(grp.automorphism_matrix(m, tuple(np.asarray(c).reshape(-1) for c in self.g.tail(m))))
        else:
            A = np.eye(len(block))
        q = grp.blocks[m].quantity
        if T.kind == SELF_ADJOINT:
            out = np.full(T.multiplier.shape, float(gm[k]))
            for l, t in enumerate(block):
                out = out + A[k, l] * t.multiplier
            return out
        out = np.full(T.multiplier.shape, complex(q.value(gm[k])))
        for l, t in enumerate(block):
            out = out * t.multiplier ** int(A[k, l])
        return out


# ---------------------------------------------------------------------------
# base class

class TransformSpec:
    """Group, signal space, phase grid, representation and observables."""

    name = "transform"

    group: GroupSpec
    space: SampledSpace
    grid: PhaseGrid

    # -- helpers -----------------------------------------------------------
    def element(self, *coords) -> GroupElement:
        return self.group.element(*coords)

    def operator(self, g: GroupElement) -> RepresentationOperator:
        return RepresentationOperator(self, g)

    @cached_property
    def fourier(self):
        return dft_map(self.space)

    def _check_signal(self, f: Signal):
        if not f.space.same_as(self.space):
            raise ValueError("signal is not in this transform's space")

    # -- interface ---------------------------------------------------------
    def rep_apply(self, g: GroupElement, f: Signal) -> Signal:
        raise NotImplementedError

    def analyze(self, f: Signal, s: Signal) -> PhaseFunction:
        raise NotImplementedError

    def synthesize(self, h: Signal, F: PhaseFunction) -> Signal:
        raise NotImplementedError

    def duflo_moore_apply(self, f: Signal) -> Signal:
        self._check_signal(f)
        return f

    def check_admissible(self, f: Signal) -> None:
        self._check_signal(f)

    def admissible_projection(self, f: Signal) -> Signal:
        """Nearest admissible window (identity unless the space is reducible)."""
        return f

    def canonical_observables(self) -> MultiObservable:
        raise NotImplementedError

    def default_window(self) -> Signal:
        raise NotImplementedError

    def group_convolve(self, F: PhaseFunction, Q: PhaseFunction) -> PhaseFunction:
        raise ValueError(f"{self.name}: convolution needs a finite group grid")

    @property
    def finite(self) -> bool:
        return False

    # -- calibration -------------------------------------------------------
    def calibration_constant(self) -> float:
        """``c`` in ``<V_f s, V_h q> = c <Ah, Af> <s, q>``, measured once."""
        if not hasattr(self, "_calibration"):
            f = self.default_window()
            s = self._calibration_signal()
            V = self.analyze(f, s)
            Af = self.duflo_moore_apply(f)
            c = V.inner(V).real / (Af.norm() ** 2 * s.norm() ** 2)
            self._calibration = float(c)
        return self._calibration

    def _calibration_signal(self) -> Signal:
        return self.default_window()

    def normalize_window(self, f: Signal) -> Signal:
        """Scale ``f`` so that ``c ||A f||^2 = 1`` (``V_f`` becomes an isometry)."""
        Af = self.duflo_moore_apply(f)
        return f * (1.0 / (np.sqrt(self.calibration_constant()) * Af.norm()))


# ---------------------------------------------------------------------------
# finite transforms

class _FiniteTransform(TransformSpec):
    """Shared machinery for transforms over a finite group (weight-1 grid)."""

    n: int

    @property
    def finite(self) -> bool:
        return True

    def _atoms(self, f: Signal) -> np.ndarray:
        """``pi(g) f`` for every grid point, shape ``grid.shape + (N,)``."""
        raise NotImplementedError

    def analyze(self, f, s):
        self.check_admissible(f)
        self._check_signal(s)
        atoms = self._atoms(f)
        return PhaseFunction(self, np.conj(atoms) @ s.values)

    def synthesize(self, h, F):
        self.check_admissible(h)
        if F.transform is not self and not F.transform.grid.same_as(self.grid):
            raise ValueError("phase function lives on another grid")
        atoms = self._atoms(h)
        coef = (self.grid.weights * F.values).reshape(-1)
        return Signal(self.space, coef @ atoms.reshape(-1, self.n))

    def _calibration_signal(self):
        rng = np.random.default_rng(12345)
        v = rng.standard_normal(self.n) + 1j * rng.standard_normal(self.n)
        return self.admissible_projection(Signal(self.space, v))

    def _grid_index(self, g: GroupElement) -> np.ndarray:
        """Flat grid index of batched elements (all coordinates on the grid)."""
        idx = np.zeros(g.batch_shape, dtype=np.int64)
        for a in self.grid.axes:
            v = np.asarray(g.coords[a.block])[..., a.component].astype(np.int64)
            idx = idx * len(a.values) + v
        return idx

    def group_convolve(self, F, Q):
        """``[F * Q](g) = sum_q F(q^{-1} . g) Q(q) w(q)`` with the central twist.

        When the cross-section drops a center, ``F`` and ``Q`` are read as
        the restrictions of functions transforming like ``V_f[s]`` under the
        center; integrating the center out (unit mass) leaves the cocycle
        factor ``c(q, q^{-1}) conj(c(q^{-1}, g))``.
        """
        for P in (F, Q):
            if P.transform is not self and not P.transform.grid.same_as(self.grid):
                raise ValueError("grid mismatch")
        grp = self.group
        els = self.grid.elements
        flat = GroupElement(tuple(np.asarray(c).reshape(-1, c.shape[-1]) for c in els.coords))
        n = self.grid.size
        qinv = grp.inverse(flat)
        Qb = GroupElement(tuple(np.broadcast_to(c[None, :, :], (n, n, c.shape[-1])) for c in flat.coords))
        Qi = GroupElement(tuple(np.broadcast_to(c[None, :, :], (n, n, c.shape[-1])) for c in qinv.coords))
        Gb = GroupElement(tuple(np.broadcast_to(c[:, None, :], (n, n, c.shape[-1])) for c in flat.coords))
        x = grp.multiply(Qi, Gb)                      # x[i, j] = q_j^{-1} . g_i
        factor = grp.cocycle(Qb, Qi) * np.conj(grp.cocycle(Qi, Gb))
        Fv = F.values.reshape(-1)[self._grid_index(x)]
        wq = (self.grid.weights * Q.values).reshape(-1)
        out = np.sum(Fv * factor * wq[None, :], axis=1)
        return PhaseFunction(self, out.reshape(self.grid.shape))


class FSTFT(_FiniteTransform):
    """Finite STFT: ``pi(g_1, g_2) f(n) = e^{2 pi i g_2 (n - g_1)/N} f(n - g_1)``."""

    name = "fstft"

    def __init__(self, n: int = 16):
        self.n = int(n)
        self.group = FSTFTGroup(self.n)
        self.space = SampledSpace((Axis.cyclic("n", self.n),))
        ar = np.arange(self.n)
        self.grid = PhaseGrid(self.group, [GridAxis("time", 0, 0, ar, 1.0),
                                           GridAxis("frequency", 1, 0, ar.copy(), 1.0)])

    def rep_apply(self, g, f):
        self._check_signal(f)
        t = int(np.asarray(g.coords[0]).reshape(-1)[0])
        q = int(np.asarray(g.coords[1]).reshape(-1)[0])
        n = np.arange(self.n)
        mod = np.exp(2j * np.pi * q * n / self.n) * f.values
        return Signal(self.space, np.roll(mod, t))

    def _atoms(self, f):
        N = self.n
        n = np.arange(N)
        shifted = np.stack([np.roll(f.values, t) for t in range(N)])          # f(n - t)
        phase = np.exp(2j * np.pi * np.outer(np.arange(N), n) / N)             # (q, n)
        ph = np.stack([np.roll(phase, t, axis=1) for t in range(N)])          # e^{2pi i q (n-t)/N}
        return ph * shifted[:, None, :]

    @cached_property
    def _observables(self):
        ident = identity_map(self.space)
        Q = Observable("Q", ident, self.space.axes[0].positions, UNITARY, self.group.blocks[0].quantity, (0, 0))
        F = self.fourier
        P = Observable("P", F, F.target.axes[0].positions, UNITARY, self.group.blocks[1].quantity, (1, 0))
        return MultiObservable(((Q,), (P,)))

    def canonical_observables(self):
        return self._observables

    def default_window(self):
        return periodized_gaussian(self.n, self.space)


class FiniteWavelet(_FiniteTransform):
    """Wavelet transform over the affine group of the prime field ``Z/N``.

    ``pi(b, m) f(n) = f(a^{-1} (n - b))`` with ``a = r^m``; in frequency the
    dilation reads ``f^(q) -> f^(a q)``.  The representation splits into
    constants and zero-mean signals; admissible windows have ``f^(0) = 0``.
    """

    name = "finwave"

    def __init__(self, n: int = 17):
        self.group = FiniteAffineGroup(n)
        self.n = self.group.n
        self.root = self.group.root
        self.space = SampledSpace((Axis.cyclic("n", self.n),))
        self.grid = PhaseGrid(self.group, [GridAxis("time", 0, 0, np.arange(self.n), 1.0),
                                           GridAxis("dilation", 1, 0, np.arange(self.n - 1), 1.0)])
        self._inv = np.array([pow(int(a), self.n - 2, self.n) for a in self.group.powers], dtype=np.int64)

    def check_admissible(self, f):
        self._check_signal(f)
        dc = abs(np.sum(f.values)) / np.sqrt(self.n)
        if dc > 1e-9 * max(f.norm(), 1e-300):
            raise InadmissibleWindowError("finite wavelet windows must have zero mean")

    def admissible_projection(self, f):
        return Signal(self.space, f.values - f.values.mean())

    def rep_apply(self, g, f):
        self._check_signal(f)
        b = int(np.asarray(g.coords[0]).reshape(-1)[0])
        m = int(np.asarray(g.coords[1]).reshape(-1)[0])
        n = np.arange(self.n)
        idx = (self._inv[m] * (n - b)) % self.n
        return Signal(self.space, f.values[idx])

    def _atoms(self, f):
        N = self.n
        n = np.arange(N)
        b = np.arange(N)
        idx = (self._inv[None, :, None] * ((n[None, None, :] - b[:, None, None]) % N)) % N
        return f.values[idx]

    @cached_property
    def _observables(self):
        N = self.n
        ident = identity_map(self.space)
        T1 = Observable("T1", ident, self.space.axes[0].positions, UNITARY, self.group.blocks[0].quantity, (0, 0))
        F = self.fourier
        u = np.ones(N, dtype=complex)
        k = np.arange(1, N)
        u[1:] = np.exp(-2j * np.pi * self.group.logs[k] / (N - 1))
        T2 = Observable("T2", F, u, UNITARY, self.group.blocks[1].quantity, (1, 0))
        return MultiObservable(((T1,), (T2,)))

    def canonical_observables(self):
        return self._observables

    def default_window(self):
        return self.admissible_projection(periodized_gaussian(self.n, self.space)).normalized()


def periodized_gaussian(n: int, space: SampledSpace, width: float = 1.0) -> Signal:
    """``sum_k exp(-pi (x + kN)^2 / (width N))`` on ``Z/N``, unit norm."""
    x = np.arange(n)
    x = np.where(x > n // 2, x - n, x).astype(float)
    g = sum(np.exp(-np.pi * (x + k * n) ** 2 / (width * n)) for k in range(-6, 7))
    return Signal(space, g.astype(complex)).normalized()


# ---------------------------------------------------------------------------
# sampled continuum transforms

def _translation_sum(X: np.ndarray, axis: int, m: np.ndarray) -> np.ndarray:
    """``sum_k X_k e^{i w_k m dt}`` for integer sample shifts ``m`` along ``axis``."""
    N = X.shape[axis]
    c = (N - 1) / 2.0
    Y = N * np.fft.ifft(X, axis=axis)
    Y = np.take(Y, np.mod(m, N), axis=axis)
    sh = [1] * X.ndim
    sh[axis] = len(m)
    return Y * np.exp(-2j * np.pi * c * m / N).reshape(sh)


def _translation_adjoint(G: np.ndarray, axis: int, m: np.ndarray, N: int) -> np.ndarray:
    """``sum_m G_m e^{-i w_k m dt}`` (adjoint of :func:`_translation_sum`)."""
    c = (N - 1) / 2.0
    sh = [1] * G.ndim
    sh[axis] = len(m)
    Gp = G * np.exp(2j * np.pi * c * m / N).reshape(sh)
    shape = list(G.shape)
    shape[axis] = N
    P = np.zeros(shape, dtype=complex)
    sl = [slice(None)] * G.ndim
    sl[axis] = np.mod(m, N)
    P[tuple(sl)] = Gp
    return np.fft.fft(P, axis=axis)


def _shift_indices(n: int, stride: int) -> np.ndarray:
    k = n // stride
    return stride * (np.arange(k) - k // 2)


class Wavelet1D(TransformSpec):
    """1D wavelet transform with translations, dilations and reflections.

    ``pi(g_1, g_2, g_3) f(t) = e^{-g_2/2} f(g_3 e^{-g_2} (t - g_1))``; in
    frequency ``f^(w) -> e^{g_2/2} e^{-i w g_1} f^(g_3 e^{g_2} w)``.

    Parameters
    ----------
    n, length : int, float
        Samples and period of the time axis (``n`` even).
    stride : int
        Translation grid step in samples.
    dilations : (float, float, int)
        ``(min, max, count)`` of the dilation grid.
    """

    name = "wavelet1d"

    def __init__(self, n: int = 4096, length: float = 256.0, stride: int = 16,
                 dilations=(-3.0, 3.0, 61)):
        self.n = int(n)
        self.length = float(length)
        self.group = AffineGroup()
        self.space = SampledSpace((Axis.line("t", self.n, self.length),))
        self.dt = self.length / self.n
        self.shifts = _shift_indices(self.n, int(stride))
        lo, hi, cnt = dilations
        self.dilations = np.linspace(lo, hi, int(cnt))
        dg = (hi - lo) / (cnt - 1) if cnt > 1 else 1.0
        self.grid = PhaseGrid(self.group,
                              [GridAxis("translation", 0, 0, self.shifts * self.dt, stride * self.dt),
                               GridAxis("dilation", 1, 0, self.dilations, dg)],
                              fixed={(2, 0): 0},
                              density=lambda g: np.exp(-g.coords[1][..., 0]))

    @cached_property
    def omega(self) -> np.ndarray:
        return np.asarray(self.fourier.target.axes[0].positions)

    def _dilated_spectrum(self, values, g2, sign=1.0):
        return np.exp(g2 / 2) * dtft_scaled(values, 0, self.length, sign * np.exp(g2))

    def rep_apply(self, g, f):
        self._check_signal(f)
        g1 = float(np.asarray(g.coords[0]).reshape(-1)[0])
        g2 = float(np.asarray(g.coords[1]).reshape(-1)[0])
        s = float(reflection_sign(np.asarray(g.coords[2]).reshape(-1)[0]))
        F = self._dilated_spectrum(f.values, g2, s) * np.exp(-1j * self.omega * g1)
        return Signal(self.space, centered_ifft(F, 0, self.length))

    def spectrum(self, f: Signal) -> np.ndarray:
        return centered_fft(f.values, 0, self.length)

    def check_admissible(self, f, tol: float = 1e-3):
        self._check_signal(f)
        F = self.spectrum(f)
        dc = abs(self.dt / np.sqrt(2 * np.pi) * np.sum(f.values))
        if dc > tol * np.abs(F).max():
            raise InadmissibleWindowError("window spectrum does not vanish at w = 0")

    def duflo_moore_apply(self, f):
        self._check_signal(f)
        F = self.spectrum(f) / np.sqrt(np.abs(self.omega))
        return Signal(self.space, centered_ifft(F, 0, self.length))

    def analyze(self, f, s):
        self.check_admissible(f)
        self._check_signal(s)
        S = self.spectrum(s)
        dw = 2 * np.pi / self.length
        V = np.empty(self.grid.shape, dtype=complex)
        for j, g2 in enumerate(self.dilations):
            H = self._dilated_spectrum(f.values, g2)
            V[:, j] = _translation_sum(dw * S * np.conj(H), 0, self.shifts)
        return PhaseFunction(self, V)

    def synthesize(self, h, F):
        self.check_admissible(h)
        W = self.grid.weights * F.values
        out = np.zeros(self.n, dtype=complex)
        for j, g2 in enumerate(self.dilations):
            H = self._dilated_spectrum(h.values, g2)
            out += H * _translation_adjoint(W[:, j], 0, self.shifts, self.n)
        return Signal(self.space, centered_ifft(out, 0, self.length))

    @cached_property
    def _observables(self):
        ident = identity_map(self.space)
        F = self.fourier
        w = self.omega
        T1 = Observable("T1", ident, self.space.axes[0].positions, SELF_ADJOINT, self.group.blocks[0].quantity, (0, 0))
        T2 = Observable("T2", F, -np.log(np.abs(w)), SELF_ADJOINT, self.group.blocks[1].quantity, (1, 0))
        T3 = Observable("T3", F, np.sign(w), UNITARY, self.group.blocks[2].quantity, (2, 0))
        return MultiObservable(((T1,), (T2,), (T3,)))

    def canonical_observables(self):
        return self._observables

    def window_from_spectrum(self, fhat) -> Signal:
        """Time-domain window from a callable spectrum ``fhat(w)``."""
        F = np.asarray(fhat(self.omega), dtype=complex)
        return Signal(self.space, centered_ifft(F, 0, self.length))

    def default_window(self):
        return self.window_from_spectrum(lambda w: lognormal_bump(w, 0.0, 0.5)).normalized()

    def project_halfplane(self, f: Signal) -> Signal:
        F = self.spectrum(f) * (self.omega > 0)
        return Signal(self.space, centered_ifft(F, 0, self.length))


def lognormal_bump(w, mu: float, s: float):
    """``exp(-(ln w - mu)^2 / (2 s^2))`` for ``w > 0`` and 0 otherwise."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = np.exp(-(np.log(w[pos]) - mu) ** 2 / (2 * s * s))
    return out


class Shearlet(TransformSpec):
    """Shearlet transform on a sampled plane.

    ``pi(g) = pi_1(g_1) pi_2(g_2) pi_3(g_3) pi_4(g_4)`` with translation
    ``g_1``, shear ``f(S^{-1} x)``, anisotropic dilation
    ``e^{-3 g_3 / 4} f(D^{-1} x)``, ``D = diag(e^{g_3}, e^{g_3/2})``, and the
    point reflection ``f(g_4 x)``.
    """

    name = "shearlet"

    def __init__(self, n: int = 256, length: float = 96.0, stride: int = 8,
                 shears=(-1.0, 1.0, 9), dilations=(-1.0, 1.0, 9)):
        self.n = int(n)
        self.length = float(length)
        self.group = ShearletGroup()
        self.space = SampledSpace((Axis.line("x1", self.n, self.length), Axis.line("x2", self.n, self.length)))
        self.dx = self.length / self.n
        self.shifts = _shift_indices(self.n, int(stride))
        self.shears = np.linspace(*shears[:2], int(shears[2]))
        self.dilations = np.linspace(*dilations[:2], int(dilations[2]))
        ds = (shears[1] - shears[0]) / (shears[2] - 1) if shears[2] > 1 else 1.0
        dd = (dilations[1] - dilations[0]) / (dilations[2] - 1) if dilations[2] > 1 else 1.0
        tv = self.shifts * self.dx
        self.grid = PhaseGrid(self.group,
                              [GridAxis("translation_1", 0, 0, tv, stride * self.dx),
                               GridAxis("translation_2", 0, 1, tv.copy(), stride * self.dx),
                               GridAxis("shear", 1, 0, self.shears, ds),
                               GridAxis("dilation", 2, 0, self.dilations, dd)],
                              fixed={(3, 0): 0},
                              density=lambda g: np.exp(-2 * g.coords[2][..., 0]))

    @cached_property
    def omega(self):
        return np.asarray(self.fourier.target.axes[0].positions)

    @cached_property
    def positions(self):
        return np.asarray(self.space.axes[0].positions)

    def spectrum(self, f: Signal) -> np.ndarray:
        return centered_fft(centered_fft(f.values, 0, self.length), 1, self.length)

    def _from_spectrum(self, F) -> np.ndarray:
        return centered_ifft(centered_ifft(F, 0, self.length), 1, self.length)

    def _transformed_spectrum(self, values, shear, dil, sign=1.0):
        """Spectrum of ``pi_2(shear) pi_3(dil) pi_4(sign) f``."""
        L = self.length
        X = dtft_scaled(values, 0, L, sign * np.exp(dil))
        X = dtft_scaled(X, 1, L, sign * np.exp(dil / 2)) * np.exp(0.75 * dil)
        if shear != 0.0:
            H = centered_ifft(X, 1, L)
            H = H * np.exp(-1j * shear * np.outer(self.omega, self.positions))
            X = centered_fft(H, 1, L)
        return X

    def rep_apply(self, g, f):
        self._check_signal(f)
        t = np.asarray(g.coords[0], dtype=float).reshape(-1)
        sh = float(np.asarray(g.coords[1]).reshape(-1)[0])
        d = float(np.asarray(g.coords[2]).reshape(-1)[0])
        s = float(reflection_sign(np.asarray(g.coords[3]).reshape(-1)[0]))
        X = self._transformed_spectrum(f.values, sh, d, s)
        w = self.omega
        X = X * np.exp(-1j * (w[:, None] * t[0] + w[None, :] * t[1]))
        return Signal(self.space, self._from_spectrum(X))

    def check_admissible(self, f, tol: float = 1e-3):
        self._check_signal(f)
        F = self.spectrum(f)
        col = self.dx / np.sqrt(2 * np.pi) * np.sum(f.values, axis=0)
        col = centered_fft(col, 0, self.length)
        if np.abs(col).max() > tol * np.abs(F).max():
            raise InadmissibleWindowError("window spectrum does not vanish on w1 = 0")

    def duflo_moore_apply(self, f):
        self._check_signal(f)
        F = self.spectrum(f) / np.abs(self.omega)[:, None]
        return Signal(self.space, self._from_spectrum(F))

    def analyze(self, f, s):
        self.check_admissible(f)
        self._check_signal(s)
        S = self.spectrum(s)
        dw = 2 * np.pi / self.length
        V = np.empty(self.grid.shape, dtype=complex)
        for i, sh in enumerate(self.shears):
            for j, d in enumerate(self.dilations):
                H = self._transformed_spectrum(f.values, sh, d)
                X = dw * dw * S * np.conj(H)
                X = _translation_sum(X, 0, self.shifts)
                V[:, :, i, j] = _translation_sum(X, 1, self.shifts)
        return PhaseFunction(self, V)

    def synthesize(self, h, F):
        self.check_admissible(h)
        W = self.grid.weights * F.values
        out = np.zeros((self.n, self.n), dtype=complex)
        for i, sh in enumerate(self.shears):
            for j, d in enumerate(self.dilations):
                H = self._transformed_spectrum(h.values, sh, d)
                G = _translation_adjoint(W[:, :, i, j], 0, self.shifts, self.n)
                G = _translation_adjoint(G, 1, self.shifts, self.n)
                out += H * G
        return Signal(self.space, self._from_spectrum(out))

    @cached_property
    def _observables(self):
        ident = identity_map(self.space)
        F = self.fourier
        x1 = self.space.grid(0)
        x2 = self.space.grid(1)
        w1 = F.target.grid(0)
        w2 = F.target.grid(1)
        q = self.group.blocks
        T1 = (Observable("T1_1", ident, x1, SELF_ADJOINT, q[0].quantity, (0, 0)),
              Observable("T1_2", ident, x2, SELF_ADJOINT, q[0].quantity, (0, 1)))
        T2 = Observable("T2", F, -w2 / w1, SELF_ADJOINT, q[1].quantity, (1, 0))
        T3 = Observable("T3", F, -np.log(np.abs(w1)), SELF_ADJOINT, q[2].quantity, (2, 0))
        T4 = Observable("T4", F, np.sign(w1), UNITARY, q[3].quantity, (3, 0))
        return MultiObservable((T1, (T2,), (T3,), (T4,)))

    def canonical_observables(self):
        return self._observables

    def window_from_spectrum(self, fhat) -> Signal:
        w = self.omega
        F = np.asarray(fhat(w[:, None], w[None, :]), dtype=complex)
        return Signal(self.space, self._from_spectrum(F))

    def default_window(self):
        return self.window_from_spectrum(
            lambda w1, w2: lognormal_bump(w1, np.log(1.2), 0.2) * slope_bump(w1, w2, 0.25)).normalized()

    def project_halfplane(self, f: Signal) -> Signal:
        F = self.spectrum(f) * (self.omega > 0)[:, None]
        return Signal(self.space, self._from_spectrum(F))


def slope_bump(w1, w2, width: float):
    """Gaussian in the slope ``w2 / w1`` (zero where ``w1 <= 0``)."""
    w1 = np.asarray(w1, dtype=float)
    safe = np.where(w1 > 0, w1, 1.0)
    return np.where(w1 > 0, np.exp(-(np.asarray(w2) / safe) ** 2 / (2 * width * width)), 0.0)


TRANSFORMS = {"fstft": FSTFT, "wavelet1d": Wavelet1D, "shearlet": Shearlet, "finwave": FiniteWavelet}


def make_transform(name: str, **params) -> TransformSpec:
    """Build a transform by CLI name (``fstft``, ``wavelet1d``, ``shearlet``, ``finwave``)."""
    if name not in TRANSFORMS:
        raise ValueError(f"unknown transform {name!r}; choose from {sorted(TRANSFORMS)}")
    return TRANSFORMS[name](**params)


def rep_apply(spec: TransformSpec, g: GroupElement, f: Signal) -> Signal:
    return spec.rep_apply(g, f)


def analyze(spec: TransformSpec, f: Signal, s: Signal) -> PhaseFunction:
    return spec.analyze(f, s)


def synthesize(spec: TransformSpec, h: Signal, F: PhaseFunction) -> Signal:
    return spec.synthesize(h, F)


def duflo_moore_apply(spec: TransformSpec, f: Signal) -> Signal:
    return spec.duflo_moore_apply(f)


def canonical_observables(spec: TransformSpec) -> MultiObservable:
    return spec.canonical_observables()


def group_convolve(spec: TransformSpec, F: PhaseFunction, Q: PhaseFunction) -> PhaseFunction:
    return spec.group_convolve(F, Q)


def write_phase(F: PhaseFunction, path) -> None:
    """CSV with one row per grid point: native coordinates, then re, im."""
    from pathlib import Path

    grid = F.transform.grid
    header = ",".join([a.name for a in grid.axes] + ["re", "im"])
    coords = grid.coords_table()
    vals = F.values.reshape(-1)
    lines = [header]
    for c, v in zip(coords, vals):
        lines.append(",".join([repr(float(x)) for x in c] + [repr(float(v.real)), repr(float(v.imag))]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_phase(spec: TransformSpec, path) -> PhaseFunction:
    from pathlib import Path

    rows = Path(path).read_text().strip().splitlines()
    grid = spec.grid
    header = ",".join([a.name for a in grid.axes] + ["re", "im"])
    if not rows or rows[0] != header:
        raise ValueError(f"{path}: header does not match the {spec.name} grid ({header})")
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    if data.shape != (grid.size, len(grid.axes) + 2):
        raise ValueError(f"{path}: expected {grid.size} rows")
    if not np.allclose(data[:, :-2], grid.coords_table(), rtol=1e-12, atol=1e-12):
        raise ValueError(f"{path}: coordinates do not match the grid")
    return PhaseFunction(spec, (data[:, -2] + 1j * data[:, -1]).reshape(grid.shape))
