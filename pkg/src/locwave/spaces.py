"""Sampled signal spaces, weighted inner products and unitary domain maps.

A :class:`SampledSpace` models ``L^2(X)`` on a finite grid.  Every axis is
either

* ``cyclic``: the N-th roots of unity, counting measure (weight 1), or
* ``line``: a uniform grid of ``N`` points (``N`` even) over an interval of
  length ``L``, symmetric about zero with a half-sample offset, weight
  ``L / N``, or
* ``custom``: explicit strictly increasing positions and per-sample weights
  (used for warped domains).

Signals store function samples, so inner products are Riemann sums.  The
centered line grid makes the DFT map on a line axis a sampled version of
the unitary Fourier transform ``(2 pi)^{-1/2} int f(t) e^{-i w t} dt`` whose
frequency grid never contains ``w = 0``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class Axis:
    """One axis of a sampled space.

    Parameters
    ----------
    name : str
    kind : {"cyclic", "line", "custom"}
    positions : ndarray
        Unit complex roots for cyclic axes, real positions otherwise.
    weights : ndarray
        Positive measure weight per sample.
    length : float
        Period ``L`` of a line axis (``N`` for cyclic axes).
    """

    name: str
    kind: str
    positions: np.ndarray
    weights: np.ndarray
    length: float

    def __post_init__(self):
        if self.kind not in ("cyclic", "line", "custom"):
            raise ValueError(f"unknown axis kind {self.kind!r}")
        if self.positions.ndim != 1 or len(self.positions) < 1:
            raise ValueError("axis needs at least one sample")
        if self.weights.shape != self.positions.shape:
            raise ValueError("weights and positions differ in length")
        if np.any(self.weights <= 0):
            raise ValueError("axis weights must be positive")
        if self.kind != "cyclic" and np.any(np.diff(self.positions) <= 0):
            raise ValueError("positions of a real axis must be strictly increasing")
        self.positions.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def spacing(self) -> float:
        """Grid spacing (1 for cyclic axes)."""
        if self.kind == "cyclic":
            return 1.0
        if self.kind == "line":
            return self.length / self.n
        raise ValueError("custom axes have no uniform spacing")

    @classmethod
    def cyclic(cls, name: str, n: int) -> "Axis":
        if n < 1:
            raise ValueError("cyclic axis needs N >= 1")
        pos = np.exp(2j * np.pi * np.arange(n) / n)
        return cls(name, "cyclic", pos, np.ones(n), float(n))

    @classmethod
    def line(cls, name: str, n: int, length: float) -> "Axis":
        if n < 2 or n % 2:
            raise ValueError("line axes need an even number of samples")
        if length <= 0:
            raise ValueError("axis length must be positive")
        d = length / n
        pos = (np.arange(n) - (n - 1) / 2.0) * d
        return cls(name, "line", pos, np.full(n, d), float(length))

    @classmethod
    def custom(cls, name: str, positions, weights) -> "Axis":
        positions = np.asarray(positions, dtype=float).copy()
        weights = np.asarray(weights, dtype=float).copy()
        return cls(name, "custom", positions, weights, float(positions[-1] - positions[0]))

    def to_dict(self) -> dict:
        if self.kind == "cyclic":
            return {"name": self.name, "kind": "cyclic", "n": self.n}
        if self.kind == "line":
            return {"name": self.name, "kind": "line", "n": self.n, "length": self.length}
        return {"name": self.name, "kind": "custom",
                "positions": self.positions.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Axis":
        kind = d.get("kind")
        if kind == "cyclic":
            return cls.cyclic(d["name"], int(d["n"]))
        if kind == "line":
            return cls.line(d["name"], int(d["n"]), float(d["length"]))
        if kind == "custom":
            return cls.custom(d["name"], d["positions"], d["weights"])
        raise ValueError(f"unknown axis kind {kind!r}")


@dataclass(frozen=True, eq=False)
class SampledSpace:
    """Finite inner-product space: product of axes with product weights."""

    axes: tuple

    def __post_init__(self):
        if len(self.axes) == 0:
            raise ValueError("a space needs at least one axis")
        object.__setattr__(self, "axes", tuple(self.axes))

    @property
    def shape(self) -> tuple:
        return tuple(a.n for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.ones(self.shape)
        for i, a in enumerate(self.axes):
            sh = [1] * self.ndim
            sh[i] = a.n
            w = w * a.weights.reshape(sh)
        w.setflags(write=False)
        return w

    def grid(self, i: int) -> np.ndarray:
        """Positions of axis ``i`` broadcast to the full shape."""
        sh = [1] * self.ndim
        sh[i] = self.axes[i].n
        return np.broadcast_to(self.axes[i].positions.reshape(sh), self.shape)

    def same_as(self, other: "SampledSpace") -> bool:
        if self is other:
            return True
        if self.shape != other.shape:
            return False
        for a, b in zip(self.axes, other.axes):
            if a.kind != b.kind or a.name != b.name:
                return False
            if not (np.allclose(a.positions, b.positions, rtol=1e-12, atol=0)
                    and np.allclose(a.weights, b.weights, rtol=1e-12, atol=0)):
                return False
        return True

    def to_dict(self) -> dict:
        return {"axes": [a.to_dict() for a in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "SampledSpace":
        return cls(tuple(Axis.from_dict(a) for a in d["axes"]))

    def signal(self, values) -> "Signal":
        return Signal(self, values)

    def zeros(self) -> "Signal":
        return Signal(self, np.zeros(self.shape, dtype=complex))


@dataclass(frozen=True, eq=False)
class Signal:
    """Complex samples on a :class:`SampledSpace`."""

    space: SampledSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.size != self.space.size:
            raise ValueError(f"signal has {v.size} samples, space has {self.space.size}")
        v = v.reshape(self.space.shape).copy()
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def vector(self) -> np.ndarray:
        return self.values.reshape(-1)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.space.weights * np.abs(self.values) ** 2)))

    def normalized(self) -> "Signal":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero signal")
        return Signal(self.space, self.values / nrm)

    def with_values(self, values) -> "Signal":
        return Signal(self.space, values)

    def __add__(self, other: "Signal") -> "Signal":
        _check_same(self.space, other.space)
        return Signal(self.space, self.values + other.values)

    def __sub__(self, other: "Signal") -> "Signal":
        _check_same(self.space, other.space)
        return Signal(self.space, self.values - other.values)

    def __mul__(self, c) -> "Signal":
        return Signal(self.space, self.values * c)

    __rmul__ = __mul__


def _check_same(a: SampledSpace, b: SampledSpace):
    if not a.same_as(b):
        raise ValueError("signals live in different spaces")


def inner_product(f: Signal, h: Signal) -> complex:
    """Weighted inner product ``sum_k w_k f_k conj(h_k)``."""
    _check_same(f.space, h.space)
    return complex(np.sum(f.space.weights * f.values * np.conj(h.values)))


@dataclass(frozen=True, eq=False)
class DomainMap:
    """Linear map between two sampled spaces with its inverse.

    ``tolerance`` is the accuracy class of the map: exact maps reach
    round-off (1e-9), interpolating maps are accurate to about 1e-3 on
    smooth, well-resolved signals.
    """

    name: str
    source: SampledSpace
    target: SampledSpace
    forward_values: Callable[[np.ndarray], np.ndarray]
    inverse_values: Callable[[np.ndarray], np.ndarray]
    isometry: bool = True
    tolerance: float = 1e-9

    def forward(self, f: Signal) -> Signal:
        _check_same(f.space, self.source)
        return Signal(self.target, self.forward_values(f.values))

    def inverse(self, F: Signal) -> Signal:
        _check_same(F.space, self.target)
        return Signal(self.source, self.inverse_values(F.values))


def identity_map(space: SampledSpace) -> DomainMap:
    return DomainMap("identity", space, space, lambda v: v, lambda v: v)


# ---------------------------------------------------------------------------
# discrete Fourier maps

def _line_phases(n: int):
    c = (n - 1) / 2.0
    k = np.arange(n)
    pre = np.exp(2j * np.pi * c * k / n)       # applied to samples before fft
    const = np.exp(-2j * np.pi * c * c / n)
    return pre, const


def centered_fft(values: np.ndarray, axis: int, length: float) -> np.ndarray:
    """Sampled unitary Fourier transform along one line axis."""
    n = values.shape[axis]
    pre, const = _line_phases(n)
    sh = [1] * values.ndim
    sh[axis] = n
    pre = pre.reshape(sh)
    dt = length / n
    return (dt / SQRT_2PI) * const * pre * np.fft.fft(values * pre, axis=axis)


def centered_ifft(values: np.ndarray, axis: int, length: float) -> np.ndarray:
    """Inverse of :func:`centered_fft`."""
    n = values.shape[axis]
    pre, const = _line_phases(n)
    sh = [1] * values.ndim
    sh[axis] = n
    pre = pre.reshape(sh)
    dw = 2.0 * np.pi / length
    return (dw / SQRT_2PI) * n * np.conj(const) * np.conj(pre) * np.fft.ifft(values * np.conj(pre), axis=axis)


def dtft_scaled(values: np.ndarray, axis: int, length: float, scale: float) -> np.ndarray:
    """Evaluate the sampled Fourier transform at ``scale * w_k``.

    This is band-limited (trigonometric) resampling of the spectrum: the
    sum ``dt / sqrt(2 pi) sum_n f_n exp(-i scale w_k t_n)`` is computed with
    a chirp-z transform, so dilations cost O(N log N) and carry no
    interpolation error for signals contained in the time box.
    """
    from scipy.signal import czt

    n = values.shape[axis]
    c = (n - 1) / 2.0
    theta = 2.0 * np.pi * scale / n
    sh = [1] * values.ndim
    sh[axis] = n
    idx = np.arange(n).reshape(sh)
    x = values * np.exp(1j * theta * c * idx)
    out = czt(x, m=n, w=np.exp(-1j * theta), a=1.0, axis=axis)
    dt = length / n
    out = (dt / SQRT_2PI) * np.exp(-1j * theta * c * c) * np.exp(1j * theta * c * idx) * out
    # the sampled transform is periodic; frequencies past Nyquist carry no signal
    if abs(scale) > 1:
        out = np.where(np.abs(scale * (idx - c)) <= n / 2.0, out, 0.0)
    return out


def frequency_axis(axis: Axis) -> Axis:
    """Frequency axis dual to a cyclic or line axis."""
    if axis.kind == "cyclic":
        return Axis.cyclic("k_" + axis.name, axis.n)
    if axis.kind == "line":
        return Axis.line("w_" + axis.name, axis.n, 2.0 * np.pi * axis.n / axis.length)
    raise ValueError("the DFT needs a uniform or cyclic axis")


def dft_map(space: SampledSpace) -> DomainMap:
    """Unitary DFT over every axis of ``space``.

    Cyclic axes use the symmetric ``1/sqrt(N)`` normalization, line axes
    the centered sampled Fourier transform.
    """
    target = SampledSpace(tuple(frequency_axis(a) for a in space.axes))
    axes = space.axes

    def fwd(v):
        out = np.asarray(v, dtype=complex)
        for i, a in enumerate(axes):
            if a.kind == "cyclic":
                out = np.fft.fft(out, axis=i, norm="ortho")
            else:
                out = centered_fft(out, i, a.length)
        return out

    def inv(v):
        out = np.asarray(v, dtype=complex)
        for i, a in enumerate(axes):
            if a.kind == "cyclic":
                out = np.fft.ifft(out, axis=i, norm="ortho")
            else:
                out = centered_ifft(out, i, a.length)
        return out

    return DomainMap("fourier", space, target, fwd, inv)


def fourier_map_along(space: SampledSpace, axis: int) -> DomainMap:
    """Partial Fourier map acting on a single line axis."""
    a = space.axes[axis]
    if a.kind != "line":
        raise ValueError("partial Fourier map needs a line axis")
    axes = list(space.axes)
    axes[axis] = frequency_axis(a)
    target = SampledSpace(tuple(axes))
    return DomainMap("fourier_" + a.name, space, target,
                     lambda v: centered_fft(np.asarray(v, dtype=complex), axis, a.length),
                     lambda v: centered_ifft(np.asarray(v, dtype=complex), axis, a.length))


# ---------------------------------------------------------------------------
# interpolation helper (uniform source grid)

def interp_uniform(values: np.ndarray, x0: float, dx: float, x, axis: int = -1) -> np.ndarray:
    """Linear interpolation of samples on ``x0 + j dx`` along ``axis``.

    ``x`` holds query points along the last axis; its leading dimensions
    broadcast against the remaining dimensions of ``values``.  Points
    outside the grid give 0.
    """
    v = np.moveaxis(np.asarray(values), axis, -1)
    n = v.shape[-1]
    u = (np.asarray(x, dtype=float) - x0) / dx
    lead = np.broadcast_shapes(v.shape[:-1], u.shape[:-1])
    v = np.broadcast_to(v, lead + (n,))
    u = np.broadcast_to(u, lead + u.shape[-1:])
    j = np.clip(np.floor(u).astype(int), 0, n - 2)
    t = u - j
    lo = np.take_along_axis(v, j, axis=-1)
    hi = np.take_along_axis(v, j + 1, axis=-1)
    out = np.where((u >= 0) & (u <= n - 1), (1 - t) * lo + t * hi, 0.0)
    return np.moveaxis(out, -1, axis)


# ---------------------------------------------------------------------------
# warping and slope maps

def half_space(freq_space: SampledSpace, sign: int = 1) -> SampledSpace:
    """Restriction of a 1D frequency space to ``sign * w > 0``."""
    if freq_space.ndim != 1:
        raise ValueError("half_space expects a 1D frequency space")
    a = freq_space.axes[0]
    keep = sign * a.positions > 0
    return SampledSpace((Axis.custom(a.name, a.positions[keep], a.weights[keep]),))


def warping_map_scale(freq_space: SampledSpace, sign: int = 1, grid: str = "native",
                      n_scale: Optional[int] = None) -> DomainMap:
    """Warp ``[W f](c) = e^{-c/2} f(sign e^{-c})`` onto the scale axis ``c = -ln|w|``.

    Parameters
    ----------
    freq_space : SampledSpace
        1D frequency space whose samples all satisfy ``sign * w > 0``.
    sign : {+1, -1}
    grid : {"native", "uniform"}
        ``native`` relabels each frequency sample as the scale point
        ``-ln|w|`` with weight ``dw/|w|``; the map is then an exact isometry.
        ``uniform`` resamples onto a uniform c-grid by linear interpolation
        (accuracy class 1e-3).
    n_scale : int, optional
        Number of c samples for the uniform grid.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if freq_space.ndim != 1:
        raise ValueError("warping needs a 1D frequency space")
    a = freq_space.axes[0]
    w = a.positions
    if np.any(w == 0):
        raise ValueError("frequency grid contains w = 0")
    if np.any(sign * w <= 0):
        raise ValueError("frequency grid must lie on one side of w = 0")
    absw = np.abs(w)
    if grid == "native":
        order = np.argsort(-np.log(absw))
        c = -np.log(absw[order])
        cw = a.weights[order] / absw[order]
        target = SampledSpace((Axis.custom("c", c, cw),))
        inv_order = np.argsort(order)

        def fwd(v):
            return np.asarray(v, dtype=complex)[order] * np.exp(-c / 2)

        def inv(v):
            return (np.asarray(v, dtype=complex) * np.exp(c / 2))[inv_order]

        return DomainMap("warp", freq_space, target, fwd, inv, isometry=True, tolerance=1e-9)
    if grid != "uniform":
        raise ValueError(f"unknown warp grid {grid!r}")
    if a.kind == "custom" and np.allclose(np.diff(w), np.diff(w)[0]):
        dw = float(np.diff(w)[0])
    else:
        dw = float(np.mean(np.diff(w)))
    n_scale = n_scale or len(w)
    cmin, cmax = -np.log(absw.max()), -np.log(absw.min())
    dc = (cmax - cmin) / n_scale
    c = cmin + (np.arange(n_scale) + 0.5) * dc
    target = SampledSpace((Axis.custom("c", c, np.full(n_scale, dc)),))
    x0 = float(w[0])

    def fwd(v):
        return np.exp(-c / 2) * interp_uniform(np.asarray(v, dtype=complex), x0, dw, sign * np.exp(-c))

    def inv(v):
        vals = interp_uniform(np.asarray(v, dtype=complex), float(c[0]), dc, -np.log(absw))
        return vals / np.sqrt(absw)

    return DomainMap("warp_uniform", freq_space, target, fwd, inv, isometry=True, tolerance=1e-3)


def slope_map(freq2d_space: SampledSpace, slope_range=(-2.0, 2.0), n_slope: Optional[int] = None) -> DomainMap:
    """Slope transform ``[Psi f](g2, w1) = |w1|^{1/2} f(w1, -g2 w1)``.

    The target is a uniform slope grid times the original ``w1`` axis.
    Both directions use linear interpolation (accuracy class 1e-3).
    """
    if freq2d_space.ndim != 2:
        raise ValueError("slope_map expects a 2D frequency space")
    a1, a2 = freq2d_space.axes
    w1 = a1.positions
    if np.any(w1 == 0):
        raise ValueError("frequency grid contains the w1 = 0 column")
    if a2.kind == "cyclic":
        raise ValueError("slope_map needs a real w2 axis")
    w2 = a2.positions
    dw2 = float(w2[1] - w2[0])
    n_slope = n_slope or a2.n
    lo, hi = slope_range
    ds = (hi - lo) / n_slope
    s = lo + (np.arange(n_slope) + 0.5) * ds
    target = SampledSpace((Axis.custom("slope", s, np.full(n_slope, ds)),
                           Axis.custom(a1.name, w1, a1.weights)))
    absw1 = np.abs(w1)

    def fwd(v):
        v = np.asarray(v, dtype=complex)
        q = -s[:, None] * w1[None, :]                        # (slope, w1)
        vals = interp_uniform(v, float(w2[0]), dw2, q.T, axis=1)  # (w1, slope)
        return (np.sqrt(absw1)[:, None] * vals).T

    def inv(v):
        v = np.asarray(v, dtype=complex)                     # (slope, w1)
        q = -w2[None, :] / w1[:, None]                       # (w1, w2)
        vals = interp_uniform(v.T, float(s[0]), ds, q, axis=1)
        return vals / np.sqrt(absw1)[:, None]

    return DomainMap("slope", freq2d_space, target, fwd, inv, isometry=True, tolerance=1e-3)


# ---------------------------------------------------------------------------
# file formats

def write_signal(f: Signal, path) -> None:
    """Write ``index,re,im`` rows plus a JSON sidecar describing the space."""
    from pathlib import Path

    path = Path(path)
    lines = ["index,re,im"]
    for i, v in enumerate(f.vector):
        lines.append(f"{i},{float(v.real)!r},{float(v.imag)!r}")
    path.write_text("\n".join(lines) + "\n")
    path.with_suffix(".json").write_text(json.dumps(f.space.to_dict(), indent=2, sort_keys=True) + "\n")


def read_signal(path, space: Optional[SampledSpace] = None) -> Signal:
    """Read a signal CSV; the space comes from the sidecar unless given."""
    from pathlib import Path

    path = Path(path)
    if space is None:
        side = path.with_suffix(".json")
        if not side.exists():
            raise FileNotFoundError(f"missing space sidecar {side}")
        space = SampledSpace.from_dict(json.loads(side.read_text()))
    rows = path.read_text().strip().splitlines()
    if not rows or rows[0].replace(" ", "") != "index,re,im":
        raise ValueError(f"{path}: expected header index,re,im")
    vals = np.zeros(space.size, dtype=complex)
    seen = np.zeros(space.size, dtype=bool)
    for r in rows[1:]:
        parts = r.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}: malformed row {r!r}")
        i = int(parts[0])
        if not 0 <= i < space.size:
            raise ValueError(f"{path}: index {i} out of range")
        vals[i] = float(parts[1]) + 1j * float(parts[2])
        seen[i] = True
    if not seen.all():
        raise ValueError(f"{path}: {int((~seen).sum())} samples missing")
    return Signal(space, vals)
