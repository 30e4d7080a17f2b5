"""Uncertainty-minimizing windows.

Two routes:

* the explicit family ``f_n`` for the 1D wavelet transform, whose spectrum
  is a smooth bump moved out to ``kappa(n)`` and stretched by ``n``;
* projected gradient descent of ``S(f)`` on the unit sphere for any
  built-in transform.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import BSpline

from .observables import SELF_ADJOINT, block_expected_values, covariance_matrix
from .representations import (FSTFT, FiniteWavelet, Shearlet, TransformSpec, Wavelet1D,
                              lognormal_bump, slope_bump)
from .spaces import Signal
from .uncertainty import (WeightProfile, _trivial_action, correction_from_expected,
                          mean_square_expected_value)


# ---------------------------------------------------------------------------
# explicit minimizer family

@dataclass(frozen=True)
class MinimizerFamily:
    """Bump ``b`` supported in ``(0, 1)`` and a schedule ``kappa(n)``.

    The default bump is the cubic B-spline on the knots ``0, 1/4, ..., 1``,
    which is twice continuously differentiable.
    """

    bump: Callable = None
    kappa: Callable = None
    name: str = "cubic-bspline"

    def __post_init__(self):
        if self.bump is None:
            spline = BSpline.basis_element(np.linspace(0.0, 1.0, 5), extrapolate=False)

            def bump(x):
                x = np.asarray(x, dtype=float)
                inside = (x > 0) & (x < 1)
                out = np.zeros_like(x)
                out[inside] = spline(x[inside])
                return out

            object.__setattr__(self, "bump", bump)
        if self.kappa is None:
            object.__setattr__(self, "kappa", lambda n: float(n) ** 2)

    def spectrum(self, n: int, omega) -> np.ndarray:
        """``n^{-1/2} b((w - kappa(n)) / n)``."""
        if n < 1:
            raise ValueError("n must be at least 1")
        return self.bump((np.asarray(omega) - self.kappa(n)) / n) / np.sqrt(n)


def minimizer_grid(n_samples: int = 8192, d_omega: float = 0.3) -> Wavelet1D:
    """1D wavelet setting whose frequency grid has ``n_samples`` points spaced ``d_omega``."""
    return Wavelet1D(n=n_samples, length=2 * np.pi / d_omega, stride=n_samples // 64,
                     dilations=(-1.0, 1.0, 3))


def minimizer_window(family: MinimizerFamily, n: int, spec: Wavelet1D,
                     min_samples: int = 8) -> Signal:
    """Unit-norm ``f_n`` on the frequency grid of ``spec``.

    Raises ``ValueError`` when the support ``(kappa(n), kappa(n) + n)`` leaves
    the grid or is resolved by fewer than ``min_samples`` frequency samples.
    """
    w = spec.omega
    lo, hi = family.kappa(n), family.kappa(n) + n
    if hi >= w.max():
        raise ValueError(f"support of f_{n} reaches {hi:g}, beyond the grid's {w.max():g}")
    dw = w[1] - w[0]
    if n / dw < min_samples:
        raise ValueError(f"f_{n} spans {n / dw:.1f} frequency samples; refine the grid")
    if lo <= 0:
        raise ValueError("the bump must sit at positive frequencies")
    f = spec.window_from_spectrum(lambda om: family.spectrum(n, om))
    return f.normalized()


@dataclass
class MinimizerReport:
    n: list
    e1: list
    e2: list
    sigma1: list
    sigma2: list
    flags: dict = field(default_factory=dict)

    def to_dict(self):
        return {"n": list(self.n), "e_T1": self.e1, "e_T2": self.e2,
                "sigma_T1": self.sigma1, "sigma_T2": self.sigma2, "flags": self.flags}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "e_T1", "e_T2", "sigma_T1", "sigma_T2"])
        for row in zip(self.n, self.e1, self.e2, self.sigma1, self.sigma2):
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
        return buf.getvalue()


def _strictly_decreasing(x) -> bool:
    return bool(np.all(np.diff(np.asarray(x, dtype=float)) < 0))


def verify_minimizer(family: Optional[MinimizerFamily] = None, n_list: Sequence[int] = (4, 8, 16, 32),
                     spec: Optional[Wavelet1D] = None, e1_tol: float = 1e-6) -> MinimizerReport:
    """Moments of ``f_n`` and the monotonicity flags over ``n_list``."""
    family = family or MinimizerFamily()
    spec = spec or minimizer_grid()
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    obs = spec.canonical_observables()
    T1, T2 = obs.block(0)[0], obs.block(1)[0]
    e1, e2, s1, s2 = [], [], [], []
    for n in n_list:
        f = minimizer_window(family, n, spec)
        e, c = block_expected_values(f, (T1,)), covariance_matrix(f, (T1,))
        e1.append(float(e[0]))
        s1.append(float(c[0, 0].real))
        e, c = block_expected_values(f, (T2,)), covariance_matrix(f, (T2,))
        e2.append(float(e[0]))
        s2.append(float(c[0, 0].real))
    flags = {"e_T1_zero": bool(np.all(np.abs(e1) <= e1_tol)),
             "sigma_T1_decreasing": _strictly_decreasing(s1),
             "sigma_T2_decreasing": _strictly_decreasing(s2),
             "e_T2_decreasing": _strictly_decreasing(e2)}
    return MinimizerReport(n_list, e1, e2, s1, s2, flags)


# ---------------------------------------------------------------------------
# built-in windows

def builtin_window(spec: TransformSpec, name: str) -> Signal:
    """``gaussian``, ``delta``, ``flat`` or ``minimizer(n)`` for ``spec``."""
    name = name.strip()
    if name.startswith("builtin:"):
        name = name[len("builtin:"):]
    if name == "gaussian":
        return spec.default_window()
    if name.startswith("minimizer"):
        if not isinstance(spec, Wavelet1D):
            raise ValueError("minimizer windows exist for the 1D wavelet transform only")
        try:
            n = int(name[name.index("(") + 1:name.index(")")])
        except ValueError:
            raise ValueError(f"cannot parse {name!r}; use minimizer(n)") from None
        return minimizer_window(MinimizerFamily(), n, spec)
    if name == "delta":
        return _delta_window(spec)
    if name == "flat":
        return _flat_window(spec)
    raise ValueError(f"unknown builtin window {name!r}")


def _delta_window(spec):
    v = np.zeros(spec.space.shape, dtype=complex)
    if isinstance(spec, (FSTFT, FiniteWavelet)):
        v[0] = 1.0
        f = spec.admissible_projection(Signal(spec.space, v))
        return f.normalized()
    v[tuple(s // 2 for s in spec.space.shape)] = 1.0
    f = Signal(spec.space, v).normalized()
    spec.check_admissible(f)
    return f


def _plateau(x, lo, hi, ramp):
    """1 on ``[lo, hi]`` with raised-cosine edges of width ``ramp`` outside it.

    A hard indicator leaks through the sinc interpolation of the sampled
    spectrum and spoils the admissibility check at w = 0.
    """
    x = np.asarray(x, dtype=float)
    d = np.maximum(lo - x, x - hi)
    return np.where(d <= 0, 1.0, np.where(d < ramp, np.cos(0.5 * np.pi * np.clip(d, 0, ramp) / ramp) ** 2, 0.0))


def _flat_window(spec):
    if isinstance(spec, FSTFT):
        return Signal(spec.space, np.ones(spec.n, dtype=complex)).normalized()
    if isinstance(spec, FiniteWavelet):
        F = np.ones(spec.n, dtype=complex)
        F[0] = 0.0
        return Signal(spec.space, np.fft.ifft(F, norm="ortho")).normalized()
    if isinstance(spec, Wavelet1D):
        return spec.window_from_spectrum(lambda w: _plateau(w, 0.8, 2.0, 0.6)).normalized()
    if isinstance(spec, Shearlet):
        return spec.window_from_spectrum(
            lambda w1, w2: _plateau(w1, 1.2, 3.0, 1.1) * _plateau(np.abs(w2) - w1, -np.inf, 0.0, 0.8)).normalized()
    raise ValueError("no flat window for this transform")


# ---------------------------------------------------------------------------
# objective and gradient

def _bilinear(W, d):
    """``sum_kl conj(W_kl) d_k conj(d_l)`` per sample; ``d`` has shape (K, ...)."""
    return np.real(np.einsum("kl,k...,l...->...", np.conj(W), d, np.conj(d)))


class Objective:
    """``S(f)`` (global) or the plain weighted variance sum, with its gradient.

    The gradient ``g`` satisfies ``dS = Re <g, df>`` in the signal space's
    weighted inner product.  Corrections of the global variances depend on
    the window through its expected values; that dependence is included by
    differencing the correction in those few scalars (``frozen=True`` drops it).
    """

    def __init__(self, spec: TransformSpec, weights=None, kind: str = "global", frozen: bool = False):
        if kind not in ("global", "plain"):
            raise ValueError("objective must be 'global' or 'plain'")
        self.spec = spec
        self.kind = kind
        self.frozen = frozen
        self.profile = WeightProfile.for_transform(spec, weights)
        self.multi = spec.canonical_observables()

    # -- pieces ------------------------------------------------------------
    def _block_data(self, f: Signal, m: int):
        block = self.multi.block(m)
        dm = block[0].domain_map
        F = dm.forward(f).values
        w = dm.target.weights
        nrm2 = float(np.sum(w * np.abs(F) ** 2))
        U = np.stack([t.multiplier for t in block])
        p = w * np.abs(F) ** 2 / nrm2
        e = np.array([np.sum(u * p) for u in U])
        if block[0].kind == SELF_ADJOINT:
            e = e.real
        return block, dm, F, nrm2, U, e

    def _quadratic_term(self, f, m, W):
        """Value and gradient of ``sigma^W`` for block ``m``."""
        block, dm, F, nrm2, U, e = self._block_data(f, m)
        d = U - e.reshape((-1,) + (1,) * (U.ndim - 1))
        q = _bilinear(W, d)
        w = dm.target.weights
        sigma = float(np.sum(w * q * np.abs(F) ** 2) / nrm2)
        Bf = dm.inverse(dm.target.signal(q * F)).values
        grad = 2.0 * (Bf - sigma * f.values) / nrm2
        return max(sigma, 0.0), grad

    def _mean_square_term(self, f, m, W):
        block = self.multi.block(m)
        w11 = float(np.real(W[0, 0]))
        P = mean_square_expected_value(f, block)
        dm = block[0].domain_map
        F = dm.forward(f).values
        wt = dm.target.weights
        nrm2 = float(np.sum(wt * np.abs(F) ** 2))
        gP_F = 4.0 * (np.abs(F) ** 2 * F / nrm2 ** 2 - P * F / nrm2)
        gP = dm.inverse(dm.target.signal(gP_F)).values
        return w11 * max(1.0 - P * P, 0.0), -2.0 * P * w11 * gP

    def _correction_term(self, f, m, W, expected):
        """Gradient contribution of the expected-value dependence of ``A``."""
        grad = np.zeros(self.spec.space.shape, dtype=complex)
        block = self.multi.block(m)
        cov = covariance_matrix(f, block)

        def value(exp):
            A, _ = correction_from_expected(self.spec, m, exp)
            Wc = A.conj().T @ W @ A
            return float(np.real(np.sum(np.conj(Wc) * cov)))

        for l in range(m + 1, len(self.multi)):
            if self.multi.block(l)[0].kind != SELF_ADJOINT:
                continue
            if self.spec.group.blocks[l].quantity.kind != "RealLine":
                continue
            for k, t in enumerate(self.multi.block(l)):
                el = expected[l][k]
                h = 1e-5 * max(1.0, abs(el))
                up = [np.array(x, copy=True) for x in expected]
                dn = [np.array(x, copy=True) for x in expected]
                up[l][k] = el + h
                dn[l][k] = el - h
                dS = (value(up) - value(dn)) / (2 * h)
                if dS == 0.0:
                    continue
                dm = t.domain_map
                F = dm.forward(f).values
                nrm2 = float(np.sum(dm.target.weights * np.abs(F) ** 2))
                Tf = dm.inverse(dm.target.signal((t.multiplier - el) * F)).values
                grad = grad + dS * 2.0 * Tf / nrm2
        return grad

    # -- public ------------------------------------------------------------
    def value_and_gradient(self, f: Signal):
        total = 0.0
        grad = np.zeros(self.spec.space.shape, dtype=complex)
        expected = [block_expected_values(f, b) for b in self.multi.blocks]
        for m, block in enumerate(self.multi.blocks):
            W = self.profile[m]
            if self.kind == "plain" or _trivial_action(self.spec, m):
                val, g = self._quadratic_term(f, m, W)
            elif block[0].kind == SELF_ADJOINT:
                A, _ = correction_from_expected(self.spec, m, expected)
                val, g = self._quadratic_term(f, m, A.conj().T @ W @ A)
                if not self.frozen:
                    g = g + self._correction_term(f, m, W, expected)
            else:
                val, g = self._mean_square_term(f, m, W)
            total += val
            grad = grad + g
        return total, grad

    def value(self, f: Signal) -> float:
        return self.value_and_gradient(f)[0]


def objective_and_gradient(spec, f: Signal, weights=None, kind: str = "global"):
    return Objective(spec, weights, kind).value_and_gradient(f)


def finite_difference_check(objective: Objective, f: Signal, rng, n_dirs: int = 4, step: float = 1e-6) -> float:
    """Max relative gap between FD directional derivatives and ``Re <g, d>``.

    Directions are random unit vectors in the admissible tangent space; the
    gap is measured relative to ``||g||``.
    """
    spec = objective.spec
    S0, g = objective.value_and_gradient(f)
    w = spec.space.weights
    gnorm = np.sqrt(np.sum(w * np.abs(g) ** 2))
    worst = 0.0
    for _ in range(n_dirs):
        d = rng.standard_normal(spec.space.shape) + 1j * rng.standard_normal(spec.space.shape)
        d = spec.admissible_projection(Signal(spec.space, d)).values
        d = d / np.sqrt(np.sum(w * np.abs(d) ** 2))
        fp = Signal(spec.space, f.values + step * d)
        fm = Signal(spec.space, f.values - step * d)
        fd = (objective.value(fp) - objective.value(fm)) / (2 * step)
        an = float(np.real(np.sum(w * np.conj(g) * d)))
        worst = max(worst, abs(fd - an) / max(gnorm, 1e-300))
    return worst


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class OptimizerConfig:
    step: float = 0.1
    max_iter: int = 500
    grad_tol: float = 1e-8
    halfplane: bool = False
    seed: int = 0
    armijo: float = 1e-4
    max_backtracks: int = 50

    def __post_init__(self):
        if self.step <= 0 or self.grad_tol <= 0:
            raise ValueError("step and gradient tolerance must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        known = {k: d[k] for k in d if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class OptimizeResult:
    window: Signal
    objective: float
    trace: list
    status: str
    iterations: int

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "objective", "grad_norm"])
        for it, obj, gn in self.trace:
            w.writerow([it, repr(float(obj)), repr(float(gn))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"objective": float(self.objective), "status": self.status,
                "iterations": int(self.iterations),
                "initial_objective": float(self.trace[0][1]) if self.trace else None}


def random_window(spec: TransformSpec, rng, halfplane: bool = False) -> Signal:
    """Random admissible unit window (smooth spectrum for continuum grids)."""
    if isinstance(spec, (FSTFT, FiniteWavelet)):
        v = rng.standard_normal(spec.space.shape) + 1j * rng.standard_normal(spec.space.shape)
        return spec.admissible_projection(Signal(spec.space, v)).normalized()
    if isinstance(spec, Wavelet1D):
        a = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        mus = np.linspace(-0.5, 0.5, 6)
        f = spec.window_from_spectrum(lambda w: sum(c * lognormal_bump(w, mu, 0.3) for c, mu in zip(a, mus)))
        return f.normalized()
    if isinstance(spec, Shearlet):
        a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        mus = np.log(1.2) + np.linspace(-0.2, 0.2, 4)
        f = spec.window_from_spectrum(
            lambda w1, w2: sum(c * lognormal_bump(w1, mu, 0.2) for c, mu in zip(a, mus)) * slope_bump(w1, w2, 0.25))
        return f.normalized()
    raise ValueError("no random window generator for this transform")


def _constrain(spec, f: Signal, halfplane: bool) -> Signal:
    f = spec.admissible_projection(f)
    if halfplane:
        proj = getattr(spec, "project_halfplane", None)
        if proj is None:
            raise ValueError("half-plane support applies to continuum transforms only")
        f = proj(f)
    return f


def optimize_window(spec: TransformSpec, objective: str = "global", weights=None,
                    config: Optional[OptimizerConfig] = None, f0: Optional[Signal] = None) -> OptimizeResult:
    """Projected gradient descent of the uncertainty on the unit sphere.

    Every accepted step satisfies the Armijo condition, so the objective
    trace never increases.  When no step length decreases the objective the
    run stops with status ``stalled``; ``max_iter`` without meeting the
    gradient tolerance gives ``max_iter``.
    """
    config = config or OptimizerConfig()
    rng = np.random.default_rng(config.seed)
    obj = Objective(spec, weights, objective)
    if f0 is None:
        f0 = random_window(spec, rng, config.halfplane)
    spec.check_admissible(f0)
    f = _constrain(spec, f0, config.halfplane).normalized()
    w = spec.space.weights
    S, g = obj.value_and_gradient(f)
    g = _constrain(spec, Signal(spec.space, g), config.halfplane).values
    trace = []
    t = config.step
    status = "max_iter"
    it = 0
    for it in range(config.max_iter + 1):
        gn2 = float(np.sum(w * np.abs(g) ** 2))
        trace.append((it, S, np.sqrt(gn2)))
        if np.sqrt(gn2) < config.grad_tol:
            status = "converged"
            break
        if it == config.max_iter:
            break
        accepted = False
        for _ in range(config.max_backtracks):
            cand = Signal(spec.space, f.values - t * g)
            cand = _constrain(spec, cand, config.halfplane).normalized()
            S_new, g_new = obj.value_and_gradient(cand)
            if S_new <= S - config.armijo * t * gn2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            status = "stalled"
            break
        f, S = cand, S_new
        g = _constrain(spec, Signal(spec.space, g_new), config.halfplane).values
        t = min(t * 2.0, 1e3 * config.step)
    return OptimizeResult(f, S, trace, status, it)


def trace_is_nonincreasing(trace) -> bool:
    vals = [row[1] for row in trace]
    return all(b <= a for a, b in zip(vals, vals[1:]))


def optimizer_json(result: OptimizeResult) -> str:
    return json.dumps(result.summary(), indent=2, sort_keys=True)
