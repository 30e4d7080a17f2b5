"""Physical quantities and nested semi-direct product groups in coordinates.

A group is written ``G = N_1 x| (N_2 x| (... x| N_M))`` where every block
``N_m`` is a direct product of ``K_m`` copies of one physical quantity
(``RealLine``, ``Integers``, ``Circle`` or ``CyclicRoots(N)``).  The tail
``h_m = (g_{m+1}, ..., g_M)`` acts on block ``m`` through a ``K_m x K_m``
matrix ``A_m(h_m)``: real entries for real blocks, integer exponents for
circle blocks.  The product is

    g . g' = (g_1 . A_1(h_1) g'_1, ..., g_{M-1} . A_{M-1}(h_{M-1}) g'_{M-1}, g_M . g'_M)

Coordinates use a native encoding that keeps the arithmetic exact:
floats for ``RealLine``, integers for ``Integers``, angles in ``[0, 2 pi)``
for ``Circle`` and exponents ``j`` in ``[0, N)`` for the root
``exp(2 pi i j / N)``.  All routines accept a leading batch shape, so a
whole phase-space grid can be multiplied at once.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

KINDS = ("RealLine", "Integers", "Circle", "CyclicRoots")


@dataclass(frozen=True)
class PhysicalQuantity:
    """One of the four numerical Lie groups used as physical quantities."""

    kind: str
    n: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown quantity kind {self.kind!r}")
        if self.kind == "CyclicRoots" and self.n < 1:
            raise ValueError("CyclicRoots needs N >= 1")

    @property
    def self_adjoint(self) -> bool:
        """True for additive kinds (observables are self-adjoint)."""
        return self.kind in ("RealLine", "Integers")

    @property
    def label(self) -> str:
        return f"CyclicRoots({self.n})" if self.kind == "CyclicRoots" else self.kind

    # -- native arithmetic -------------------------------------------------
    def canon(self, x):
        x = np.asarray(x)
        if self.kind == "RealLine":
            return x.astype(float)
        if self.kind == "Integers":
            return np.rint(x).astype(np.int64)
        if self.kind == "Circle":
            return np.mod(x.astype(float), TWO_PI)
        return np.mod(np.rint(x).astype(np.int64), self.n)

    def check(self, x) -> None:
        x = np.asarray(x)
        if not np.all(np.isfinite(x)):
            raise ValueError(f"{self.label} coordinate is not finite")
        if self.kind in ("Integers", "CyclicRoots") and not np.all(x == np.rint(x)):
            raise ValueError(f"{self.label} coordinate must be an integer exponent")

    def identity(self, shape=()):
        dtype = float if self.kind in ("RealLine", "Circle") else np.int64
        return np.zeros(shape, dtype=dtype)

    def op(self, a, b):
        return self.canon(np.asarray(a) + np.asarray(b))

    def inv(self, a):
        return self.canon(-np.asarray(a))

    def act(self, A, x):
        """Apply a homomorphism-valued matrix ``A`` (..., K, K) to ``x`` (..., K)."""
        A = np.asarray(A)
        x = np.asarray(x)
        if self.kind in ("Integers", "CyclicRoots"):
            A = A.astype(np.int64)
            x = x.astype(np.int64)
        return self.canon(np.einsum("...kl,...l->...k", A, x))

    # -- values ------------------------------------------------------------
    def value(self, x):
        """Group value of a native coordinate (unit complex for circle kinds)."""
        x = np.asarray(x)
        if self.kind == "Circle":
            return np.exp(1j * x)
        if self.kind == "CyclicRoots":
            return np.exp(TWO_PI * 1j * x / self.n)
        return x

    def native(self, v):
        """Inverse of :meth:`value` (snaps roots to the nearest exponent)."""
        v = np.asarray(v)
        if self.kind == "Circle":
            return np.mod(np.angle(v), TWO_PI)
        if self.kind == "CyclicRoots":
            return np.mod(np.rint(np.angle(v) * self.n / TWO_PI), self.n).astype(np.int64)
        return self.canon(v)

    def distance_unit(self):
        return TWO_PI / self.n if self.kind == "CyclicRoots" else None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "CyclicRoots":
            d["n"] = self.n
        return d


RealLine = PhysicalQuantity("RealLine")
Integers = PhysicalQuantity("Integers")
Circle = PhysicalQuantity("Circle")


def CyclicRoots(n: int) -> PhysicalQuantity:
    return PhysicalQuantity("CyclicRoots", int(n))


class UndefinedProjectionError(ValueError):
    """Projected expected value of 0 on a circle kind."""


ZERO_TOL = 1e-12


def project(q: PhysicalQuantity, e):
    """Projected expected value, in native coordinates.

    Identity on the line, nearest integer with ties to the smaller one on
    the integers, the argument on the circle and the nearest root with
    ties resolved clockwise (to the smaller angle) on the roots.  On the
    circle kinds ``|e| <= ZERO_TOL`` counts as zero: its argument is noise.
    """
    e = np.asarray(e)
    if q.kind == "RealLine":
        return np.real(e).astype(float)
    if q.kind == "Integers":
        return np.ceil(np.real(e) - 0.5).astype(np.int64)
    if np.any(np.abs(e) <= ZERO_TOL):
        raise UndefinedProjectionError("projection of a zero expected value is undefined")
    theta = np.mod(np.angle(e), TWO_PI)
    if q.kind == "Circle":
        return theta
    k = theta * q.n / TWO_PI
    return np.mod(np.ceil(k - 0.5), q.n).astype(np.int64)


@dataclass(frozen=True)
class Block:
    name: str
    quantity: PhysicalQuantity
    size: int = 1


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Per-block coordinate arrays of shape ``batch + (K_m,)``."""

    coords: tuple

    @property
    def batch_shape(self) -> tuple:
        return np.shape(self.coords[0])[:-1]

    def block(self, m: int) -> np.ndarray:
        return self.coords[m]

    def tail(self, m: int) -> tuple:
        """``h_m``: the coordinates of blocks after ``m``."""
        return self.coords[m + 1:]

    def __getitem__(self, idx) -> "GroupElement":
        return GroupElement(tuple(np.asarray(c)[idx] for c in self.coords))

    def flat(self) -> np.ndarray:
        """Coordinates concatenated along the last axis (float)."""
        return np.concatenate([np.asarray(c, dtype=float) for c in self.coords], axis=-1)


class GroupSpec:
    """Nested semi-direct product of physical-quantity blocks.

    Subclasses provide :meth:`automorphism_matrix` and, for groups whose
    cross-section drops a center, :meth:`cocycle`.
    """

    family = "generic"

    def __init__(self, blocks: Sequence[Block], params: Optional[dict] = None):
        self.blocks = tuple(blocks)
        self.params = dict(params or {})

    # -- structure ---------------------------------------------------------
    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def has_center(self) -> bool:
        return False

    def automorphism_matrix(self, m: int, h: tuple) -> np.ndarray:
        raise NotImplementedError

    def cocycle(self, g: GroupElement, gp: GroupElement):
        """Central character of the dropped center coordinate of ``g . g'``.

        Returns unit complex values; 1 for groups without a center.
        """
        return np.ones(g.batch_shape, dtype=complex)

    # -- elements ----------------------------------------------------------
    def element(self, *coords) -> GroupElement:
        if len(coords) != self.n_blocks:
            raise ValueError(f"expected {self.n_blocks} blocks, got {len(coords)}")
        out = []
        for b, c in zip(self.blocks, coords):
            c = np.asarray(c)
            if c.ndim == 0:
                c = c.reshape(1)
            if c.shape[-1] != b.size:
                raise ValueError(f"block {b.name} expects {b.size} coordinates")
            b.quantity.check(c)
            out.append(b.quantity.canon(c))
        batch = np.broadcast_shapes(*[np.shape(c)[:-1] for c in out])
        out = [np.broadcast_to(c, batch + c.shape[-1:]).copy() for c in out]
        return GroupElement(tuple(out))

    def identity(self, shape=()) -> GroupElement:
        return GroupElement(tuple(b.quantity.identity(tuple(shape) + (b.size,)) for b in self.blocks))

    def check(self, g: GroupElement) -> None:
        if len(g.coords) != self.n_blocks:
            raise ValueError("element does not conform to the group")
        for b, c in zip(self.blocks, g.coords):
            if np.shape(c)[-1] != b.size:
                raise ValueError(f"block {b.name} expects {b.size} coordinates")
            b.quantity.check(c)

    def multiply(self, g: GroupElement, gp: GroupElement) -> GroupElement:
        self.check(g)
        self.check(gp)
        out = []
        M = self.n_blocks
        for m, b in enumerate(self.blocks):
            if m < M - 1:
                A = self.automorphism_matrix(m, g.tail(m))
                x = b.quantity.act(A, gp.coords[m])
            else:
                x = gp.coords[m]
            out.append(b.quantity.op(g.coords[m], x))
        return GroupElement(tuple(out))

    def inverse(self, g: GroupElement) -> GroupElement:
        self.check(g)
        M = self.n_blocks
        last = self.blocks[-1].quantity
        inv_tail = (last.inv(g.coords[-1]),)
        for m in range(M - 2, -1, -1):
            q = self.blocks[m].quantity
            A = self.automorphism_matrix(m, inv_tail)
            inv_tail = (q.act(A, q.inv(g.coords[m])),) + inv_tail
        return GroupElement(inv_tail)

    def equal(self, g: GroupElement, gp: GroupElement, tol: float = 1e-10) -> bool:
        for b, a, c in zip(self.blocks, g.coords, gp.coords):
            d = np.asarray(a, dtype=float) - np.asarray(c, dtype=float)
            if b.quantity.kind == "Circle":
                d = np.angle(np.exp(1j * d))
            if np.any(np.abs(d) > tol * np.maximum(1.0, np.abs(np.asarray(a, dtype=float)))):
                return False
        return True

    def values(self, g: GroupElement) -> tuple:
        """Group values per block (unit complex numbers for circle kinds)."""
        return tuple(b.quantity.value(c) for b, c in zip(self.blocks, g.coords))

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params,
                "blocks": [dict(name=b.name, size=b.size, **b.quantity.to_dict()) for b in self.blocks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def group_multiply(spec: GroupSpec, g: GroupElement, gp: GroupElement) -> GroupElement:
    return spec.multiply(g, gp)


def group_inverse(spec: GroupSpec, g: GroupElement) -> GroupElement:
    return spec.inverse(g)


def automorphism_matrix(spec: GroupSpec, m: int, h: tuple) -> np.ndarray:
    return spec.automorphism_matrix(m, h)


def _batch(h: tuple) -> tuple:
    return np.shape(h[0])[:-1] if h else ()


def _eye(K, shape, dtype=float):
    return np.broadcast_to(np.eye(K, dtype=dtype), tuple(shape) + (K, K)).copy()


def reflection_sign(idx):
    """+1 / -1 for the exponent of a square root of unity."""
    return 1.0 - 2.0 * np.asarray(idx, dtype=float)


# ---------------------------------------------------------------------------
# built-in groups

class FSTFTGroup(GroupSpec):
    """Reduced finite Heisenberg group: time x frequency over ``CyclicRoots(N)``.

    Modulations and shifts commute up to the dropped center, so every
    ``A_m`` is the identity; the center survives only in :meth:`cocycle`,
    ``pi(g) pi(g') = c(g, g') pi(g . g')`` with ``c = exp(2 pi i q t' / N)``.
    """

    family = "fstft"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("N must be positive")
        self.n = int(n)
        super().__init__([Block("time", CyclicRoots(n)), Block("frequency", CyclicRoots(n))], {"N": self.n})

    @property
    def has_center(self) -> bool:
        return True

    def automorphism_matrix(self, m, h):
        return _eye(1, _batch(h), np.int64)

    def cocycle(self, g, gp):
        return np.exp(TWO_PI * 1j * (g.coords[1][..., 0] * gp.coords[0][..., 0] % self.n) / self.n)


class AffineGroup(GroupSpec):
    """Translations x| (dilations x reflections) acting on the line.

    ``A_1(g_2, g_3) = g_3 e^{g_2}``; dilations and reflections commute.
    """

    family = "affine"

    def __init__(self):
        super().__init__([Block("translation", RealLine), Block("dilation", RealLine),
                          Block("reflection", CyclicRoots(2))])

    def automorphism_matrix(self, m, h):
        if m == 0:
            g2, g3 = h
            return (reflection_sign(g3[..., 0]) * np.exp(g2[..., 0]))[..., None, None]
        if m == 1:
            return _eye(1, _batch(h))
        raise IndexError("block index out of range")


class ShearletGroup(GroupSpec):
    """Translations x| (shears x| (anisotropic dilations x reflections)).

    ``A_1(g_2, g_3, g_4) = g_4 [[e^{g_3}, e^{g_3/2} g_2], [0, e^{g_3/2}]]``
    on the plane and ``A_2(g_3, g_4) = e^{g_3/2}`` on the shear.  The
    reflection is the point reflection ``x -> -x``, which commutes with
    shears, so it does not enter ``A_2``.
    """

    family = "shearlet"

    def __init__(self):
        super().__init__([Block("translation", RealLine, 2), Block("shear", RealLine),
                          Block("dilation", RealLine), Block("reflection", CyclicRoots(2))])

    def automorphism_matrix(self, m, h):
        if m == 0:
            g2, g3, g4 = (c[..., 0] for c in h)
            s = reflection_sign(g4)
            a = np.exp(g3)
            b = np.exp(g3 / 2)
            A = np.zeros(np.shape(g2) + (2, 2))
            A[..., 0, 0] = s * a
            A[..., 0, 1] = s * b * g2
            A[..., 1, 1] = s * b
            return A
        if m == 1:
            g3 = h[0][..., 0]
            return np.exp(g3 / 2)[..., None, None]
        if m == 2:
            return _eye(1, _batch(h))
        raise IndexError("block index out of range")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, int(n ** 0.5) + 1))


def primitive_root(n: int) -> int:
    """Smallest generator of the multiplicative group mod a prime ``n``."""
    if not is_prime(n):
        raise ValueError(f"{n} is not prime")
    if n == 2:
        return 1
    phi = n - 1
    factors = {p for p in range(2, phi + 1) if phi % p == 0 and is_prime(p)}
    for r in range(2, n):
        if all(pow(r, phi // p, n) != 1 for p in factors):
            return r
    raise ArithmeticError("no primitive root found")


class FiniteAffineGroup(GroupSpec):
    """Affine group of the prime field: additive x| multiplicative.

    The multiplicative group is cyclic of order ``N - 1``; its element
    ``a = r^m`` (``r`` the smallest primitive root) has native coordinate
    ``m`` in ``CyclicRoots(N - 1)``.  ``A_1(a)`` multiplies time exponents
    by ``a``.
    """

    family = "finite_affine"

    def __init__(self, n: int):
        if not is_prime(n) or n < 3:
            raise ValueError("the finite affine group needs an odd prime N")
        self.n = int(n)
        self.root = primitive_root(n)
        self.powers = np.array([pow(self.root, m, n) for m in range(n - 1)], dtype=np.int64)
        self.logs = np.zeros(n, dtype=np.int64)
        self.logs[self.powers] = np.arange(n - 1)
        super().__init__([Block("time", CyclicRoots(n)), Block("dilation", CyclicRoots(n - 1))],
                         {"N": self.n})

    def automorphism_matrix(self, m, h):
        if m == 0:
            return self.powers[np.asarray(h[0][..., 0], dtype=np.int64)][..., None, None]
        raise IndexError("block index out of range")

    def dilation_factor(self, m):
        """Field element ``r^m`` for the native dilation coordinate ``m``."""
        return self.powers[np.asarray(m, dtype=np.int64) % (self.n - 1)]


def group_from_dict(d: dict) -> GroupSpec:
    fam = d.get("family")
    params = d.get("params", {})
    if fam == "fstft":
        spec = FSTFTGroup(int(params["N"]))
    elif fam == "affine":
        spec = AffineGroup()
    elif fam == "shearlet":
        spec = ShearletGroup()
    elif fam == "finite_affine":
        spec = FiniteAffineGroup(int(params["N"]))
    else:
        raise ValueError(f"unknown group family {fam!r}")
    if "blocks" in d and d["blocks"] != spec.to_dict()["blocks"]:
        raise ValueError("block description does not match the named family")
    return spec


def group_from_json(text: str) -> GroupSpec:
    return group_from_dict(json.loads(text))
