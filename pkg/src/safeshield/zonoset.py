"""Zonotope and axis-aligned-box algebra.

A zonotope is the set  {c + G beta : ||beta||_inf <= 1}  written <c, G>
with centre ``c`` (d,) and generator matrix ``G`` (d, n).  Boxes are the
special case of orthogonal diagonal generators and are kept as their own
type because feasible and noise sets are always boxes here.

Containment decisions are what the safeguards lean on:

* point-in-zonotope minimises ``||gamma||_inf`` subject to
  ``p = c + G gamma`` and is exact;
* zonotope-in-zonotope minimises the maximum absolute row sum of
  ``[Gamma gamma]`` subject to ``G1 = G2 Gamma`` and
  ``c2 - c1 = G2 gamma``.  This test is sufficient only: a ``True``
  answer certifies containment, a ``False`` answer is inconclusive
  (exact set containment is co-NP-complete and out of scope).

All values are immutable and all operations are pure functions, so
instances can be shared freely across threads.  Dense storage
throughout: problem sizes stay at d <= 8, n <= 64.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .optkit import solve_inf_norm

# contained <=> optimum <= 1 + CONTAIN_TOL: absorbs solver noise without
# accepting meaningfully unsafe points
CONTAIN_TOL = 1e-7
# n = 0 generators degenerate to the singleton {c}
SINGLETON_TOL = 1e-9


class Zonotope:
    """Immutable centre + generator-matrix set representation."""

    __slots__ = ("centre", "generators")

    def __init__(self, centre, generators):
        c = np.array(centre, dtype=float).ravel()
        G = np.array(generators, dtype=float)
        if G.size == 0:
            G = G.reshape(c.size, 0)
        if G.ndim == 1:
            G = G.reshape(1, -1) if c.size == 1 else G.reshape(-1, 1)
        if c.size < 1:
            raise ValueError("zonotope dimension must be >= 1")
        if G.shape[0] != c.size:
            raise ValueError(f"generator rows {G.shape[0]} != dimension {c.size}")
        c.flags.writeable = False
        G.flags.writeable = False
        object.__setattr__(self, "centre", c)
        object.__setattr__(self, "generators", G)

    def __setattr__(self, *_):
        raise AttributeError("Zonotope is immutable")

    @property
    def dim(self) -> int:
        return self.centre.size

    @property
    def order(self) -> int:
        return self.generators.shape[1]

    def __repr__(self):
        return f"Zonotope(d={self.dim}, n={self.order})"

    def interval_hull(self) -> "Box":
        return Box(self.centre, np.sum(np.abs(self.generators), axis=1))

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Points c + G beta with beta uniform on the coefficient cube."""
        beta = rng.uniform(-1.0, 1.0, size=(size, self.order))
        return self.centre + beta @ self.generators.T

    def to_dict(self) -> dict:
        return {"center": self.centre.tolist(),
                "generators": self.generators.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Zonotope":
        return cls(d["center"], d["generators"])


class Box:
    """Axis-aligned box: centre and nonnegative half-widths."""

    __slots__ = ("centre", "half_widths")

    def __init__(self, centre, half_widths):
        c = np.array(centre, dtype=float).ravel()
        w = np.array(half_widths, dtype=float).ravel()
        if w.size != c.size:
            raise ValueError("centre/half_widths size mismatch")
        if np.any(w < 0):
            raise ValueError("half widths must be nonnegative")
        c.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "centre", c)
        object.__setattr__(self, "half_widths", w)

    def __setattr__(self, *_):
        raise AttributeError("Box is immutable")

    @property
    def dim(self) -> int:
        return self.centre.size

    def __repr__(self):
        return f"Box(d={self.dim})"

    def to_zonotope(self) -> Zonotope:
        return Zonotope(self.centre, np.diag(self.half_widths))

    def contains(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float).ravel()
        return bool(np.all(np.abs(p - self.centre) <= self.half_widths + tol))

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        u = rng.uniform(-1.0, 1.0, size=(size, self.dim))
        return self.centre + u * self.half_widths

    def to_dict(self) -> dict:
        return {"center": self.centre.tolist(),
                "half_widths": self.half_widths.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        return cls(d["center"], d["half_widths"])


@dataclass(frozen=True)
class ContainmentCertificate:
    """Outcome of a containment solve.

    ``contained`` is ``optimum <= 1 + tol``.  For point queries
    ``witness`` holds gamma with ``p = c + G gamma``; for set queries it
    holds gamma of the centre equation and ``witness_matrix`` holds
    Gamma with ``G1 = G2 Gamma``.
    """

    contained: bool
    optimum: float
    witness: np.ndarray
    witness_matrix: np.ndarray | None = None

    def __bool__(self) -> bool:
        return self.contained


def minkowski_sum(z1: Zonotope, z2: Zonotope) -> Zonotope:
    if z1.dim != z2.dim:
        raise ValueError("dimension mismatch in Minkowski sum")
    return Zonotope(z1.centre + z2.centre,
                    np.hstack([z1.generators, z2.generators]))


def linear_map(M, z: Zonotope) -> Zonotope:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != z.dim:
        raise ValueError("matrix columns must match zonotope dimension")
    return Zonotope(M @ z.centre, M @ z.generators)


def translate(z: Zonotope, t) -> Zonotope:
    t = np.asarray(t, dtype=float).ravel()
    if t.size != z.dim:
        raise ValueError("translation dimension mismatch")
    return Zonotope(z.centre + t, z.generators)


def support(z: Zonotope, v) -> float:
    """Farthest extent of the set in direction v: v'c + ||G'v||_1."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != z.dim:
        raise ValueError("direction dimension mismatch")
    return float(v @ z.centre + np.linalg.norm(z.generators.T @ v, ord=1))


def contains_point(z: Zonotope, p, tol: float = CONTAIN_TOL) -> ContainmentCertificate:
    """Exact membership test via the min-infinity-norm coefficient LP."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size != z.dim:
        raise ValueError("point dimension mismatch")
    if z.order == 0:
        inside = bool(np.max(np.abs(p - z.centre), initial=0.0) <= SINGLETON_TOL)
        return ContainmentCertificate(inside, 0.0 if inside else np.inf,
                                      np.zeros(0))
    sol = solve_inf_norm(z.generators, p - z.centre)
    if sol.status != "optimal":
        return ContainmentCertificate(False, np.inf, np.full(z.order, np.nan))
    return ContainmentCertificate(sol.objective <= 1.0 + tol, sol.objective,
                                  sol.primal)


def contains_zonotope(inner: Zonotope, outer: Zonotope,
                      tol: float = CONTAIN_TOL) -> ContainmentCertificate:
    """Sufficient containment test (see module docstring for the caveat).

    Inner generator columns that are exactly zero are dropped before the
    solve; they contribute nothing to either set or budget.
    """
    if inner.dim != outer.dim:
        raise ValueError("dimension mismatch in containment")
    if outer.order < 1:
        inside = bool(np.max(np.abs(inner.centre - outer.centre), initial=0.0)
                      <= SINGLETON_TOL
                      and np.max(np.abs(inner.generators), initial=0.0)
                      <= SINGLETON_TOL)
        return ContainmentCertificate(inside, 0.0 if inside else np.inf,
                                      np.zeros(0), np.zeros((0, inner.order)))
    d = inner.dim
    n1_all = inner.order
    keep = [j for j in range(n1_all)
            if np.max(np.abs(inner.generators[:, j]), initial=0.0) > 0.0]
    G1 = inner.generators[:, keep]
    G2 = outer.generators
    n1, n2 = G1.shape[1], G2.shape[1]

    # unknown layout: [Gamma[:,0]; ...; Gamma[:,n1-1]; gamma], blocks of n2
    nv = n2 * (n1 + 1)
    E = np.zeros((d * (n1 + 1), nv))
    rhs = np.zeros(d * (n1 + 1))
    for j in range(n1):
        E[j * d:(j + 1) * d, j * n2:(j + 1) * n2] = G2
        rhs[j * d:(j + 1) * d] = G1[:, j]
    E[n1 * d:, n1 * n2:] = G2
    rhs[n1 * d:] = outer.centre - inner.centre
    groups = [[blk * n2 + i for blk in range(n1 + 1)] for i in range(n2)]

    sol = solve_inf_norm(E, rhs, groups=groups)
    if sol.status != "optimal":
        return ContainmentCertificate(False, np.inf,
                                      np.full(n2, np.nan), None)
    Gamma_kept = sol.primal[: n1 * n2].reshape(n1, n2).T
    Gamma = np.zeros((n2, n1_all))
    for k, j in enumerate(keep):
        Gamma[:, j] = Gamma_kept[:, k]
    gamma = sol.primal[n1 * n2:]
    return ContainmentCertificate(sol.objective <= 1.0 + tol, sol.objective,
                                  gamma, Gamma)


def enumerate_vertices(z: Zonotope, max_dim: int = 3,
                       max_generators: int = 8) -> list[np.ndarray]:
    """All points c + G sigma over sign vectors, deduplicated (test oracle).

    The convex hull of the output equals the zonotope.  Guarded against
    the exponential blowup: d <= 3, n <= 8.
    """
    if z.dim > max_dim or z.order > max_generators:
        raise ValueError("enumerate_vertices size guard exceeded")
    if z.order == 0:
        return [z.centre.copy()]
    points = []
    for sigma in product((-1.0, 1.0), repeat=z.order):
        points.append(z.centre + z.generators @ np.asarray(sigma))
    out: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q), initial=0.0) <= 1e-12 for q in out):
            out.append(p)
    return out
