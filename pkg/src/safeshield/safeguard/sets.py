"""Safe action sets: explicit zonotopes and noise-robust induced sets.

An induced safe action set collects the actions whose *whole* noisy
next-state set lands inside the safe state zonotope:

    A_s(s) = { a in A : <f(s,a,c_W), df_dw G_W>  subseteq  S_s }.

Both environments here are affine in action and noise at a fixed state,
so the first-order linearisation used to build that next-state set is
exact and the induced set is a convex polytope in action space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, SafetyFault
from ..optkit import solve_inf_norm, solve_lp
from ..zonoset import (Box, ContainmentCertificate, Zonotope,
                       contains_point, contains_zonotope)


@dataclass(frozen=True)
class TransitionLinearization:
    """Transition value and partials at one (state, action) pair.

    ``value`` is f(s, a, c_W) for the action the linearisation was taken
    at; because the dynamics are affine in (a, w), the affine extension
    ``value + df_da (x - a)`` reproduces f(s, x, c_W) exactly for every
    other action x.
    """

    value: np.ndarray       # (d_S,)
    df_da: np.ndarray       # (d_S, d)
    df_dw: np.ndarray       # (d_S, d_S)

    def state_centre(self, anchor_action, query_action) -> np.ndarray:
        """Next-state-set centre for ``query_action`` (exact under affinity)."""
        delta = np.asarray(query_action, float) - np.asarray(anchor_action, float)
        return self.value + self.df_da @ delta


@dataclass(frozen=True)
class SafeActionSpec:
    """Explicit or induced safe-action-set specification.

    Exactly one of ``explicit_set`` / (``safe_state_set`` + ``noise_set``)
    is present.  For explicit sets, A_s subseteq A is certified at load
    time; for induced sets the noise box must live in state space.
    """

    feasible_set: Box
    explicit_set: Zonotope | None = None
    safe_state_set: Zonotope | None = None
    noise_set: Box | None = None

    @property
    def mode(self) -> str:
        return "explicit" if self.explicit_set is not None else "induced"

    @property
    def action_dim(self) -> int:
        return self.feasible_set.dim

    @classmethod
    def explicit(cls, safe_set: Zonotope, feasible_set: Box) -> "SafeActionSpec":
        if safe_set.dim != feasible_set.dim:
            raise ConfigError("explicit safe set dimension != feasible dimension")
        cert = contains_zonotope(safe_set, feasible_set.to_zonotope())
        if not cert.contained:
            raise ConfigError(
                "explicit safe action set is not certified inside the "
                f"feasible box (containment optimum {cert.optimum:.6g})")
        return cls(feasible_set=feasible_set, explicit_set=safe_set)

    @classmethod
    def induced(cls, safe_state_set: Zonotope, noise_set: Box,
                feasible_set: Box) -> "SafeActionSpec":
        if noise_set.dim != safe_state_set.dim:
            raise ConfigError("noise set dimension must equal state dimension")
        return cls(feasible_set=feasible_set, safe_state_set=safe_state_set,
                   noise_set=noise_set)


def next_state_set(lin: TransitionLinearization, noise: Box) -> Zonotope:
    """Noisy next-state zonotope <f(s,a,c_W), df_dw diag(noise half widths)>."""
    if noise.dim != lin.df_dw.shape[1]:
        raise ValueError("noise dimension mismatch")
    # value is already evaluated at the noise centre c_W
    return Zonotope(lin.value, lin.df_dw @ np.diag(noise.half_widths))


def is_action_safe(spec: SafeActionSpec, lin: TransitionLinearization | None,
                   a, tol: float = 1e-7,
                   check_feasible: bool = True) -> tuple[bool, ContainmentCertificate]:
    """Safety test for a feasible action; returns (verdict, certificate).

    Explicit mode is an exact point containment; induced mode is the
    sufficient zonotope containment of the noisy next-state set in the
    safe state set (a ``True`` verdict certifies safety).
    """
    a = np.asarray(a, dtype=float).ravel()
    if check_feasible and not spec.feasible_set.contains(a, tol=1e-9):
        raise ValueError("action outside the feasible box")
    if spec.mode == "explicit":
        cert = contains_point(spec.explicit_set, a, tol=tol)
        return cert.contained, cert
    if lin is None:
        raise ValueError("induced safety test needs a transition linearisation")
    inner = next_state_set(lin, spec.noise_set)
    cert = contains_zonotope(inner, spec.safe_state_set, tol=tol)
    return cert.contained, cert


# ---------------------------------------------------------------------------
# induced-set joint constraint system
# ---------------------------------------------------------------------------

@dataclass
class InducedSystem:
    """Joint containment system for one (state, linearisation) pair.

    Variable layout used by the LP builders:
        [x (d) | Gamma+ (n2*n1) | Gamma- | gamma+ (n2) | gamma-]
    with Gamma stored column-blockwise.  ``m0`` makes the next-state
    centre affine in the queried action: centre(x) = m0 + df_da x.
    """

    spec: SafeActionSpec
    df_da: np.ndarray
    m0: np.ndarray
    G_in: np.ndarray     # nonzero inner generator columns (d_S, n1)
    stats: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.df_da.shape[1]

    @property
    def n1(self) -> int:
        return self.G_in.shape[1]

    @property
    def n2(self) -> int:
        return self.spec.safe_state_set.order

    @property
    def d_s(self) -> int:
        return self.df_da.shape[0]

    def n_vars(self, ray: bool) -> int:
        lead = 1 if ray else self.d
        return lead + 2 * self.n2 * self.n1 + 2 * self.n2

    def build(self, ray_origin=None, ray_dir=None, feasible_rows=True):
        """Equality/inequality blocks; with a ray the lead variable is alpha."""
        ray = ray_origin is not None
        d, n1, n2, d_s = self.d, self.n1, self.n2, self.d_s
        S = self.spec.safe_state_set
        nv = self.n_vars(ray)
        lead = 1 if ray else d
        gp0 = lead                      # Gamma+ offset
        gm0 = lead + n2 * n1            # Gamma- offset
        cp0 = lead + 2 * n2 * n1        # gamma+ offset
        cm0 = cp0 + n2                  # gamma- offset

        A = np.zeros((d_s * n1 + d_s, nv))
        b = np.zeros(d_s * n1 + d_s)
        for j in range(n1):
            A[j * d_s:(j + 1) * d_s, gp0 + j * n2: gp0 + (j + 1) * n2] = S.generators
            A[j * d_s:(j + 1) * d_s, gm0 + j * n2: gm0 + (j + 1) * n2] = -S.generators
            b[j * d_s:(j + 1) * d_s] = self.G_in[:, j]
        row0 = d_s * n1
        A[row0:, cp0:cp0 + n2] = S.generators
        A[row0:, cm0:] = -S.generators
        if ray:
            v = np.asarray(ray_dir, float)
            A[row0:, 0] = (self.df_da @ v)
            b[row0:] = S.centre - self.m0 - self.df_da @ np.asarray(ray_origin, float)
        else:
            A[row0:, :d] = self.df_da
            b[row0:] = S.centre - self.m0

        K_rows = []
        h_vals = []
        for i in range(n2):
            r = np.zeros(nv)
            for j in range(n1):
                r[gp0 + j * n2 + i] = 1.0
                r[gm0 + j * n2 + i] = 1.0
            r[cp0 + i] = 1.0
            r[cm0 + i] = 1.0
            K_rows.append(r)
            h_vals.append(1.0)
        K = np.vstack(K_rows)
        h = np.asarray(h_vals)
        nonneg = np.ones(nv, dtype=bool)
        nonneg[:lead] = False
        if feasible_rows:
            box = self.spec.feasible_set
            rows = np.zeros((2 * box.dim, nv))
            vals = np.zeros(2 * box.dim)
            for j in range(box.dim):
                if ray:
                    vj = float(np.asarray(ray_dir, float)[j])
                    oj = float(np.asarray(ray_origin, float)[j])
                    rows[2 * j, 0] = vj
                    rows[2 * j + 1, 0] = -vj
                    vals[2 * j] = box.centre[j] + box.half_widths[j] - oj
                    vals[2 * j + 1] = -(box.centre[j] - box.half_widths[j]) + oj
                else:
                    rows[2 * j, j] = 1.0
                    rows[2 * j + 1, j] = -1.0
                    vals[2 * j] = box.centre[j] + box.half_widths[j]
                    vals[2 * j + 1] = -(box.centre[j] - box.half_widths[j])
            K = np.vstack([K, rows])
            h = np.concatenate([h, vals])
        meta = {"row_sum_rows": np.arange(n2),
                "centre_eq_rows": np.arange(row0, row0 + d_s),
                "box_rows": np.arange(K.shape[0] - (2 * self.spec.feasible_set.dim
                                                    if feasible_rows else 0),
                                      K.shape[0]),
                "nonneg": nonneg}
        return A, b, K, h, meta


def induced_system(spec: SafeActionSpec, lin: TransitionLinearization,
                   anchor_action) -> InducedSystem:
    if spec.mode != "induced":
        raise ConfigError("induced system requested for an explicit spec")
    a0 = np.asarray(anchor_action, dtype=float).ravel()
    G_in_full = lin.df_dw @ np.diag(spec.noise_set.half_widths)
    keep = np.flatnonzero(np.max(np.abs(G_in_full), axis=0) > 0.0)
    m0 = lin.value - lin.df_da @ a0
    return InducedSystem(spec=spec, df_da=lin.df_da.copy(), m0=m0,
                         G_in=G_in_full[:, keep])


def induced_action_interval(sys: InducedSystem) -> tuple[float, float]:
    """Exact extent [lo, hi] of the 1-D induced safe action set.

    Raises :class:`SafetyFault` when the set is empty, which signals a
    bad safe-set configuration and must abort training.
    """
    if sys.d != 1:
        raise ValueError("action interval is defined for 1-D actions only")
    A, b, K, h, meta = sys.build()
    c = np.zeros(sys.n_vars(ray=False))
    c[0] = 1.0
    lo = solve_lp(c, A, b, K, h, nonneg=meta["nonneg"])
    if lo.status != "optimal":
        raise SafetyFault("empty induced safe action set (interval LP infeasible)")
    hi = solve_lp(-c, A, b, K, h, nonneg=meta["nonneg"])
    if hi.status != "optimal":
        raise SafetyFault("empty induced safe action set (interval LP infeasible)")
    return float(lo.primal[0]), float(hi.primal[0])


def induced_budgets(sys: InducedSystem) -> np.ndarray:
    """Per-row coefficient budgets left after representing the noise part.

    Solves  min max-row-sum Gamma  s.t.  G_S Gamma = G_in  once per state
    and returns 1 - rowsum(Gamma) >= 0.  If even the minimal row sum
    exceeds one no joint choice exists either and the induced set is
    empty.
    """
    n2 = sys.n2
    if sys.n1 == 0:
        return np.ones(n2)
    G_S = sys.spec.safe_state_set.generators
    E = np.zeros((sys.d_s * sys.n1, n2 * sys.n1))
    rhs = np.zeros(sys.d_s * sys.n1)
    for j in range(sys.n1):
        E[j * sys.d_s:(j + 1) * sys.d_s, j * n2:(j + 1) * n2] = G_S
        rhs[j * sys.d_s:(j + 1) * sys.d_s] = sys.G_in[:, j]
    groups = [[blk * n2 + i for blk in range(sys.n1)] for i in range(n2)]
    sol = solve_inf_norm(E, rhs, groups=groups)
    if sol.status != "optimal":
        raise SafetyFault("noise set not representable in the safe state set")
    if sol.objective > 1.0 + 1e-9:
        raise SafetyFault(
            f"noise part consumes the whole coefficient budget "
            f"(min max row sum {sol.objective:.6g} > 1)")
    Gamma = sol.primal.reshape(sys.n1, n2).T
    budget = 1.0 - np.sum(np.abs(Gamma), axis=1)
    return np.maximum(budget, 0.0)
