"""Exact within-region evolution and boundary-event handling.

A trajectory inside region j is the closed-form oscillation
x(t) = x_p + a sin t + b cos t about the region's center x_p.  Crossing
times of the active constraints have closed-form roots (see the kernels);
at a crossing the velocity is updated by specular reflection (walls) or by
the transmit/reflect rule driven by the potential jump (transitions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StallError
from .kernels import first_hit
from .model import potential, region_boundaries
from .subspace import boundary_normal, get_ode_param_cached, ode_coef

# Root-exclusion window after an event: roots at t <= EPS_T are treated as
# the boundary just left, not a new hit.
EPS_T = 1e-9
# Hit times within TIE_TOL of the minimum count as a corner tie and resolve
# to the lowest constraint row.
TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TrajectorySegment:
    """One in-region flight: x(t) = x_p + a sin t + b cos t."""

    a: np.ndarray          # velocity coefficient, xdot(0)
    b: np.ndarray          # displacement coefficient, x(0) - x_p
    x_p: np.ndarray        # oscillation center

    def x(self, t):
        return self.x_p + self.a * np.sin(t) + self.b * np.cos(t)

    def xdot(self, t):
        return self.a * np.cos(t) - self.b * np.sin(t)


@dataclass(frozen=True, eq=False)
class BoundaryEvent:
    """Outcome of scanning one segment for its first boundary crossing.

    tau is the hit time, or t_max when nothing was hit.  k is the row within
    the RegionBoundary that fired (None on no-hit).  j_target is |L[j,k]|,
    which equals the owning region for walls and on no-hit.  f_row is the
    sign-adjusted normal row, defaulting to the velocity coefficient a on
    no-hit (the artificial-boundary convention of the unified update).
    """

    tau: float
    k: int | None
    j_target: int
    f_row: np.ndarray
    kind: str              # "no-hit" | "wall" | "transition"


def hit_time(fa, fb, h, t_max, eps_t=EPS_T):
    """First exiting root of K(t) = fa sin t + fb cos t + h in (eps_t, t_max].

    Returns None when K never crosses zero downward in the window (including
    the grazing case u = |h|.)
    """
    k, tau = first_hit(
        np.array([fa], dtype=float),
        np.array([fb], dtype=float),
        np.array([h], dtype=float),
        t_max, eps_t,
    )
    return None if k < 0 else tau


def evolve_to_boundary(t_max, seg: TrajectorySegment, rb, j, eps_t=EPS_T,
                       h_rows=None):
    """Scan all active constraints of region j for the first crossing.

    Returns (event, x(tau), xdot(tau)).  h_rows may carry the precomputed
    per-constraint offsets F_j x_p + g_j (they depend only on the region).
    """
    fa = rb.F_j @ seg.a
    fb = rb.F_j @ seg.b
    h = h_rows if h_rows is not None else rb.F_j @ seg.x_p + rb.g_j
    k, tau = first_hit(fa, fb, h, t_max, eps_t, TIE_TOL)
    if k < 0:
        event = BoundaryEvent(tau=t_max, k=None, j_target=j, f_row=seg.a,
                              kind="no-hit")
    else:
        target = int(rb.L_j[k])
        event = BoundaryEvent(
            tau=tau, k=k, j_target=target, f_row=rb.F_j[k],
            kind="wall" if target == j else "transition",
        )
    return event, seg.x(event.tau), seg.xdot(event.tau)


def wall_dynamics(xdot, u1):
    """Specular reflection off a hard wall with unit in-manifold normal u1."""
    return xdot - 2.0 * float(u1 @ xdot) * u1


def boundary_dynamics(xdot, j1, j2, u1, u2, V1, V2):
    """Velocity update at a potential step between regions j1 and j2.

    u1 points into j1 (so the exiting particle has v1 = u1'xdot <= 0), u2
    into j2.  The normal kinetic energy either clears the step (transmit
    along u2 with the surplus) or does not (reflect).  Tangential components
    are untouched.  Returns (xdot_new, j_new).
    """
    v1 = float(u1 @ xdot)
    E = 0.5 * v1 * v1
    dV = V2 - V1
    if E < dV:
        return xdot - 2.0 * v1 * u1, j1
    return (xdot - v1 * u1) + np.sqrt(2.0 * (E - dV)) * u2, j2


class RegionCache:
    """Per-chain memo of everything that depends only on the region.

    Holds the RegionDynamics (via get_ode_param_cached), the sign-adjusted
    boundaries, the constraint offsets h = F_j x_p + g_j, the in-manifold
    unit normals (each oriented into its own region), and the hyperplane ->
    row maps used to find the matching row across a transition.  Also owns
    the consecutive-zero-advance stall detector, which is chain state.
    Values are immutable once stored; dict setdefault keeps concurrent first
    computations consistent, though one cache per chain is the intended use.
    """

    def __init__(self, spec):
        self.spec = spec
        self.dyn = {}
        self._rb = {}
        self._h = {}
        self._normals = {}
        self._rowmaps = {}
        self._stall_key = None
        self._stall_count = 0

    def dynamics(self, j):
        return get_ode_param_cached(j, self.dyn, self.spec)

    def boundary(self, j):
        rb = self._rb.get(j)
        if rb is None:
            rb = self._rb.setdefault(j, region_boundaries(self.spec, j))
        return rb

    def h_rows(self, j):
        h = self._h.get(j)
        if h is None:
            rb = self.boundary(j)
            dyn = self.dynamics(j)
            h = self._h.setdefault(j, rb.F_j @ dyn.x_p + rb.g_j)
        return h

    def normal(self, j, k):
        """Unit in-manifold normal of row k of region j's boundary."""
        u = self._normals.get((j, k))
        if u is None:
            rb = self.boundary(j)
            dyn = self.dynamics(j)
            u = self._normals.setdefault(
                (j, k), boundary_normal(rb.F_j[k], dyn.Q, dyn.d)
            )
        return u

    def row_of(self, j, hyperplane_idx):
        """Row position of a 1-based hyperplane index in region j's boundary."""
        rowmap = self._rowmaps.get(j)
        if rowmap is None:
            rb = self.boundary(j)
            rowmap = self._rowmaps.setdefault(
                j, {int(i): pos for pos, i in enumerate(rb.idx)}
            )
        return rowmap[hyperplane_idx]

    def observe_advance(self, tau, key, eps_t):
        """Track zero-advance events; two in a row at one constraint stall."""
        if tau > eps_t:
            self._stall_key = None
            self._stall_count = 0
            return
        if key == self._stall_key:
            self._stall_count += 1
            raise StallError(
                "no time progress for two consecutive events at the same "
                "constraint",
                context={"constraint": key, "tau": tau, "eps_t": eps_t},
            )
        self._stall_key = key
        self._stall_count = 1


@dataclass(frozen=True, eq=False)
class SegmentResult:
    """evolve_segment outcome plus the bookkeeping the event log wants."""

    x: np.ndarray
    xdot: np.ndarray       # post-update velocity, ready for the next segment
    tau_used: float
    j_new: int
    event: BoundaryEvent
    V1: float = 0.0
    V2: float = 0.0
    xdot_pre: np.ndarray | None = None   # velocity at tau before the update


def evolve_segment_detail(t_budget, j, x0, xdot0, spec, cache: RegionCache,
                          eps_t=EPS_T) -> SegmentResult:
    """One segment: fly inside region j until a boundary or the budget ends.

    Applies the appropriate velocity update at the segment end and reports
    the event.  The returned state is ready to start the next segment (in
    j_new, which differs from j only on a successful transition).
    """
    dyn = cache.dynamics(j)
    a, b = ode_coef(dyn, x0, xdot0)
    seg = TrajectorySegment(a=a, b=b, x_p=dyn.x_p)
    rb = cache.boundary(j)
    event, x, xdot = evolve_to_boundary(
        t_budget, seg, rb, j, eps_t, h_rows=cache.h_rows(j)
    )

    if event.kind == "no-hit":
        return SegmentResult(x=x, xdot=xdot, tau_used=event.tau, j_new=j,
                             event=event)

    cache.observe_advance(event.tau, (j, int(rb.idx[event.k])), eps_t)
    u1 = cache.normal(j, event.k)
    if event.kind == "wall":
        V = potential(spec, j, x)
        return SegmentResult(x=x, xdot=wall_dynamics(xdot, u1),
                             tau_used=event.tau, j_new=j, event=event,
                             V1=V, V2=V, xdot_pre=xdot)

    j2 = event.j_target
    row2 = cache.row_of(j2, int(rb.idx[event.k]))
    u2 = cache.normal(j2, row2)     # j2's own orientation: points into j2
    V1 = potential(spec, j, x)
    V2 = potential(spec, j2, x)
    xdot_new, j_new = boundary_dynamics(xdot, j, j2, u1, u2, V1, V2)
    return SegmentResult(x=x, xdot=xdot_new, tau_used=event.tau, j_new=j_new,
                         event=event, V1=V1, V2=V2, xdot_pre=xdot)


def evolve_segment(t_budget, j, x0, xdot0, spec, cache: RegionCache,
                   eps_t=EPS_T):
    """Segment evolution returning (x, xdot, tau_used, j_new)."""
    res = evolve_segment_detail(t_budget, j, x0, xdot0, spec, cache, eps_t)
    return res.x, res.xdot, res.tau_used, res.j_new


def evolve_segment_unified(t_budget, j, x0, xdot0, spec, cache: RegionCache,
                           eps_t=EPS_T):
    """Segment evolution with every ending funneled through one update rule.

    Equivalence target for evolve_segment: a hard wall is a zero-step
    boundary with u2 = u1, and a budget-exhausted segment end is an
    artificial boundary with u2 = -u1 and no step, which the transmit branch
    turns into a no-op.  Signs are chosen so the incoming normal velocity is
    nonpositive, as boundary_dynamics assumes.
    """
    dyn = cache.dynamics(j)
    a, b = ode_coef(dyn, x0, xdot0)
    seg = TrajectorySegment(a=a, b=b, x_p=dyn.x_p)
    rb = cache.boundary(j)
    event, x, xdot = evolve_to_boundary(
        t_budget, seg, rb, j, eps_t, h_rows=cache.h_rows(j)
    )

    if event.kind == "no-hit":
        norm_a = float(np.linalg.norm(event.f_row))
        if norm_a == 0.0:
            return x, xdot, event.tau, j
        u1 = event.f_row / norm_a
        if float(u1 @ xdot) > 0.0:
            u1 = -u1
        u2, j2 = -u1, j
        V1 = V2 = potential(spec, j, x)
    elif event.kind == "wall":
        u1 = cache.normal(j, event.k)
        u2, j2 = u1, j
        V1 = V2 = potential(spec, j, x)
    else:
        j2 = event.j_target
        u1 = cache.normal(j, event.k)
        u2 = cache.normal(j2, cache.row_of(j2, int(rb.idx[event.k])))
        V1 = potential(spec, j, x)
        V2 = potential(spec, j2, x)

    xdot_new, j_new = boundary_dynamics(xdot, j, j2, u1, u2, V1, V2)
    return x, xdot_new, event.tau, j_new


def euclidean_energy(spec, j, x, xdot):
    """Kinetic-plus-potential bookkeeping energy 0.5||xdot||^2 + V_j(x)."""
    return 0.5 * float(xdot @ xdot) + potential(spec, j, x)
