"""Chain orchestration: velocity refresh, per-iterate event loop, recording.

One iterate draws a fresh tangent velocity, then evolves the particle for a
total time t_max, consuming the budget segment by segment across however
many boundary events occur.  The dynamics are exact and the boundary rules
energy-consistent, so there is no accept/reject step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import EPS_T, RegionCache, evolve_segment_detail
from .errors import ContractError, StallError
from .model import ell, min_slack, potential, region_membership

# Hard cap on events within one iterate; a healthy model triggers a handful.
MAX_EVENTS_PER_ITERATE = 1_000_000


@dataclass
class ParticleState:
    """Mutable particle: position, velocity, region, remaining flight time."""

    x: np.ndarray
    xdot: np.ndarray
    j: int
    t_remaining: float


@dataclass(frozen=True)
class ChainConfig:
    """Knobs of one chain.

    seed may be an integer or a numpy SeedSequence (the latter is how
    multi-chain runs derive independent streams).  n_samples counts kept
    rows: the chain runs burn_in + thin * n_samples iterates.
    """

    n_samples: int
    seed: object = 0
    t_max: float = float(np.pi / 2)
    burn_in: int = 0
    thin: int = 1
    record_events: bool = False

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValueError(f"n_samples must be positive, got {self.n_samples}")
        if self.t_max <= 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.thin < 1:
            raise ValueError(f"thin must be at least 1, got {self.thin}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be nonnegative, got {self.burn_in}")

    @property
    def n_iterates(self) -> int:
        return self.burn_in + self.thin * self.n_samples


@dataclass(frozen=True, eq=False)
class ChainOutput:
    """Kept samples plus the optional boundary-event log."""

    X: np.ndarray          # (n_samples, n)
    Xdot: np.ndarray       # (n_samples, n) post-iterate velocities
    R: np.ndarray          # (n_samples,) region labels, 1-based
    events: list | None = None


@dataclass(frozen=True)
class InitialPointReport:
    manifold_residual: float
    min_slack: float
    passed: bool

    def format(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}  initial point: manifold residual "
                f"{self.manifold_residual:.3e}, min slack {self.min_slack:.3e}")


def make_rng(seed) -> np.random.Generator:
    """The chain RNG: PCG64 over a SeedSequence, fixed across platforms."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.PCG64(seed))


def refresh_velocity(dyn, rng) -> np.ndarray:
    """Fresh tangent velocity S @ eps, eps ~ N(0, I_{n-d})."""
    return dyn.S @ rng.standard_normal(dyn.S.shape[1])


def initial_point_check(spec, j0, x0, tol=1e-8) -> InitialPointReport:
    """Is x0 a usable start: on region j0's manifold and inside its cell?"""
    x0 = np.asarray(x0, dtype=float)
    residual = float(np.linalg.norm(ell(spec, j0, x0)))
    slack = min_slack(spec, j0, x0)
    return InitialPointReport(
        manifold_residual=residual,
        min_slack=slack,
        passed=(residual <= tol) and (slack >= -tol),
    )


def run_chain(spec, j0, x0, cfg: ChainConfig) -> ChainOutput:
    """Run one chain from (j0, x0) and return the kept iterates.

    Stream order contract: exactly one velocity refresh is drawn per
    iterate, before any evolution, so outputs are reproducible bit for bit
    from (spec, j0, x0, cfg).
    """
    x0 = np.asarray(x0, dtype=float)
    report = initial_point_check(spec, j0, x0, tol=1e-8)
    if not report.passed:
        raise ContractError(
            f"initial point rejected for region {j0}: "
            f"manifold residual {report.manifold_residual:.3e}, "
            f"min slack {report.min_slack:.3e}",
            residual=max(report.manifold_residual, -report.min_slack),
        )

    rng = make_rng(cfg.seed)
    cache = RegionCache(spec)
    n = spec.n
    X = np.empty((cfg.n_samples, n))
    Xdot = np.empty((cfg.n_samples, n))
    R = np.empty(cfg.n_samples, dtype=np.int64)
    events = [] if cfg.record_events else None

    x, j = x0.copy(), int(j0)
    for i in range(cfg.n_iterates):
        xdot = refresh_velocity(cache.dynamics(j), rng)
        t_left = cfg.t_max
        t_used = 0.0
        n_events = 0
        while True:
            res = evolve_segment_detail(t_left, j, x, xdot, spec, cache,
                                        eps_t=EPS_T)
            t_used += res.tau_used
            t_left -= res.tau_used
            x, xdot = res.x, res.xdot
            if res.event.kind == "no-hit":
                break
            n_events += 1
            if events is not None:
                rb = cache.boundary(j)
                pre = 0.5 * float(res.xdot_pre @ res.xdot_pre) + res.V1
                post = 0.5 * float(res.xdot @ res.xdot) \
                    + potential(spec, res.j_new, res.x)
                events.append({
                    "iterate": i,
                    "time": t_used,
                    "constraint": int(rb.idx[res.event.k]),
                    "kind": res.event.kind,
                    "j_from": j,
                    "j_to": res.j_new,
                    "dV": res.V2 - res.V1,
                    "energy_pre": pre,
                    "energy_post": post,
                })
            j = res.j_new
            if n_events > MAX_EVENTS_PER_ITERATE:
                raise StallError(
                    "event cap exceeded within one iterate",
                    context={"iterate": i, "region": j, "t_left": t_left},
                )

        if i >= cfg.burn_in and (i - cfg.burn_in + 1) % cfg.thin == 0:
            row = (i - cfg.burn_in + 1) // cfg.thin - 1
            X[row] = x
            Xdot[row] = xdot
            R[row] = j

    return ChainOutput(X=X, Xdot=Xdot, R=R, events=events)
