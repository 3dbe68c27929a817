"""Generating functions along a discrete flow.

A right discrete Hamiltonian H+ drives an evolution equation for a sequence
of generating-function values S^j with slopes DS^j identified with the
momenta:

    S_next - S_j - DS_next . q_next + H+(q_j, DS_next) = 0        (right)
    S_next - S_j + DS_j . q_j + H-(q_next, DS_j) = 0              (left)

solve_generating_sequence integrates the right form along the Hamiltonian
flow itself.  closed_form_ds_step / run_closed_form_flow implement the
explicit slope recursion for the one-dimensional cubic benchmark with unit
parameters, where the update is a quadratic with two root branches.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import NewtonConfig, NumericalError, PhasePoint, as_vec, norm_inf
from .mechanics import DiscreteHamiltonian, Side, step_right

__all__ = [
    "Branch",
    "BranchError",
    "GeneratingEntry",
    "GeneratingSequence",
    "hj_residual_right",
    "hj_residual_left",
    "solve_generating_sequence",
    "closed_form_ds_step",
    "run_closed_form_flow",
]


class Branch(enum.Enum):
    """Root selection policy for the closed-form slope update."""

    PLUS = "plus"
    MINUS = "minus"
    CONTINUITY = "continuity"


class BranchError(NumericalError):
    """The closed-form slope update has no real root (negative discriminant)."""

    def __init__(self, discriminant: float, message: str | None = None):
        self.discriminant = float(discriminant)
        if message is None:
            message = (
                f"no real branch: discriminant = {self.discriminant:.6e} is negative"
            )
        super().__init__(message)


@dataclass(frozen=True)
class GeneratingEntry:
    """One row (j, q_j, S_j, DS_j) of a generating sequence."""

    j: int
    q: np.ndarray
    S: float
    DS: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "j", int(self.j))
        q = as_vec(self.q, name="q")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "S", float(self.S))
        object.__setattr__(self, "DS", as_vec(self.DS, dim=q.size, name="DS"))


@dataclass
class GeneratingSequence:
    """Rows of (j, q, S, DS) plus the per-step branch log and the h used.

    branch_log[i] names how row i was produced: "init" for the seed row,
    "plus"/"minus" for closed-form root choices, "direct" for the generic
    Newton path.  meta carries the truncation flag and failure details when
    a step could not be completed; completed rows are always kept.
    """

    entries: list[GeneratingEntry]
    branch_log: list[str]
    h: float
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def q_values(self) -> np.ndarray:
        return np.array([e.q for e in self.entries])

    @property
    def ds_values(self) -> np.ndarray:
        return np.array([e.DS for e in self.entries])


def hj_residual_right(H: DiscreteHamiltonian, S_j: float, S_next: float,
                      DS_next, q_j, q_next) -> float:
    """Signed residual of the right evolution equation at one transition."""
    if H.side is not Side.RIGHT:
        raise ValueError("hj_residual_right needs a Side.RIGHT Hamiltonian")
    DS_next = as_vec(DS_next, dim=H.dim, name="DS_next")
    q_j = as_vec(q_j, dim=H.dim, name="q_j")
    q_next = as_vec(q_next, dim=H.dim, name="q_next")
    return (float(S_next) - float(S_j) - float(DS_next @ q_next)
            + float(H.eval(q_j, DS_next)))


def hj_residual_left(H: DiscreteHamiltonian, S_j: float, S_next: float,
                     DS_j, q_j, q_next) -> float:
    """Signed residual of the left evolution equation at one transition."""
    if H.side is not Side.LEFT:
        raise ValueError("hj_residual_left needs a Side.LEFT Hamiltonian")
    DS_j = as_vec(DS_j, dim=H.dim, name="DS_j")
    q_j = as_vec(q_j, dim=H.dim, name="q_j")
    q_next = as_vec(q_next, dim=H.dim, name="q_next")
    return (float(S_next) - float(S_j) + float(DS_j @ q_j)
            + float(H.eval(q_next, DS_j)))


# Transitions whose recomputed residual exceeds this are treated as failures.
_POST_CHECK_TOL = 1e-12


def solve_generating_sequence(H: DiscreteHamiltonian, q0, S0: float, DS0,
                              steps: int,
                              cfg: NewtonConfig | None = None) -> GeneratingSequence:
    """Integrate S along the discrete flow of H itself.

    The slope DS_j is the momentum lift: the phase trajectory starts at
    (q0, DS0), each step is the implicit right step, and S accumulates via

        S_next = S_j + DS_next . q_next - H+(q_j, DS_next)

    which makes the right evolution residual vanish identically.  Each
    transition is still re-checked; a violation or a numeric failure
    truncates the sequence with meta["truncated"] = True.  A step whose
    position update D2 H+ is identically zero marks meta["degenerate"]
    (the position collapses and no longer determines the flow).
    """
    if H.side is not Side.RIGHT:
        raise ValueError("solve_generating_sequence needs a Side.RIGHT Hamiltonian")
    if int(steps) != steps or steps < 0:
        raise ValueError(f"steps must be a nonnegative integer, got {steps}")
    q0 = as_vec(q0, dim=H.dim, name="q0")
    DS0 = as_vec(DS0, dim=H.dim, name="DS0")
    entries = [GeneratingEntry(j=1, q=q0, S=float(S0), DS=DS0)]
    branch_log = ["init"]
    meta: dict = {"truncated": False, "failure": None, "failure_index": None,
                  "failure_message": None, "degenerate": False}
    x = PhasePoint(index=1, q=q0, p=DS0)
    for _ in range(int(steps)):
        prev = entries[-1]
        try:
            x_next = step_right(H, x, cfg)
        except NumericalError as exc:
            meta.update(truncated=True, failure=type(exc).__name__,
                        failure_index=prev.j, failure_message=str(exc))
            break
        if norm_inf(x_next.q) == 0.0:
            # distinguish a genuine zero crossing from a position update that
            # ignores the momentum entirely
            probe = np.asarray(H.d2(x.q, x_next.p + 1.0), dtype=float)
            if norm_inf(probe) == 0.0:
                meta["degenerate"] = True
        s_next = (prev.S + float(x_next.p @ x_next.q)
                  - float(H.eval(x.q, x_next.p)))
        res = hj_residual_right(H, prev.S, s_next, x_next.p, x.q, x_next.q)
        if abs(res) > _POST_CHECK_TOL:
            meta.update(truncated=True, failure="ResidualCheckFailure",
                        failure_index=prev.j,
                        failure_message=f"transition residual {res:.6e} exceeds "
                                        f"{_POST_CHECK_TOL:g}")
            break
        entries.append(GeneratingEntry(j=prev.j + 1, q=x_next.q, S=s_next, DS=x_next.p))
        branch_log.append("direct")
        x = x_next
    return GeneratingSequence(entries=entries, branch_log=branch_log, h=0.0, meta=meta)


def _ds_roots(q_j: float, q_next: float, prev_ds: float, h: float) -> tuple[float, float, float]:
    # Quadratic in the new slope; prefix is the vertex, disc the discriminant.
    prefix = -q_j**3 + q_j - q_next
    disc = (q_j**6 - 2.0 * q_j**4 + 2.0 * q_j**3 * q_next + 2.0 * h * prev_ds
            + 2.0 * q_j**2 - 2.0 * q_j * q_next + q_next**2)
    if disc < 0.0:
        raise BranchError(discriminant=disc)
    root = math.sqrt(disc)
    return prefix + root, prefix - root, disc


def closed_form_ds_step(q_j: float, q_next: float, prev_ds: float, h: float,
                        branch: Branch = Branch.CONTINUITY) -> float:
    """One explicit slope update for the unit-parameter cubic benchmark.

    Solves the quadratic the right evolution equation reduces to when H+ is
    the benchmark Hamiltonian with r = s = 1 and the S increment is h times
    the previous slope.  branch picks the root: Plus and Minus take the
    fixed sign; Continuity takes the root closer to prev_ds, resolving ties
    toward Plus.  Raises BranchError (carrying the discriminant) when no
    real root exists.
    """
    q_j = float(q_j)
    q_next = float(q_next)
    prev_ds = float(prev_ds)
    plus, minus, _ = _ds_roots(q_j, q_next, prev_ds, float(h))
    if branch is Branch.PLUS:
        return plus
    if branch is Branch.MINUS:
        return minus
    if branch is Branch.CONTINUITY:
        return minus if abs(minus - prev_ds) < abs(plus - prev_ds) else plus
    raise ValueError(f"branch must be a Branch enum member, got {branch!r}")


def run_closed_form_flow(q_sequence, ds0: float, h: float,
                         branch: Branch = Branch.CONTINUITY) -> GeneratingSequence:
    """Run the closed-form slope recursion over a fixed position grid.

    q_sequence is a scalar grid (the benchmark is one-dimensional).  S starts
    at 0 and accumulates S_next = S_j + h * DS_j, the increment the closed
    form is derived under.  branch_log records "init" and then the root
    actually taken each step.  A BranchError truncates with the flag set and
    the offending discriminant in meta; completed rows are kept.
    """
    arr = np.asarray(q_sequence, dtype=float).reshape(-1)
    if arr.size < 1:
        raise ValueError("q_sequence must contain at least one position")
    if not np.all(np.isfinite(arr)):
        raise ValueError("q_sequence contains non-finite entries")
    grid = [float(v) for v in arr]
    if not (h > 0.0):
        raise ValueError(f"h must be positive, got {h}")
    entries = [GeneratingEntry(j=1, q=grid[0], S=0.0, DS=float(ds0))]
    branch_log = ["init"]
    meta: dict = {"truncated": False, "failure": None, "failure_index": None,
                  "failure_message": None, "discriminant": None}
    for i in range(len(grid) - 1):
        prev = entries[-1]
        prev_ds = float(prev.DS[0])
        try:
            plus, minus, _ = _ds_roots(grid[i], grid[i + 1], prev_ds, h)
        except BranchError as exc:
            meta.update(truncated=True, failure="BranchError",
                        failure_index=prev.j, failure_message=str(exc),
                        discriminant=exc.discriminant)
            break
        if branch is Branch.PLUS:
            ds_next, token = plus, "plus"
        elif branch is Branch.MINUS:
            ds_next, token = minus, "minus"
        else:
            if abs(minus - prev_ds) < abs(plus - prev_ds):
                ds_next, token = minus, "minus"
            else:
                ds_next, token = plus, "plus"
        entries.append(GeneratingEntry(j=prev.j + 1, q=grid[i + 1],
                                       S=prev.S + h * prev_ds, DS=ds_next))
        branch_log.append(token)
    return GeneratingSequence(entries=entries, branch_log=branch_log, h=float(h),
                              meta=meta)
