"""Vector-field form of the discrete evolution equation.

Instead of evolving values S^j, evolve the slope function gamma directly as
a section of the momentum bundle.  Along a position grid the defining
equation at each transition is

    D2 H+(q_j, p_next) . Dgamma = D1 H+(q_j, p_next)

with Dgamma the grid derivative of gamma.  For the one-dimensional cubic
benchmark with unit parameters this has an explicit rational update
(closed_form_gamma_step); the generic Newton solver reproduces it by using
the quotient gamma_j / q_next with the new gamma in the momentum slot, which
is the discretization the closed form is derived under.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import NewtonConfig, NumericalError, as_vec, newton_solve, norm_inf
from .hj_flow import GeneratingSequence
from .mechanics import DiscreteHamiltonian, Side

__all__ = [
    "GammaSource",
    "DegenerateGridError",
    "SingularDenominatorError",
    "GammaEntry",
    "GammaSequence",
    "FieldCoefficients",
    "eval_field",
    "eval_field_left",
    "vf_residual",
    "vf_residual_left",
    "solve_gamma_generic",
    "closed_form_gamma_step",
    "run_closed_form_vf",
    "equivalence_check",
]


class GammaSource(enum.Enum):
    """How a gamma sequence was produced."""

    GENERIC = "generic"
    CLOSED_FORM = "closed-form"


class DegenerateGridError(NumericalError):
    """The position grid cannot support the slope quotient (zero or repeated q)."""


class SingularDenominatorError(NumericalError):
    """The closed-form gamma update's denominator is numerically zero."""

    def __init__(self, denominator: float, scale: float, message: str | None = None):
        self.denominator = float(denominator)
        self.scale = float(scale)
        if message is None:
            message = (
                f"singular denominator {self.denominator:.6e} "
                f"(threshold 1e-14 * scale, scale = {self.scale:.6e})"
            )
        super().__init__(message)


@dataclass(frozen=True)
class GammaEntry:
    """One row (j, q_j, gamma_j) of a slope sequence."""

    j: int
    q: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "j", int(self.j))
        q = as_vec(self.q, name="q")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "gamma", as_vec(self.gamma, dim=q.size, name="gamma"))


@dataclass
class GammaSequence:
    """Rows of (j, q, gamma) plus which scheme produced them.

    meta carries the truncation flag and failure details when an update
    failed part way; completed rows are kept.
    """

    entries: list[GammaEntry]
    source: GammaSource
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def q_values(self) -> np.ndarray:
        return np.array([e.q for e in self.entries])

    @property
    def gamma_values(self) -> np.ndarray:
        return np.array([e.gamma for e in self.entries])


@dataclass(frozen=True)
class FieldCoefficients:
    """Coefficients of the discrete evolution field in the (dq, dp) frame."""

    dq_coeff: np.ndarray
    dp_coeff: np.ndarray


def eval_field(H: DiscreteHamiltonian, q_j, p_next) -> FieldCoefficients:
    """Right evolution field: dq coefficient D2 H+, dp coefficient D1 H+."""
    if H.side is not Side.RIGHT:
        raise ValueError("eval_field needs a Side.RIGHT Hamiltonian")
    q_j = as_vec(q_j, dim=H.dim, name="q_j")
    p_next = as_vec(p_next, dim=H.dim, name="p_next")
    return FieldCoefficients(
        dq_coeff=np.asarray(H.d2(q_j, p_next), dtype=float),
        dp_coeff=np.asarray(H.d1(q_j, p_next), dtype=float),
    )


def eval_field_left(H: DiscreteHamiltonian, q_next, p_j) -> FieldCoefficients:
    """Left evolution field: dq coefficient -D2 H-, dp coefficient -D1 H-."""
    if H.side is not Side.LEFT:
        raise ValueError("eval_field_left needs a Side.LEFT Hamiltonian")
    q_next = as_vec(q_next, dim=H.dim, name="q_next")
    p_j = as_vec(p_j, dim=H.dim, name="p_j")
    return FieldCoefficients(
        dq_coeff=-np.asarray(H.d2(q_next, p_j), dtype=float),
        dp_coeff=-np.asarray(H.d1(q_next, p_j), dtype=float),
    )


def _apply_dgamma(d2: np.ndarray, dgamma) -> np.ndarray:
    dg = np.asarray(dgamma, dtype=float)
    if dg.ndim == 0:
        return d2 * float(dg)
    if dg.ndim == 1 and dg.size == 1:
        return d2 * float(dg[0])
    if dg.ndim == 2:
        return dg.T @ d2
    raise ValueError(f"dgamma must be a scalar or square matrix, got shape {dg.shape}")


def vf_residual(H: DiscreteHamiltonian, q_j, p_next, dgamma) -> float:
    """Max-norm residual of D2 H+ . Dgamma = D1 H+ at one point."""
    coeffs = eval_field(H, q_j, p_next)
    return norm_inf(_apply_dgamma(coeffs.dq_coeff, dgamma) - coeffs.dp_coeff)


def vf_residual_left(H: DiscreteHamiltonian, q_next, p_j, dgamma) -> float:
    """Max-norm residual of D2 H- . Dgamma = D1 H- at one point (left form)."""
    if H.side is not Side.LEFT:
        raise ValueError("vf_residual_left needs a Side.LEFT Hamiltonian")
    q_next = as_vec(q_next, dim=H.dim, name="q_next")
    p_j = as_vec(p_j, dim=H.dim, name="p_j")
    d2 = np.asarray(H.d2(q_next, p_j), dtype=float)
    d1 = np.asarray(H.d1(q_next, p_j), dtype=float)
    return norm_inf(_apply_dgamma(d2, dgamma) - d1)


def solve_gamma_generic(H: DiscreteHamiltonian, q_sequence, gamma0,
                        cfg: NewtonConfig | None = None) -> GammaSequence:
    """Advance gamma along a given position grid by solving the field equation.

    At each transition the grid derivative is discretized as the quotient
    gamma_j / q_next and the new slope sits in the momentum slot, so the
    update solves

        D2 H+(q_j, g) * (gamma_j / q_next) = D1 H+(q_j, g)

    for g by Newton from the guess gamma_j.  One-dimensional only (the
    quotient has no dimension-general meaning).  The grid must have at least
    two positions and no zero entry past the first; a zero denominator
    raises DegenerateGridError up front.  A Newton failure truncates the
    sequence with meta["truncated"] = True, keeping completed rows.
    """
    if H.side is not Side.RIGHT:
        raise ValueError("solve_gamma_generic needs a Side.RIGHT Hamiltonian")
    if H.dim != 1:
        raise ValueError("the slope quotient scheme is one-dimensional only")
    arr = np.asarray(q_sequence, dtype=float).reshape(-1)
    if arr.size < 2:
        raise ValueError("q_sequence must contain at least two positions")
    if not np.all(np.isfinite(arr)):
        raise ValueError("q_sequence contains non-finite entries")
    if np.any(arr[1:] == 0.0):
        k = int(np.nonzero(arr[1:] == 0.0)[0][0]) + 2
        raise DegenerateGridError(f"q_sequence entry j = {k} is zero: the slope "
                                  f"quotient gamma / q_next is undefined")
    gamma = float(as_vec(gamma0, dim=1, name="gamma0")[0])
    entries = [GammaEntry(j=1, q=arr[0], gamma=gamma)]
    meta: dict = {"truncated": False, "failure": None, "failure_index": None,
                  "failure_message": None}
    for i in range(arr.size - 1):
        q_j, q_next = arr[i], arr[i + 1]
        quot = gamma / q_next

        def residual(g: np.ndarray) -> np.ndarray:
            d2 = np.asarray(H.d2([q_j], g), dtype=float)
            d1 = np.asarray(H.d1([q_j], g), dtype=float)
            return d2 * quot - d1

        try:
            g_next = newton_solve(residual, [gamma], cfg)
        except NumericalError as exc:
            meta.update(truncated=True, failure=type(exc).__name__,
                        failure_index=entries[-1].j, failure_message=str(exc))
            break
        gamma = float(g_next[0])
        entries.append(GammaEntry(j=entries[-1].j + 1, q=q_next, gamma=gamma))
    return GammaSequence(entries=entries, source=GammaSource.GENERIC, meta=meta)


def closed_form_gamma_step(gamma_j: float, q_j: float, q_next: float) -> float:
    """One explicit slope update for the unit-parameter cubic benchmark.

    gamma_next = -(gamma_j q_j^2 - gamma_j + q_next) q_j
                 / (gamma_j + q_next - 3 q_j^2 q_next)

    Raises SingularDenominatorError when |denominator| falls below
    1e-14 * scale, with scale the magnitude of the terms being cancelled.
    """
    gamma_j = float(gamma_j)
    q_j = float(q_j)
    q_next = float(q_next)
    den = gamma_j + q_next - 3.0 * q_j**2 * q_next
    scale = max(1.0, abs(gamma_j) + abs(q_next) + abs(3.0 * q_j**2 * q_next))
    if abs(den) < 1e-14 * scale:
        raise SingularDenominatorError(denominator=den, scale=scale)
    num = -(gamma_j * q_j**2 - gamma_j + q_next) * q_j
    return num / den


def run_closed_form_vf(q_sequence, gamma0: float) -> GammaSequence:
    """Run the closed-form slope update over a scalar position grid.

    A SingularDenominatorError truncates with the flag set in meta; completed
    rows are kept.  On an all-zero grid the very first update is rejected
    this way (the degenerate fixed point of the benchmark).
    """
    arr = np.asarray(q_sequence, dtype=float).reshape(-1)
    if arr.size < 1:
        raise ValueError("q_sequence must contain at least one position")
    if not np.all(np.isfinite(arr)):
        raise ValueError("q_sequence contains non-finite entries")
    gamma = float(gamma0)
    entries = [GammaEntry(j=1, q=arr[0], gamma=gamma)]
    meta: dict = {"truncated": False, "failure": None, "failure_index": None,
                  "failure_message": None}
    for i in range(arr.size - 1):
        try:
            gamma = closed_form_gamma_step(gamma, float(arr[i]), float(arr[i + 1]))
        except SingularDenominatorError as exc:
            meta.update(truncated=True, failure="SingularDenominatorError",
                        failure_index=entries[-1].j, failure_message=str(exc))
            break
        entries.append(GammaEntry(j=entries[-1].j + 1, q=arr[i + 1], gamma=gamma))
    return GammaSequence(entries=entries, source=GammaSource.CLOSED_FORM, meta=meta)


def equivalence_check(H: DiscreteHamiltonian, flow_seq: GeneratingSequence,
                      cfg: NewtonConfig | None = None) -> list[float]:
    """Residuals of the field equation along a generating sequence.

    For each transition of flow_seq the grid derivative of the slope is the
    difference quotient (DS_next - DS_j) / (q_next - q_j) and the field is
    evaluated at (q_j, DS_next).  When S and DS come from an exact solution
    the residuals vanish up to discretization; comparing them across schemes
    is how the value-evolution and field pictures are checked against each
    other.  Raises DegenerateGridError on repeated positions.  cfg is
    accepted for signature uniformity; nothing is solved here.
    """
    if H.side is not Side.RIGHT:
        raise ValueError("equivalence_check needs a Side.RIGHT Hamiltonian")
    if H.dim != 1:
        raise ValueError("the difference quotient is one-dimensional only")
    if len(flow_seq.entries) < 2:
        raise ValueError("flow_seq must contain at least two rows")
    residuals = []
    for a, b in zip(flow_seq.entries[:-1], flow_seq.entries[1:]):
        dq = float(b.q[0]) - float(a.q[0])
        if dq == 0.0:
            raise DegenerateGridError(
                f"repeated position q = {float(a.q[0]):.17g} at j = {a.j}"
            )
        quot = (float(b.DS[0]) - float(a.DS[0])) / dq
        residuals.append(vf_residual(H, a.q, b.DS, quot))
    return residuals
