"""
Planar 3-link arm: kinematics and the per-cycle joint-velocity QP.

The QP tracks a Cartesian mallet velocity while staying near a reference
posture:

    min_qd  ||J(q) qd - v||^2 + lam ||q + qd dt - q_ref||^2
    s.t.    |qd| <= qd_max,  q_min <= q + qd dt <= q_max

With three joints every active set can be enumerated, which gives the exact
minimizer without an iterative solver.
"""

import itertools
import math
from typing import Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from ..models import ArmModel, MalletCommand

log = structlog.get_logger(__name__)

_FREE, _LOWER, _UPPER = 0, 1, 2
_ACTIVE_SETS = tuple(itertools.product((_FREE, _LOWER, _UPPER), repeat=3))
KKT_TOLERANCE = 1e-9


class JointState(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    q: tuple[float, float, float]
    q_dot: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def q_array(self) -> np.ndarray:
        return np.array(self.q)

    @property
    def q_dot_array(self) -> np.ndarray:
        return np.array(self.q_dot)


def fk(q, arm: ArmModel) -> np.ndarray:
    """Mallet position: base + sum_i l_i (cos phi_i, sin phi_i), phi_i = q_1 + ... + q_i."""
    phi = np.cumsum(np.asarray(q, dtype=float))
    lengths = np.asarray(arm.lengths)
    return np.array(arm.base) + np.array(
        [np.sum(lengths * np.cos(phi)), np.sum(lengths * np.sin(phi))]
    )


def jacobian(q, arm: ArmModel) -> np.ndarray:
    phi = np.cumsum(np.asarray(q, dtype=float))
    lengths = np.asarray(arm.lengths)
    dx = -lengths * np.sin(phi)
    dy = lengths * np.cos(phi)
    # column i sums the links from joint i outward
    J = np.empty((2, 3))
    J[0] = np.cumsum(dx[::-1])[::-1]
    J[1] = np.cumsum(dy[::-1])[::-1]
    return J


def batch_fk_jacobian(Q: np.ndarray, arm: ArmModel) -> tuple[np.ndarray, np.ndarray]:
    """fk and jacobian for a stack of configurations Q (N, 3)."""
    phi = np.cumsum(Q, axis=1)
    lengths = np.asarray(arm.lengths)
    dx = -lengths * np.sin(phi)
    dy = lengths * np.cos(phi)
    pos = np.array(arm.base) + np.stack([dy.sum(axis=1), -dx.sum(axis=1)], axis=1)
    J = np.stack(
        [np.cumsum(dx[:, ::-1], axis=1)[:, ::-1], np.cumsum(dy[:, ::-1], axis=1)[:, ::-1]],
        axis=1,
    )
    return pos, J


def min_singular_value(J: np.ndarray) -> float:
    return float(np.linalg.svd(J, compute_uv=False)[-1])


def joint_velocity_box(q: np.ndarray, arm: ArmModel, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Bounds on qd from the velocity limits and the position limits one step ahead."""
    qd_max = np.asarray(arm.qd_max)
    lo = np.maximum(-qd_max, (np.asarray(arm.q_min) - q) / dt)
    hi = np.minimum(qd_max, (np.asarray(arm.q_max) - q) / dt)
    # a state sitting on a limit leaves an empty interval only through rounding
    lo = np.minimum(lo, 0.0)
    hi = np.maximum(hi, 0.0)
    return lo, hi


def qp_objective(qd, J, v, q, q_ref, lam, dt) -> float:
    r = J @ qd - v
    p = q + qd * dt - q_ref
    return float(r @ r + lam * (p @ p))


def solve_box_qp(P: np.ndarray, c: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """
    Exact minimizer of 0.5 x^T P x + c^T x over lo <= x <= hi (n = 3).

    Each active set fixes some coordinates at a bound and solves the free
    block; the best feasible candidate is the constrained minimizer.
    """
    best_x: Optional[np.ndarray] = None
    best_val = math.inf
    for active in _ACTIVE_SETS:
        x = np.zeros(3)
        fixed = np.array([a != _FREE for a in active])
        for i, a in enumerate(active):
            if a == _LOWER:
                x[i] = lo[i]
            elif a == _UPPER:
                x[i] = hi[i]
        free = ~fixed
        if free.any():
            rhs = -(c[free] + P[np.ix_(free, fixed)] @ x[fixed])
            try:
                x[free] = np.linalg.solve(P[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(x[free] < lo[free] - 1e-12) or np.any(x[free] > hi[free] + 1e-12):
                continue
            x = np.clip(x, lo, hi)
        val = 0.5 * x @ P @ x + c @ x
        if val < best_val - 1e-15:
            best_x, best_val = x, val
    if best_x is None:
        # P singular on every free block: stay put
        best_x = np.clip(np.zeros(3), lo, hi)
    return best_x


def projected_gradient(qd, P, c, lo, hi) -> np.ndarray:
    """KKT residual: gradient components not blocked by an active bound."""
    grad = P @ qd + c
    pg = grad.copy()
    at_lo = qd <= lo + 1e-12
    at_hi = qd >= hi - 1e-12
    pg[at_lo & (grad > 0)] = 0.0
    pg[at_hi & (grad < 0)] = 0.0
    return pg


def qp_track(
    state: JointState,
    cmd: MalletCommand,
    arm: ArmModel,
    dt: float,
    q_ref: Optional[tuple[float, float, float]] = None,
) -> JointState:
    """
    Next joint state tracking the commanded mallet velocity.

    q_ref overrides the arm's reference posture (shooting uses its own).
    """
    q = state.q_array
    J = jacobian(q, arm)
    v = np.asarray(cmd.target_velocity, dtype=float)
    ref = np.asarray(q_ref if q_ref is not None else arm.q_ref)
    P = J.T @ J + arm.lam * dt**2 * np.eye(3)
    c = -J.T @ v + arm.lam * dt * (q - ref)
    lo, hi = joint_velocity_box(q, arm, dt)
    qd = solve_box_qp(P, c, lo, hi)
    q_next = np.clip(q + qd * dt, arm.q_min, arm.q_max)
    return JointState(q=tuple(q_next.tolist()), q_dot=tuple(qd.tolist()))


def ik_dls(
    target,
    arm: ArmModel,
    q0=None,
    damping: float = 0.05,
    iters: int = 200,
    tol: float = 1e-6,
) -> np.ndarray:
    """Damped-least-squares inverse kinematics, clamped to the joint limits."""
    q = np.asarray(q0 if q0 is not None else arm.q_ref, dtype=float).copy()
    target = np.asarray(target, dtype=float)
    for _ in range(iters):
        err = target - fk(q, arm)
        if np.linalg.norm(err) < tol:
            break
        J = jacobian(q, arm)
        step = J.T @ np.linalg.solve(J @ J.T + damping**2 * np.eye(2), err)
        q = np.clip(q + step, arm.q_min, arm.q_max)
    return q
