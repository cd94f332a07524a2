# region Docstring
"""
core.localopt
Gradient-based rebound optimization of a short local b-spline trajectory
without a signed distance field.
Overview:
- Colliding control points get anchors: a point on the obstacle surface and a
    unit repulsion direction. The distance-to-freedom of control point Q for
    anchor (p, v) is d = (Q - p) . v, so the collision term only needs anchors,
    not a distance field.
- The cost combines second-difference smoothness, a cubic anchor penalty and
    velocity/acceleration limit violations. Its gradient is analytic; the first
    and last `degree` control points carry zero gradient, which pins the curve
    endpoints.
- rebound_optimize lifts colliding points onto a guide arc, then alternates
    detection, anchor assignment and one gradient step with Armijo
    backtracking. Anchors accumulate across iterations, deduplicated by
    (control point, obstacle).
Contents:
- Types:
    - Anchor, LocalTrajectory, ReboundResult, ObstacleLike.
- Functions:
    - detect_segments(traj, grid, obstacles, safe_dist, dense, pinned)
    - assign_anchors(traj, segments, grid, obstacles, reach)
    - cost_and_grad(traj, cfg)
    - rebound_optimize(init, grid, obstacles, cfg)
Design Notes:
- Circle repulsion is radial: the anchor sits where the ray from the center
    through the control point leaves the circle. Each colliding point gets one
    anchor, against the nearest obstacle.
- A straight segment through a circle center has only radial pushes along
    itself, so the guide arc picks the side: the one the points lean to, the
    left one when they are centered.
- Wall anchors use the nearest occupied-cell surface point and its outward
    normal. All walls share obstacle id -1.
- cost_and_grad penalises d < safe_dist. rebound_optimize evaluates it with
    safe_dist + rebound_margin and detects at safe_dist, so converged points
    settle outside the detection band. w_collision is multiplied by
    `escalation` after every 10 consecutive colliding iterations.
"""

# endregion
# region Imports
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from core.bspline import UniformBSpline, evaluate
from core.config import OptConfig
from core.logger import get_logger
from core.world import OccupancyGrid, Point2

# endregion
# region Logger

logger = get_logger("localopt")

WALL_ID: int = -1
DENSE_SAMPLES_PER_SPAN: int = 20
MAX_STEP: float = 0.25
"""float: [m] Largest control point displacement tried by one line search."""
ARMIJO_C: float = 1e-4
MAX_HALVINGS: int = 30
ESCALATE_EVERY: int = 10

# endregion
# region Types


class ObstacleLike(Protocol):
    id: int
    center: Point2
    radius: float


class Anchor(NamedTuple):
    """Anchor of one control point against one obstacle."""

    index: int
    point: Point2
    direction: Point2
    obstacle: int


@dataclass(frozen=True, eq=False)
class LocalTrajectory:
    """A local spline with the anchors collected for it."""

    spline: UniformBSpline
    anchors: Tuple[Anchor, ...] = field(default_factory=tuple)

    @property
    def control_points(self) -> np.ndarray:
        return self.spline.control_points


class ReboundResult(NamedTuple):
    """
    Outcome of rebound_optimize.

    trajectory is the last iterate on success and the least-colliding iterate
    otherwise.
    """

    trajectory: LocalTrajectory
    success: bool
    iterations: int
    cost: float
    message: str


# endregion
# region Detection


def _circle_distances(points: np.ndarray, obstacles: Sequence[ObstacleLike]) -> np.ndarray:
    if not obstacles:
        return np.full(points.shape[0], np.inf)
    c = np.array([[o.center[0], o.center[1]] for o in obstacles])
    r = np.array([o.radius for o in obstacles])
    d = np.hypot(points[:, None, 0] - c[None, :, 0], points[:, None, 1] - c[None, :, 1])
    return (d - r[None, :]).min(axis=1)


def _distances(
    points: np.ndarray,
    grid: OccupancyGrid,
    obstacles: Sequence[ObstacleLike],
    safe_dist: float,
) -> np.ndarray:
    static = grid.clearances(points, safe_dist + grid.resolution)
    return np.minimum(static, _circle_distances(points, obstacles))


def _ranges(flags: np.ndarray) -> List[Tuple[int, int]]:
    out: List[Tuple[int, int]] = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(flags) - 1))
    return out


def _as_trajectory(traj: Union[LocalTrajectory, UniformBSpline]) -> LocalTrajectory:
    return traj if isinstance(traj, LocalTrajectory) else LocalTrajectory(traj)


def detect_segments(
    traj: Union[LocalTrajectory, UniformBSpline],
    grid: OccupancyGrid,
    obstacles: Sequence[ObstacleLike],
    safe_dist: float = 0.3,
    dense: bool = False,
    pinned: int = 0,
) -> List[Tuple[int, int]]:
    """
    Maximal index ranges (inclusive) of control points closer than safe_dist
    to any wall or obstacle.

    Args:
        dense: Also sample the curve and flag the supporting control points of
            every sample closer than safe_dist.
        pinned: Skip the direct check for the first and last `pinned` points.
    """
    traj = _as_trajectory(traj)
    spline = traj.spline
    P = spline.control_points
    n = P.shape[0]
    flags = _distances(P, grid, obstacles, safe_dist) < safe_dist
    if pinned:
        flags[:pinned] = False
        flags[n - pinned :] = False
    if dense:
        q = spline.degree
        spans = n - q
        ts = np.linspace(spline.t_start, spline.t_end, spans * DENSE_SAMPLES_PER_SPAN + 1)
        hit = _distances(evaluate(spline, ts), grid, obstacles, safe_dist) < safe_dist
        if hit.any():
            u = (ts[hit] - spline.knot_origin) / spline.dt
            k = np.clip(np.floor(u).astype(np.int64), q, n - 1)
            for kk in np.unique(k):
                flags[kk - q : kk + 1] = True
    return _ranges(flags)


# endregion
# region Anchors


def _unit(x: float, y: float) -> Optional[Point2]:
    n = math.hypot(x, y)
    if n < 1e-12:
        return None
    return Point2(x / n, y / n)


def _tangent(P: np.ndarray, i: int) -> Point2:
    lo, hi = max(0, i - 1), min(P.shape[0] - 1, i + 1)
    t = _unit(*(P[hi] - P[lo]))
    return t or Point2(1.0, 0.0)


def _circle_anchor(
    P: np.ndarray, i: int, ob: ObstacleLike, resolution: float
) -> Anchor:
    c = np.array([ob.center[0], ob.center[1]])
    v = P[i] - c
    if math.hypot(*v) < 1e-12:
        t = _tangent(P, i)
        v = (resolution / 10.0) * np.array([-t.y, t.x])
    direction = _unit(*v)
    assert direction is not None
    point = Point2(
        float(c[0] + ob.radius * direction.x),
        float(c[1] + ob.radius * direction.y),
    )
    return Anchor(i, point, direction, ob.id)


def assign_anchors(
    traj: Union[LocalTrajectory, UniformBSpline],
    segments: Sequence[Tuple[int, int]],
    grid: OccupancyGrid,
    obstacles: Sequence[ObstacleLike],
    reach: float = 0.6,
) -> LocalTrajectory:
    """
    Add one anchor for every control point in segments.

    The anchor is taken against the nearest wall or obstacle whose surface
    lies within reach of the point; on equal distance the lower id wins, walls
    (id -1) first. For a circle the anchor is the surface point on the ray from
    the center through the control point and the direction is that ray. A
    point sitting on a center is moved resolution/10 to the left of the local
    tangent first. Walls give the nearest occupied-cell surface point and its
    outward normal. Anchors already present under the same (index, obstacle)
    key are kept as they are.
    """
    traj = _as_trajectory(traj)
    P = traj.control_points
    anchors: Dict[Tuple[int, int], Anchor] = {(a.index, a.obstacle): a for a in traj.anchors}
    ordered = sorted(obstacles, key=lambda o: o.id)
    for lo, hi in segments:
        for i in range(lo, hi + 1):
            Q = P[i]
            best_dist, best_id = reach, None
            best: Optional[ObstacleLike] = None
            hit = grid.surface_query(Q, reach)
            if hit is not None and hit.distance < reach:
                best_dist, best_id = hit.distance, WALL_ID
            for ob in ordered:
                dist = math.hypot(Q[0] - ob.center[0], Q[1] - ob.center[1]) - ob.radius
                if dist < best_dist:
                    best_dist, best_id, best = dist, ob.id, ob
            if best_id is None or (i, best_id) in anchors:
                continue
            if best is None:
                anchors[(i, WALL_ID)] = Anchor(i, hit.point, hit.normal, WALL_ID)
            else:
                anchors[(i, best_id)] = _circle_anchor(P, i, best, grid.resolution)
    merged = tuple(sorted(anchors.values(), key=lambda a: (a.index, a.obstacle)))
    return LocalTrajectory(traj.spline, merged)


def _guide(
    P: np.ndarray,
    segments: Sequence[Tuple[int, int]],
    obstacles: Sequence[ObstacleLike],
    pad: float,
    pinned: int,
) -> np.ndarray:
    """
    Lift the colliding control points of each segment onto the circle of
    radius r + pad around the obstacle they run into, all on one side of the
    segment chord (the side the points already lean to, left when centered).
    """
    out = P.copy()
    n = P.shape[0]
    ordered = sorted(obstacles, key=lambda o: o.id)
    for lo, hi in segments:
        lo, hi = max(lo, pinned), min(hi, n - 1 - pinned)
        if lo > hi or not ordered:
            continue
        seg = P[lo : hi + 1]

        def gap(o: ObstacleLike) -> float:
            dx, dy = seg[:, 0] - o.center[0], seg[:, 1] - o.center[1]
            return float(np.min(np.hypot(dx, dy)))

        ob = min(ordered, key=lambda o: gap(o) - o.radius)
        if gap(ob) - ob.radius >= pad:
            continue
        c = np.array([ob.center[0], ob.center[1]])
        t = _unit(*(P[min(hi + 1, n - 1)] - P[max(lo - 1, 0)])) or Point2(1.0, 0.0)
        tangent = np.array([t.x, t.y])
        normal = np.array([-t.y, t.x])
        rel = seg - c
        side = -1.0 if float(np.mean(rel @ normal)) < 0 else 1.0
        R = ob.radius + pad
        for k, i in enumerate(range(lo, hi + 1)):
            along = float(rel[k] @ tangent)
            if abs(along) >= R:
                continue
            need = math.sqrt(R * R - along * along)
            if side * float(rel[k] @ normal) < need:
                out[i] = c + along * tangent + side * need * normal
    return out


# endregion
# region Cost


def _cost_grad(
    P: np.ndarray,
    anchors: Sequence[Anchor],
    dt: float,
    degree: int,
    cfg: OptConfig,
    w_collision: float,
) -> Tuple[float, np.ndarray]:
    n = P.shape[0]
    grad = np.zeros_like(P)
    cost = 0.0

    if n >= 3 and cfg.w_smooth > 0:
        D = P[:-2] - 2.0 * P[1:-1] + P[2:]
        cost += cfg.w_smooth * float(np.sum(D * D))
        g = 2.0 * cfg.w_smooth * D
        grad[:-2] += g
        grad[1:-1] -= 2.0 * g
        grad[2:] += g

    if w_collision > 0:
        for a in anchors:
            direction = np.array([a.direction.x, a.direction.y])
            d = float(np.dot(P[a.index] - np.array([a.point.x, a.point.y]), direction))
            x = cfg.safe_dist - d
            if x > 0:
                cost += w_collision * x**3
                grad[a.index] -= w_collision * 3.0 * x**2 * direction

    if cfg.w_feasible > 0 and n >= 2:
        V = np.diff(P, axis=0) / dt
        speed = np.hypot(V[:, 0], V[:, 1])
        over = speed - cfg.v_max
        mask = over > 0
        if mask.any():
            cost += cfg.w_feasible * float(np.sum(over[mask] ** 2))
            gv = np.zeros_like(V)
            gv[mask] = (2.0 * over[mask] / speed[mask])[:, None] * V[mask]
            gv *= cfg.w_feasible / dt
            grad[1:] += gv
            grad[:-1] -= gv
        if n >= 3:
            A = (P[:-2] - 2.0 * P[1:-1] + P[2:]) / dt**2
            acc = np.hypot(A[:, 0], A[:, 1])
            over = acc - cfg.a_max
            mask = over > 0
            if mask.any():
                cost += cfg.w_feasible * float(np.sum(over[mask] ** 2))
                ga = np.zeros_like(A)
                ga[mask] = (2.0 * over[mask] / acc[mask])[:, None] * A[mask]
                ga *= cfg.w_feasible / dt**2
                grad[:-2] += ga
                grad[1:-1] -= 2.0 * ga
                grad[2:] += ga

    grad[:degree] = 0.0
    grad[max(degree, n - degree) :] = 0.0
    return cost, grad


def cost_and_grad(
    traj: Union[LocalTrajectory, UniformBSpline], cfg: OptConfig
) -> Tuple[float, np.ndarray]:
    """
    Total cost and its analytic gradient per control point.

    cost = w_smooth * sum |p[i-1] - 2 p[i] + p[i+1]|^2
         + w_collision * sum over anchors of max(0, safe_dist - d)^3
         + w_feasible * sum (max(0, |v| - v_max)^2 + max(0, |a| - a_max)^2)

    with v = (p[i+1] - p[i]) / dt and a = (p[i+2] - 2 p[i+1] + p[i]) / dt^2.
    The first and last `degree` rows of the gradient are zero.
    """
    traj = _as_trajectory(traj)
    s = traj.spline
    return _cost_grad(s.control_points, traj.anchors, s.dt, s.degree, cfg, cfg.w_collision)


# endregion
# region Optimizer


def rebound_optimize(
    init: Union[LocalTrajectory, UniformBSpline],
    grid: OccupancyGrid,
    obstacles: Sequence[ObstacleLike],
    cfg: OptConfig,
) -> ReboundResult:
    """
    Push a local trajectory out of collision.

    Collisions are detected at safe_dist; the cost is minimised against
    safe_dist + rebound_margin so the accepted iterate keeps some clearance
    beyond safe_dist. Colliding points first move onto a guide arc around the
    obstacle they hit. Stops when the dense curve check finds no collision and
    the last step is shorter than step_tol, or after max_iters. A
    collision-free input is returned unchanged after zero iterations.
    """
    traj = _as_trajectory(init)
    spline = traj.spline
    q = spline.degree
    dt = spline.dt
    pad = cfg.safe_dist + cfg.rebound_margin
    reach = pad + 0.2
    target = cfg.model_copy(update={"safe_dist": pad})

    def detect(P: np.ndarray) -> List[Tuple[int, int]]:
        return detect_segments(
            spline.with_control_points(P), grid, obstacles, cfg.safe_dist, dense=True, pinned=q
        )

    def anchor(P: np.ndarray, found: Sequence[Tuple[int, int]]) -> Tuple[Anchor, ...]:
        current = LocalTrajectory(spline.with_control_points(P), anchors)
        return assign_anchors(current, found, grid, obstacles, reach).anchors

    P = np.array(spline.control_points, dtype=float)
    segments = detect(P)
    if not segments:
        cost, _ = _cost_grad(P, traj.anchors, dt, q, cfg, cfg.w_collision)
        return ReboundResult(traj, True, 0, cost, "collision-free")

    anchors = traj.anchors
    P = _guide(P, segments, obstacles, pad, q)
    anchors = anchor(P, segments)
    segments = detect(P)
    w_collision = cfg.w_collision
    streak = 0
    best_P, best_key = P.copy(), (sum(hi - lo + 1 for lo, hi in segments), math.inf)
    cost = math.inf
    step_norm = math.inf
    for it in range(1, cfg.max_iters + 1):
        if segments:
            anchors = anchor(P, segments)
        cost, grad = _cost_grad(P, anchors, dt, q, target, w_collision)
        gmax = float(np.max(np.hypot(grad[:, 0], grad[:, 1]))) if grad.size else 0.0
        step_norm = 0.0
        if gmax > 1e-12:
            alpha = min(1.0, MAX_STEP / gmax)
            g2 = float(np.sum(grad * grad))
            for _ in range(MAX_HALVINGS):
                cand = P - alpha * grad
                c_cost, _ = _cost_grad(cand, anchors, dt, q, target, w_collision)
                if c_cost <= cost - ARMIJO_C * alpha * g2:
                    P, cost = cand, c_cost
                    step_norm = alpha * math.sqrt(g2)
                    break
                alpha *= 0.5
        segments = detect(P)
        if segments:
            streak += 1
            if streak % ESCALATE_EVERY == 0:
                w_collision *= cfg.escalation
        else:
            streak = 0
        key = (sum(hi - lo + 1 for lo, hi in segments), cost)
        if key < best_key:
            best_P, best_key = P.copy(), key
        if not segments and step_norm < cfg.step_tol:
            out = LocalTrajectory(spline.with_control_points(P), anchors)
            return ReboundResult(out, True, it, cost, "converged")

    if not segments:
        out = LocalTrajectory(spline.with_control_points(P), anchors)
        return ReboundResult(out, True, cfg.max_iters, cost, "collision-free at iteration limit")
    logger.debug(
        "Rebound optimization failed",
        extra={"iterations": cfg.max_iters, "colliding_points": best_key[0]},
    )
    out = LocalTrajectory(spline.with_control_points(best_P), anchors)
    best_cost = best_key[1] if math.isfinite(best_key[1]) else cost
    return ReboundResult(out, False, cfg.max_iters, float(best_cost), "optimization failed")


# endregion

__all__ = [
    "Anchor",
    "LocalTrajectory",
    "ObstacleLike",
    "ReboundResult",
    "assign_anchors",
    "cost_and_grad",
    "detect_segments",
    "rebound_optimize",
]
