# region Docstring
"""
core.bspline
Uniform b-splines: De Boor evaluation, derivative splines, least-squares path
fitting and steering kinematics.
Overview:
- A UniformBSpline of degree q with n control points has knots
    t_i = knot_origin + i * dt (i = 0 .. n + q) and is valid on
    [t_q, t_n] = [knot_origin + q*dt, knot_origin + n*dt].
- Evaluation uses De Boor's recursion in knot units. The batch form works for
    any control-point dimension, which also gives the basis matrix for free
    (evaluate the identity as control points).
- Derivative splines follow v_i = (p_{i+1} - p_i) / dt with the knot origin
    shifted by one interval, so the valid domain is unchanged.
Contents:
- Types:
    - UniformBSpline: degree, dt, control points, knot origin.
    - KinoSample: position, velocity and acceleration at a parameter.
    - SteeringProfile: sampled angular rate and accumulated steering angle.
- Functions:
    - de_boor(spline, t) -> Point2
    - evaluate(spline, ts) -> np.ndarray
    - basis_matrix(n, degree, dt, ts, knot_origin) -> np.ndarray
    - derivative(spline) -> UniformBSpline
    - kinematics(spline, t) -> KinoSample
    - sample_times(spline, sample_dt) -> np.ndarray
    - steering_profile(spline, sample_dt) -> SteeringProfile
    - fit_uniform(path, degree, dt, segment_length, smoothing) -> UniformBSpline
    - line_spline(a, b, n_points, dt, degree) -> UniformBSpline
Design Notes:
- The angular rate uses the scalar 2D cross product: omega = |v x a| / |v|^2,
    and is 0 where |v| < EPS_SPEED.
- The steering angle psi is the trapezoidal cumulative integral of omega,
    starting at exactly 0.
"""

# endregion
# region Imports
import math
from dataclasses import dataclass, replace
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from core.constants import EPS_SPEED
from core.errors import BSplineError
from core.world import Point2, PointLike

# endregion
# region Types


@dataclass(frozen=True, eq=False)
class UniformBSpline:
    """
    Uniform b-spline.

    Attributes:
        control_points (np.ndarray): (n, dim) control points.
        degree (int): Polynomial degree q.
        dt (float): Knot interval [s].
        knot_origin (float): Parameter value of knot t_0 [s].
    """

    control_points: np.ndarray
    degree: int = 3
    dt: float = 1.0
    knot_origin: float = 0.0

    def __post_init__(self) -> None:
        cp = np.array(self.control_points, dtype=float)
        if cp.ndim == 1:
            cp = cp[:, None]
        if self.degree < 0:
            raise BSplineError(f"degree must be >= 0, got {self.degree}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise BSplineError(f"dt must be > 0, got {self.dt}")
        if cp.ndim != 2 or cp.shape[0] < self.degree + 1:
            raise BSplineError(
                f"need at least degree + 1 = {self.degree + 1} control points"
            )
        if not np.all(np.isfinite(cp)):
            raise BSplineError("control points must be finite")
        cp.setflags(write=False)
        object.__setattr__(self, "control_points", cp)

    @property
    def n(self) -> int:
        return int(self.control_points.shape[0])

    @property
    def t_start(self) -> float:
        return self.knot_origin + self.degree * self.dt

    @property
    def t_end(self) -> float:
        return self.knot_origin + self.n * self.dt

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def with_control_points(self, control_points: np.ndarray) -> "UniformBSpline":
        return replace(self, control_points=control_points)

    def __call__(self, t: float) -> Point2:
        return de_boor(self, t)


class KinoSample(NamedTuple):
    """Kinematic state on a spline at parameter t."""

    t: float
    position: Point2
    velocity: Point2
    acceleration: Point2


@dataclass(frozen=True, eq=False)
class SteeringProfile:
    """
    Sampled steering kinematics.

    Attributes:
        t (np.ndarray): Sample parameters [s].
        omega (np.ndarray): Angular rate |v x a| / |v|^2 [rad/s].
        psi (np.ndarray): Cumulative integral of omega [rad]; psi[0] == 0.
        positions (np.ndarray): (m, 2) curve points.
        speed (np.ndarray): |v| [m/s].
    """

    t: np.ndarray
    omega: np.ndarray
    psi: np.ndarray
    positions: np.ndarray
    speed: np.ndarray

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def curvature(self) -> np.ndarray:
        """omega / |v| [1/m], 0 where the speed guard applied."""
        out = np.zeros_like(self.omega)
        moving = self.speed >= EPS_SPEED
        out[moving] = self.omega[moving] / self.speed[moving]
        return out


# endregion
# region Evaluation


def _de_boor_batch(
    control_points: np.ndarray, degree: int, u: np.ndarray
) -> np.ndarray:
    """De Boor recursion at knot-unit parameters u (already inside the domain)."""
    n = control_points.shape[0]
    q = degree
    k = np.clip(np.floor(u).astype(np.int64), q, n - 1)
    idx = k[:, None] - q + np.arange(q + 1)[None, :]
    d = control_points[idx].astype(float)
    for r in range(1, q + 1):
        for j in range(q, r - 1, -1):
            alpha = (u - (j + k - q)) / (q + 1 - r)
            d[:, j] = (1.0 - alpha)[:, None] * d[:, j - 1] + alpha[:, None] * d[:, j]
    return d[:, q]


def _to_knot_units(spline: UniformBSpline, ts: np.ndarray) -> np.ndarray:
    tol = 1e-9 * max(1.0, abs(spline.t_end))
    if np.any(ts < spline.t_start - tol) or np.any(ts > spline.t_end + tol):
        raise BSplineError("parameter out of domain")
    ts = np.clip(ts, spline.t_start, spline.t_end)
    return (ts - spline.knot_origin) / spline.dt


def evaluate(spline: UniformBSpline, ts: Any) -> np.ndarray:
    """Curve points at parameters ts, shape (len(ts), dim)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    return _de_boor_batch(spline.control_points, spline.degree, _to_knot_units(spline, ts))


def de_boor(spline: UniformBSpline, t: float) -> Point2:
    """
    Point on a planar spline at parameter t.

    Raises:
        BSplineError: "parameter out of domain" when t is outside [t_q, t_n].
    """
    p = evaluate(spline, [t])[0]
    return Point2(float(p[0]), float(p[1]) if p.shape[0] > 1 else 0.0)


def basis_matrix(
    n: int, degree: int, dt: float, ts: Any, knot_origin: float = 0.0
) -> np.ndarray:
    """(len(ts), n) matrix B with B @ P == evaluate(spline(P), ts)."""
    eye = UniformBSpline(np.eye(n), degree, dt, knot_origin)
    return evaluate(eye, ts)


def derivative(spline: UniformBSpline) -> UniformBSpline:
    """
    Derivative spline of degree q - 1 with control points (p_{i+1} - p_i) / dt.

    Raises:
        BSplineError: "cannot differentiate" for degree-0 input.
    """
    if spline.degree < 1 or spline.n < 2:
        raise BSplineError("cannot differentiate")
    cp = np.diff(spline.control_points, axis=0) / spline.dt
    return UniformBSpline(cp, spline.degree - 1, spline.dt, spline.knot_origin + spline.dt)


def kinematics(spline: UniformBSpline, t: float) -> KinoSample:
    """Position, velocity and acceleration at t; missing derivatives are zero."""
    pos = de_boor(spline, t)
    vel = acc = Point2(0.0, 0.0)
    if spline.degree >= 1:
        d1 = derivative(spline)
        vel = de_boor(d1, t)
        if d1.degree >= 1:
            acc = de_boor(derivative(d1), t)
    return KinoSample(float(t), pos, vel, acc)


def sample_times(spline: UniformBSpline, sample_dt: float) -> np.ndarray:
    """Parameters t_q, t_q + sample_dt, ... with t_n always included."""
    if not sample_dt > 0:
        raise BSplineError(f"sample_dt must be > 0, got {sample_dt}")
    count = int(math.floor(spline.duration / sample_dt + 1e-9))
    ts = spline.t_start + sample_dt * np.arange(count + 1)
    if spline.t_end - ts[-1] > 1e-9 * max(1.0, sample_dt):
        ts = np.append(ts, spline.t_end)
    else:
        ts[-1] = spline.t_end
    return ts


def steering_profile(
    spline: UniformBSpline, sample_dt: Optional[float] = None
) -> SteeringProfile:
    """
    Angular rate and accumulated steering angle along a planar spline.

    Args:
        spline: Spline of degree >= 2.
        sample_dt: Sampling interval; defaults to dt / 10.
    """
    if spline.degree < 2:
        raise BSplineError("steering profile needs degree >= 2")
    ts = sample_times(spline, sample_dt or spline.dt / 10.0)
    d1 = derivative(spline)
    d2 = derivative(d1)
    pos = evaluate(spline, ts)
    v = evaluate(d1, ts)
    a = evaluate(d2, ts)
    speed = np.hypot(v[:, 0], v[:, 1])
    cross = v[:, 0] * a[:, 1] - v[:, 1] * a[:, 0]
    omega = np.zeros_like(speed)
    moving = speed >= EPS_SPEED
    omega[moving] = np.abs(cross[moving]) / speed[moving] ** 2
    psi = np.concatenate(
        ([0.0], np.cumsum(0.5 * (omega[1:] + omega[:-1]) * np.diff(ts)))
    )
    return SteeringProfile(t=ts, omega=omega, psi=psi, positions=pos, speed=speed)


# endregion
# region Construction


def _as_points(path: Any) -> np.ndarray:
    poses = getattr(path, "poses", path)
    pts = np.asarray([[float(p[0]), float(p[1])] for p in poses], dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise BSplineError("path needs at least two poses")
    return pts


def fit_uniform(
    path: Any,
    degree: int = 3,
    dt: float = 1.0,
    segment_length: Optional[float] = None,
    smoothing: float = 1e-2,
) -> UniformBSpline:
    """
    Least-squares fit of a uniform spline through a polyline.

    Path points are placed at parameters proportional to their arclength.
    Second differences of the control points are lightly penalised, and the
    first and last samples are hard constraints so the curve starts and ends
    exactly on the path endpoints.

    Args:
        path: GlobalPath or sequence of points.
        degree: Spline degree q.
        dt: Knot interval of the result.
        segment_length: Arclength per knot interval; defaults to the mean pose
            spacing.
        smoothing: Weight of the second-difference regulariser.

    Raises:
        BSplineError: "degenerate path" when all points coincide.
    """
    pts = _as_points(path)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    total = float(cum[-1])
    if total < 1e-9:
        raise BSplineError("degenerate path")
    if segment_length is None:
        segment_length = total / max(1, pts.shape[0] - 1)
    spans = max(1, int(round(total / segment_length)))
    n = spans + degree
    ts = (degree + spans * cum / total) * dt
    A = basis_matrix(n, degree, dt, ts)
    H = A.T @ A
    if n >= 3 and smoothing > 0:
        D2 = np.diff(np.eye(n), n=2, axis=0)
        H = H + smoothing * D2.T @ D2
    C = A[[0, -1]]
    kkt = np.zeros((n + 2, n + 2))
    kkt[:n, :n] = 2.0 * H
    kkt[:n, n:] = C.T
    kkt[n:, :n] = C
    rhs = np.zeros((n + 2, 2))
    rhs[:n] = 2.0 * A.T @ pts
    rhs[n:] = pts[[0, -1]]
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return UniformBSpline(sol[:n], degree, dt, 0.0)


def line_spline(
    a: PointLike,
    b: PointLike,
    n_points: int,
    dt: float,
    degree: int = 3,
    knot_origin: float = 0.0,
) -> UniformBSpline:
    """
    Straight spline whose curve runs exactly from a to b.

    Control points are equally spaced on the line a-b, extended past both ends
    so that the symmetric uniform basis lands the curve endpoints on a and b.
    """
    if n_points < degree + 1:
        raise BSplineError(f"need at least {degree + 1} control points")
    a_ = np.array([float(a[0]), float(a[1])])
    b_ = np.array([float(b[0]), float(b[1])])
    s = (np.arange(n_points) - (degree - 1) / 2.0) / (n_points - degree)
    cp = a_[None, :] + s[:, None] * (b_ - a_)[None, :]
    return UniformBSpline(cp, degree, dt, knot_origin)


# endregion

__all__ = [
    "KinoSample",
    "SteeringProfile",
    "UniformBSpline",
    "basis_matrix",
    "de_boor",
    "derivative",
    "evaluate",
    "fit_uniform",
    "kinematics",
    "line_spline",
    "sample_times",
    "steering_profile",
]
