"""Transport of tangent vectors and normal covectors along trajectories.

A covector ``n = (z, w)`` represents the annihilator of the tangent space of
a flow-invariant hypersurface through the pairing ``<dq, z> + <dv, w>``;
both components stay orthogonal to the velocity.  Free flight acts by

    tangent:  (dq, dv) -> (dq + dt * dv, dv)
    covector: (z,  w)  -> (z, w - dt * z)

and a collision with inward normal ``nu``, curvature ``K`` and angle
``cos_phi`` acts by

    tangent:  dq+ = R dq-,   dv+ = R dv- + 2 cos_phi * R V* K V dq-
    covector: w+  = R w-,    z+  = R z-  - 2 cos_phi * V1* K V1 R w-

where ``R`` is the reflection across the boundary tangent plane, ``V`` the
incoming-velocity parallel projection onto the tangent plane, ``V1`` the
same for the outgoing velocity, and ``*`` the adjoint.  The two maps are
mutually adjoint, so the pairing with a forward-transported tangent vector
is an exact invariant; ``adjoint_residual`` measures how well the
implementation preserves it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import CollisionEvent, Trajectory
from .errors import GrazingSingularityError, SeriesRangeError
from .geometry import CurvatureOperator, Vec, curvature_at
from .tolerances import EPS_GRAZE

ORTHOGONALITY_TOL = 1e-10


@dataclass(eq=False)
class TangentVector:
    """Transversal phase-space variation: dq and dv, both orthogonal to v."""

    dq: Vec
    dv: Vec

    def norm(self) -> float:
        return float(np.sqrt(self.dq @ self.dq + self.dv @ self.dv))


@dataclass(eq=False)
class Covector:
    """Normal covector (z, w) to a transported hypersurface."""

    z: Vec
    w: Vec

    def norm(self) -> float:
        return float(np.sqrt(self.z @ self.z + self.w @ self.w))

    def scaled(self, s: float) -> "Covector":
        return Covector(s * self.z, s * self.w)


def pairing(dy: TangentVector, n: Covector) -> float:
    """Duality pairing ``<dq, z> + <dv, w>``."""
    return float(dy.dq @ n.z + dy.dv @ n.w)


def _check_transversal(a: Vec, b: Vec, v: Vec, what: str) -> None:
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)), 1e-300)
    res = max(abs(float(a @ v)), abs(float(b @ v)))
    if res > ORTHOGONALITY_TOL * scale:
        raise ValueError(f"{what} components must be orthogonal to the velocity "
                         f"(residual {res / scale:.3e} relative)")


# ---------------------------------------------------------------------------
# Elementary maps
# ---------------------------------------------------------------------------

def free_flight_covector(n: Covector, dt: float) -> Covector:
    """Covector after a collision-free flight of duration ``dt``."""
    if dt < 0.0:
        raise ValueError("flight duration must be nonnegative")
    return Covector(n.z.copy(), n.w - dt * n.z)


def free_flight_tangent(dy: TangentVector, dt: float) -> TangentVector:
    """Tangent vector after a collision-free flight of duration ``dt``."""
    if dt < 0.0:
        raise ValueError("flight duration must be nonnegative")
    return TangentVector(dy.dq + dt * dy.dv, dy.dv.copy())


def _reflect(x: Vec, nu: Vec) -> Vec:
    return x - 2.0 * float(x @ nu) * nu


def _curvature_kick_out(w_minus: Vec, event: CollisionEvent, K: CurvatureOperator,
                        scale: float) -> tuple[Vec, Vec]:
    """(V1 R w-, V1* K V1 R w-) for the outgoing-velocity projection V1."""
    nu, cphi = event.nu, event.cos_phi
    v_out = event.v_out / np.linalg.norm(event.v_out)
    w1 = _reflect(w_minus, nu)
    u = w1 - (float(w1 @ nu) / cphi) * v_out            # V1 (R w-)
    ku = scale * K.apply(u)
    kick = ku - (float(ku @ v_out) / cphi) * nu         # V1* K V1 R w-
    return u, kick


def collision_covector(n_minus: Covector, event: CollisionEvent, K: CurvatureOperator,
                       curvature_scale: float = 1.0,
                       eps_graze: float = EPS_GRAZE) -> Covector:
    """Covector across a collision: ``(R z- - 2 cos_phi V1* K V1 R w-, R w-)``.

    The w-component is reflected isometrically, so its norm is continuous
    across the event; the Lyapunov value drops by
    ``2 cos_phi <K V1 R w-, V1 R w->``, nonnegative for semi-dispersing walls.
    ``curvature_scale`` rescales ``K`` (fault-injection hook for the
    adjointness negative control); it must be 1 for physical transport.
    """
    if event.cos_phi < eps_graze:
        raise GrazingSingularityError("covector collision map undefined at grazing incidence")
    nu = event.nu
    _, kick = _curvature_kick_out(n_minus.w, event, K, curvature_scale)
    z_plus = _reflect(n_minus.z, nu) - 2.0 * event.cos_phi * kick
    w_plus = _reflect(n_minus.w, nu)
    return Covector(z_plus, w_plus)


def collision_q_drop(n_minus: Covector, event: CollisionEvent, K: CurvatureOperator,
                     curvature_scale: float = 1.0) -> float:
    """Closed-form drop of the Lyapunov value at a collision (nonnegative)."""
    u, _ = _curvature_kick_out(n_minus.w, event, K, 1.0)
    return 2.0 * event.cos_phi * curvature_scale * K.quadratic_form(u)


def collision_tangent(dy_minus: TangentVector, event: CollisionEvent, K: CurvatureOperator,
                      curvature_scale: float = 1.0,
                      eps_graze: float = EPS_GRAZE) -> TangentVector:
    """Tangent vector across a collision:
    ``(R dq-, R dv- + 2 cos_phi R V* K V dq-)`` with the incoming projection V."""
    if event.cos_phi < eps_graze:
        raise GrazingSingularityError("tangent collision map undefined at grazing incidence")
    nu, cphi = event.nu, event.cos_phi
    v_in = event.v_in / np.linalg.norm(event.v_in)
    vn = float(v_in @ nu)                                # = -cos_phi
    u = dy_minus.dq - (float(dy_minus.dq @ nu) / vn) * v_in      # V dq-
    ku = curvature_scale * K.apply(u)
    kick = ku - (float(ku @ v_in) / vn) * nu                     # V* K V dq-
    dq_plus = _reflect(dy_minus.dq, nu)
    dv_plus = _reflect(dy_minus.dv, nu) + 2.0 * cphi * _reflect(kick, nu)
    return TangentVector(dq_plus, dv_plus)


# ---------------------------------------------------------------------------
# Whole-trajectory transport
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CovectorSegment:
    """Covector data on one free segment: z is frozen, w is affine in t."""

    t0: float
    t1: float
    v: Vec
    z: Vec
    w0: Vec

    def covector_at(self, t: float) -> Covector:
        return Covector(self.z.copy(), self.w0 - (t - self.t0) * self.z)


@dataclass(eq=False)
class CovectorJump:
    """Pre/post covector values at one collision."""

    t: float
    n_pre: Covector
    n_post: Covector
    q_drop_closed_form: float
    reprojection: float


@dataclass(eq=False)
class TangentSegment:
    t0: float
    t1: float
    dq0: Vec
    dv: Vec

    def tangent_at(self, t: float) -> TangentVector:
        return TangentVector(self.dq0 + (t - self.t0) * self.dv, self.dv.copy())


@dataclass(eq=False)
class TangentJump:
    t: float
    dy_pre: TangentVector
    dy_post: TangentVector


class TransportSeries:
    """Covector transported along a trajectory, queryable at any time.

    Segment endpoints store the pre- and post-collision values; mid-segment
    queries evaluate the free-flight formula from the left endpoint, so no
    interpolation error is introduced.
    """

    def __init__(self, trajectory: Trajectory, n0: Covector,
                 segments: list[CovectorSegment], jumps: list[CovectorJump]):
        self.trajectory = trajectory
        self.n0 = n0
        self.segments = segments
        self.jumps = jumps
        self.t_end = trajectory.t_end
        self.n0_norm = n0.norm()

    @property
    def max_reprojection(self) -> float:
        return max((j.reprojection for j in self.jumps), default=0.0)

    def _segment_index(self, t: float, side: str = "post") -> int:
        if t < -1e-12 or t > self.t_end + 1e-12:
            raise SeriesRangeError(f"time {t} outside transported range [0, {self.t_end}]")
        ts = [s.t0 for s in self.segments]
        k = int(np.searchsorted(ts, t, side="right") - 1)
        k = max(k, 0)
        if side == "pre" and k > 0 and t <= self.segments[k].t0:
            k -= 1
        return k

    def covector_at(self, t: float, side: str = "post") -> Covector:
        """Covector at time ``t``; at event times ``side`` picks the branch."""
        seg = self.segments[self._segment_index(t, side)]
        return seg.covector_at(t)

    def endpoint_covectors(self) -> list[tuple[float, Covector]]:
        """(t, covector) at every segment endpoint: start, each event pre and
        post, and the series end."""
        out: list[tuple[float, Covector]] = []
        for k, seg in enumerate(self.segments):
            if k == 0:
                out.append((seg.t0, seg.covector_at(seg.t0)))
            out.append((seg.t1, seg.covector_at(seg.t1)))
            if k + 1 < len(self.segments):
                nxt = self.segments[k + 1]
                out.append((nxt.t0, nxt.covector_at(nxt.t0)))
        return out


def _reproject(x: Vec, v: Vec) -> tuple[Vec, float]:
    corr = float(x @ v) * v
    return x - corr, float(np.linalg.norm(corr))


def transport_covector(trajectory: Trajectory, n0: Covector,
                       curvature_scale: float = 1.0,
                       eps_graze: float = EPS_GRAZE) -> TransportSeries:
    """Transport ``n0`` along the whole trajectory.

    After each collision the components are re-projected onto the outgoing
    velocity's orthogonal complement to kill rounding drift; the relative
    correction magnitude is recorded per event.
    """
    v0 = trajectory.start.v
    _check_transversal(n0.z, n0.w, v0, "covector")
    if n0.norm() == 0.0:
        raise ValueError("covector must be nonzero")
    domain = trajectory.domain
    segments: list[CovectorSegment] = []
    jumps: list[CovectorJump] = []
    z, w = n0.z.astype(float).copy(), n0.w.astype(float).copy()
    for k, seg in enumerate(trajectory.segments):
        segments.append(CovectorSegment(seg.t0, seg.t1, seg.v, z, w))
        if k >= len(trajectory.events):
            break
        event = trajectory.events[k]
        n_pre = Covector(z.copy(), w - seg.duration * z)
        K = curvature_at(domain, event.scatterer_index, event.q)
        drop = collision_q_drop(n_pre, event, K, curvature_scale)
        n_post = collision_covector(n_pre, event, K, curvature_scale, eps_graze=eps_graze)
        v_out = event.v_out / np.linalg.norm(event.v_out)
        z, cz = _reproject(n_post.z, v_out)
        w, cw = _reproject(n_post.w, v_out)
        scale = max(np.linalg.norm(z), np.linalg.norm(w), 1e-300)
        with np.errstate(invalid="ignore"):
            corr = (cz + cw) / scale
        jumps.append(CovectorJump(event.t, n_pre, Covector(z.copy(), w.copy()),
                                  drop, corr if math.isfinite(corr) else math.inf))
    return TransportSeries(trajectory, n0, segments, jumps)


class TangentSeries:
    """Tangent vector transported forward along a trajectory."""

    def __init__(self, trajectory: Trajectory, dy0: TangentVector,
                 segments: list[TangentSegment], jumps: list[TangentJump]):
        self.trajectory = trajectory
        self.dy0 = dy0
        self.segments = segments
        self.jumps = jumps
        self.t_end = trajectory.t_end

    def tangent_at(self, t: float, side: str = "post") -> TangentVector:
        ts = [s.t0 for s in self.segments]
        k = int(np.searchsorted(ts, t, side="right") - 1)
        k = max(k, 0)
        if side == "pre" and k > 0 and t <= self.segments[k].t0:
            k -= 1
        return self.segments[k].tangent_at(t)


def transport_tangent(trajectory: Trajectory, dy0: TangentVector,
                      curvature_scale: float = 1.0,
                      eps_graze: float = EPS_GRAZE) -> TangentSeries:
    """Push ``dy0`` forward with the derivative of the flow."""
    v0 = trajectory.start.v
    _check_transversal(dy0.dq, dy0.dv, v0, "tangent vector")
    domain = trajectory.domain
    segments: list[TangentSegment] = []
    jumps: list[TangentJump] = []
    dq, dv = dy0.dq.astype(float).copy(), dy0.dv.astype(float).copy()
    for k, seg in enumerate(trajectory.segments):
        segments.append(TangentSegment(seg.t0, seg.t1, dq, dv))
        if k >= len(trajectory.events):
            break
        event = trajectory.events[k]
        dy_pre = TangentVector(dq + seg.duration * dv, dv.copy())
        K = curvature_at(domain, event.scatterer_index, event.q)
        dy_post = collision_tangent(dy_pre, event, K, curvature_scale, eps_graze=eps_graze)
        dq, dv = dy_post.dq, dy_post.dv
        jumps.append(TangentJump(event.t, dy_pre, dy_post))
    return TangentSeries(trajectory, dy0, segments, jumps)


# ---------------------------------------------------------------------------
# Adjoint-identity verification
# ---------------------------------------------------------------------------

def transversal_basis(v: Vec) -> list[TangentVector]:
    """Basis of the transversal tangent space at velocity ``v``: 2(d-1) vectors."""
    d = v.shape[0]
    m = np.concatenate([v[:, None], np.eye(d)], axis=1)
    q, _ = np.linalg.qr(m)
    vs = [q[:, k] for k in range(1, d)]
    zero = np.zeros(d)
    return [TangentVector(e.copy(), zero.copy()) for e in vs] + \
           [TangentVector(zero.copy(), e.copy()) for e in vs]


def adjoint_residual(trajectory: Trajectory, n0: Covector,
                     basis: list[TangentVector] | None = None,
                     curvature_scale_covector: float = 1.0,
                     eps_graze: float = EPS_GRAZE) -> float:
    """Worst relative violation of the transport-invariance of the pairing.

    For each basis vector the pairing of the forward-transported tangent
    vector with the transported covector must equal its initial value at
    every segment endpoint.  The residual at time ``t`` is normalized by the
    larger of the initial and current magnitude products: the pairing is
    evaluated by cancellation of terms of that size, which is the scale
    fixed precision can certify.

    ``curvature_scale_covector`` corrupts the curvature operator on the
    covector side only; any value other than 1 breaks adjointness and must
    produce a large residual (negative control).
    """
    if basis is None:
        basis = transversal_basis(trajectory.start.v)
    cov = transport_covector(trajectory, n0, curvature_scale=curvature_scale_covector,
                             eps_graze=eps_graze)
    worst = 0.0
    for dy0 in basis:
        tan = transport_tangent(trajectory, dy0, eps_graze=eps_graze)
        p0 = pairing(dy0, cov.n0)
        base = dy0.norm() * cov.n0_norm
        for cseg, tseg in zip(cov.segments, tan.segments):
            for t in (cseg.t0, cseg.t1):
                n_t = cseg.covector_at(t)
                dy_t = tseg.tangent_at(t)
                scale = max(base, dy_t.norm() * n_t.norm(), 1e-300)
                worst = max(worst, abs(pairing(dy_t, n_t) - p0) / scale)
    return worst
