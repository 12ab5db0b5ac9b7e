"""Lyapunov-function diagnostics and verification of the transport laws.

The scalar ``Q(n) = <z, w>`` decays monotonically along transported
covectors: linearly with slope ``-|z|^2`` on free segments and by a
nonnegative curvature term at collisions.  When ``Q`` starts negative this
forces ``|w|`` (and with it the hypersurface expansion factor
``lambda_t = |n_t| / |n_0|``) to grow at least linearly.  The verifiers in
this module check those statements on sampled series, with relative margins,
and report per-check pass/fail results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InfeasibleCovectorError, SeriesRangeError
from .transport import Covector, TransportSeries

DEFAULT_INTERIOR_SAMPLES = 8
W_CONTINUITY_TOL = 1e-12
RATIO_SENTINEL_FLOOR = 1e-300

CHECK_Q_NONINCREASING = "Q_nonincreasing"
CHECK_W_CONTINUITY = "w_continuity"
CHECK_Z_SEGMENT_CONSTANT = "z_segment_constant"
CHECK_Q_STRICT_DECREASE = "Q_strict_decrease"
CHECK_W_STRICT_INCREASE = "w_strict_increase"
CHECK_RATIO_NONINCREASING = "w_over_Q_nonincreasing"
CHECK_W_LINEAR_GROWTH = "w_linear_growth"
CHECK_LAMBDA_LINEAR_GROWTH = "lambda_linear_growth"


def lyapunov_Q(n: Covector) -> float:
    """Infinitesimal Lyapunov function ``<z, w>``.

    Scaling the covector by ``s`` scales the value by ``s**2``; its sign is
    scale-invariant.
    """
    return float(n.z @ n.w)


def expansion_factor(series: TransportSeries, t: float) -> float:
    """Hypersurface volume expansion ``|n_t| / |n_0|`` at time ``t``."""
    if not 0.0 <= t <= series.t_end + 1e-12:
        raise SeriesRangeError(f"time {t} outside transported range [0, {series.t_end}]")
    return series.covector_at(t).norm() / series.n0_norm


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class DiagnosticsRecord:
    """One sampled instant of a transported covector."""

    t: float
    segment_index: int
    event_flag: int          # 0 interior, 1 pre-collision, 2 post-collision
    Q: float
    norm_w: float
    norm_z: float
    norm_n: float
    lam: float
    ratio_wQ: float
    bound_prop5: float
    bound_theorem: float


@dataclass(eq=False)
class _SampledSeries:
    """Per-segment sample arrays used by the verifiers."""

    t: list[np.ndarray]
    Q: list[np.ndarray]
    nw: list[np.ndarray]
    nz: list[float]
    nn: list[np.ndarray]


def _sample(series: TransportSeries, interior: int) -> _SampledSeries:
    ts, Qs, nws, nzs, nns = [], [], [], [], []
    finite = True
    with np.errstate(over="ignore", invalid="ignore"):
        for seg in series.segments:
            tt = np.linspace(seg.t0, seg.t1, interior + 2)
            dw = seg.w0[None, :] - (tt - seg.t0)[:, None] * seg.z[None, :]
            z2 = float(seg.z @ seg.z)
            q = dw @ seg.z
            nw = np.linalg.norm(dw, axis=1)
            ts.append(tt)
            Qs.append(q)
            nws.append(nw)
            nzs.append(math.sqrt(z2))
            nns.append(np.sqrt(nw * nw + z2))
            finite = finite and math.isfinite(z2) and bool(np.all(np.isfinite(q)))
    if not finite:
        # exponential expansion exhausted the double range; a silent pass on
        # inf/nan samples could mask a genuine violation
        raise SeriesRangeError(
            "covector magnitudes exceed the double-precision range; "
            "shorten the horizon")
    return _SampledSeries(ts, Qs, nws, nzs, nns)


def series_records(series: TransportSeries, interior: int = DEFAULT_INTERIOR_SAMPLES,
                   c0: float | None = None) -> list[DiagnosticsRecord]:
    """Sampled diagnostics along a series, event rows in pre/post pairs."""
    s = _sample(series, interior)
    w0 = float(np.linalg.norm(series.n0.w))
    q0 = lyapunov_Q(series.n0)
    n0 = series.n0_norm
    last = len(series.segments) - 1
    out: list[DiagnosticsRecord] = []
    for k in range(len(series.segments)):
        for i, t in enumerate(s.t[k]):
            flag = 0
            if i == 0 and k > 0:
                flag = 2
            elif i == len(s.t[k]) - 1 and k < last:
                flag = 1
            q = float(s.Q[k][i])
            nw = float(s.nw[k][i])
            nn = float(s.nn[k][i])
            ratio = nw / abs(q) if abs(q) > RATIO_SENTINEL_FLOOR else math.inf
            bound5 = w0 + abs(q0) * t / w0 if w0 > 0.0 else math.inf
            boundt = 1.0 + c0 * t if c0 is not None else math.nan
            out.append(DiagnosticsRecord(float(t), k, flag, q, nw, float(s.nz[k]),
                                         nn, nn / n0, ratio, bound5, boundt))
    return out


# ---------------------------------------------------------------------------
# Verification reports
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CheckResult:
    """Outcome of one verification check.

    ``margin`` is the worst slack, relative to the magnitude of the compared
    quantities: nonnegative means the property held with room to spare, and
    a check passes when ``margin >= -tol``.
    """

    name: str
    status: str                  # "pass" | "fail" | "skipped"
    margin: float | None = None
    t_worst: float | None = None

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status,
                "margin": self.margin, "t_worst": self.t_worst}


@dataclass(eq=False)
class VerificationReport:
    checks: list[CheckResult]
    tolerances: dict
    trajectory_meta: dict = field(default_factory=dict)

    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"checks": [c.as_dict() for c in self.checks],
                "tolerances": dict(self.tolerances),
                "trajectory": dict(self.trajectory_meta)}


def _result(name: str, tol: float, margin: float, t_worst: float) -> CheckResult:
    status = "pass" if margin >= -tol else "fail"
    return CheckResult(name, status, margin, t_worst)


def _meta(series: TransportSeries) -> dict:
    traj = series.trajectory
    return {"event_count": traj.event_count, "termination": traj.termination,
            "t_end": traj.t_end}


def verify_monotonicity(series: TransportSeries, tol: float = 1e-9,
                        w_continuity_tol: float = W_CONTINUITY_TOL,
                        interior: int = DEFAULT_INTERIOR_SAMPLES) -> VerificationReport:
    """Check the monotonicity laws of the transported covector.

    Always: Q non-increasing over the whole sample grid, |w| continuous at
    collisions (relative jump below ``w_continuity_tol``), |z| constant on
    free segments.  When ``Q(n_0) < 0`` additionally: Q strictly decreasing
    on segments by the exact decrement, |w| strictly increasing at the
    guaranteed rate, and |w|/|Q| globally non-increasing.  The strict checks
    are skipped (not failed) when ``Q(n_0) >= 0``.
    """
    s = _sample(series, interior)
    q0 = lyapunov_Q(series.n0)
    segs = series.segments

    # (a) Q non-increasing across the full grid, including event jumps
    worst_a, t_a = math.inf, 0.0
    prev_q = prev_scale = prev_t = None
    for k in range(len(segs)):
        scale_k = np.maximum(s.nz[k] * s.nw[k], RATIO_SENTINEL_FLOOR)
        for i in range(len(s.t[k])):
            q, sc, t = float(s.Q[k][i]), float(scale_k[i]), float(s.t[k][i])
            if prev_q is not None:
                m = (prev_q - q) / max(prev_scale, sc, RATIO_SENTINEL_FLOOR)
                if m < worst_a:
                    worst_a, t_a = m, t
            prev_q, prev_scale, prev_t = q, sc, t
    if not np.isfinite(worst_a):
        worst_a, t_a = 0.0, 0.0

    # (b) |w| continuity at events, read off the segment endpoints themselves
    worst_b, t_b = math.inf, 0.0
    for k in range(1, len(segs)):
        t_ev = segs[k].t0
        a = float(np.linalg.norm(segs[k - 1].covector_at(t_ev).w))
        b = float(np.linalg.norm(segs[k].w0))
        rel = abs(a - b) / max(a, b, RATIO_SENTINEL_FLOOR)
        m = w_continuity_tol - rel
        if m < worst_b:
            worst_b, t_b = m, t_ev
    if not np.isfinite(worst_b):
        worst_b, t_b = w_continuity_tol, 0.0

    # (c) |z| constant on segments (evaluated through the query path)
    worst_c, t_c = math.inf, 0.0
    for k, seg in enumerate(segs):
        ref = s.nz[k]
        for t in s.t[k]:
            dev = abs(float(np.linalg.norm(seg.covector_at(float(t)).z)) - ref)
            m = -dev / max(ref, RATIO_SENTINEL_FLOOR)
            if m < worst_c:
                worst_c, t_c = m, float(t)
    if not np.isfinite(worst_c):
        worst_c, t_c = 0.0, 0.0

    checks = [
        _result(CHECK_Q_NONINCREASING, tol, worst_a, t_a),
        _result(CHECK_W_CONTINUITY, 0.0, worst_b, t_b),
        _result(CHECK_Z_SEGMENT_CONSTANT, tol, worst_c, t_c),
    ]

    if q0 >= 0.0:
        checks += [CheckResult(CHECK_Q_STRICT_DECREASE, "skipped"),
                   CheckResult(CHECK_W_STRICT_INCREASE, "skipped"),
                   CheckResult(CHECK_RATIO_NONINCREASING, "skipped")]
    else:
        # (d) strict decrease on segments: exact decrement dt * |z|^2
        worst_d, t_d = math.inf, 0.0
        for k, seg in enumerate(segs):
            dt = seg.t1 - seg.t0
            if dt <= 0.0:
                continue
            z2 = s.nz[k] ** 2
            drop = float(s.Q[k][0] - s.Q[k][-1])
            sc = max(s.nz[k] * float(np.max(s.nw[k])), RATIO_SENTINEL_FLOOR)
            m = (drop - dt * z2) / sc
            if m < worst_d:
                worst_d, t_d = m, seg.t1
        if not np.isfinite(worst_d):
            worst_d, t_d = 0.0, 0.0

        # (e) |w| strictly increasing at the guaranteed minimum rate
        worst_e, t_e = math.inf, 0.0
        rate = 2.0 * abs(q0)
        prev_w2 = prev_t = None
        for k in range(len(segs)):
            for i in range(len(s.t[k])):
                w2, t = float(s.nw[k][i]) ** 2, float(s.t[k][i])
                if prev_w2 is not None:
                    sc = max(w2, prev_w2, RATIO_SENTINEL_FLOOR)
                    m = (w2 - prev_w2 - rate * (t - prev_t)) / sc
                    if m < worst_e:
                        worst_e, t_e = m, t
                prev_w2, prev_t = w2, t
        if not np.isfinite(worst_e):
            worst_e, t_e = 0.0, 0.0

        # (f) |w| / |Q| non-increasing across the full grid
        worst_f, t_f = math.inf, 0.0
        prev_r = None
        for k in range(len(segs)):
            for i in range(len(s.t[k])):
                q, nw, t = float(s.Q[k][i]), float(s.nw[k][i]), float(s.t[k][i])
                r = nw / max(abs(q), RATIO_SENTINEL_FLOOR)
                if prev_r is not None:
                    m = (prev_r - r) / max(prev_r, r, RATIO_SENTINEL_FLOOR)
                    if m < worst_f:
                        worst_f, t_f = m, t
                prev_r = r
        if not np.isfinite(worst_f):
            worst_f, t_f = 0.0, 0.0

        checks += [_result(CHECK_Q_STRICT_DECREASE, tol, worst_d, t_d),
                   _result(CHECK_W_STRICT_INCREASE, tol, worst_e, t_e),
                   _result(CHECK_RATIO_NONINCREASING, tol, worst_f, t_f)]

    return VerificationReport(checks, {"tol": tol, "w_continuity_tol": w_continuity_tol},
                              _meta(series))


def verify_growth(series: TransportSeries, c0: float, tol: float = 1e-9,
                  interior: int = DEFAULT_INTERIOR_SAMPLES) -> VerificationReport:
    """Check the linear growth bounds for a unit covector with ``Q(n_0) <= -c0``.

    ``|w_t| >= |w_0| + |Q(n_0)| t / |w_0|`` at every sample, and
    ``lambda_t >= 1 + c0 t`` at samples with ``t >= 1/c0``.  Precondition
    violations raise :class:`ConfigError` rather than failing a check.
    """
    if not c0 > 0.0:
        raise ConfigError("growth verification needs c0 > 0")
    q0 = lyapunov_Q(series.n0)
    if q0 > -c0 + 1e-12:
        raise ConfigError(f"growth verification needs Q(n0) <= -c0, got Q(n0) = {q0}")
    if abs(series.n0_norm - 1.0) > 1e-9:
        raise ConfigError("growth verification needs a unit initial covector")
    w0 = float(np.linalg.norm(series.n0.w))

    s = _sample(series, interior)
    worst_g, t_g = math.inf, 0.0
    worst_h, t_h = math.inf, 0.0
    t_min = 1.0 / c0
    for k in range(len(series.segments)):
        tt, nw, nn = s.t[k], s.nw[k], s.nn[k]
        bound5 = w0 + abs(q0) * tt / w0
        m5 = (nw - bound5) / np.maximum(bound5, nw)
        i = int(np.argmin(m5))
        if float(m5[i]) < worst_g:
            worst_g, t_g = float(m5[i]), float(tt[i])
        mask = tt >= t_min - 1e-12
        if np.any(mask):
            lam = nn[mask] / series.n0_norm
            boundt = 1.0 + c0 * tt[mask]
            mh = (lam - boundt) / boundt
            j = int(np.argmin(mh))
            if float(mh[j]) < worst_h:
                worst_h, t_h = float(mh[j]), float(tt[mask][j])

    checks = [_result(CHECK_W_LINEAR_GROWTH, tol, worst_g, t_g)]
    if np.isfinite(worst_h):
        checks.append(_result(CHECK_LAMBDA_LINEAR_GROWTH, tol, worst_h, t_h))
    else:
        checks.append(CheckResult(CHECK_LAMBDA_LINEAR_GROWTH, "skipped"))
    return VerificationReport(checks, {"tol": tol, "c0": c0}, _meta(series))


def q_decrement_breakdown(series: TransportSeries) -> dict:
    """Book-keeping of the total Lyapunov decrease along a series.

    The drop of Q from start to end must equal the sum of the per-segment
    decrements ``dt |z|^2`` and the per-collision closed-form decrements.
    """
    q_start = lyapunov_Q(series.segments[0].covector_at(series.segments[0].t0))
    last = series.segments[-1]
    q_end = lyapunov_Q(last.covector_at(last.t1))
    free = [float((seg.t1 - seg.t0) * (seg.z @ seg.z)) for seg in series.segments]
    collisions = [j.q_drop_closed_form for j in series.jumps]
    total = q_start - q_end
    return {"total_drop": total, "free_drops": free, "collision_drops": collisions,
            "residual": total - (sum(free) + sum(collisions))}


# ---------------------------------------------------------------------------
# Covector sampling
# ---------------------------------------------------------------------------

def _complement_basis(v: np.ndarray) -> np.ndarray:
    """(d-1, d) row-orthonormal basis of the hyperplane orthogonal to v."""
    d = v.shape[0]
    m = np.concatenate([v[:, None] / np.linalg.norm(v), np.eye(d)], axis=1)
    q, _ = np.linalg.qr(m)
    return q[:, 1:d].T


def _unit_in_span(basis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    while True:
        coeffs = rng.standard_normal(basis.shape[0])
        x = basis.T @ coeffs
        n = np.linalg.norm(x)
        if n > 1e-12:
            return x / n


def sample_covector_uniform(v: np.ndarray, rng: np.random.Generator) -> Covector:
    """Unit covector with independent uniform directions in ``v^perp``.

    The component norms are fixed at ``1/sqrt(2)`` each, so the Lyapunov
    value lies in ``[-1/2, 1/2]`` with the extremes at (anti)parallel
    components.
    """
    basis = _complement_basis(np.asarray(v, dtype=float))
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    z = inv_sqrt2 * _unit_in_span(basis, rng)
    w = inv_sqrt2 * _unit_in_span(basis, rng)
    return Covector(z, w)


def sample_covector_with_Q_bound(v: np.ndarray, c0: float, rng_seed) -> Covector:
    """Unit covector in ``v^perp`` with ``Q <= -c0``, deterministic per seed.

    Rejection sampling from the rotation-invariant product-of-spheres
    distribution; ``c0`` must lie in ``(0, 1/2]`` (a unit covector has
    ``|Q| <= |z| |w| <= 1/2``).  At ``c0 = 1/2`` the equality case
    ``w = -z`` is forced up to rotation.
    """
    if not 0.0 < c0 <= 0.5 + 1e-12:
        raise InfeasibleCovectorError(
            f"c0 = {c0} unattainable: a unit covector has |Q| <= 1/2")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) \
        else np.random.default_rng(rng_seed)
    v = np.asarray(v, dtype=float)
    basis = _complement_basis(v)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    if c0 >= 0.5 - 1e-12:
        e = _unit_in_span(basis, rng)
        return Covector(inv_sqrt2 * e, -inv_sqrt2 * e)
    for _ in range(100_000):
        z = inv_sqrt2 * _unit_in_span(basis, rng)
        w = inv_sqrt2 * _unit_in_span(basis, rng)
        if float(z @ w) <= -c0:
            return Covector(z, w)
    raise InfeasibleCovectorError(
        f"rejection sampling did not reach Q <= -{c0}; bound too close to 1/2?")
