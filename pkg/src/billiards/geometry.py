"""Billiard domain geometry.

A domain is a flat ambient space (torus or box) minus a list of convex
scatterers (spheres, cylinders, halfspaces).  This module provides boundary
normals, curvature operators (second fundamental forms), and the linear
operators used by collision transport: the reflection across the boundary
tangent hyperplane and the two mutually adjoint parallel projections between
the velocity-transverse hyperplane and the boundary tangent plane.

Conventions
-----------
* Vectors are 1-d ``numpy`` float arrays of length ``d`` (``d >= 2``).
* The boundary normal ``nu(q)`` is the unit vector pointing from the
  scatterer's solid part into the billiard region.
* Curvature operators are symmetric positive semi-definite ``d x d``
  matrices that annihilate ``nu(q)``; storing them as full matrices keeps
  operator compositions plain matrix products.
* Torus positions live in the fundamental domain ``[0, L)^d`` with the
  minimal-image convention for displacements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryMismatchError, DomainConstructionError, GrazingSingularityError
from .tolerances import EPS_GRAZE, EPS_SURFACE_FACTOR

Vec = np.ndarray

# Lattice enumerations are (3 or 5)^d arrays; beyond this dimension a custom
# cylinder must supply its transverse image offsets explicitly.
_MAX_ENUM_DIM = 12


def as_vec(x, d: int | None = None, name: str = "vector") -> Vec:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DomainConstructionError(f"{name} must be one-dimensional, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise DomainConstructionError(f"{name} must have dimension {d}, got {v.shape[0]}")
    return v


def _unit(x: Vec, name: str = "vector") -> Vec:
    n = float(np.linalg.norm(x))
    if n == 0.0:
        raise DomainConstructionError(f"{name} must be nonzero")
    return x / n


def _lattice_steps(d: int, reach: int = 1) -> np.ndarray:
    """Integer offsets {-reach..reach}^d as a float array, one row per offset."""
    if d > _MAX_ENUM_DIM:
        raise DomainConstructionError(
            f"lattice enumeration infeasible in dimension {d} (max {_MAX_ENUM_DIM})"
        )
    rng = range(-reach, reach + 1)
    return np.array(list(itertools.product(rng, repeat=d)), dtype=float)


# ---------------------------------------------------------------------------
# Ambient spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Torus:
    """Flat torus of equal side length ``side`` in every coordinate."""

    side: float

    def __post_init__(self):
        if not self.side > 0.0:
            raise DomainConstructionError("torus side length must be positive")

    periodic = True

    @property
    def length_scale(self) -> float:
        return self.side

    def wrap(self, q: Vec) -> Vec:
        return np.mod(q, self.side)

    def min_image(self, dq: Vec) -> Vec:
        return dq - self.side * np.round(dq / self.side)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[0, S_1] x ... x [0, S_d]``; no periodic wrap.

    A box does not confine the particle by itself: walls must be supplied as
    halfspace scatterers, and a trajectory that leaves the box terminates
    with an escape status.
    """

    sides: tuple[float, ...]

    def __post_init__(self):
        if not all(s > 0.0 for s in self.sides):
            raise DomainConstructionError("box side lengths must be positive")

    periodic = False

    @property
    def length_scale(self) -> float:
        return min(self.sides)

    def wrap(self, q: Vec) -> Vec:
        return q

    def min_image(self, dq: Vec) -> Vec:
        return dq

    def contains(self, q: Vec, slack: float = 0.0) -> bool:
        s = np.asarray(self.sides)
        return bool(np.all(q >= -slack) and np.all(q <= s + slack))

    def exit_time(self, q: Vec, v: Vec, slack: float = 0.0) -> float:
        """First time ``q + t v`` leaves the box inflated by ``slack``."""
        s = np.asarray(self.sides)
        t_exit = np.inf
        for c in range(len(self.sides)):
            if v[c] > 0.0:
                t_exit = min(t_exit, (s[c] + slack - q[c]) / v[c])
            elif v[c] < 0.0:
                t_exit = min(t_exit, (-slack - q[c]) / v[c])
        return float(t_exit)


Ambient = Torus | Box


# ---------------------------------------------------------------------------
# Scatterers
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Sphere:
    """Solid ball removed from the domain; boundary curvature 1/radius."""

    center: Vec
    radius: float

    kind = "sphere"

    def __post_init__(self):
        self.center = as_vec(self.center, name="sphere center")
        if not self.radius > 0.0:
            raise DomainConstructionError("sphere radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


@dataclass(eq=False)
class Cylinder:
    """Solid cylinder: points within ``radius`` of an affine subspace.

    ``axis_directions`` is a ``(k, d)`` row-orthonormal array spanning the
    flat subspace (1 <= k <= d-2).  ``radius`` is the Euclidean distance
    from the axis subspace to the boundary.  ``image_deltas`` optionally
    pins the transverse lattice offsets used for periodic image searches;
    when omitted they are enumerated from the cubic lattice at domain
    construction.
    """

    axis_point: Vec
    axis_directions: np.ndarray
    radius: float
    image_deltas: np.ndarray | None = None
    projector: np.ndarray = field(init=False, repr=False)

    kind = "cylinder"

    def __post_init__(self):
        self.axis_point = as_vec(self.axis_point, name="cylinder axis point")
        a = np.atleast_2d(np.asarray(self.axis_directions, dtype=float))
        d = self.axis_point.shape[0]
        if a.shape[1] != d:
            raise DomainConstructionError("cylinder axis directions must match the ambient dimension")
        k = a.shape[0]
        if not 1 <= k <= d - 2:
            raise DomainConstructionError(f"cylinder needs 1..{d - 2} axis directions, got {k}")
        if not np.allclose(a @ a.T, np.eye(k), atol=1e-8):
            raise DomainConstructionError("cylinder axis directions must be orthonormal")
        if not self.radius > 0.0:
            raise DomainConstructionError("cylinder radius must be positive")
        self.axis_directions = a
        self.projector = np.eye(d) - a.T @ a

    @property
    def dim(self) -> int:
        return self.axis_point.shape[0]

    def transverse(self, x: Vec) -> Vec:
        """Component of ``x`` orthogonal to the axis subspace."""
        return x - self.axis_directions.T @ (self.axis_directions @ x)


@dataclass(eq=False)
class Halfspace:
    """Solid halfspace on the side of the plane opposite ``plane_normal``.

    Flat wall: the curvature operator is zero, still semi-dispersing.
    Only meaningful in a box ambient (a halfspace always wraps on a torus).
    """

    plane_point: Vec
    plane_normal: Vec

    kind = "halfspace"

    def __post_init__(self):
        self.plane_point = as_vec(self.plane_point, name="halfspace plane point")
        self.plane_normal = _unit(as_vec(self.plane_normal, name="halfspace plane normal"),
                                  name="halfspace plane normal")

    @property
    def dim(self) -> int:
        return self.plane_point.shape[0]


Scatterer = Sphere | Cylinder | Halfspace


# ---------------------------------------------------------------------------
# Curvature operator
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CurvatureOperator:
    """Second fundamental form of a scatterer boundary at a point.

    Symmetric positive semi-definite matrix acting on the tangent hyperplane
    and annihilating the boundary normal.
    """

    matrix: np.ndarray

    def apply(self, x: Vec) -> Vec:
        return self.matrix @ x

    def quadratic_form(self, x: Vec) -> float:
        return float(x @ self.matrix @ x)


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Domain:
    """Ambient space minus a list of pairwise disjoint convex scatterers.

    Construction validates dimensions, torus self-wrap, and pairwise
    disjointness where it is decidable.  Transversal cylinders (hard-ball
    pair cylinders) are exempt from the disjointness check: their overlaps
    are the measure-zero multiple-collision corners, which the dynamics
    treats as singular.
    """

    d: int
    ambient: Ambient
    scatterers: list[Scatterer]
    labels: list[str] | None = None

    def __post_init__(self):
        if self.d < 2:
            raise DomainConstructionError("domain dimension must be at least 2")
        if isinstance(self.ambient, Box) and len(self.ambient.sides) != self.d:
            raise DomainConstructionError("box side count must equal the domain dimension")
        for s in self.scatterers:
            if s.dim != self.d:
                raise DomainConstructionError(
                    f"scatterer dimension {s.dim} does not match domain dimension {self.d}")
        if self.labels is not None and len(self.labels) != len(self.scatterers):
            raise DomainConstructionError("labels must match the number of scatterers")
        self._image_deltas = [self._build_image_deltas(s) for s in self.scatterers]
        self._check_self_wrap()
        self._check_disjoint()

    # -- periodic image bookkeeping -------------------------------------

    def _build_image_deltas(self, s: Scatterer) -> np.ndarray | None:
        """Transverse offsets of the nearby periodic images of ``s``.

        One row per distinct image; the zero row is always present.  ``None``
        for halfspaces (never periodic).
        """
        if isinstance(s, Halfspace):
            return None
        if not self.ambient.periodic:
            return np.zeros((1, self.d))
        L = self.ambient.side
        if isinstance(s, Cylinder):
            if s.image_deltas is not None:
                deltas = np.asarray(s.image_deltas, dtype=float)
            else:
                deltas = _lattice_steps(self.d) * L @ s.projector.T
            # collapse offsets that differ only along the axis subspace
            key = np.round(deltas / (1e-9 * L)).astype(np.int64)
            _, idx = np.unique(key, axis=0, return_index=True)
            return deltas[np.sort(idx)]
        return _lattice_steps(self.d) * L

    # -- construction-time invariants ------------------------------------

    def _check_self_wrap(self):
        if not self.ambient.periodic:
            return
        L = self.ambient.side
        for i, s in enumerate(self.scatterers):
            if isinstance(s, Halfspace):
                raise DomainConstructionError("halfspace scatterers require a box ambient")
            if isinstance(s, Sphere):
                if not 2.0 * s.radius < L:
                    raise DomainConstructionError(
                        f"scatterer {i}: sphere of diameter {2 * s.radius} wraps on torus of side {L}")
            else:
                deltas = self._image_deltas[i]
                norms = np.linalg.norm(deltas, axis=1)
                nonzero = norms[norms > 1e-9 * L]
                if nonzero.size and not nonzero.min() > 2.0 * s.radius:
                    raise DomainConstructionError(
                        f"scatterer {i}: cylinder wraps onto its own periodic image")

    def _check_disjoint(self):
        for i, j in itertools.combinations(range(len(self.scatterers)), 2):
            a, b = self.scatterers[i], self.scatterers[j]
            if not self._pair_disjoint(i, a, j, b):
                raise DomainConstructionError(f"scatterers {i} and {j} have intersecting solid parts")

    def _pair_disjoint(self, i: int, a: Scatterer, j: int, b: Scatterer) -> bool:
        if isinstance(a, Halfspace) and isinstance(b, Halfspace):
            # two halfspaces are disjoint only when antiparallel with a gap
            if not np.allclose(a.plane_normal, -b.plane_normal, atol=1e-9):
                return False
            return float((b.plane_point - a.plane_point) @ a.plane_normal) > 0.0
        if isinstance(a, Halfspace) or isinstance(b, Halfspace):
            h, s, si = (a, b, j) if isinstance(a, Halfspace) else (b, a, i)
            if isinstance(s, Sphere):
                return float((s.center - h.plane_point) @ h.plane_normal) > s.radius
            if np.max(np.abs(s.axis_directions @ h.plane_normal)) > 1e-12:
                return False  # axis runs into the plane
            gap = float((s.axis_point - h.plane_point) @ h.plane_normal)
            return gap > s.radius
        if isinstance(a, Sphere) and isinstance(b, Sphere):
            dist = np.linalg.norm(self.min_image(a.center - b.center))
            return float(dist) > a.radius + b.radius
        if isinstance(a, Sphere) or isinstance(b, Sphere):
            sph, cyl, ci = (a, b, j) if isinstance(a, Sphere) else (b, a, i)
            xi = cyl.transverse(self.min_image(sph.center - cyl.axis_point))
            dist = self._reduced_transverse_norm(xi, self._image_deltas[ci])
            return dist > sph.radius + cyl.radius
        # both cylinders: decidable only when the axis subspaces coincide
        if np.allclose(a.projector, b.projector, atol=1e-10):
            xi = a.transverse(self.min_image(b.axis_point - a.axis_point))
            dist = self._reduced_transverse_norm(xi, self._image_deltas[i])
            return dist > a.radius + b.radius
        return True  # transversal cylinders: overlaps are corner sets, allowed

    @staticmethod
    def _reduced_transverse_norm(xi: Vec, deltas: np.ndarray) -> float:
        return float(np.min(np.linalg.norm(xi[None, :] - deltas, axis=1)))

    # -- basic queries ----------------------------------------------------

    @property
    def length_scale(self) -> float:
        return self.ambient.length_scale

    @property
    def eps_surface(self) -> float:
        return EPS_SURFACE_FACTOR * self.length_scale

    def wrap(self, q: Vec) -> Vec:
        return self.ambient.wrap(q)

    def min_image(self, dq: Vec) -> Vec:
        return self.ambient.min_image(dq)

    def boundary_offset(self, index: int, q: Vec) -> Vec:
        """Transverse vector from the nearest image of scatterer ``index`` to ``q``.

        For a halfspace this is the signed height times the plane normal.
        """
        s = self.scatterers[index]
        if isinstance(s, Halfspace):
            h = float((q - s.plane_point) @ s.plane_normal)
            return h * s.plane_normal
        ref = s.center if isinstance(s, Sphere) else s.axis_point
        xi = self.min_image(q - ref)
        if isinstance(s, Cylinder):
            # reduce modulo the projected lattice: the per-coordinate minimal
            # image need not minimize the transverse distance
            xi = s.transverse(xi)
            deltas = self._image_deltas[index]
            k = int(np.argmin(np.linalg.norm(xi[None, :] - deltas, axis=1)))
            xi = xi - deltas[k]
        return xi

    def signed_distance(self, index: int, q: Vec) -> float:
        """Distance from ``q`` to scatterer ``index``; positive in the billiard region."""
        s = self.scatterers[index]
        if isinstance(s, Halfspace):
            return float((q - s.plane_point) @ s.plane_normal)
        return float(np.linalg.norm(self.boundary_offset(index, q))) - s.radius

    def contains(self, q: Vec, slack: float | None = None) -> bool:
        """True when ``q`` lies in the billiard region (outside every solid part)."""
        slack = self.eps_surface if slack is None else slack
        inside_ambient = True
        if isinstance(self.ambient, Box):
            inside_ambient = self.ambient.contains(q, slack)
        return inside_ambient and all(
            self.signed_distance(i, q) >= -slack for i in range(len(self.scatterers)))


# ---------------------------------------------------------------------------
# Boundary data
# ---------------------------------------------------------------------------

def normal_at(domain: Domain, scatterer_index: int, q: Vec) -> Vec:
    """Unit boundary normal at ``q`` pointing into the billiard region.

    Raises
    ------
    BoundaryMismatchError
        If ``q`` is not on the scatterer boundary within the surface tolerance.
    """
    s = domain.scatterers[scatterer_index]
    sd = domain.signed_distance(scatterer_index, q)
    if abs(sd) > domain.eps_surface:
        raise BoundaryMismatchError(
            f"point is off the boundary of scatterer {scatterer_index} by {sd:.3e}")
    if isinstance(s, Halfspace):
        return s.plane_normal.copy()
    xi = domain.boundary_offset(scatterer_index, q)
    return xi / np.linalg.norm(xi)


def curvature_at(domain: Domain, scatterer_index: int, q: Vec) -> CurvatureOperator:
    """Curvature operator of the boundary at ``q``.

    Sphere: (1/r) times the projector onto the tangent hyperplane.
    Cylinder: (1/r) times the projector onto the complement of the axis
    subspace and the normal (eigenvalue 0 along the axis).
    Halfspace: zero.
    """
    s = domain.scatterers[scatterer_index]
    d = domain.d
    if isinstance(s, Halfspace):
        # membership check kept for parity with the curved cases
        normal_at(domain, scatterer_index, q)
        return CurvatureOperator(np.zeros((d, d)))
    nu = normal_at(domain, scatterer_index, q)
    mat = np.eye(d) - np.outer(nu, nu)
    if isinstance(s, Cylinder):
        a = s.axis_directions
        mat -= a.T @ a
    return CurvatureOperator(mat / s.radius)


def project_to_boundary(domain: Domain, scatterer_index: int, q: Vec) -> Vec:
    """Nearest boundary point of scatterer ``index`` to a point near it."""
    s = domain.scatterers[scatterer_index]
    if isinstance(s, Halfspace):
        h = float((q - s.plane_point) @ s.plane_normal)
        return q - h * s.plane_normal
    xi = domain.boundary_offset(scatterer_index, q)
    n = float(np.linalg.norm(xi))
    if n == 0.0:
        raise BoundaryMismatchError("cannot project the axis/center onto the boundary")
    return q + (s.radius / n - 1.0) * xi


# ---------------------------------------------------------------------------
# Collision-transport operators
# ---------------------------------------------------------------------------

def reflect_operator(nu: Vec) -> np.ndarray:
    """Orthogonal reflection across the tangent hyperplane of ``nu``.

    Involution and isometry: fixes vectors orthogonal to ``nu`` and flips
    ``nu`` itself.
    """
    return np.eye(nu.shape[0]) - 2.0 * np.outer(nu, nu)


def tangent_projection(v: Vec, nu: Vec, eps_graze: float = EPS_GRAZE) -> np.ndarray:
    """Projection along ``v`` from the hyperplane ``v^perp`` onto the boundary
    tangent plane ``nu^perp``.

    Applied to ``x``: ``x - (<x, nu>/<v, nu>) v``; the output is orthogonal
    to ``nu``.  Blows up at grazing incidence.
    """
    vn = float(v @ nu)
    if abs(vn) < eps_graze:
        raise GrazingSingularityError("tangent projection undefined at grazing incidence")
    return np.eye(v.shape[0]) - np.outer(v, nu) / vn


def transverse_projection(v: Vec, nu: Vec, eps_graze: float = EPS_GRAZE) -> np.ndarray:
    """Projection along ``nu`` from the boundary tangent plane onto ``v^perp``.

    Adjoint of :func:`tangent_projection`: ``<V x, y> == <x, V* y>`` for
    ``x`` in ``v^perp`` and ``y`` tangent to the boundary.
    """
    return tangent_projection(v, nu, eps_graze).T


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_sinai(d: int, r: float, L: float, centers: list) -> Domain:
    """Torus of side ``L`` minus spheres of radius ``r`` at ``centers``."""
    if not 0.0 < 2.0 * r < L:
        raise DomainConstructionError(f"need 0 < 2r < L, got r={r}, L={L}")
    spheres = [Sphere(as_vec(c, d, "sphere center"), r) for c in centers]
    return Domain(d, Torus(L), spheres)


def hardball_pairs(N: int) -> list[tuple[int, int]]:
    """Ball index pairs in the scatterer order used by :func:`build_hardball_gas`."""
    return list(itertools.combinations(range(N), 2))


def _hardball_cylinder(N: int, d: int, i: int, j: int, r: float, L: float) -> Cylinder:
    """Pair-collision cylinder for balls ``i`` and ``j`` in Tor^(N*d).

    The solid part is the set of configurations with torus distance between
    balls i and j below ``2r``.  In the Euclidean configuration-space metric
    that is a cylinder of transverse radius ``sqrt(2) * r`` around the
    subspace where both balls translate together (dimension ``(N-1) * d``).
    """
    dim = N * d
    axes = []
    for k in range(N):
        if k in (i, j):
            continue
        for c in range(d):
            e = np.zeros(dim)
            e[k * d + c] = 1.0
            axes.append(e)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for c in range(d):
        e = np.zeros(dim)
        e[i * d + c] = inv_sqrt2
        e[j * d + c] = inv_sqrt2
        axes.append(e)
    # transverse lattice offsets: images indexed by m = k_i - k_j in {-2..2}^d
    ms = _lattice_steps(d, reach=2)
    deltas = np.zeros((ms.shape[0], dim))
    deltas[:, i * d:(i + 1) * d] = 0.5 * L * ms
    deltas[:, j * d:(j + 1) * d] = -0.5 * L * ms
    return Cylinder(np.zeros(dim), np.array(axes), np.sqrt(2.0) * r, image_deltas=deltas)


def build_hardball_gas(N: int, d: int, r: float, L: float) -> Domain:
    """Configuration-space billiard for ``N`` unit-speed hard balls on Tor^d.

    One cylindrical scatterer per unordered ball pair; contact happens when
    the pair's torus distance reaches ``2r``.  The configuration space is the
    unreduced Tor^(N*d) (no center-of-mass or momentum reduction).
    """
    if N < 2 or d < 2:
        raise DomainConstructionError("need N >= 2 balls in dimension d >= 2")
    if not 0.0 < 2.0 * r < L / 2.0:
        raise DomainConstructionError(f"need 0 < 2r < L/2, got r={r}, L={L}")
    pairs = hardball_pairs(N)
    cylinders = [_hardball_cylinder(N, d, i, j, r, L) for i, j in pairs]
    labels = [f"pair_{i}_{j}" for i, j in pairs]
    return Domain(N * d, Torus(L), cylinders, labels=labels)


def reduce_pair_to_sinai(d: int, r: float, L: float) -> Domain:
    """Relative-coordinate reduction of two equal balls: torus minus one
    sphere of radius ``2r`` at the origin."""
    if not 0.0 < 4.0 * r < L:
        raise DomainConstructionError(f"need 0 < 4r < L, got r={r}, L={L}")
    return Domain(d, Torus(L), [Sphere(np.zeros(d), 2.0 * r)])
