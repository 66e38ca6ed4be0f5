"""Shape and portion evaluation: surface sampling, nearest neighbours,
point-to-point ICP, Chamfer distance and MAPE.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import IllConditionedError, InvalidInputError

DEFAULT_SAMPLES = 100_000
DEFAULT_MAX_ITERATIONS = 50
DEFAULT_CONVERGENCE_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    source: str = ""

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(p)):
            raise InvalidInputError("point coordinates must be finite")
        p.flags.writeable = False
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)


def _pts(cloud):
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points):
        return _pts(points) @ self.rotation.T + self.translation

    def compose(self, first):
        """Transform equivalent to applying ``first`` and then ``self``."""
        return RigidTransform(self.rotation @ first.rotation,
                              self.rotation @ first.translation + self.translation)

    def inverse(self):
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def is_valid(self, tol=1e-9):
        r = self.rotation
        return (np.allclose(r.T @ r, np.eye(3), atol=tol, rtol=0)
                and abs(np.linalg.det(r) - 1.0) <= tol)


def rotation_angle(rotation):
    """Geodesic angle (radians) of a rotation matrix."""
    c = (np.trace(rotation) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def sample_surface(mesh, n, seed=0):
    """Area-weighted uniform samples on a triangle mesh."""
    if mesh.is_empty():
        raise InvalidInputError("cannot sample an empty mesh")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    v = mesh.vertices
    t = mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    total = areas.sum()
    if not total > 0:
        raise InvalidInputError("mesh has zero surface area")
    tri = rng.choice(len(t), size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    u = 1.0 - r1
    w = r1 * r2
    pts = u[:, None] * a[tri] + (r1 - w)[:, None] * b[tri] + w[:, None] * c[tri]
    return PointCloud(pts, source=mesh.name)


def nearest_neighbors(queries, target):
    """``(distances, indices)`` of each query's nearest target point (exact kd-tree)."""
    tgt = _pts(target)
    if len(tgt) == 0:
        raise InvalidInputError("target cloud is empty")
    return cKDTree(tgt).query(_pts(queries), k=1)


def nearest_distances(queries, target):
    return nearest_neighbors(queries, target)[0]


def best_fit_transform(src, dst):
    """Least-squares rotation and translation taking ``src`` onto ``dst``.

    SVD of the cross-covariance; the last singular direction is flipped
    when needed so that det(R) = +1.
    """
    src = _pts(src)
    dst = _pts(dst)
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    h = (src - mu_s).T @ (dst - mu_d)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(r, mu_d - r @ mu_s)


def _check_conditioning(points):
    if len(points) < 3:
        raise IllConditionedError(f"need at least 3 points, got {len(points)}")
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[0] == 0 or s[1] <= 1e-9 * s[0]:
        raise IllConditionedError("points are collinear or coincident")


def icp_register(source, target, max_iterations=DEFAULT_MAX_ITERATIONS,
                 convergence_eps=DEFAULT_CONVERGENCE_EPS, center=True, trim_fraction=0.0,
                 return_history=False):
    """Point-to-point ICP from ``source`` onto ``target``.

    Starts from the identity, or from centroid alignment when ``center``.
    Each iteration matches every (untrimmed) source point to its nearest
    target point and solves the rigid fit. Stops when the RMSE improves by
    less than ``convergence_eps`` or after ``max_iterations`` fits.

    Returns ``(transform, rmse, iterations)``; with ``return_history`` a
    fourth item lists the correspondence RMSE seen at each iteration.
    """
    src = _pts(source)
    tgt = _pts(target)
    _check_conditioning(src)
    if len(tgt) == 0:
        raise InvalidInputError("target cloud is empty")
    if not 0.0 <= trim_fraction < 1.0:
        raise InvalidInputError("trim_fraction must lie in [0, 1)")
    tree = cKDTree(tgt)

    current = RigidTransform.identity()
    if center:
        current = RigidTransform(np.eye(3), tgt.mean(axis=0) - src.mean(axis=0))
    moved = current.apply(src)

    def correspond(pts):
        dist, idx = tree.query(pts, k=1)
        keep = np.arange(len(pts))
        if trim_fraction > 0:
            n_keep = max(3, int(round(len(pts) * (1.0 - trim_fraction))))
            keep = np.argsort(dist, kind="stable")[:n_keep]
        return dist, idx, keep

    dist, idx, keep = correspond(moved)
    rmse = float(np.sqrt(np.mean(dist[keep] ** 2)))
    history = [rmse]
    iterations = 0
    while iterations < max_iterations and rmse > 0.0:
        step = best_fit_transform(moved[keep], tgt[idx[keep]])
        current = step.compose(current)
        moved = current.apply(src)
        iterations += 1
        dist, idx, keep = correspond(moved)
        new_rmse = float(np.sqrt(np.mean(dist[keep] ** 2)))
        history.append(new_rmse)
        improvement = rmse - new_rmse
        rmse = new_rmse
        if improvement < convergence_eps:
            break
    if return_history:
        return current, rmse, iterations, history
    return current, rmse, iterations


def chamfer_distance(a, b):
    """Mean squared nearest distance a->b plus mean squared nearest distance b->a."""
    pa = _pts(a)
    pb = _pts(b)
    if len(pa) == 0 or len(pb) == 0:
        raise InvalidInputError("chamfer distance needs two nonempty clouds")
    d_ab = cKDTree(pb).query(pa, k=1)[0]
    d_ba = cKDTree(pa).query(pb, k=1)[0]
    return float(np.mean(d_ab ** 2) + np.mean(d_ba ** 2))


def mape(v_true, v_pred):
    """Mean absolute percentage error, in percent."""
    t = np.asarray(v_true, dtype=np.float64).ravel()
    p = np.asarray(v_pred, dtype=np.float64).ravel()
    if t.size == 0 or t.size != p.size:
        raise InvalidInputError(f"need equal, nonzero lengths (got {t.size} and {p.size})")
    if np.any(~(t > 0)):
        raise InvalidInputError("true volumes must be positive")
    return float(np.mean(np.abs((t - p) / t)) * 100.0)


@dataclass
class EvalResult:
    chamfer_with_transform: float
    chamfer_without_transform: float
    icp_rmse: float
    iterations_used: int
    transform: RigidTransform = field(default_factory=RigidTransform.identity)

    @property
    def consistent(self):
        """Soft check: registration should not make the fit worse."""
        return self.chamfer_with_transform <= self.chamfer_without_transform

    def to_dict(self):
        return {
            "chamfer_with_transform": self.chamfer_with_transform,
            "chamfer_without_transform": self.chamfer_without_transform,
            "chamfer_with_transform_e3": self.chamfer_with_transform * 1e3,
            "chamfer_without_transform_e3": self.chamfer_without_transform * 1e3,
            "transform": self.transform.matrix().tolist(),
            "icp_rmse": self.icp_rmse,
            "iterations_used": self.iterations_used,
        }


def evaluate_pair(ours, ground_truth, samples=DEFAULT_SAMPLES, seed=0, max_iterations=DEFAULT_MAX_ITERATIONS,
                  convergence_eps=DEFAULT_CONVERGENCE_EPS, center=True, trim_fraction=0.0):
    """Chamfer distance of ``ours`` against ``ground_truth`` before and after ICP.

    Both meshes are sampled with the same seed.
    """
    a = sample_surface(ours, samples, seed)
    b = sample_surface(ground_truth, samples, seed)
    without = chamfer_distance(a, b)
    tf, rmse, iters = icp_register(a, b, max_iterations=max_iterations, convergence_eps=convergence_eps,
                                   center=center, trim_fraction=trim_fraction)
    with_tf = chamfer_distance(tf.apply(a), b)
    return EvalResult(with_tf, without, rmse, iters, tf)
