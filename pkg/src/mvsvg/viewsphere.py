"""Camera-pose geometry on the viewing sphere.

Directions, angular distances, deterministic sphere sampling, the
nearest-neighbor pseudo-sequential traversal with 2-opt refinement,
and per-view reference selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_K = 6
DEFAULT_TAU_DEG = 75.0

# slack for inclusive angular-threshold comparisons near the boundary
_TAU_EPS = 1e-12


class InvalidPoseError(ValueError):
    """A pose field is non-finite or out of range."""


class TraversalError(ValueError):
    """A traversal input is not a valid permutation / start id."""


@dataclass(frozen=True)
class ViewPose:
    """A camera direction on the unit sphere.

    yaw_deg is the horizontal rotation, pitch_deg the vertical one;
    radius is a render distance only and never enters angular math.
    """

    id: int
    yaw_deg: float
    pitch_deg: float
    radius: float = 1.0

    def __post_init__(self):
        for v in (self.yaw_deg, self.pitch_deg, self.radius):
            if not math.isfinite(v):
                raise InvalidPoseError(f"non-finite pose field in view {self.id}")
        if not -180.0 <= self.yaw_deg <= 180.0:
            raise InvalidPoseError(f"yaw {self.yaw_deg} outside [-180, 180]")
        if not -90.0 <= self.pitch_deg <= 90.0:
            raise InvalidPoseError(f"pitch {self.pitch_deg} outside [-90, 90]")
        if self.radius <= 0:
            raise InvalidPoseError(f"radius {self.radius} must be positive")


@dataclass
class TraversalPlan:
    """Visiting order over views plus per-view reference sets."""

    order: list[int]
    references: dict[int, list[int]]
    k: int = DEFAULT_K
    tau_deg: float = DEFAULT_TAU_DEG


def view_direction(pose: ViewPose) -> np.ndarray:
    """Unit viewing direction [cos(pitch)cos(yaw), sin(pitch), cos(pitch)sin(yaw)]."""
    psi = math.radians(pose.yaw_deg)
    phi = math.radians(pose.pitch_deg)
    u = np.array([math.cos(phi) * math.cos(psi),
                  math.sin(phi),
                  math.cos(phi) * math.sin(psi)])
    return u


def angular_distance(a: ViewPose, b: ViewPose) -> float:
    """Great-circle distance between two view directions, in radians.

    Uses atan2(|u x v|, clip(u.v)) which stays stable and finite when the
    directions are nearly parallel or antiparallel.
    """
    ua = view_direction(a)
    ub = view_direction(b)
    cross = np.cross(ua, ub)
    dot = float(np.clip(np.dot(ua, ub), -1.0, 1.0))
    return math.atan2(float(np.linalg.norm(cross)), dot)


def directions_matrix(views: list[ViewPose]) -> np.ndarray:
    yaw = np.radians([v.yaw_deg for v in views])
    pitch = np.radians([v.pitch_deg for v in views])
    return np.stack([np.cos(pitch) * np.cos(yaw),
                     np.sin(pitch),
                     np.cos(pitch) * np.sin(yaw)], axis=1)


def pairwise_angles(views: list[ViewPose]) -> np.ndarray:
    """n x n matrix of angular distances, indexed by list position."""
    u = directions_matrix(views)
    dots = np.clip(u @ u.T, -1.0, 1.0)
    crosses = np.linalg.norm(np.cross(u[:, None, :], u[None, :, :]), axis=2)
    return np.arctan2(crosses, dots)


def sample_sphere(n: int, pitch_min_deg: float = -90.0, pitch_max_deg: float = 90.0) -> list[ViewPose]:
    """Deterministic near-uniform sphere sampling via the Fibonacci spiral.

    The optional pitch band restricts samples to a latitude range, e.g. an
    upper hemisphere. n == 1 degenerates to the front view (0, 0).
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if n == 1:
        return [ViewPose(0, 0.0, 0.0)]
    golden = math.pi * (3.0 - math.sqrt(5.0))
    y_hi = math.sin(math.radians(pitch_max_deg))
    y_lo = math.sin(math.radians(pitch_min_deg))
    poses = []
    for i in range(n):
        y = y_hi - (i + 0.5) / n * (y_hi - y_lo)
        theta = golden * i
        rho = math.sqrt(max(0.0, 1.0 - y * y))
        yaw = math.degrees(math.atan2(rho * math.sin(theta), rho * math.cos(theta)))
        pitch = math.degrees(math.asin(max(-1.0, min(1.0, y))))
        poses.append(ViewPose(i, yaw, pitch))
    return poses


def turntable_grid() -> list[ViewPose]:
    """The 51-pose grid: yaw -120..120 every 15 degrees x pitch {-45, 0, 45}.

    Ids are assigned row-major with pitch as the outer loop, so the front
    view (0, 0) sits in the middle row.
    """
    poses = []
    i = 0
    for pitch in (-45.0, 0.0, 45.0):
        for step in range(-8, 9):
            poses.append(ViewPose(i, 15.0 * step, pitch))
            i += 1
    return poses


def nn_traversal(views: list[ViewPose], start_id: int) -> list[int]:
    """Greedy nearest-unvisited ordering of view ids, starting at start_id.

    Distance ties go to the lower view id.
    """
    if not views:
        raise TraversalError("no views to traverse")
    ids = [v.id for v in views]
    if start_id not in ids:
        raise TraversalError(f"unknown start id {start_id}")
    index = {v.id: i for i, v in enumerate(views)}
    dist = pairwise_angles(views)
    unvisited = set(ids)
    order = [start_id]
    unvisited.remove(start_id)
    current = start_id
    while unvisited:
        ci = index[current]
        best = min(unvisited, key=lambda vid: (dist[ci, index[vid]], vid))
        order.append(best)
        unvisited.remove(best)
        current = best
    return order


def path_length(views: list[ViewPose], order: list[int]) -> float:
    """Total angular length of the open path visiting `order`."""
    index = {v.id: i for i, v in enumerate(views)}
    dist = pairwise_angles(views)
    return float(sum(dist[index[a], index[b]] for a, b in zip(order, order[1:])))


def two_opt_refine(views: list[ViewPose], order: list[int], max_passes: int = 10) -> list[int]:
    """First-improvement 2-opt over the open path, keeping order[0] pinned.

    Each accepted move reverses a segment; the scan repeats until a full
    pass finds no improvement or max_passes is reached. Total angular
    length never increases.
    """
    ids = [v.id for v in views]
    if sorted(order) != sorted(ids):
        raise TraversalError("order is not a permutation of the view ids")
    index = {v.id: i for i, v in enumerate(views)}
    dist = pairwise_angles(views)
    tour = list(order)
    n = len(tour)
    for _ in range(max_passes):
        improved = False
        for i in range(1, n - 1):
            for j in range(i + 1, n):
                a = index[tour[i - 1]]
                b = index[tour[i]]
                c = index[tour[j]]
                delta = dist[a, c] - dist[a, b]
                if j + 1 < n:
                    d = index[tour[j + 1]]
                    delta += dist[b, d] - dist[c, d]
                if delta < -1e-12:
                    tour[i:j + 1] = reversed(tour[i:j + 1])
                    improved = True
        if not improved:
            break
    return tour


def select_references(target: int, processed: list[int], views: list[ViewPose],
                      k: int = DEFAULT_K, tau_deg: float = DEFAULT_TAU_DEG) -> list[int]:
    """The k nearest already-processed views within tau degrees of the target.

    Results are sorted by ascending angular distance (ties by lower id) and
    may be empty; in that case the caller falls back to the single nearest
    processed view regardless of tau.
    """
    index = {v.id: i for i, v in enumerate(views)}
    if target in processed:
        raise TraversalError(f"target {target} already processed")
    tgt = views[index[target]]
    tau = math.radians(tau_deg) + _TAU_EPS
    scored = []
    for pid in processed:
        d = angular_distance(tgt, views[index[pid]])
        if d <= tau:
            scored.append((d, pid))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [pid for _, pid in scored[:k]]


def nearest_processed(target: int, processed: list[int], views: list[ViewPose]) -> list[int]:
    """Fallback reference: the single nearest processed view, no tau cut."""
    if not processed:
        return []
    index = {v.id: i for i, v in enumerate(views)}
    tgt = views[index[target]]
    best = min(processed, key=lambda pid: (angular_distance(tgt, views[index[pid]]), pid))
    return [best]


def build_traversal_plan(views: list[ViewPose], start_id: int,
                         k: int = DEFAULT_K, tau_deg: float = DEFAULT_TAU_DEG) -> TraversalPlan:
    """Plan the full visit: nearest-neighbor chain, 2-opt, then reference sets."""
    order = two_opt_refine(views, nn_traversal(views, start_id))
    references: dict[int, list[int]] = {order[0]: []}
    for i, vid in enumerate(order[1:], start=1):
        refs = select_references(vid, order[:i], views, k=k, tau_deg=tau_deg)
        references[vid] = refs
    return TraversalPlan(order=order, references=references, k=k, tau_deg=tau_deg)
