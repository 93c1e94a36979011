"""Anchor-based calibration frames and the human/robot shared map.

Each side (human, robot) places three anchor points: a0 is the origin,
a1 defines +x, a2 defines +y. The derived frame carries the raw axis
lengths so that equal physical distances on both sides make the
position map metric-preserving in x/y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import (
    AnchorsNotPerpendicular,
    CollinearAnchors,
    NonMonotonicTimestamp,
    ScaleMismatch,
)

COLLINEAR_TOL = 1e-6
PERP_TOL = 1e-6
ORTHO_REJECT_DEG = 5.0
SCALE_TOL = 1e-3  # meters; measured anchors never match exactly

DEFAULT_DWELL_RADIUS = 0.005  # m
DEFAULT_DWELL_TIME = 1.0  # s


@dataclass(frozen=True)
class AnchorSet:
    """Three anchor points: origin, +x endpoint, +y endpoint."""

    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        for a in (self.a0, self.a1, self.a2):
            if not np.all(np.isfinite(a)):
                raise CollinearAnchors("anchor coordinates must be finite")
        n = geo.norm(geo.cross(self.a1 - self.a0, self.a2 - self.a0))
        if n <= COLLINEAR_TOL:
            raise CollinearAnchors("anchor points are collinear")


@dataclass(frozen=True)
class CalibrationFrame:
    """Origin + axes of one side. ex/ey keep their physical length; ez is unit."""

    o: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray

    def validate(self):
        if abs(geo.dot(self.ex, self.ey)) > PERP_TOL * geo.norm(self.ex) * geo.norm(self.ey):
            raise AnchorsNotPerpendicular("ex and ey are not perpendicular")
        if abs(geo.norm(self.ez) - 1.0) > 1e-12:
            raise AnchorsNotPerpendicular("ez must be unit length")

    def basis(self) -> np.ndarray:
        """Orthonormalized basis [unit(ex), unit(ey), ez] as columns."""
        return np.column_stack([geo.unit(self.ex), geo.unit(self.ey), self.ez])


def build_frame(anchors: AnchorSet) -> CalibrationFrame:
    """Derive a calibration frame from three anchors.

    ey is Gram-Schmidt orthogonalized against ex; if that moves its
    direction by more than ORTHO_REJECT_DEG the placement is rejected.
    """
    o = anchors.a0.astype(float)
    ex = anchors.a1 - anchors.a0
    ey_raw = anchors.a2 - anchors.a0
    ey = ey_raw - geo.dot(ey_raw, ex) / geo.dot(ex, ex) * ex
    if geo.norm(ey) <= COLLINEAR_TOL:
        raise CollinearAnchors("a2 lies on the a0-a1 line")
    cosang = np.clip(geo.dot(ey_raw, ey) / (geo.norm(ey_raw) * geo.norm(ey)), -1.0, 1.0)
    deviation = np.degrees(np.arccos(cosang))
    if deviation > ORTHO_REJECT_DEG:
        raise AnchorsNotPerpendicular(
            f"a2 deviates {deviation:.1f} deg from perpendicular (limit {ORTHO_REJECT_DEG})"
        )
    ez = geo.unit(geo.cross(ex, ey))
    frame = CalibrationFrame(o=o, ex=ex, ey=ey, ez=ez)
    frame.validate()
    return frame


@dataclass
class SharedMap:
    """A paired human/robot calibration plus the z motion scale eta.

    p_basis (the basis-change rotation) stays None until the rotation
    references are latched; see retarget.compute_basis_change.
    """

    human: CalibrationFrame
    robot: CalibrationFrame
    eta: float = 1.0
    p_basis: np.ndarray | None = None


def pair_frames(human: CalibrationFrame, robot: CalibrationFrame, eta: float = 1.0) -> SharedMap:
    if eta <= 0:
        raise ScaleMismatch("eta must be positive")
    human.validate()
    robot.validate()
    for axis in ("ex", "ey"):
        lh = geo.norm(getattr(human, axis))
        lr = geo.norm(getattr(robot, axis))
        if abs(lh - lr) > SCALE_TOL:
            raise ScaleMismatch(
                f"{axis} lengths differ by {abs(lh - lr):.4f} m (> {SCALE_TOL} m)"
            )
    return SharedMap(human=human, robot=robot, eta=eta)


@dataclass
class DwellDetector:
    """Emits an anchor when the hand stays within `radius` of the window
    centroid for at least `dwell_time` seconds. Resets after each emit."""

    radius: float = DEFAULT_DWELL_RADIUS
    dwell_time: float = DEFAULT_DWELL_TIME
    _window: list = field(default_factory=list)  # (t, point) pairs

    def __post_init__(self):
        if self.radius <= 0 or self.dwell_time <= 0:
            raise ValueError("radius and dwell_time must be positive")

    def reset(self):
        self._window.clear()

    def feed(self, t: float, point: np.ndarray) -> np.ndarray | None:
        if self._window and t < self._window[-1][0]:
            raise NonMonotonicTimestamp(f"sample at t={t} before t={self._window[-1][0]}")
        self._window.append((t, np.asarray(point, dtype=float)))
        # Keep only the trailing dwell_time span (plus the sample that
        # anchors the span start).
        cutoff = t - self.dwell_time
        while len(self._window) > 1 and self._window[1][0] <= cutoff:
            self._window.pop(0)
        if self._window[-1][0] - self._window[0][0] < self.dwell_time:
            return None
        pts = np.array([p for _, p in self._window])
        centroid = pts.mean(axis=0)
        if np.max(np.linalg.norm(pts - centroid, axis=1)) <= self.radius:
            self.reset()
            return centroid
        return None


def dwell_feed(d: DwellDetector, t: float, point: np.ndarray) -> np.ndarray | None:
    return d.feed(t, point)
