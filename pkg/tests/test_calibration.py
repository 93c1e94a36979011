import numpy as np
import pytest

from handteleop.calibration import (
    AnchorSet,
    DwellDetector,
    build_frame,
    pair_frames,
)
from handteleop.errors import (
    AnchorsNotPerpendicular,
    CollinearAnchors,
    NonMonotonicTimestamp,
    ScaleMismatch,
)
from handteleop.geometry import rot_z, vec3

from conftest import random_frame


class TestBuildFrame:
    def test_axis_aligned(self):
        f = build_frame(AnchorSet(vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0, 0.3, 0)))
        assert np.array_equal(f.o, vec3(0, 0, 0))
        assert np.array_equal(f.ex, vec3(0.4, 0, 0))
        assert np.array_equal(f.ey, vec3(0, 0.3, 0))
        assert np.allclose(f.ez, vec3(0, 0, 1))

    def test_gram_schmidt_small_skew(self):
        # oracle by hand: ey = (0.01,0.3,0) - proj_ex = (0,0.3,0);
        # direction moved by atan(0.01/0.3) ~ 1.9 deg < 5 deg
        f = build_frame(AnchorSet(vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0.01, 0.3, 0)))
        assert np.allclose(f.ey, vec3(0, 0.3, 0), atol=1e-15)

    def test_rejects_large_skew(self):
        # oracle: orthogonalized ey = (0,0.1,0); deviation = atan(0.3/0.1) ~ 71.6 deg
        with pytest.raises(AnchorsNotPerpendicular):
            build_frame(AnchorSet(vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0.3, 0.1, 0)))

    def test_collinear_rejected(self):
        with pytest.raises(CollinearAnchors):
            AnchorSet(vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0.8, 0, 0))

    def test_translation_equivariance(self, rng):
        for _ in range(20):
            a0 = rng.uniform(-1, 1, 3)
            a1 = a0 + vec3(0.4, 0, 0)
            a2 = a0 + vec3(0.02, 0.35, 0.01)
            t = rng.uniform(-1, 1, 3)
            f = build_frame(AnchorSet(a0, a1, a2))
            g = build_frame(AnchorSet(a0 + t, a1 + t, a2 + t))
            # anchor differences pick up one rounding step from the shift
            assert np.allclose(f.ex, g.ex, atol=1e-14)
            assert np.allclose(f.ey, g.ey, atol=1e-14)
            assert np.allclose(f.ez, g.ez, atol=1e-12)
            assert np.allclose(f.o + t, g.o, atol=1e-14)

    def test_output_always_valid(self, rng):
        built = 0
        for _ in range(100):
            pts = rng.uniform(-0.5, 0.5, size=(3, 3))
            try:
                f = build_frame(AnchorSet(*pts))
            except (CollinearAnchors, AnchorsNotPerpendicular):
                continue
            f.validate()
            built += 1
        assert built > 0  # some nearly-perpendicular placements survive


class TestPairFrames:
    def test_identical_frames(self):
        f = build_frame(AnchorSet(vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0, 0.3, 0)))
        m = pair_frames(f, f, eta=1.0)
        assert m.eta == 1.0
        assert m.p_basis is None

    def test_rotated_frames_ok(self):
        h = build_frame(AnchorSet(vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0, 0.3, 0)))
        rz = rot_z(np.pi / 2)
        pts = [rz @ p for p in (vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0, 0.3, 0))]
        r = build_frame(AnchorSet(*pts))
        pair_frames(h, r, eta=1.0)  # only lengths constrained

    def test_scale_mismatch(self):
        h = build_frame(AnchorSet(vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0, 0.3, 0)))
        r = build_frame(AnchorSet(vec3(0, 0, 0), vec3(0.3, 0, 0), vec3(0, 0.3, 0)))
        with pytest.raises(ScaleMismatch):
            pair_frames(h, r, eta=1.0)


class TestDwellDetector:
    def test_stationary_emits_once(self):
        d = DwellDetector(radius=0.005, dwell_time=1.0)
        p = vec3(0.1, 0.2, 0.0)
        emissions = []
        for i in range(36):  # 1.2 s at 30 Hz
            out = d.feed(i / 30.0, p)
            if out is not None:
                emissions.append(out)
        assert len(emissions) == 1
        assert np.allclose(emissions[0], p)

    def test_noisy_emits_near_centroid(self, rng):
        d = DwellDetector(radius=0.005, dwell_time=1.0)
        p = vec3(0.1, 0.2, 0.0)
        fed = []
        out = None
        for i in range(60):
            noisy = p + rng.uniform(-0.002, 0.002, 3)
            fed.append(noisy)
            out = d.feed(i / 30.0, noisy)
            if out is not None:
                break
        assert out is not None
        assert np.linalg.norm(out - p) < 0.002
        # the emitted value is the centroid of the trailing window
        assert np.linalg.norm(out - np.mean(fed[-len(fed) + 0:], axis=0)) < 0.005

    def test_moving_never_emits(self):
        d = DwellDetector(radius=0.005, dwell_time=1.0)
        for i in range(60):  # 2 s at 30 Hz, hand at 5 cm/s
            t = i / 30.0
            assert d.feed(t, vec3(0.05 * t, 0, 0)) is None

    def test_non_monotonic_rejected(self):
        d = DwellDetector()
        d.feed(1.0, vec3(0, 0, 0))
        with pytest.raises(NonMonotonicTimestamp):
            d.feed(0.5, vec3(0, 0, 0))

    def test_three_cycles_produce_anchor_set(self):
        d = DwellDetector(radius=0.005, dwell_time=1.0)
        anchors = []
        t = 0.0
        for target in (vec3(0, 0, 0), vec3(0.4, 0, 0), vec3(0, 0.3, 0)):
            for _ in range(40):
                t += 1 / 30.0
                out = d.feed(t, target)
                if out is not None:
                    anchors.append(out)
                    break
        assert len(anchors) == 3
        AnchorSet(*anchors)  # non-collinear, constructible


def test_random_frames_valid(rng):
    for _ in range(20):
        random_frame(rng).validate()
