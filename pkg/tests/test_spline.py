import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splineseg import spline
from splineseg.errors import (
    DuplicateConsecutivePoints,
    ParameterOutOfRange,
    TopologyError,
)
from splineseg.spline import CLOSED, OPEN, ControlShape, SplineConfig, SplineMeta


def cfg(alpha=0.5, rho=0.5, density=32):
    return SplineConfig(alpha=alpha, rho=rho, samples_per_segment=density)


class TestKnotSequence:
    def test_centripetal_single_chord(self):
        knots = spline.knot_sequence([(0, 0), (4, 0)], 0.5)
        assert np.allclose(knots, [0.0, 2.0])

    def test_chordal_distances(self):
        knots = spline.knot_sequence([(0, 0), (4, 0), (8, 3)], 1.0)
        assert np.allclose(knots, [0.0, 4.0, 9.0])
        knots = spline.knot_sequence([(0, 0), (4, 0), (4, 3)], 1.0)
        assert np.allclose(knots, [0.0, 4.0, 7.0])

    def test_uniform_ignores_geometry(self):
        knots = spline.knot_sequence([(0, 0), (7, 1), (2, 2)], 0.0)
        assert np.allclose(knots, [0.0, 1.0, 2.0])

    def test_zero_chord_rejected_for_positive_alpha(self):
        with pytest.raises(DuplicateConsecutivePoints):
            spline.knot_sequence([(1, 1), (1, 1), (2, 2)], 0.5)

    def test_zero_chord_allowed_for_uniform(self):
        knots = spline.knot_sequence([(1, 1), (1, 1), (2, 2)], 0.0)
        assert np.allclose(knots, [0.0, 1.0, 2.0])

    @given(
        st.lists(
            st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
            min_size=2, max_size=12,
        ),
        st.sampled_from([0.0, 0.5, 1.0]),
    )
    @settings(max_examples=60, deadline=None)
    def test_strictly_increasing(self, raw, alpha):
        pts = np.asarray(raw, dtype=float)
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(gaps < 1e-9):
            return
        knots = spline.knot_sequence(pts, alpha)
        assert knots[0] == 0.0
        assert np.all(np.diff(knots) > 0)


class TestExtendEndpoints:
    def test_leading_phantom(self):
        ext = spline.extend_endpoints([(0, 0), (1, 0)], 0.5)
        assert np.allclose(ext[0], (-0.5, 0.0))

    def test_trailing_phantom_outward(self):
        ext = spline.extend_endpoints([(0, 0), (1, 0)], 0.5)
        assert np.allclose(ext[-1], (1.5, 0.0))

    def test_collinear_quarter_rho(self):
        ext = spline.extend_endpoints([(0, 0), (2, 0), (4, 0)], 0.25)
        assert np.allclose(ext[0], (-0.5, 0.0))
        assert np.allclose(ext[-1], (4.5, 0.0))

    def test_inward_variant_folds_back(self):
        ext = spline.extend_endpoints([(0, 0), (1, 0)], 0.5, inward=True)
        assert np.allclose(ext[-1], (0.5, 0.0))

    def test_closed_rejected(self):
        with pytest.raises(TopologyError):
            spline.extend_endpoints([(0, 0), (1, 0), (0, 1)], 0.5,
                                    topology=CLOSED)


class TestEvalSegment:
    def test_interpolates_window_endpoints(self):
        rng = np.random.default_rng(3)
        for alpha in (0.0, 0.5, 1.0):
            ctrl = rng.normal(size=(4, 2)) * 4
            knots = spline.knot_sequence(ctrl, alpha)
            assert np.allclose(spline.eval_segment(ctrl, knots, knots[1]),
                               ctrl[1], atol=1e-12)
            assert np.allclose(spline.eval_segment(ctrl, knots, knots[2]),
                               ctrl[2], atol=1e-12)

    def test_collinear_midpoint(self):
        ctrl = np.array([(0, 0), (1, 1), (2, 2), (3, 3)], dtype=float)
        for alpha in (0.0, 0.5, 1.0):
            knots = spline.knot_sequence(ctrl, alpha)
            mid = spline.eval_segment(ctrl, knots,
                                      0.5 * (knots[1] + knots[2]))
            assert np.allclose(mid, (1.5, 1.5), atol=1e-12)

    def test_out_of_range_rejected(self):
        ctrl = np.array([(0, 0), (1, 0), (2, 1), (3, 0)], dtype=float)
        knots = spline.knot_sequence(ctrl, 0.5)
        with pytest.raises(ParameterOutOfRange):
            spline.eval_segment(ctrl, knots, knots[0])
        with pytest.raises(ParameterOutOfRange):
            spline.eval_segment(ctrl, knots, knots[3])

    def test_vector_parameter_matches_scalars(self):
        rng = np.random.default_rng(4)
        ctrl = rng.normal(size=(4, 2))
        knots = spline.knot_sequence(ctrl, 0.5)
        ts = np.linspace(knots[1], knots[2], 9)
        batch = spline.eval_segment(ctrl, knots, ts)
        single = np.array([spline.eval_segment(ctrl, knots, t) for t in ts])
        assert np.array_equal(batch, single)

    def test_uniform_matrix_matches_pyramid(self):
        rng = np.random.default_rng(5)
        ctrl = rng.normal(size=(4, 2)) * 3
        knots = spline.knot_sequence(ctrl, 0.0)
        ts = np.linspace(0.0, 1.0, 11)
        a = spline.eval_segment_uniform(ctrl, ts)
        b = spline.eval_segment(ctrl, knots, knots[1] + ts)
        assert np.abs(a - b).max() < 1e-12


class TestSampling:
    def test_square_corners_on_curve(self):
        square = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
        for alpha in (0.0, 0.5, 1.0):
            shape = ControlShape(points=square, topology=CLOSED)
            curve = spline.sample_curve(shape, cfg(alpha=alpha))
            for corner in square:
                assert np.linalg.norm(curve - corner, axis=1).min() < 1e-9

    def test_closed_sample_count_and_closure(self):
        shape = ControlShape(
            points=np.array([(0, 0), (2, 0), (2, 2), (0, 2), (-1, 1)],
                            dtype=float),
            topology=CLOSED,
        )
        curve = spline.sample_curve(shape, cfg(density=8))
        assert len(curve) == 5 * 8 + 1
        assert np.array_equal(curve[0], curve[-1])

    def test_open_sample_count(self):
        shape = ControlShape(
            points=np.array([(0, 0), (1, 2), (3, 1), (4, 4)], dtype=float),
            topology=OPEN,
        )
        curve = spline.sample_curve(shape, cfg(density=8))
        assert len(curve) == 3 * 8 + 1

    def test_two_point_open_density_one(self):
        shape = ControlShape(points=np.array([(0, 0), (3, 1)], dtype=float),
                             topology=OPEN)
        curve = spline.sample_curve(shape, cfg(density=1))
        assert curve.shape == (2, 2)
        assert np.allclose(curve, [(0, 0), (3, 1)], atol=1e-12)

    def test_open_curve_reaches_both_masters(self):
        rng = np.random.default_rng(11)
        pts = np.cumsum(rng.uniform(0.5, 2.0, size=(6, 2)), axis=0)
        shape = ControlShape(points=pts, topology=OPEN)
        curve = spline.sample_curve(shape, cfg())
        assert np.allclose(curve[0], pts[0], atol=1e-12)
        assert np.allclose(curve[-1], pts[-1], atol=1e-12)

    def test_distant_segments_bit_identical_after_move(self):
        rng = np.random.default_rng(12)
        pts = np.stack([10 * np.cos(np.linspace(0, 2 * np.pi, 9)[:-1]),
                        10 * np.sin(np.linspace(0, 2 * np.pi, 9)[:-1])],
                       axis=1) + rng.normal(scale=0.5, size=(8, 2))
        moved = pts.copy()
        moved[0] += (1.5, -0.8)
        c = cfg()
        touched = set(spline.segments_touching(8, CLOSED, 0))
        for seg in range(8):
            before = spline.sample_segment(pts, CLOSED, seg, c)
            after = spline.sample_segment(moved, CLOSED, seg, c)
            if seg in touched:
                assert np.abs(after - before).max() > 0
            else:
                assert np.array_equal(before, after)


class TestExpand:
    def test_open_seven_masters_one_slave(self):
        pts = np.array([(0, 0), (2, 1), (4, 0), (5, 2), (4, 4), (2, 5),
                        (0, 4)], dtype=float)
        shape = ControlShape(points=pts, topology=OPEN)
        out = spline.expand_shape(shape, 1, cfg())
        assert len(out.points) == 13
        assert out.masters.sum() == 7
        assert np.array_equal(out.points[out.masters], pts)

    def test_closed_slaves_at_thirds(self):
        pts = np.array([(0, 0), (4, 0), (4, 4), (0, 4)], dtype=float)
        shape = ControlShape(points=pts, topology=CLOSED)
        c = cfg()
        out = spline.expand_shape(shape, 2, c)
        assert len(out.points) == 4 + 2 * 4
        ctrl = spline.segment_controls(pts, CLOSED, 0, c)
        knots = spline.knot_sequence(ctrl, c.alpha)
        for k, frac in ((1, 1 / 3), (2, 2 / 3)):
            t = knots[1] + frac * (knots[2] - knots[1])
            expect = spline.eval_segment(ctrl, knots, t)
            assert np.allclose(out.points[k], expect, atol=1e-12)

    def test_epsilon_zero_identity(self):
        shape = ControlShape(
            points=np.array([(0, 0), (1, 0), (0, 1)], dtype=float),
            topology=CLOSED,
        )
        assert spline.expand_shape(shape, 0, cfg()) is shape

    def test_slaves_lie_on_original_curve(self):
        rng = np.random.default_rng(13)
        angles = np.linspace(0, 2 * np.pi, 7)[:-1]
        pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        pts *= rng.uniform(2, 6, size=(6, 1))
        shape = ControlShape(points=pts, topology=CLOSED)
        c = cfg(density=512)
        out = spline.expand_shape(shape, 3, c)
        dense = spline.sample_curve(shape, c)
        for p in out.points[~out.masters]:
            assert np.linalg.norm(dense - p, axis=1).min() < 1e-4

    def test_role_pattern_uniform(self):
        pts = np.array([(0, 0), (4, 0), (4, 4), (0, 4)], dtype=float)
        out = spline.expand_shape(ControlShape(points=pts, topology=CLOSED),
                                  2, cfg())
        expect = [True, False, False] * 4
        assert list(out.masters) == expect
        assert out.epsilon == 2

    def test_double_expansion_rejected(self):
        pts = np.array([(0, 0), (4, 0), (4, 4), (0, 4)], dtype=float)
        out = spline.expand_shape(ControlShape(points=pts, topology=CLOSED),
                                  1, cfg())
        with pytest.raises(ValueError):
            spline.expand_shape(out, 1, cfg())


class TestControlShape:
    def test_closed_needs_three_points(self):
        with pytest.raises(ValueError):
            ControlShape(points=np.array([(0, 0), (1, 1)], dtype=float),
                         topology=CLOSED)

    def test_open_needs_two_points(self):
        with pytest.raises(ValueError):
            ControlShape(points=np.array([(0, 0)], dtype=float),
                         topology=OPEN)

    def test_duplicate_consecutive_rejected(self):
        with pytest.raises(DuplicateConsecutivePoints):
            ControlShape(
                points=np.array([(0, 0), (0, 0), (1, 1)], dtype=float),
                topology=CLOSED,
            )

    def test_closed_wrap_duplicate_rejected(self):
        with pytest.raises(DuplicateConsecutivePoints):
            ControlShape(
                points=np.array([(0, 0), (1, 0), (1, 1), (0, 0)],
                                dtype=float),
                topology=CLOSED,
            )

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            ControlShape(
                points=np.array([(0, 0), (np.nan, 1), (1, 1)], dtype=float),
                topology=CLOSED,
            )

    def test_nonuniform_slave_runs_rejected(self):
        pts = np.arange(10, dtype=float).reshape(5, 2)
        masters = np.array([True, False, True, False, False])
        with pytest.raises(ValueError):
            ControlShape(points=pts, masters=masters, topology=OPEN)

    def test_parts_must_partition(self):
        pts = np.array([(0, 0), (1, 0), (0, 1), (5, 5), (6, 5), (5, 6)],
                       dtype=float)
        with pytest.raises(ValueError):
            ControlShape(points=pts, topology=CLOSED, parts=[(0, 3), (4, 6)])

    def test_master_shape_strips_slaves(self):
        pts = np.array([(0, 0), (4, 0), (4, 4), (0, 4)], dtype=float)
        expanded = spline.expand_shape(
            ControlShape(points=pts, topology=CLOSED), 1, cfg())
        masters = expanded.master_shape()
        assert np.array_equal(masters.points, pts)
        assert masters.masters.all()


class TestSplineMeta:
    def test_layout_round_trip(self):
        meta = SplineMeta(epsilon=2, topology=CLOSED, master_counts=(4, 3))
        masters, parts = meta.layout()
        assert parts == [(0, 12), (12, 21)]
        assert masters.sum() == 7
        flat = np.arange(2 * meta.total_points(), dtype=float)
        flat = flat + np.linspace(0, 1, flat.size)
        shape = meta.control_shape(flat)
        assert shape.parts == parts
        assert np.array_equal(shape.masters, masters)

    def test_open_expanded_counts(self):
        meta = SplineMeta(epsilon=2, topology=OPEN, master_counts=(5,))
        assert meta.expanded_counts() == [5 + 2 * 4]
