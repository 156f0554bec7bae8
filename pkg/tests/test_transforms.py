import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symdetect.transforms import (
    CandidateTransform as C,
    TransformDraw,
    TransformError,
    apply_to_trajectory,
    linear_part,
    load_candidates,
    sample_draw,
    save_candidates,
    transform_dataset,
)
from symdetect.trajectory import ChannelGroup, Dataset, DatasetError, StateSchema, Trajectory

SCHEMA2 = StateSchema(2, (
    ChannelGroup("pos", "position", (0, 1)),
    ChannelGroup("vel", "direction", (2, 3)),
    ChannelGroup("batt", "passthrough", (4,)),
))
SCHEMA3 = StateSchema(3, (
    ChannelGroup("pos", "position", (0, 1, 2)),
    ChannelGroup("vel", "direction", (3, 4, 5)),
))


def rand_traj(seed, T=6, D=5):
    return Trajectory(f"t{seed}", np.random.default_rng(seed).normal(size=(T, D)) * 3)


def rand_dataset(n, schema=SCHEMA2, D=5, seed=0):
    return Dataset(schema, tuple(rand_traj(seed * 1000 + i, D=D) for i in range(n)))


class TestCandidateParsing:
    @pytest.mark.parametrize("d", [
        {"type": "cyclic_rotation", "n": 4, "axis": "z"},
        {"type": "reflection", "axis": "x"},
        {"type": "translation", "axis": "y", "bound": 5.0},
        {"type": "general_rotation", "axis": "z"},
        {"type": "identity"},
    ])
    def test_roundtrip(self, d):
        assert C.from_dict(d).to_dict() == d

    def test_file_roundtrip(self, tmp_path):
        cands = [C.identity(), C.cyclic(3), C.translation("x", 0.5)]
        save_candidates(cands, tmp_path / "c.json")
        assert load_candidates(tmp_path / "c.json") == cands

    @pytest.mark.parametrize("d", [
        {"type": "shear"}, {"type": "cyclic_rotation", "n": 1},
        {"type": "reflection"}, {"type": "translation", "axis": "x"},
        {"type": "reflection", "axis": "w"}, {"type": "identity", "k": 1},
    ])
    def test_invalid(self, d):
        with pytest.raises(TransformError):
            C.from_dict(d)

    def test_axis_invalid_for_2d(self):
        with pytest.raises(TransformError):
            linear_part(C.reflection("z"), TransformDraw(), 2)
        with pytest.raises(TransformError):
            linear_part(C.cyclic(4, "x"), TransformDraw(), 2)


class TestLinearPart:
    def test_c4_2d(self):
        np.testing.assert_array_equal(linear_part(C.cyclic(4), TransformDraw(), 2) @ [1, 0], [0, 1])

    def test_reflection_x_3d(self):
        m = linear_part(C.reflection("x"), TransformDraw(), 3)
        np.testing.assert_array_equal(m @ [1, 2, 3], [-1, 2, 3])

    def test_general_rotation_z(self):
        th = math.pi / 6
        m = linear_part(C.rotation("z"), TransformDraw(angle=th), 3)
        np.testing.assert_allclose(m @ [1, 0, 0], [math.sqrt(3) / 2, 0.5, 0], atol=1e-15)

    @pytest.mark.parametrize("axis,vec,expected", [
        ("x", [0, 1, 0], [0, 0, 1]),
        ("y", [0, 0, 1], [1, 0, 0]),
        ("z", [1, 0, 0], [0, 1, 0]),
    ])
    def test_right_hand_rule(self, axis, vec, expected):
        m = linear_part(C.cyclic(4, axis), TransformDraw(), 3)
        np.testing.assert_array_equal(m @ vec, expected)

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 8])
    def test_cyclic_angle(self, n):
        m = linear_part(C.cyclic(n), TransformDraw(), 2)
        assert math.isclose(math.atan2(m[1, 0], m[0, 0]) % (2 * math.pi), 2 * math.pi / n)
        np.testing.assert_allclose(m @ m.T, np.eye(2), atol=1e-15)

    def test_translation_has_no_linear_part(self):
        with pytest.raises(TransformError):
            linear_part(C.translation("x", 1.0), TransformDraw(offset=0.1), 2)


class TestSampleDraw:
    def test_identity_empty(self):
        assert sample_draw(C.identity(), np.random.default_rng(0)) == TransformDraw()

    def test_zero_bound(self):
        assert sample_draw(C.translation("x", 0.0), np.random.default_rng(0)).offset == 0.0

    def test_general_rotation_distribution(self):
        rng = np.random.default_rng(1)
        a = np.array([sample_draw(C.rotation(), rng).angle for _ in range(10_000)])
        assert abs(a.mean()) <= 0.15
        assert a.min() >= -2 * math.pi and a.max() <= 2 * math.pi
        # uniform on [-2pi, 2pi] has variance (4pi)^2 / 12
        assert abs(a.var() / ((4 * math.pi) ** 2 / 12) - 1) < 0.05

    def test_translation_range(self):
        rng = np.random.default_rng(2)
        o = np.array([sample_draw(C.translation("y", 2.5), rng).offset for _ in range(5000)])
        assert o.min() >= -2.5 and o.max() <= 2.5 and abs(o.mean()) < 0.1

    def test_deterministic(self):
        a = [sample_draw(C.rotation(), np.random.default_rng(7)) for _ in range(3)]
        assert a[0] == a[1] == a[2]


class TestApply:
    def test_identity_exact(self):
        t = rand_traj(0)
        assert apply_to_trajectory(t, SCHEMA2, C.identity(), TransformDraw()) == t

    def test_c2_negates(self):
        s = np.tile([1.0, 1.0, 0.5, 0.0, 7.0], (4, 1))
        out = apply_to_trajectory(Trajectory("a", s), SCHEMA2, C.cyclic(2), TransformDraw())
        np.testing.assert_array_equal(out.states, np.tile([-1.0, -1.0, -0.5, 0.0, 7.0], (4, 1)))

    def test_translation_elementwise(self):
        t = rand_traj(3)
        out = apply_to_trajectory(t, SCHEMA2, C.translation("x", 1.0), TransformDraw(offset=0.3))
        expected = t.states.copy()
        for i in range(t.length):
            expected[i, 0] = t.states[i, 0] + 0.3
        np.testing.assert_array_equal(out.states, expected)

    def test_rotation_elementwise(self):
        t = rand_traj(4)
        th = 0.7
        out = apply_to_trajectory(t, SCHEMA2, C.rotation(), TransformDraw(angle=th))
        c, s = math.cos(th), math.sin(th)
        for i in range(t.length):
            for a, b in ((0, 1), (2, 3)):
                x, y = t.states[i, a], t.states[i, b]
                assert math.isclose(out.states[i, a], c * x - s * y, abs_tol=1e-12)
                assert math.isclose(out.states[i, b], s * x + c * y, abs_tol=1e-12)
            assert out.states[i, 4] == t.states[i, 4]

    def test_schema_mismatch(self):
        t = Trajectory("a", np.zeros((3, 3)))
        with pytest.raises(DatasetError):
            apply_to_trajectory(t, SCHEMA2, C.cyclic(2), TransformDraw())

    def test_3d_reflection_z_only_touches_z(self):
        t = rand_traj(5, D=6)
        out = apply_to_trajectory(t, SCHEMA3, C.reflection("z"), TransformDraw())
        np.testing.assert_array_equal(out.states[:, [2, 5]], -t.states[:, [2, 5]])
        np.testing.assert_array_equal(out.states[:, [0, 1, 3, 4]], t.states[:, [0, 1, 3, 4]])


class TestTransformDataset:
    def test_identity(self):
        ds = rand_dataset(5)
        assert transform_dataset(ds, C.identity(), 0)[0] == ds

    def test_c4_four_times(self):
        ds = rand_dataset(10)
        cur = ds
        for _ in range(4):
            cur, _ = transform_dataset(cur, C.cyclic(4), 0)
        for a, b in zip(cur, ds):
            np.testing.assert_allclose(a.states, b.states, atol=1e-9, rtol=0)

    def test_one_draw_per_trajectory(self):
        ds = rand_dataset(20)
        out, draws = transform_dataset(ds, C.rotation(), 3)
        assert len(draws) == 20 and len({d.angle for d in draws}) == 20

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([
        C.rotation(), C.translation("y", 2.0), C.cyclic(3), C.reflection("x"),
    ]))
    def test_seed_determinism(self, seed, cand):
        ds = rand_dataset(4)
        a, da = transform_dataset(ds, cand, seed)
        b, db = transform_dataset(ds, cand, seed)
        assert a == b and da == db


# algebraic properties over random trajectories in 2D and 3D

def _geom_norms(states, schema):
    return [np.linalg.norm(states[:, list(g.indices)], axis=1) for g in schema.groups if g.geometric]


rotations_2d = st.sampled_from([C.cyclic(n) for n in (2, 3, 4, 6, 8)] + [C.rotation()])
rotations_3d = st.sampled_from(
    [C.cyclic(n, a) for n in (2, 3, 4, 6, 8) for a in "xyz"] + [C.rotation(a) for a in "xyz"]
)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.data())
def test_norm_preservation(seed, dim, data):
    schema, D = (SCHEMA2, 5) if dim == 2 else (SCHEMA3, 6)
    pool = rotations_2d if dim == 2 else rotations_3d
    cand = data.draw(pool | st.sampled_from([C.reflection(a) for a in "xyz"[:dim]]))
    t = rand_traj(seed, D=D)
    draw = sample_draw(cand, np.random.default_rng(seed))
    out = apply_to_trajectory(t, schema, cand, draw)
    for before, after in zip(_geom_norms(t.states, schema), _geom_norms(out.states, schema)):
        np.testing.assert_allclose(after, before, rtol=1e-9)
    assert out.states.shape == t.states.shape


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from("xy"))
def test_reflection_involution(seed, axis):
    t = rand_traj(seed)
    r = C.reflection(axis)
    twice = apply_to_trajectory(apply_to_trajectory(t, SCHEMA2, r, TransformDraw()),
                                SCHEMA2, r, TransformDraw())
    np.testing.assert_allclose(twice.states, t.states, atol=1e-12, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4, 5, 6, 8]))
def test_cyclic_closure(seed, n):
    t = rand_traj(seed)
    cur = t
    for _ in range(n):
        cur = apply_to_trajectory(cur, SCHEMA2, C.cyclic(n), TransformDraw())
    np.testing.assert_allclose(cur.states, t.states, atol=1e-9, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-10, 10), st.sampled_from("xy"))
def test_translation_leaves_direction_and_passthrough(seed, offset, axis):
    t = rand_traj(seed)
    out = apply_to_trajectory(t, SCHEMA2, C.translation(axis, 10.0), TransformDraw(offset=offset))
    assert out.states[:, 2:].tobytes() == t.states[:, 2:].tobytes()
