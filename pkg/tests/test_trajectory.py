import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symdetect.trajectory import (
    ChannelGroup,
    Dataset,
    DatasetError,
    StateSchema,
    Trajectory,
    filter_initial_ball,
    load_dataset,
    load_schema,
    save_dataset,
    save_schema,
    split_dataset,
)

SCHEMA = StateSchema(2, (
    ChannelGroup("pos", "position", (0, 1)),
    ChannelGroup("vel", "direction", (2, 3)),
))


def make_dataset(n, T=5, D=6, seed=0, schema=SCHEMA):
    rng = np.random.default_rng(seed)
    trajs = [Trajectory(f"t{i}", rng.normal(size=(T, D)), {"seed": i}) for i in range(n)]
    return Dataset(schema, tuple(trajs))


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def datasets(draw):
    D = draw(st.integers(4, 7))
    n = draw(st.integers(0, 6))
    trajs = []
    for i in range(n):
        T = draw(st.integers(1, 5))
        vals = draw(st.lists(finite, min_size=T * D, max_size=T * D))
        trajs.append(Trajectory(f"id{i}", np.array(vals).reshape(T, D), {"k": i}))
    return Dataset(SCHEMA, tuple(trajs))


class TestSchema:
    def test_roundtrip_json(self, tmp_path):
        save_schema(SCHEMA, tmp_path / "s.json")
        assert load_schema(tmp_path / "s.json") == SCHEMA

    def test_overlapping_groups_rejected(self):
        with pytest.raises(DatasetError):
            StateSchema(2, (ChannelGroup("a", "position", (0, 1)),
                            ChannelGroup("b", "direction", (1, 2))))

    def test_geometric_group_needs_spatial_dim_indices(self):
        with pytest.raises(DatasetError):
            StateSchema(3, (ChannelGroup("a", "position", (0, 1)),))

    def test_passthrough_any_size(self):
        s = StateSchema(3, (ChannelGroup("b", "passthrough", (5,)),))
        assert s.group("b").indices == (5,)

    def test_bad_role(self):
        with pytest.raises(DatasetError):
            ChannelGroup("a", "velocity", (0, 1))

    def test_schema_file_format(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"spatial_dim": 2, "groups": [
            {"name": "pos", "role": "position", "indices": [0, 1]}]}))
        assert load_schema(p).group("pos").role == "position"


class TestTrajectory:
    def test_non_finite_rejected(self):
        with pytest.raises(DatasetError):
            Trajectory("x", np.array([[0.0, np.nan]]))

    def test_immutable_states(self):
        t = Trajectory("x", np.zeros((2, 3)))
        with pytest.raises(ValueError):
            t.states[0, 0] = 1.0

    def test_dataset_dimension_mismatch(self):
        with pytest.raises(DatasetError):
            Dataset(SCHEMA, (Trajectory("a", np.zeros((2, 6))), Trajectory("b", np.zeros((2, 5)))))

    def test_schema_index_out_of_range(self):
        with pytest.raises(DatasetError):
            Dataset(SCHEMA, (Trajectory("a", np.zeros((2, 3))),))


class TestPersistence:
    def test_two_lines(self, tmp_path):
        p = tmp_path / "d.jsonl"
        rows = [{"id": f"r{i}", "states": np.arange(12.0).reshape(2, 6).tolist()} for i in range(2)]
        p.write_text("".join(json.dumps(r) + "\n" for r in rows))
        ds = load_dataset(p, SCHEMA)
        assert len(ds) == 2 and ds.dim == 6
        assert [t.id for t in ds] == ["r0", "r1"]

    def test_mixed_state_lengths(self, tmp_path):
        p = tmp_path / "d.jsonl"
        p.write_text(json.dumps({"id": "a", "states": [[0] * 6, [0] * 5]}) + "\n")
        with pytest.raises(DatasetError, match="line 1"):
            load_dataset(p, SCHEMA)

    def test_mismatch_across_lines_reports_line(self, tmp_path):
        p = tmp_path / "d.jsonl"
        p.write_text(
            json.dumps({"id": "a", "states": [[0] * 6]}) + "\n"
            + json.dumps({"id": "b", "states": [[0] * 7]}) + "\n"
        )
        with pytest.raises(DatasetError, match="line 2"):
            load_dataset(p, SCHEMA)

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "d.jsonl"
        p.write_text(json.dumps({"id": "a", "states": [[0] * 6]}) + "\n{not json\n")
        with pytest.raises(DatasetError, match="line 2"):
            load_dataset(p, SCHEMA)

    def test_non_finite_value(self, tmp_path):
        p = tmp_path / "d.jsonl"
        p.write_text('{"id": "a", "states": [[0, 0, 0, 0, 0, NaN]]}\n')
        with pytest.raises(DatasetError, match="non-finite"):
            load_dataset(p, SCHEMA)

    def test_empty_dataset_zero_lines(self, tmp_path):
        p = tmp_path / "d.jsonl"
        save_dataset(Dataset(SCHEMA, ()), p)
        assert p.read_text() == ""
        assert len(load_dataset(p, SCHEMA)) == 0

    def test_single_state(self, tmp_path):
        p = tmp_path / "d.jsonl"
        ds = make_dataset(1, T=1)
        save_dataset(ds, p)
        lines = p.read_text().splitlines()
        assert len(lines) == 1 and len(json.loads(lines[0])["states"]) == 1

    def test_hundred_random_roundtrip(self, tmp_path):
        ds = make_dataset(100, T=7, seed=3)
        save_dataset(ds, tmp_path / "d.jsonl")
        assert load_dataset(tmp_path / "d.jsonl", SCHEMA) == ds

    @settings(max_examples=50, deadline=None)
    @given(datasets())
    def test_roundtrip_bit_exact(self, tmp_path_factory, ds):
        p = tmp_path_factory.mktemp("rt") / "d.jsonl"
        save_dataset(ds, p)
        back = load_dataset(p, SCHEMA)
        assert back == ds
        for a, b in zip(back, ds):
            assert a.states.tobytes() == b.states.tobytes()


class TestFilterInitialBall:
    def test_infinite_radius_keeps_all(self):
        ds = make_dataset(20)
        assert len(filter_initial_ball(ds, math.inf, "pos")) == 20

    def test_zero_radius_drops_all(self):
        ds = make_dataset(20)
        assert len(filter_initial_ball(ds, 0.0, "pos")) == 0

    def test_unknown_group(self):
        with pytest.raises(KeyError):
            filter_initial_ball(make_dataset(3), 1.0, "nope")

    def test_requires_position_role(self):
        with pytest.raises(DatasetError):
            filter_initial_ball(make_dataset(3), 1.0, "vel")

    def test_uniform_square_keeps_quarter_pi(self):
        # Monte-Carlo area oracle: disc of radius 1 inside [-1, 1]^2
        rng = np.random.default_rng(11)
        trajs = []
        for i in range(1000):
            s = np.zeros((3, 6))
            s[0, :2] = rng.uniform(-1, 1, size=2)
            trajs.append(Trajectory(str(i), s))
        kept = filter_initial_ball(Dataset(SCHEMA, tuple(trajs)), 1.0, "pos")
        assert abs(len(kept) / 1000 - math.pi / 4) <= 0.05

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.0, 3.0), st.integers(0, 1000))
    def test_idempotent(self, radius, seed):
        ds = make_dataset(15, seed=seed)
        once = filter_initial_ball(ds, radius, "pos")
        assert filter_initial_ball(once, radius, "pos") == once


class TestSplit:
    def test_all_train(self):
        tr, va, te = split_dataset(make_dataset(10), (1, 0, 0), seed=0)
        assert (len(tr), len(va), len(te)) == (10, 0, 0)

    def test_rounding_rule(self):
        tr, va, te = split_dataset(make_dataset(10), (0.8, 0.1, 0.1), seed=0)
        assert (len(tr), len(va), len(te)) == (8, 1, 1)

    def test_remainder_to_train(self):
        tr, va, te = split_dataset(make_dataset(7), (0.5, 0.25, 0.25), seed=0)
        # 1.75 -> 2 each; train takes what is left
        assert (len(tr), len(va), len(te)) == (3, 2, 2)

    @pytest.mark.parametrize("fr", [(0.5, 0.5, 0.5), (1.2, -0.1, -0.1), (0.5, 0.5)])
    def test_invalid_fractions(self, fr):
        with pytest.raises(DatasetError):
            split_dataset(make_dataset(10), fr, seed=0)

    def test_empty(self):
        with pytest.raises(DatasetError):
            split_dataset(Dataset(SCHEMA, ()), (0.8, 0.1, 0.1), seed=0)

    def test_seed_determinism(self):
        ds = make_dataset(50)
        a = split_dataset(ds, (0.8, 0.1, 0.1), seed=5)
        b = split_dataset(ds, (0.8, 0.1, 0.1), seed=5)
        c = split_dataset(ds, (0.8, 0.1, 0.1), seed=6)
        assert a == b
        assert [t.id for t in a[0]] != [t.id for t in c[0]]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 60), st.integers(0, 2**32 - 1),
           st.sampled_from([(0.8, 0.1, 0.1), (0.6, 0.2, 0.2), (0.34, 0.33, 0.33), (0, 0.5, 0.5)]))
    def test_partition(self, n, seed, fr):
        ds = make_dataset(n)
        parts = split_dataset(ds, fr, seed)
        ids = [t.id for p in parts for t in p]
        assert sorted(ids) == sorted(t.id for t in ds)
