"""Scene graph: hierarchy, coordinate conversion, queries, snapshots."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenetalk import kernels as K
from scenetalk.errors import (
    AmbiguousName,
    CycleDetected,
    DuplicateName,
    NotFound,
    UnknownObject,
    UnknownParent,
)
from scenetalk.jsonutil import canonical_json
from scenetalk.scene import Geometry, Scene, Transform

from conftest import oracle_world_point, world_matrix_oracle


def test_add_object_identity_case():
    s = Scene()
    oid = s.add_object("cube_red_1", Transform(position=(0, 0, 0)),
                       geometry=Geometry("cube"))
    assert s.world_position(oid) == (0.0, 0.0, 0.0)
    assert s.get(oid).name == "cube_red_1"


def test_add_object_translation_only_composition():
    s = Scene()
    parent = s.add_object("parent", Transform(position=(1, 0, 0)))
    child = s.add_object("child", Transform(position=(0, 1, 0)),
                         parent=parent)
    assert s.world_position(child) == pytest.approx((1.0, 1.0, 0.0))


def test_add_object_rotated_parent_matches_oracle():
    s = Scene()
    parent = s.add_object("parent", Transform(euler=(90, 0, 0)))
    child = s.add_object("child", Transform(position=(1, 0, 0)),
                         parent=parent)
    expected = oracle_world_point(s, parent, (1, 0, 0))
    assert s.world_position(child) == pytest.approx(tuple(expected),
                                                    abs=1e-12)


def test_add_object_duplicate_name_suffixed_by_default():
    s = Scene()
    s.add_object("cube")
    second = s.add_object("cube")
    third = s.add_object("cube")
    assert s.get(second).name == "cube-2"
    assert s.get(third).name == "cube-3"


def test_add_object_duplicate_name_strict_raises():
    s = Scene()
    s.add_object("cube")
    with pytest.raises(DuplicateName):
        s.add_object("cube", rename_on_collision=False)


def test_add_object_unknown_parent():
    s = Scene()
    with pytest.raises(UnknownParent):
        s.add_object("orphan", parent="nope")
    with pytest.raises(UnknownParent):
        s.add_object("orphan", parent=999)


def test_set_parent_round_trip():
    s = Scene()
    a = s.add_object("a")
    b = s.add_object("b")
    s.set_parent(a, b)
    assert s.get(a).parent == b
    s.set_parent(a, None)
    assert s.get(a).parent is None


def test_set_parent_preserve_world_translation_only():
    s = Scene()
    a = s.add_object("a", Transform(position=(5, 1, 0)))
    b = s.add_object("b", Transform(position=(2, 0, 0)))
    s.set_parent(a, b, preserve_world=True)
    assert s.world_position(a) == pytest.approx((5.0, 1.0, 0.0))
    assert s.get(a).transform.position == pytest.approx((3.0, 1.0, 0.0))


def test_set_parent_two_cycle_detected():
    s = Scene()
    a = s.add_object("a")
    b = s.add_object("b")
    s.set_parent(a, b)
    with pytest.raises(CycleDetected):
        s.set_parent(b, a)


def test_local_to_world_identity_root():
    s = Scene()
    oid = s.add_object("root")
    assert s.local_to_world(oid, (3, 4, 5)) == pytest.approx((3.0, 4.0, 5.0))


def test_local_to_world_uniform_scale():
    s = Scene()
    oid = s.add_object("scaled", Transform(scale=(2, 2, 2)))
    assert s.local_to_world(oid, (1, 0, 0)) == pytest.approx((2.0, 0.0, 0.0))


def test_local_to_world_three_deep_chain_matches_matrix_stack():
    s = Scene()
    a = s.add_object("a", Transform(position=(1, 2, 3), euler=(30, 10, -5),
                                    scale=(1.5, 1.5, 1.5)))
    b = s.add_object("b", Transform(position=(-2, 0.5, 1), euler=(-60, 45, 0)),
                     parent=a)
    c = s.add_object("c", Transform(position=(0.3, -0.2, 0.7),
                                    euler=(10, -20, 95), scale=(0.5, 2, 1)),
                     parent=b)
    point = (0.2, 0.4, -0.8)
    expected = oracle_world_point(s, c, point)
    assert np.allclose(s.local_to_world(c, point), expected, atol=1e-9)


def test_local_to_world_unknown_object():
    with pytest.raises(UnknownObject):
        Scene().local_to_world(7, (0, 0, 0))


def test_resolve_reference_by_name():
    s = Scene()
    oid = s.add_object("cube_red_1")
    assert s.resolve_reference("cube_red_1") == oid
    assert s.resolve_reference({"name": "cube_red_1"}) == oid
    with pytest.raises(NotFound):
        s.resolve_reference("missing")


def test_resolve_reference_nearest_strict_ordering():
    s = Scene()
    near = s.add_object("near", Transform(position=(1, 0, 0)),
                        geometry=Geometry("cube"))
    s.add_object("far", Transform(position=(5, 0, 0)),
                 geometry=Geometry("cube"))
    got = s.resolve_reference({"nearest_to": (0, 0, 0), "kind": "cube"})
    assert got == near


def test_resolve_reference_tie_prefers_earlier_creation():
    s = Scene()
    first = s.add_object("east", Transform(position=(2, 0, 0)),
                         geometry=Geometry("cube"))
    s.add_object("west", Transform(position=(-2, 0, 0)),
                 geometry=Geometry("cube"))
    # independent exhaustive scan with the stated tie rule
    candidates = sorted(
        ((K.v_dist(s.world_position(o.id), (0, 0, 0)), o.created_seq, o.id)
         for o in s.objects()),
        key=lambda t: (t[0], t[1]))
    assert candidates[0][2] == first
    got = s.resolve_reference({"nearest_to": (0, 0, 0)})
    assert got == first


def test_resolve_reference_tag_exactly_one():
    s = Scene()
    oid = s.add_object("table_1", tags={"table"})
    assert s.resolve_reference({"tag": "table"}) == oid
    s.add_object("table_2", tags={"table"})
    with pytest.raises(AmbiguousName):
        s.resolve_reference({"tag": "table"})
    with pytest.raises(NotFound):
        s.resolve_reference({"tag": "couch"})


def test_destroy_leaf_absent_from_snapshot():
    s = Scene()
    oid = s.add_object("leaf")
    s.destroy_object(oid)
    snap = s.snapshot(1)
    assert snap["objects"] == []


def test_destroy_splices_child_to_grandparent():
    s = Scene()
    grandparent = s.add_object("g", Transform(position=(1, 0, 0)))
    parent = s.add_object("p", Transform(position=(0, 1, 0)),
                          parent=grandparent)
    child = s.add_object("c", Transform(position=(0, 0, 1)), parent=parent)
    before = s.world_position(child)
    s.destroy_object(parent)
    assert s.get(child).parent == grandparent
    assert s.world_position(child) == pytest.approx(before, abs=1e-9)


def test_destroy_removes_running_animation():
    from scenetalk.animation import Animator, parse_animation_request

    s = Scene()
    s.add_object("mover")
    animator = Animator(s)
    specs = parse_animation_request([{
        "id": "m1", "unit": "Translate", "subject": "mover",
        "target": [0, 0, 4], "speed": 1.0}])
    animator.schedule(specs, 0)
    animator.tick(0.02, 1)
    assert [a["id"] for a in animator.active_animations()] == ["m1"]
    s.destroy_object(s.find_name("mover"))
    assert animator.active_animations() == []


# -- invariants ------------------------------------------------------------

@st.composite
def tree_ops(draw):
    n = draw(st.integers(3, 12))
    ops = draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(-1, n - 1)),
        max_size=24))
    return n, ops


@given(tree_ops())
def test_parent_graph_stays_acyclic(data):
    n, ops = data
    s = Scene()
    ids = [s.add_object(f"n{i}") for i in range(n)]
    for child_idx, parent_idx in ops:
        child = ids[child_idx]
        parent = None if parent_idx < 0 else ids[parent_idx]
        try:
            s.set_parent(child, parent)
        except CycleDetected:
            continue
    for oid in ids:
        seen = set()
        node = oid
        while node is not None:
            assert node not in seen, "cycle reached snapshotting"
            seen.add(node)
            node = s.get(node).parent


coords = st.floats(-50, 50, allow_nan=False)
angles = st.floats(-180, 179.9, allow_nan=False)
scales = st.floats(0.25, 4.0, allow_nan=False)


@given(
    st.tuples(coords, coords, coords), st.tuples(angles, angles, angles),
    st.tuples(scales, scales, scales),
    st.tuples(coords, coords, coords), st.tuples(angles, angles, angles),
    st.tuples(coords, coords, coords),
)
@settings(max_examples=150)
def test_world_local_roundtrip_identity(p1, e1, s1, p2, e2, point):
    s = Scene()
    a = s.add_object("a", Transform(position=p1, euler=e1, scale=s1))
    b = s.add_object("b", Transform(position=p2, euler=e2), parent=a)
    roundtrip = s.world_to_local(b, s.local_to_world(b, point))
    assert roundtrip == pytest.approx(point, abs=1e-6)


def test_snapshot_determinism_byte_identical():
    def build():
        s = Scene()
        a = s.add_object("alpha", Transform(position=(0.1, 0.2, 0.3),
                                            euler=(10, 20, 30)),
                         geometry=Geometry("cube"), tags={"x", "y"})
        s.add_object("beta", Transform(position=(1, 1, 1)), parent=a,
                     color=(0.25, 0.5, 0.75, 1.0))
        s.set_parent(s.find_name("beta"), None, preserve_world=True)
        return canonical_json(s.snapshot(7))

    assert build() == build()


def test_nearest_agrees_with_exhaustive_scan_large_scene():
    import random

    rng = random.Random(99)
    s = Scene()
    positions = {}
    for i in range(10_000):
        pos = (rng.uniform(-100, 100), rng.uniform(-100, 100),
               rng.uniform(-100, 100))
        oid = s.add_object(f"o{i}", Transform(position=pos),
                           geometry=Geometry("cube"))
        positions[oid] = pos
    origin = (3.0, -7.0, 12.0)
    got = s.resolve_reference({"nearest_to": origin, "kind": "cube"})
    best = min(positions, key=lambda oid: (
        sum((a - b) ** 2 for a, b in zip(positions[oid], origin)), oid))
    assert got == best
