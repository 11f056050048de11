"""Reality fusion: room scans, hand poses, anchors, building blocks."""

import pytest

from scenetalk.errors import NotFound, SchemaViolation, UnknownBlock
from scenetalk.fusion import (
    BONE_NAMES,
    HandPose,
    default_spawn_position,
    parse_room_scan,
)
from scenetalk.scene import Geometry

from conftest import ROOM_SCAN_DOC


def test_empty_scan_changes_nothing(engine):
    proxies = engine.fusion.load_room_scan(
        {"schema_version": 1, "proxies": []})
    assert proxies == []
    assert len(engine.scene) == 0


def test_table_volume_top_surface(room_engine):
    proxy = next(p for p in room_engine.fusion.proxies
                 if "table" in p.tags)
    assert proxy.top == pytest.approx(0.7)  # center.y + extents.y
    scene_obj_id = room_engine.scene.find_name(proxy.generic_name)
    obj = room_engine.scene.get(scene_obj_id)
    assert obj.visible is False
    assert obj.physics is False
    assert not obj.is_placeholder
    assert "room_proxy" in obj.tags and "table" in obj.tags


def test_duplicate_proxy_ids_rejected():
    doc = {"schema_version": 1, "proxies": [
        {"id": "a", "kind": "volume", "tags": [], "center": [0, 0, 0],
         "extents": [1, 1, 1]},
        {"id": "a", "kind": "volume", "tags": [], "center": [1, 0, 0],
         "extents": [1, 1, 1]},
    ]}
    with pytest.raises(SchemaViolation) as err:
        parse_room_scan(doc)
    assert "proxies[1].id" in str(err.value)


def test_schema_violation_paths():
    with pytest.raises(SchemaViolation) as err:
        parse_room_scan({"schema_version": 1, "proxies": [
            {"id": "p", "kind": "volume", "tags": [], "center": [0, 0]}]})
    assert "center" in str(err.value)
    with pytest.raises(SchemaViolation):
        parse_room_scan({"proxies": []})
    with pytest.raises(SchemaViolation) as err:
        parse_room_scan({"schema_version": 1, "proxies": [
            {"id": "p", "kind": "plane", "tags": [], "center": [0, 0, 0],
             "extents": [1, 0.2, 1]}]})
    assert "extents" in str(err.value)


def test_proxies_hidden_but_in_real_world_context(room_engine):
    from scenetalk.context import ContextCategory

    snap = room_engine.snapshot()
    visible_names = [o["name"] for o in snap["objects"] if o["visible"]]
    assert visible_names == []
    payload = room_engine.context.retrieve(
        [ContextCategory("virtual_objects", frozenset({"position"})),
         ContextCategory("real_world", frozenset({"tags"}))],
        snap, room_proxies=room_engine.fusion.proxies)
    assert "invisible volume" not in payload.sections["virtual_objects"]
    assert "table" in payload.sections["real_world"]


def test_resolve_real_anchor_nearest_to_head(engine):
    engine.fusion.load_room_scan({"schema_version": 1, "proxies": [
        {"id": "near", "kind": "volume", "tags": ["table"],
         "center": [0, 0.4, 1], "extents": [0.5, 0.4, 0.5]},
        {"id": "far", "kind": "volume", "tags": ["table"],
         "center": [0, 0.4, 3], "extents": [0.5, 0.4, 0.5]},
    ]})
    assert engine.fusion.resolve_real_anchor("table").id == "near"
    with pytest.raises(NotFound):
        engine.fusion.resolve_real_anchor("couch")


def test_hand_pose_has_all_16_bones():
    pose = HandPose.synthetic("right", (0, 1, 0.3))
    assert set(pose.bones) == set(BONE_NAMES)
    assert len(BONE_NAMES) == 16
    with pytest.raises(ValueError):
        HandPose(hand="right", palm_position=(0, 0, 0),
                 palm_orientation=(0, 0, 0), bones={"wrist": (0, 0, 0)},
                 timestamp=0.0)


def test_first_pose_sets_user_context(engine):
    pose = HandPose.synthetic("right", (0.2, 1.0, 0.4), timestamp=1.0)
    assert engine.fusion.update_hand_pose(pose) is True
    assert engine.user.hand("right").palm_position == (0.2, 1.0, 0.4)


def test_stale_pose_dropped(engine, caplog):
    engine.fusion.update_hand_pose(
        HandPose.synthetic("left", (0, 1, 0), timestamp=5.0))
    with caplog.at_level("WARNING"):
        accepted = engine.fusion.update_hand_pose(
            HandPose.synthetic("left", (9, 9, 9), timestamp=4.0))
    assert accepted is False
    assert engine.user.hand("left").palm_position == (0.0, 1.0, 0.0)
    assert "stale" in caplog.text


def test_grabbable_block_sets_flag(engine):
    oid = engine.scene.add_object("cube_1", geometry=Geometry("cube"))
    engine.fusion.attach_building_block("cube_1", "grabbable")
    snap = engine.snapshot()
    entry = next(o for o in snap["objects"] if o["id"] == oid)
    assert entry["grabbable"] is True


def test_unknown_block_rejected(engine):
    engine.scene.add_object("cube_1")
    with pytest.raises(UnknownBlock):
        engine.fusion.attach_building_block("cube_1", "levitate")


def test_hand_follow_tracks_palm_with_offset(engine):
    oid = engine.scene.add_object("cube_1", geometry=Geometry("cube"))
    engine.fusion.attach_building_block(
        "cube_1", "hand_follow", hand="right", offset=(0, 0.1, 0))
    engine.fusion.update_hand_pose(
        HandPose.synthetic("right", (0.3, 1.0, 0.5), timestamp=1.0))
    engine.tick()
    assert engine.scene.world_position(oid) == pytest.approx(
        (0.3, 1.1, 0.5), abs=1e-6)
    # palm moves +0.1 in x; object follows on the next tick
    engine.fusion.update_hand_pose(
        HandPose.synthetic("right", (0.4, 1.0, 0.5), timestamp=2.0))
    engine.tick()
    assert engine.scene.world_position(oid) == pytest.approx(
        (0.4, 1.1, 0.5), abs=1e-6)


def test_hand_follow_before_any_pose_uses_head_default(engine):
    engine.user.set_head((0, 1.6, 0))
    oid = engine.scene.add_object("cube_1", geometry=Geometry("cube"))
    engine.fusion.attach_building_block("cube_1", "hand_follow",
                                        hand="left", offset=(0, 0, 0))
    engine.tick()
    assert engine.scene.world_position(oid) == pytest.approx(
        default_spawn_position(engine.user), abs=1e-9)


def test_pick_and_release_restore_parent(engine):
    shelf = engine.scene.add_object("shelf")
    cube = engine.scene.add_object("cube_1", parent=shelf,
                                   geometry=Geometry("cube"))
    engine.fusion.update_hand_pose(
        HandPose.synthetic("right", (0.5, 1.2, 0.4), timestamp=1.0))
    with pytest.raises(UnknownBlock):
        engine.fusion.pick("cube_1")  # not grabbable yet
    engine.fusion.attach_building_block("cube_1", "grabbable")
    before = engine.scene.world_position(cube)
    engine.fusion.pick("cube_1", hand="right")
    parent = engine.scene.get(cube).parent
    assert engine.scene.get(parent).name == "hand_anchor_right"
    engine.fusion.update_hand_pose(
        HandPose.synthetic("right", (1.5, 1.2, 0.4), timestamp=2.0))
    engine.tick()
    # the grip offset is preserved: the cube moves by the palm's delta
    moved = engine.scene.world_position(cube)
    assert moved == pytest.approx((before[0] + 1.0, before[1], before[2]),
                                  abs=1e-6)
    engine.fusion.release()
    assert engine.scene.get(cube).parent == shelf
    assert engine.scene.world_position(cube) == pytest.approx(moved,
                                                              abs=1e-9)
