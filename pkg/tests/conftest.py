"""Shared fixtures and independent oracles.

The matrix-stack oracle deliberately uses numpy + scipy (never the
package's own kernels) so transform math is checked against an
independent implementation.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from scenetalk.creation import PrefabRegistry
from scenetalk.engine import Engine


def world_matrix_oracle(scene, object_id) -> np.ndarray:
    """Brute-force homogeneous 4x4 world matrix: M = T @ R @ S per node."""
    chain = []
    node = scene.get(object_id)
    while node is not None:
        chain.append(node)
        node = scene.get(node.parent) if node.parent is not None else None
    M = np.eye(4)
    for node in reversed(chain):
        T = np.eye(4)
        T[:3, 3] = node.transform.position
        R = np.eye(4)
        R[:3, :3] = Rotation.from_euler(
            "YXZ", node.transform.euler, degrees=True).as_matrix()
        S = np.diag([*node.transform.scale, 1.0])
        M = M @ T @ R @ S
    return M


def oracle_world_point(scene, object_id, point) -> np.ndarray:
    M = world_matrix_oracle(scene, object_id)
    return (M @ np.array([*point, 1.0]))[:3]


PREFAB_DOC = {
    "schema_version": 1,
    "prefabs": [
        {
            "name": "desk",
            "tags": ["furniture", "surface"],
            "default_scale": 1.0,
            "parts": [
                {"primitive": "cube", "local_position": [0, 0.72, 0],
                 "local_scale": [1.4, 0.06, 0.7],
                 "color": [0.45, 0.3, 0.2, 1.0]},
                {"primitive": "cylinder", "local_position": [-0.6, 0.36, -0.25],
                 "local_scale": [0.08, 0.72, 0.08]},
                {"primitive": "cylinder", "local_position": [0.6, 0.36, -0.25],
                 "local_scale": [0.08, 0.72, 0.08]},
                {"primitive": "cylinder", "local_position": [-0.6, 0.36, 0.25],
                 "local_scale": [0.08, 0.72, 0.08]},
            ],
        },
        {
            "name": "mug",
            "tags": ["supply"],
            "parts": [
                {"primitive": "cylinder",
                 "local_scale": [0.09, 0.11, 0.09],
                 "local_position": [0, 0.055, 0],
                 "color": [0.9, 0.9, 0.95, 1.0]},
            ],
        },
        {
            "name": "robot_avatar",
            "tags": ["agent"],
            "parts": [
                {"primitive": "capsule", "local_position": [0, 0.8, 0],
                 "local_scale": [0.4, 1.6, 0.4]},
                {"primitive": "sphere", "local_position": [0, 1.75, 0],
                 "local_scale": [0.3, 0.3, 0.3]},
            ],
        },
    ],
}

ROOM_SCAN_DOC = {
    "schema_version": 1,
    "proxies": [
        {"id": "scan_table_1", "kind": "volume", "tags": ["table"],
         "center": [0.0, 0.35, 1.0], "extents": [0.8, 0.35, 0.5],
         "yaw_deg": 0.0},
        {"id": "scan_floor", "kind": "plane", "tags": ["floor"],
         "center": [0.0, 0.0, 0.0], "extents": [4.0, 0.0, 4.0],
         "yaw_deg": 0.0},
        {"id": "scan_shelf_1", "kind": "volume", "tags": ["storage"],
         "center": [-2.0, 0.5, 0.5], "extents": [0.3, 0.5, 0.4],
         "yaw_deg": 0.0},
    ],
}


@pytest.fixture
def prefab_registry() -> PrefabRegistry:
    return PrefabRegistry.from_dict(PREFAB_DOC)


@pytest.fixture
def engine(prefab_registry) -> Engine:
    return Engine(prefabs=prefab_registry)


@pytest.fixture
def room_engine(engine) -> Engine:
    engine.fusion.load_room_scan(ROOM_SCAN_DOC)
    return engine
