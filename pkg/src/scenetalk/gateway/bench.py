"""Context-reduction benchmark and kernel backend comparison.

``bench`` builds a deterministic synthetic scene and measures how many
estimated tokens a one-category/one-property context slice costs compared
to the full dump of every category with every property. The reduction is
the desk-scale analogue of trimming prompt context instead of sending the
whole scene.
"""

import random
import time

from ..context import ALLOWED_PROPERTIES, CATEGORY_KINDS, ContextCategory
from ..engine import Engine
from ..jsonutil import format_float
from ..scene import Geometry, Transform

BENCH_SEED = 2024

_PRIMS = ("cube", "sphere", "cylinder", "capsule")
_TAG_POOL = ("decor", "toy", "marker", "loose", "fixture")
_PREFAB_NAMES = ("desk", "office_chair", "bookshelf", "lamp", "monitor",
                 "keyboard", "mug", "plant", "whiteboard", "robot_avatar")


def build_synthetic_scene(scene_size: int) -> Engine:
    """Deterministic scene with every context category populated:
    ``scene_size`` objects (10+ properties each), a prefab registry, room
    proxies, running animations, hand tracking and message history."""
    from ..creation import PrefabRegistry

    rng = random.Random(BENCH_SEED)
    prefabs = PrefabRegistry.from_dict({
        "schema_version": 1,
        "prefabs": [
            {"name": name, "tags": ["furniture" if i % 2 else "supply"],
             "parts": [{"primitive": "cube"}]}
            for i, name in enumerate(_PREFAB_NAMES)
        ],
    })
    engine = Engine(prefabs=prefabs)
    engine.fusion.load_room_scan({
        "schema_version": 1,
        "proxies": [
            {"id": f"proxy_{i}", "kind": "volume",
             "tags": [rng.choice(("table", "storage", "couch", "shelf"))],
             "center": [rng.uniform(-4, 4), 0.4, rng.uniform(-4, 4)],
             "extents": [0.8, 0.4, 0.5], "yaw_deg": 0.0}
            for i in range(8)
        ],
    })
    ids = []
    for i in range(scene_size):
        parent = rng.choice(ids) if ids and rng.random() < 0.3 else None
        object_id = engine.scene.add_object(
            name=f"bench_object_{i}",
            transform=Transform(
                position=(rng.uniform(-5, 5), rng.uniform(0, 3),
                          rng.uniform(-5, 5)),
                euler=(rng.uniform(-180, 179), rng.uniform(-80, 80),
                       rng.uniform(-180, 179)),
                scale=(rng.uniform(0.2, 2.0),) * 3,
            ),
            parent=parent,
            color=(rng.random(), rng.random(), rng.random(), 1.0),
            geometry=Geometry(rng.choice(_PRIMS)),
            physics=rng.random() < 0.5,
            grabbable=rng.random() < 0.3,
            tags={rng.choice(_TAG_POOL), rng.choice(_TAG_POOL)},
        )
        ids.append(object_id)
    for i in range(20):
        engine.context.animations.register(
            f"bench_anim_{i}",
            {"unit": rng.choice(("Translate", "Rotate", "Orbit", "Gaze")),
             "subject": f"bench_object_{rng.randrange(scene_size)}"})
    from ..fusion import HandPose
    for hand in ("left", "right"):
        engine.fusion.update_hand_pose(HandPose.synthetic(
            hand, (rng.uniform(-0.4, 0.4), 1.1, 0.4), timestamp=1.0))
    for i in range(10):
        engine.context.record_message(
            f"benchmark request {i}: rearrange the scene objects please")
    return engine


def run_bench(scene_size: int = 200, category: str = "virtual_objects",
              prop: str = "position") -> dict:
    started = time.perf_counter()
    engine = build_synthetic_scene(scene_size)
    snapshot = engine.snapshot()
    ctx = engine.context

    reduced_request = [ContextCategory(category, frozenset({prop})
                                       if prop in ALLOWED_PROPERTIES[category]
                                       else frozenset())]
    reduced = ctx.retrieve(reduced_request, snapshot,
                           prefabs=engine.creator.prefabs,
                           room_proxies=engine.fusion.proxies,
                           user=engine.user)
    full = ctx.retrieve(ctx.full_request(), snapshot,
                        prefabs=engine.creator.prefabs,
                        room_proxies=engine.fusion.proxies,
                        user=engine.user)
    elapsed = time.perf_counter() - started
    ratio = (reduced.estimated_tokens / full.estimated_tokens
             if full.estimated_tokens else 0.0)
    return {
        "scene_size": scene_size,
        "category": category,
        "property": prop,
        "reduced_tokens": reduced.estimated_tokens,
        "full_tokens": full.estimated_tokens,
        "ratio": ratio,
        "elapsed_s": elapsed,
    }


def bench_csv(result: dict) -> str:
    header = "scene_size,category,property,reduced_tokens,full_tokens,ratio"
    row = (f"{result['scene_size']},{result['category']},"
           f"{result['property']},{result['reduced_tokens']},"
           f"{result['full_tokens']},{format_float(result['ratio'])}")
    return header + "\n" + row + "\n"


def bench_kernels(iterations: int = 20000) -> dict:
    """Compare the compiled kernel backend against the pure-Python twin
    on a representative transform workload."""
    from ..kernels import _transform_py

    results = {}
    backends = {"pure-python": _transform_py}
    try:
        from ..kernels import _transform_cy
        backends["compiled"] = _transform_cy
    except ImportError:
        pass
    for name, impl in backends.items():
        rng = random.Random(7)
        started = time.perf_counter()
        acc = 0.0
        for _ in range(iterations):
            yaw = rng.uniform(-180, 180)
            pitch = rng.uniform(-89, 89)
            roll = rng.uniform(-180, 180)
            m, t = impl.trs_to_affine(
                (rng.random(), rng.random(), rng.random()),
                (yaw, pitch, roll),
                (1.0, 2.0, 0.5))
            m2, t2 = impl.affine_compose(m, t, m, t)
            p = impl.affine_apply(m2, t2, (1.0, 1.0, 1.0))
            e = impl.mat3_to_euler(impl.euler_to_mat3(yaw, pitch, roll))
            acc += p[0] + e[0]
        results[name] = {"seconds": time.perf_counter() - started,
                         "checksum": acc}
    if "compiled" in results:
        results["speedup"] = (results["pure-python"]["seconds"]
                              / results["compiled"]["seconds"])
    return results
