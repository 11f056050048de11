"""Regenerates the task fixtures: scripts, transcripts and goldens.

Each task pairs a step script with handcrafted model responses. Running
this tool replays the steps through the real pipeline with a
SequenceProvider, records the digest-keyed transcript, then pins the
golden via the replay machinery. Review goldens before committing.

    python3 fixtures/make_fixtures.py [--goldens]
"""

import argparse
import json
import sys
from pathlib import Path

HERE = Path(__file__).parent
TASKS_DIR = HERE / "tasks"
GOLDENS_DIR = TASKS_DIR / "goldens"


def j(value) -> str:
    return json.dumps(value)


def initial(*subtasks) -> str:
    return j({"subtasks": list(subtasks)})


def sub(task_type, text, *categories):
    return {"task_type": task_type, "paraphrased_request": text,
            "categories": [{"kind": k, "properties": sorted(p)}
                           for k, p in categories]}


TASKS = {
    "task1_car": {
        "script": {
            "schema_version": 1,
            "timestep": 0.02,
            "prefabs": "../prefabs.json",
            "steps": [
                {"request": "build a small car out of primitives"},
                {"ticks": 50},
                {"request": "make the car twice as big"},
                {"ticks": 100},
            ],
            "golden": "goldens/task1_car.golden.json",
        },
        "responses": [
            initial(sub("create", "assemble a small car from primitives",
                        ("resources", {"tags"}),
                        ("virtual_objects", {"position"}))),
            "Here is your car. " + j({"objects": [
                {"name": "car_body", "primitive": "cube",
                 "position": [0, 0.5, 0], "scale": [1.8, 0.5, 0.9],
                 "color": "red"},
                {"name": "car_cabin", "primitive": "cube",
                 "parent": "car_body", "frame": "local",
                 "position": [0, 0.45, -0.1], "scale": [0.9, 0.4, 0.8],
                 "color": [0.75, 0.75, 0.8, 1.0]},
                {"name": "wheel_fl", "primitive": "sphere",
                 "parent": "car_body", "frame": "world",
                 "position": [-0.7, 0.25, 0.45], "scale": 0.25,
                 "color": "black"},
                {"name": "wheel_fr", "primitive": "sphere",
                 "parent": "car_body", "frame": "world",
                 "position": [0.7, 0.25, 0.45], "scale": 0.25,
                 "color": "black"},
                {"name": "wheel_bl", "primitive": "sphere",
                 "parent": "car_body", "frame": "world",
                 "position": [-0.7, 0.25, -0.45], "scale": 0.25,
                 "color": "black"},
                {"name": "wheel_br", "primitive": "sphere",
                 "parent": "car_body", "frame": "world",
                 "position": [0.7, 0.25, -0.45], "scale": 0.25,
                 "color": "black"},
            ]}),
            initial(sub("animate", "double the car's size",
                        ("virtual_objects", {"position", "scale"}),
                        ("history", set()))),
            "Growing the car now. " + j({"animations": [
                {"id": "car_grow_1", "unit": "Scaling",
                 "subject": "car_body", "target": [3.6, 1.0, 1.8],
                 "duration": 1.0},
            ]}),
        ],
    },
    "task2_supplies": {
        "script": {
            "schema_version": 1,
            "timestep": 0.02,
            "prefabs": "../prefabs.json",
            "room_scan": "../room_scan.json",
            "steps": [
                {"request": "place some office supplies on the table"},
                {"ticks": 20},
            ],
            "golden": "goldens/task2_supplies.golden.json",
        },
        "responses": [
            initial(sub("create", "place office supplies on the real table",
                        ("resources", {"tags"}),
                        ("real_world", {"position", "size", "tags"}))),
            "Supplies coming up. " + j({"objects": [
                {"name": "mug_1", "prefab": "mug",
                 "position": [0.2, 1.1, 1.0], "physics": True},
                {"name": "notebook_1", "primitive": "cube",
                 "position": [-0.3, 0.9, 0.8],
                 "scale": [0.25, 0.02, 0.18], "color": "blue",
                 "physics": True},
                {"name": "pen_holder_1", "prefab": "pen holder",
                 "position": [0.1, 1.0, 1.3], "physics": True},
                {"name": "stapler_1", "primitive": "cube",
                 "position": [1.0, 0.9, 1.0],
                 "scale": [0.12, 0.06, 0.07], "color": "black",
                 "physics": True},
            ]}),
        ],
    },
    "task3_cube_move": {
        "script": {
            "schema_version": 1,
            "timestep": 0.02,
            "prefabs": "../prefabs.json",
            "steps": [
                {"request": "create a green cube and move it to (2, 0.5, 2)"},
                {"ticks": 260},
            ],
            "golden": "goldens/task3_cube_move.golden.json",
        },
        "responses": [
            initial(
                sub("create", "create a green cube",
                    ("resources", {"tags"})),
                sub("animate", "move the green cube to (2, 0.5, 2)",
                    ("virtual_objects", {"position"}),
                    ("animations", set()))),
            j({"objects": [
                {"name": "cube_green_1", "primitive": "cube",
                 "position": [0, 0.5, 0], "color": "green"},
            ]}),
            "Moving it now. " + j({"animations": [
                {"id": "move_cube_1", "unit": "Translate",
                 "subject": "cube_green_1", "target": [2, 0.5, 2],
                 "speed": 1.0},
            ]}),
        ],
    },
    "task4_solar_system": {
        "script": {
            "schema_version": 1,
            "timestep": 0.02,
            "prefabs": "../prefabs.json",
            "steps": [
                {"request": "create a simple dynamic solar system"},
                {"ticks": 75},
            ],
            "golden": "goldens/task4_solar_system.golden.json",
        },
        "responses": [
            initial(
                sub("create", "create the sun, the earth and the moon",
                    ("resources", {"tags"})),
                sub("animate",
                    "orbit the earth around the sun and the moon around "
                    "the earth, spin the earth, grow the sun, color the "
                    "earth blue",
                    ("virtual_objects", {"position"}),
                    ("animations", set()))),
            j({"objects": [
                {"name": "sun", "primitive": "sphere",
                 "position": [0, 1.5, 0], "scale": 0.5, "color": "yellow"},
                {"name": "earth", "primitive": "sphere",
                 "position": [1.5, 1.5, 0], "scale": 0.2, "color": "white"},
                {"name": "moon", "primitive": "sphere",
                 "position": [1.9, 1.5, 0], "scale": 0.08,
                 "color": [0.6, 0.6, 0.6, 1.0]},
            ]}),
            j({"animations": [
                {"id": "orbit_earth_1", "unit": "Orbit", "subject": "earth",
                 "target": "sun", "speed": 30, "sequence_group": "earth_orbit"},
                {"id": "spin_earth_1", "unit": "Rotate", "subject": "earth",
                 "axis": "y", "speed": 90, "sequence_group": "earth_spin"},
                {"id": "orbit_moon_1", "unit": "Orbit", "subject": "moon",
                 "target": "earth", "speed": 90,
                 "sequence_group": "moon_orbit"},
                {"id": "grow_sun_1", "unit": "Scaling", "subject": "sun",
                 "target": 0.6, "duration": 1.0,
                 "sequence_group": "sun_grow"},
                {"id": "paint_earth_1", "unit": "Coloring",
                 "subject": "earth", "target": "blue", "duration": 1.0,
                 "sequence_group": "earth_paint"},
            ]}),
        ],
    },
    "task5_catch": {
        "script": {
            "schema_version": 1,
            "timestep": 0.02,
            "prefabs": "../prefabs.json",
            "room_scan": "../room_scan.json",
            "steps": [
                {"request": "create the robot avatar and a small ball"},
                {"ticks": 10},
                {"request": "have the robot carry the ball to the shelf"},
                {"ticks": 400},
            ],
            "golden": "goldens/task5_catch.golden.json",
        },
        "responses": [
            initial(sub("create", "create the robot avatar and a ball",
                        ("resources", {"tags"}))),
            j({"objects": [
                {"name": "robot_1", "prefab": "robot avatar",
                 "position": [0.5, 0, -0.5]},
                {"name": "ball_1", "primitive": "sphere",
                 "position": [2, 0.1, 1], "scale": 0.2, "color": "orange",
                 "physics": True},
            ]}),
            initial(sub("animate", "robot carries the ball to the shelf",
                        ("virtual_objects", {"position"}),
                        ("real_world", {"position", "size", "tags"}),
                        ("history", set()))),
            "On it. " + j({"animations": [
                {"id": "deliver_ball_1", "unit": "Catch",
                 "agent": "robot_1", "item": "ball_1",
                 "destination": [-2.0, 1.05, 0.5]},
            ]}),
        ],
    },
    "ui_e2e": {
        # drives the browser-console end-to-end test: one compound request
        # creating a grabbable cube and sliding it to a target
        "script": {
            "schema_version": 1,
            "timestep": 0.02,
            "prefabs": "../prefabs.json",
            "steps": [
                {"request": "create a grabbable red cube and slide it to "
                            "(1, 0.5, 1)"},
                {"ticks": 150},
            ],
            "golden": "goldens/ui_e2e.golden.json",
        },
        "responses": [
            initial(
                sub("create", "create a grabbable red cube",
                    ("resources", {"tags"})),
                sub("animate", "slide the cube to (1, 0.5, 1)",
                    ("virtual_objects", {"position"}))),
            j({"objects": [
                {"name": "drag_cube", "primitive": "cube",
                 "position": [0, 0.5, 0], "scale": 0.3, "color": "red",
                 "grabbable": True},
            ]}),
            "Sliding it over. " + j({"animations": [
                {"id": "slide_cube_1", "unit": "Translate",
                 "subject": "drag_cube", "target": [1, 0.5, 1],
                 "speed": 1.0},
            ]}),
        ],
    },
    "task6_gaze_follow": {
        "script": {
            "schema_version": 1,
            "timestep": 0.02,
            "prefabs": "../prefabs.json",
            "room_scan": "../room_scan.json",
            "steps": [
                {"request": "create a grabbable cube and keep the robot "
                            "watching it"},
                {"ticks": 25},
                {"hand_pose": {"hand": "right",
                               "palm_position": [1.2, 0.8, 1.2],
                               "timestamp": 1.0}},
                {"pick": {"object": "watch_cube", "hand": "right"}},
                {"hand_pose": {"hand": "right",
                               "palm_position": [0.5, 1.0, 0.8],
                               "timestamp": 2.0}},
                {"ticks": 25},
                {"hand_pose": {"hand": "right",
                               "palm_position": [0.0, 1.2, 0.5],
                               "timestamp": 3.0}},
                {"ticks": 25},
                {"release": {}},
                {"ticks": 25},
            ],
            "golden": "goldens/task6_gaze_follow.golden.json",
        },
        "responses": [
            initial(
                sub("create", "create the watcher robot and a small cube",
                    ("resources", {"tags"})),
                sub("fuse", "make the cube grabbable",
                    ("virtual_objects", {"position"})),
                sub("animate", "keep the robot gazing at the cube",
                    ("virtual_objects", {"position"}),
                    ("animations", set()))),
            j({"objects": [
                {"name": "watcher_bot", "prefab": "robot_avatar",
                 "position": [0, 0, 0]},
                {"name": "watch_cube", "primitive": "cube",
                 "position": [1.2, 0.8, 1.2], "scale": 0.15,
                 "color": "orange"},
            ]}),
            j({"actions": [
                {"block": "grabbable", "object": "watch_cube"},
            ]}),
            "Watching it. " + j({"animations": [
                {"id": "gaze_cube_1", "unit": "Gaze",
                 "subject": "watcher_bot", "target": "watch_cube"},
            ]}),
        ],
    },
}


def write_fixtures(write_goldens: bool) -> None:
    sys.path.insert(0, str(HERE.parent / "src"))
    from scenetalk.gateway.replay import replay, run_script
    from scenetalk.wrapper import SequenceProvider

    TASKS_DIR.mkdir(parents=True, exist_ok=True)
    GOLDENS_DIR.mkdir(parents=True, exist_ok=True)
    for name, task in TASKS.items():
        script_path = TASKS_DIR / f"{name}.script.json"
        transcript_path = TASKS_DIR / f"{name}.transcript.json"
        script_path.write_text(json.dumps(task["script"], indent=1) + "\n",
                               encoding="utf-8")
        provider = SequenceProvider(task["responses"])
        outcome = run_script(transcript_path, script_path, provider=provider)
        for request in outcome["report"]["requests"]:
            if request["warnings"]:
                raise SystemExit(
                    f"{name}: authoring produced warnings: "
                    f"{request['warnings']}")
        transcript_path.write_text(
            json.dumps(provider.transcript, indent=1) + "\n",
            encoding="utf-8")
        print(f"{name}: transcript with {len(provider.transcript)} calls, "
              f"{outcome['report']['objects']} objects, "
              f"{outcome['report']['events']} events")
        if write_goldens:
            report = replay(transcript_path, script_path, write_golden=True)
            print(f"{name}: golden pinned at {report['golden_written']}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--goldens", action="store_true",
                        help="also (re)write the golden files")
    args = parser.parse_args()
    write_fixtures(args.goldens)
