"""The engine loop: single writer over the scene and its interpreters.

Per-tick order: drain the command inbox, advance animations, apply
hand-follow constraints, re-seat loose physics objects, then snapshot.
Commands arriving from other threads are queued and executed serialized
at the next tick boundary; in inline mode (tests, replay) they run
immediately.
"""

import logging
import queue
import threading
import time
from concurrent.futures import Future
from typing import Optional

from .animation import DEFAULT_TIMESTEP, Animator
from .context import ContextLibrary
from .creation import ObjectCreator, PrefabRegistry
from .fusion import FusionEngine, UserContext
from .scene import Scene

log = logging.getLogger(__name__)


class Engine:
    def __init__(self, prefabs: Optional[PrefabRegistry] = None,
                 timestep: float = DEFAULT_TIMESTEP,
                 history_capacity: int = 10):
        self.timestep = timestep
        self.scene = Scene()
        self.context = ContextLibrary(history_capacity)
        self.user = UserContext()
        self.fusion = FusionEngine(self.scene, self.user)
        self.creator = ObjectCreator(self.scene, prefabs, self.user)
        self.animator = Animator(self.scene, self.context.animations,
                                 timestep)
        self.tick_count = 0
        self.events: list = []       # animation events, progressed excluded
        self.warnings: list = []
        self._inbox: queue.Queue = queue.Queue()
        self._running = threading.Event()
        self._loop_thread: Optional[threading.Thread] = None
        self._snapshot_listeners: list = []
        self.scene.on_destroy(
            lambda obj: self.context.animations.remove_for_subject(obj.name))

    # -- command ingestion ---------------------------------------------------

    def call(self, fn, *args, **kwargs):
        """Run ``fn`` on the engine loop; immediate when no loop is running."""
        if self._loop_thread is None or not self._loop_thread.is_alive():
            return fn(*args, **kwargs)
        future: Future = Future()
        self._inbox.put((fn, args, kwargs, future))
        return future.result(timeout=30.0)

    def _drain_inbox(self) -> None:
        while True:
            try:
                fn, args, kwargs, future = self._inbox.get_nowait()
            except queue.Empty:
                return
            try:
                future.set_result(fn(*args, **kwargs))
            except Exception as exc:
                future.set_exception(exc)

    # -- ticking ---------------------------------------------------------------

    def tick(self) -> list:
        """One fixed step. Returns this tick's animation events."""
        self._drain_inbox()
        self.tick_count += 1
        events = self.animator.tick(self.timestep, self.tick_count)
        self.fusion.apply_constraints()
        self._reseat_physics()
        kept = [e for e in events if e["kind"] != "progressed"]
        self.events.extend(kept)
        return events

    def run_ticks(self, count: int) -> list:
        events = []
        for _ in range(count):
            events.extend(self.tick())
        return events

    def _reseat_physics(self) -> None:
        """Keep resting physics objects seated. An object is left to its
        driver while it, or any ancestor, is animated, grabbed, followed,
        or held by an Attach that has not been detached yet."""
        loose = []
        for obj in self.scene.objects():
            if not obj.physics or obj.is_placeholder:
                continue
            if self._is_driven(obj.id):
                continue
            loose.append(obj.id)
        if loose:
            self.creator.enforce_support(loose, self.fusion.proxies)

    def _is_driven(self, object_id: int) -> bool:
        node: Optional[int] = object_id
        while node is not None:
            if (self.animator.is_animated(node)
                    or self.animator.is_held(node)
                    or self.fusion.is_constrained(node)):
                return True
            node = self.scene.get(node).parent
        return False

    # -- snapshots ----------------------------------------------------------------

    def snapshot(self) -> dict:
        return self.scene.snapshot(self.tick_count,
                                   self.animator.active_animations())

    def warn(self, message: str) -> None:
        log.warning("%s", message)
        self.warnings.append({"tick": self.tick_count, "message": message})

    def on_snapshot(self, listener) -> None:
        """``listener(snapshot, events)`` invoked after every live tick."""
        self._snapshot_listeners.append(listener)

    # -- live loop -------------------------------------------------------------

    def start(self) -> None:
        if self._loop_thread is not None and self._loop_thread.is_alive():
            return
        self._running.set()
        self._loop_thread = threading.Thread(target=self._loop, daemon=True,
                                             name="engine-loop")
        self._loop_thread.start()

    def stop(self) -> None:
        self._running.clear()
        if self._loop_thread is not None:
            self._loop_thread.join(timeout=5.0)
            self._loop_thread = None

    def _loop(self) -> None:
        next_deadline = time.monotonic()
        while self._running.is_set():
            events = self.tick()
            if self._snapshot_listeners:
                snap = self.snapshot()
                kept = [e for e in events if e["kind"] != "progressed"]
                for listener in list(self._snapshot_listeners):
                    try:
                        listener(snap, kept)
                    except Exception:
                        log.exception("snapshot listener failed")
            next_deadline += self.timestep
            delay = next_deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_deadline = time.monotonic()
