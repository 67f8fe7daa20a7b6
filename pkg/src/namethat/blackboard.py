"""Shared keyed space with default reads, expiring entries, priority-gated
writes, and timer- or trigger-driven agents.

Agents never talk to each other directly: one writes a key, others react.
A write carries an optional validity window, after which the entry behaves
exactly as if it had never been written, and a priority: while a
higher-priority entry is live, lower-priority writes to the same key are
discarded outright — not queued, not deferred, and they never notify anyone.

Two execution modes share the same API:

* threaded (default): every agent owns a thread, time is the wall clock;
* cooperative: built with ``cooperative=True`` and (usually) a
  :class:`~namethat.clock.VirtualClock`; nothing runs until the caller pumps
  pending triggers or advances virtual time, which makes runs deterministic.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import threading
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable

from .clock import Clock, VirtualClock, WallClock

logger = logging.getLogger(__name__)


@dataclass
class _Entry:
    value: Any
    priority: float
    expires_at: float | None  # None → never expires


class Subscription:
    """Synchronous subscription: the callback runs once per accepted write.

    Callbacks are invoked while the space lock is held, which guarantees a
    per-key total order; keep them short and non-blocking.
    """

    def __init__(self, key: str, callback: Callable[[Any], None]) -> None:
        self.key = key
        self.callback = callback
        self.active = True


class _Inbox:
    """Pending-notification buffer for a triggered agent.

    By default only the newest value is retained: a slow consumer observes
    the latest write and intermediate ones are dropped. ``fifo=True`` keeps
    every notification instead.
    """

    def __init__(self, fifo: bool = False) -> None:
        self._fifo = fifo
        self._items: deque[Any] = deque()
        self.condition = threading.Condition()

    def put(self, value: Any) -> None:
        with self.condition:
            if not self._fifo:
                self._items.clear()
            self._items.append(value)
            self.condition.notify_all()

    def pop(self) -> tuple[bool, Any]:
        with self.condition:
            if self._items:
                return True, self._items.popleft()
            return False, None

    def __len__(self) -> int:
        with self.condition:
            return len(self._items)


class Agent:
    """Base agent handle: stop it, or hold it busy for a while.

    ``stop`` is idempotent and waits for an in-flight body to finish. Body
    exceptions are caught and logged so one bad invocation never kills the
    agent loop.
    """

    def __init__(self, space: "Space", name: str) -> None:
        self.space = space
        self.name = name
        self.running = True
        self.busy_until = float("-inf")
        self._thread: threading.Thread | None = None
        self._stop_event = threading.Event()

    def hold(self, seconds: float) -> None:
        """Do not start the next body invocation before now + seconds.

        Models processing latency: pending notifications keep coalescing
        while the agent is held, so it resumes with the newest value.
        """
        if seconds < 0:
            raise ValueError("hold duration must be non-negative")
        self.busy_until = max(self.busy_until, self.space.now() + seconds)

    def stop(self) -> None:
        if not self.running and self._thread is None:
            return
        self.running = False
        self._stop_event.set()
        self._wake()
        thread = self._thread
        if thread is not None and thread is not threading.current_thread():
            thread.join()
            self._thread = None

    def _wake(self) -> None:
        pass

    def _run_body(self, fn: Callable, *args: Any) -> None:
        try:
            fn(*args)
        except Exception:
            logger.exception("agent %r body raised; continuing", self.name)


class TriggeredAgent(Agent):
    """Runs its body once per accepted write to one key."""

    def __init__(
        self,
        space: "Space",
        key: str,
        body: Callable[[Any], None],
        name: str,
        fifo: bool = False,
    ) -> None:
        super().__init__(space, name)
        self.key = key
        self.body = body
        self.inbox = _Inbox(fifo=fifo)

    def _wake(self) -> None:
        with self.inbox.condition:
            self.inbox.condition.notify_all()

    def _loop(self) -> None:
        clock = self.space._clock
        while self.running:
            now = clock.now()
            if self.busy_until > now:
                clock.sleep(self.busy_until - now)
                continue
            found, value = self.inbox.pop()
            if found:
                self._run_body(self.body, value)
                continue
            with self.inbox.condition:
                if self.running and not len(self.inbox):
                    self.inbox.condition.wait(timeout=0.1)


class TimedAgent(Agent):
    """Runs its body on a fixed period until stopped."""

    def __init__(
        self, space: "Space", period: float, body: Callable[[], None], name: str
    ) -> None:
        super().__init__(space, name)
        if not period > 0:
            raise ValueError(f"period must be positive, got {period}")
        self.period = period
        self.body = body
        self.next_due = space.now() + period

    def _loop(self) -> None:
        clock = self.space._clock
        while self.running:
            delay = self.next_due - clock.now()
            if delay > 0:
                if self._stop_event.wait(timeout=delay):
                    return
                continue
            self._run_body(self.body)
            self.next_due += self.period
            if self.next_due < clock.now():
                # Body overran the period: skip the backlog instead of bursting.
                self.next_due = clock.now() + self.period


class Space:
    """The blackboard: a thread-safe keyed store plus the agent runtime."""

    def __init__(self, clock: Clock | None = None, cooperative: bool = False) -> None:
        if clock is None:
            clock = VirtualClock() if cooperative else WallClock()
        self._clock = clock
        self._cooperative = cooperative
        self._lock = threading.RLock()
        self._entries: dict[str, _Entry] = {}
        self._subscriptions: dict[str, list[Subscription]] = {}
        self._triggers: dict[str, list[TriggeredAgent]] = {}
        self._agents: list[Agent] = []
        self._timed: list[TimedAgent] = []
        self._scheduled: list[tuple[float, int, Callable[[], None]]] = []
        self._timers: list[threading.Timer] = []
        self._seq = itertools.count()

    @property
    def cooperative(self) -> bool:
        return self._cooperative

    def now(self) -> float:
        return self._clock.now()

    # -- store ----------------------------------------------------------------

    def write(self, key: str, value: Any, validity: float | None = None,
              priority: float = 1.0) -> bool:
        """Write a value; returns True if accepted, False if discarded.

        Accepted iff the key is effectively absent (never written, or its
        entry has expired) or the write's priority is at least the live
        entry's. A discarded write leaves no trace: it never surfaces later
        and never notifies a subscriber or trigger.
        """
        if not isinstance(key, str) or not key:
            raise ValueError(f"key must be a non-empty string, got {key!r}")
        if validity is not None and not validity > 0:
            raise ValueError(f"validity must be positive, got {validity}")
        with self._lock:
            now = self._clock.now()
            current = self._live_entry(key, now)
            if current is not None and priority < current.priority:
                return False
            expires_at = None if validity is None else now + validity
            self._entries[key] = _Entry(value, float(priority), expires_at)
            for sub in list(self._subscriptions.get(key, ())):
                if sub.active:
                    try:
                        sub.callback(value)
                    except Exception:
                        logger.exception("subscriber on %r raised; continuing", key)
            for agent in list(self._triggers.get(key, ())):
                if agent.running:
                    agent.inbox.put(value)
        return True

    def read(self, key: str, default: Any = None) -> Any:
        """Current unexpired value for the key, else the default. Never blocks."""
        with self._lock:
            entry = self._live_entry(key, self._clock.now())
            return default if entry is None else entry.value

    def _live_entry(self, key: str, now: float) -> _Entry | None:
        entry = self._entries.get(key)
        if entry is None:
            return None
        if entry.expires_at is not None and now >= entry.expires_at:
            del self._entries[key]
            return None
        return entry

    def sweep(self) -> int:
        """Drop expired entries eagerly; purely a memory bound, reads do not
        need it. Returns the number of entries removed."""
        with self._lock:
            now = self._clock.now()
            dead = [
                key
                for key, entry in self._entries.items()
                if entry.expires_at is not None and now >= entry.expires_at
            ]
            for key in dead:
                del self._entries[key]
            return len(dead)

    # -- subscriptions and agents ----------------------------------------------

    def subscribe(self, key: str, callback: Callable[[Any], None]) -> Subscription:
        """Invoke the callback once per accepted write to the key."""
        if not isinstance(key, str) or not key:
            raise ValueError(f"key must be a non-empty string, got {key!r}")
        sub = Subscription(key, callback)
        with self._lock:
            self._subscriptions.setdefault(key, []).append(sub)
        return sub

    def unsubscribe(self, subscription: Subscription) -> None:
        with self._lock:
            subscription.active = False
            subs = self._subscriptions.get(subscription.key)
            if subs and subscription in subs:
                subs.remove(subscription)

    def spawn_triggered(
        self,
        key: str,
        body: Callable[[Any], None],
        *,
        name: str | None = None,
        init: Callable[[], None] | None = None,
        fifo: bool = False,
    ) -> TriggeredAgent:
        """Start an agent whose body runs once per accepted write to ``key``.

        While the body is busy (or held), pending notifications coalesce to
        the newest value unless ``fifo=True``.
        """
        if not isinstance(key, str) or not key:
            raise ValueError(f"key must be a non-empty string, got {key!r}")
        agent = TriggeredAgent(self, key, body, name or f"on:{key}", fifo=fifo)
        if init is not None:
            init()
        with self._lock:
            self._triggers.setdefault(key, []).append(agent)
            self._agents.append(agent)
        if not self._cooperative:
            agent._thread = threading.Thread(
                target=agent._loop, name=agent.name, daemon=True
            )
            agent._thread.start()
        return agent

    def spawn_timed(
        self,
        period: float,
        body: Callable[[], None],
        *,
        name: str | None = None,
        init: Callable[[], None] | None = None,
    ) -> TimedAgent:
        """Start an agent whose body runs every ``period`` seconds."""
        agent = TimedAgent(self, period, body, name or f"every:{period}")
        if init is not None:
            init()
        with self._lock:
            self._timed.append(agent)
            self._agents.append(agent)
        if not self._cooperative:
            agent._thread = threading.Thread(
                target=agent._loop, name=agent.name, daemon=True
            )
            agent._thread.start()
        return agent

    def call_later(self, delay: float, fn: Callable[[], None]) -> None:
        """Run ``fn`` once after ``delay`` seconds."""
        if delay < 0:
            raise ValueError("delay must be non-negative")
        if self._cooperative:
            heapq.heappush(
                self._scheduled, (self._clock.now() + delay, next(self._seq), fn)
            )
            return

        def guarded() -> None:
            try:
                fn()
            except Exception:
                logger.exception("scheduled callback raised")

        timer = threading.Timer(delay, guarded)
        timer.daemon = True
        with self._lock:
            self._timers.append(timer)
        timer.start()

    def stop_all(self) -> None:
        with self._lock:
            agents = list(self._agents)
            timers = list(self._timers)
            self._timers.clear()
        for timer in timers:
            timer.cancel()
        for agent in agents:
            agent.stop()

    # -- cooperative pumping ----------------------------------------------------

    def _require_cooperative(self) -> None:
        if not self._cooperative:
            raise RuntimeError(
                "pump/advance only exist in cooperative mode; threaded agents "
                "run by themselves"
            )

    def pump(self, max_rounds: int = 100_000) -> None:
        """Run due scheduled callbacks and ready triggered bodies until
        nothing is left to do at the current instant."""
        self._require_cooperative()
        for _ in range(max_rounds):
            progress = self._run_due_scheduled()
            progress |= self._run_ready_triggers()
            if not progress:
                return
        raise RuntimeError("pump did not quiesce; agents keep producing work")

    def _run_due_scheduled(self) -> bool:
        progress = False
        now = self._clock.now()
        while self._scheduled and self._scheduled[0][0] <= now:
            _, _, fn = heapq.heappop(self._scheduled)
            try:
                fn()
            except Exception:
                logger.exception("scheduled callback raised")
            progress = True
        return progress

    def _run_ready_triggers(self) -> bool:
        progress = False
        now = self._clock.now()
        for agent in list(self._agents):
            if not isinstance(agent, TriggeredAgent) or not agent.running:
                continue
            if agent.busy_until > now:
                continue
            found, value = agent.inbox.pop()
            if found:
                agent._run_body(agent.body, value)
                progress = True
        return progress

    def _next_wakeup(self, limit: float) -> float | None:
        now = self._clock.now()
        candidates: list[float] = []
        if self._scheduled:
            candidates.append(self._scheduled[0][0])
        for agent in self._timed:
            if agent.running:
                candidates.append(agent.next_due)
        for agent in self._agents:
            if (
                isinstance(agent, TriggeredAgent)
                and agent.running
                and len(agent.inbox)
                and agent.busy_until > now
            ):
                candidates.append(agent.busy_until)
        future = [t for t in candidates if now < t <= limit]
        return min(future) if future else None

    def _run_due_timed(self) -> None:
        now = self._clock.now()
        for agent in list(self._timed):
            if agent.running and agent.next_due <= now:
                agent._run_body(agent.body)
                agent.next_due += agent.period

    def advance(self, seconds: float) -> None:
        """Move virtual time forward, firing everything that comes due.

        Steps through intermediate wakeups (timer ticks, scheduled callbacks,
        agents coming off hold) in time order, pumping triggers at each stop,
        so the run is deterministic.
        """
        self._require_cooperative()
        if seconds < 0:
            raise ValueError("cannot advance by a negative duration")
        if not isinstance(self._clock, VirtualClock):
            raise RuntimeError("advance requires a VirtualClock")
        target = self._clock.now() + seconds
        while True:
            self.pump()
            wake = self._next_wakeup(target)
            if wake is None:
                break
            self._clock.advance(wake - self._clock.now())
            self._run_due_timed()
        remaining = target - self._clock.now()
        if remaining > 0:
            self._clock.advance(remaining)
            self._run_due_timed()
        self.pump()
