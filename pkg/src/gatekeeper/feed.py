"""In-process fan-out of access events to live subscribers.

Each subscription owns a bounded queue sized at subscribe time, so one slow
consumer can never stall publishers or its peers: publishing is always
non-blocking, and a full queue drops the subscription (its consumer still
drains what was buffered, then sees the overflow flag). Events reach every
subscriber whose filter matches, in publish order, at most once.
"""

from __future__ import annotations

import itertools
import queue
import threading
from dataclasses import dataclass, field

from .events import AccessEvent, EventFilter


@dataclass
class Subscription:
    """One live consumer; time fields of the filter are ignored."""

    subscriber_id: int
    filter: EventFilter
    queue: "queue.Queue[AccessEvent]"
    overflowed: threading.Event = field(default_factory=threading.Event)


class EventFeed:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._subscriptions: dict[int, Subscription] = {}
        self._ids = itertools.count(1)

    def subscribe(
        self, flt: EventFilter = EventFilter(), buffer_size: int = 1024
    ) -> Subscription:
        """Register a consumer; delivery starts with the next publish."""
        if buffer_size < 1:
            raise ValueError("buffer_size must be positive")
        sub = Subscription(next(self._ids), flt, queue.Queue(maxsize=buffer_size))
        with self._lock:
            self._subscriptions[sub.subscriber_id] = sub
        return sub

    def unsubscribe(self, subscriber_id: int) -> None:
        """Stop delivery; unknown ids are ignored."""
        with self._lock:
            self._subscriptions.pop(subscriber_id, None)

    def publish(self, event: AccessEvent) -> None:
        """Enqueue to every matching subscription without ever blocking."""
        with self._lock:
            subscriptions = list(self._subscriptions.values())
        for sub in subscriptions:
            if not sub.filter.matches(event, ignore_time=True):
                continue
            try:
                sub.queue.put_nowait(event)
            except queue.Full:
                sub.overflowed.set()
                self.unsubscribe(sub.subscriber_id)

    @property
    def subscriber_count(self) -> int:
        with self._lock:
            return len(self._subscriptions)
