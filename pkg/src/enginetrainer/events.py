"""Control-layer message system: ordered in-process publish/subscribe.

One bus per session. Delivery is synchronous; messages published from
inside a handler are queued and delivered after the current message
finishes, so subscribers always observe the global log order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Union

Scalar = Union[str, int, float, bool, None]


class ActionType(str, Enum):
    STEP_STARTED = "StepStarted"
    ACTION_PERFORMED = "ActionPerformed"
    STEP_COMPLETED = "StepCompleted"
    STEP_FAILED = "StepFailed"
    HINT_ISSUED = "HintIssued"
    PROGRESS_UPDATED = "ProgressUpdated"
    SESSION_FINISHED = "SessionFinished"


class BusClosedError(Exception):
    pass


@dataclass(frozen=True)
class EventMessage:
    seq: int
    t_ms: float
    action: ActionType
    target: str
    payload: Mapping[str, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        if not self.target:
            raise ValueError("target object must be non-empty")

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "t_ms": self.t_ms,
            "action": self.action.value,
            "target": self.target,
            "payload": dict(self.payload),
        }

    def to_log_line(self) -> str:
        # field order is fixed for bit-exact log comparisons
        return json.dumps(self.to_json(), ensure_ascii=False)

    @classmethod
    def from_json(cls, doc: Mapping) -> "EventMessage":
        return cls(
            seq=int(doc["seq"]),
            t_ms=float(doc["t_ms"]),
            action=ActionType(doc["action"]),
            target=str(doc["target"]),
            payload=dict(doc.get("payload", {})),
        )


Handler = Callable[[EventMessage], None]


@dataclass
class _Subscription:
    id: str
    filter: frozenset[ActionType]  # empty = all
    handler: Handler

    def matches(self, message: EventMessage) -> bool:
        return not self.filter or message.action in self.filter


class EventBus:
    """Per-session bus with an append-only log and gapless sequence numbers."""

    def __init__(self):
        self._subs: dict[str, _Subscription] = {}
        self._log: list[EventMessage] = []
        self._next_sub = 1
        self._queue: list[tuple[float, ActionType, str, dict]] = []
        self._delivering = False
        self._closed = False

    def subscribe(self, filter: Iterable[ActionType] = (), handler: Optional[Handler] = None) -> str:
        if self._closed:
            raise BusClosedError("cannot subscribe on a closed bus")
        sub_id = f"sub-{self._next_sub}"
        self._next_sub += 1
        self._subs[sub_id] = _Subscription(sub_id, frozenset(filter), handler or (lambda m: None))
        return sub_id

    def unsubscribe(self, sub_id: str) -> None:
        self._subs.pop(sub_id, None)

    def publish(self, action: ActionType, target: str,
                payload: Optional[Mapping[str, Scalar]] = None, t_ms: float = 0.0) -> int:
        """Publish one message; returns the number of handlers invoked for it.

        Re-entrant publishes (from inside a handler) are queued and delivered
        after the current message completes; their reported count is the
        number of subscriptions matching at publish time.
        """
        if self._closed:
            raise BusClosedError("bus is closed")
        if self._delivering:
            self._queue.append((t_ms, action, target, dict(payload or {})))
            return sum(1 for s in self._subs.values()
                       if not s.filter or action in s.filter)
        count = self._emit(action, target, dict(payload or {}), t_ms)
        while self._queue:
            t, a, tgt, p = self._queue.pop(0)
            self._emit(a, tgt, p, t)
        return count

    def _emit(self, action: ActionType, target: str, payload: dict, t_ms: float) -> int:
        message = EventMessage(seq=len(self._log) + 1, t_ms=t_ms,
                               action=action, target=target, payload=payload)
        self._log.append(message)
        matching = [s for s in self._subs.values() if s.matches(message)]
        self._delivering = True
        try:
            for sub in matching:
                sub.handler(message)
        finally:
            self._delivering = False
        return len(matching)

    def drain_log(self) -> list[EventMessage]:
        return list(self._log)

    def close(self) -> None:
        self._closed = True

    @property
    def closed(self) -> bool:
        return self._closed


def write_event_log(messages: Iterable[EventMessage]) -> str:
    """Newline-delimited JSON, one event per line, fixed field order."""
    return "".join(m.to_log_line() + "\n" for m in messages)


def read_event_log(text: str) -> list[EventMessage]:
    return [EventMessage.from_json(json.loads(line))
            for line in text.splitlines() if line.strip()]
