"""Replay assembled captures into a sink on schedule.

Sinks: a pcap file (written at start time, no pacing), a callback (the test
harness surface, paced), or a live interface (raw Ethernet frames, paced,
requires privileges). Pacing is best-effort sleep-until-deadline per packet;
when the process falls behind, packets are sent immediately and the
accumulated lateness is reported once it exceeds 100 ms.
"""

from __future__ import annotations

import socket
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Union

from .builder import AssembledAttack
from .errors import (
    AlreadyFinished,
    CapturePermissionDenied,
    NotFound,
    PastSchedule,
    SinkUnavailable,
)
from .pcap import Capture, merge, transform_time, write_capture

_SPIN_SECONDS = 0.002  # busy-wait tail below typical sleep granularity
_LATENESS_BUDGET = 0.100


@dataclass(frozen=True)
class FileSink:
    path: Path

    kind = "file"

    def describe(self) -> dict:
        return {"kind": "file", "path": str(self.path)}


@dataclass(frozen=True)
class CallbackSink:
    """Delivers (monotonic send time in seconds, frame bytes) per packet."""

    deliver: Callable[[float, bytes], None]

    kind = "callback"

    def describe(self) -> dict:
        return {"kind": "callback"}


@dataclass(frozen=True)
class InterfaceSink:
    interface: str

    kind = "interface"

    def describe(self) -> dict:
        return {"kind": "interface", "interface": self.interface}


@dataclass(frozen=True)
class DiscardSink:
    """Dry run: paces exactly like a live replay but emits nowhere.

    Lets operators rehearse schedules and timing without privileges or
    sensor noise.
    """

    kind = "discard"

    def describe(self) -> dict:
        return {"kind": "discard"}


Sink = Union[FileSink, CallbackSink, InterfaceSink, DiscardSink]

STATES = ("scheduled", "running", "completed", "cancelled", "failed")


@dataclass(frozen=True)
class SessionView:
    """Consistent snapshot of a session; counters read atomically."""

    id: str
    scenario_id: str
    sink: dict
    state: str
    scheduled_start: float | None
    packets_sent: int
    total_packets: int
    errors: tuple[str, ...]

    @property
    def progress(self) -> float:
        if self.total_packets == 0:
            return 1.0 if self.state == "completed" else 0.0
        return self.packets_sent / self.total_packets

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "scenario_id": self.scenario_id,
            "sink": self.sink,
            "state": self.state,
            "scheduled_start": (
                None
                if self.scheduled_start is None
                else datetime.fromtimestamp(
                    self.scheduled_start, tz=timezone.utc
                ).isoformat()
            ),
            "packets_sent": self.packets_sent,
            "total_packets": self.total_packets,
            "progress": self.progress,
            "errors": list(self.errors),
        }


class InjectionSession:
    """One replay run; owns a single emitter thread."""

    def __init__(
        self,
        capture: Capture,
        sink: Sink,
        scenario_id: str = "",
        scheduled_start: float | None = None,
    ):
        self.id = uuid.uuid4().hex[:12]
        self.scenario_id = scenario_id
        self.capture = capture
        self.sink = sink
        self.scheduled_start = scheduled_start
        self._lock = threading.Lock()
        self._cancel = threading.Event()
        self._cancel_requested = False
        self._state = "scheduled"
        self._packets_sent = 0
        self._errors: list[str] = []
        self._thread = threading.Thread(target=self._run, daemon=True)

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> None:
        self._thread.start()

    def snapshot(self) -> SessionView:
        with self._lock:
            return SessionView(
                id=self.id,
                scenario_id=self.scenario_id,
                sink=self.sink.describe(),
                state=self._state,
                scheduled_start=self.scheduled_start,
                packets_sent=self._packets_sent,
                total_packets=len(self.capture.packets),
                errors=tuple(self._errors),
            )

    def cancel(self) -> SessionView:
        with self._lock:
            if self._state not in ("scheduled", "running"):
                raise AlreadyFinished(f"session {self.id} is {self._state}")
            self._cancel_requested = True
        self._cancel.set()
        self._thread.join(timeout=30)
        return self.snapshot()

    # -- emitter ---------------------------------------------------------------

    def _run(self) -> None:
        try:
            if self.scheduled_start is not None:
                delay = self.scheduled_start - time.time()
                if delay > 0 and self._cancel.wait(delay):
                    self._finalize()
                    return
            with self._lock:
                if self._cancel_requested:
                    self._finalize_locked()
                    return
                self._state = "running"
            self._emit()
            self._finalize()
        except Exception as exc:  # surfaced via status(), not raised
            with self._lock:
                self._errors.append(f"{type(exc).__name__}: {exc}")
                self._state = "failed"

    def _finalize(self) -> None:
        with self._lock:
            self._finalize_locked()

    def _finalize_locked(self) -> None:
        if self._state in ("failed",):
            return
        self._state = "cancelled" if self._cancel_requested else "completed"

    def _emit(self) -> None:
        if isinstance(self.sink, FileSink):
            if self._cancel.is_set():
                return
            self.sink.path.write_bytes(write_capture(self.capture))
            with self._lock:
                self._packets_sent = len(self.capture.packets)
            return

        send = self._sender()
        packets = self.capture.packets
        if not packets:
            return
        units = self.capture.ts_resolution.units_per_second
        t0 = self.capture.timestamp_units(0)
        start = time.monotonic()
        max_lateness = 0.0
        for index in range(len(packets)):
            if self._cancel.is_set():
                return
            target = start + (self.capture.timestamp_units(index) - t0) / units
            if not self._sleep_until(target):
                return
            now = time.monotonic()
            send(now, packets[index].data)
            with self._lock:
                self._packets_sent += 1
            max_lateness = max(max_lateness, now - target)
        if max_lateness > _LATENESS_BUDGET:
            with self._lock:
                self._errors.append(
                    f"cumulative lateness {max_lateness * 1000:.1f} ms "
                    f"exceeded the {_LATENESS_BUDGET * 1000:.0f} ms budget"
                )

    def _sleep_until(self, target: float) -> bool:
        """Interruptible deadline wait; False when cancelled meanwhile."""
        while True:
            remaining = target - time.monotonic()
            if remaining <= 0:
                return True
            if remaining > _SPIN_SECONDS:
                if self._cancel.wait(min(remaining - _SPIN_SECONDS, 0.05)):
                    return False
            else:
                while time.monotonic() < target:
                    if self._cancel.is_set():
                        return False
                return True

    def _sender(self) -> Callable[[float, bytes], None]:
        if isinstance(self.sink, CallbackSink):
            deliver = self.sink.deliver
            return lambda when, frame: deliver(when, frame)
        if isinstance(self.sink, DiscardSink):
            return lambda when, frame: None
        if isinstance(self.sink, InterfaceSink):
            sock = _open_raw_socket(self.sink.interface)
            return lambda when, frame: sock.send(frame)
        raise SinkUnavailable(f"unsupported sink {self.sink!r}")


def _open_raw_socket(interface: str):
    if not hasattr(socket, "AF_PACKET"):
        raise SinkUnavailable("raw packet sockets unsupported on this platform")
    try:
        sock = socket.socket(socket.AF_PACKET, socket.SOCK_RAW)
        sock.bind((interface, 0))
        return sock
    except PermissionError as exc:
        raise CapturePermissionDenied(
            f"raw-frame emission on {interface} requires CAP_NET_RAW/root: {exc}"
        ) from exc
    except OSError as exc:
        raise SinkUnavailable(f"interface {interface}: {exc}") from exc


class Injector:
    """Session registry; status/cancel are safe from any thread."""

    def __init__(self):
        self._sessions: dict[str, InjectionSession] = {}
        self._lock = threading.Lock()

    def start_injection(
        self,
        attack: AssembledAttack | Capture,
        sink: Sink,
        scheduled_start: float | datetime | None = None,
        background: Capture | None = None,
    ) -> SessionView:
        """Create and launch a session; returns its initial snapshot.

        Background traffic is rebased to scenario-relative time and
        pre-merged with the attack so interleaving is deterministic.
        """
        if isinstance(attack, AssembledAttack):
            capture = attack.capture
            scenario_id = attack.ground_truth.scenario_id
        else:
            capture = attack
            scenario_id = ""

        if background is not None and background.packets:
            rebased = transform_time(background, 0, 1)
            capture = merge([capture, rebased])

        start_epoch = _as_epoch(scheduled_start)
        if start_epoch is not None and start_epoch < time.time():
            raise PastSchedule(
                f"scheduled start {scheduled_start} is in the past"
            )
        _probe_sink(sink)

        session = InjectionSession(
            capture=capture,
            sink=sink,
            scenario_id=scenario_id,
            scheduled_start=start_epoch,
        )
        with self._lock:
            if isinstance(sink, InterfaceSink):
                for other in self._sessions.values():
                    view = other.snapshot()
                    if (
                        view.sink.get("interface") == sink.interface
                        and view.state in ("scheduled", "running")
                    ):
                        raise SinkUnavailable(
                            f"interface {sink.interface} already has an active session"
                        )
            self._sessions[session.id] = session
        session.start()
        return session.snapshot()

    def status(self, session_id: str) -> SessionView:
        return self._get(session_id).snapshot()

    def cancel(self, session_id: str) -> SessionView:
        return self._get(session_id).cancel()

    def list_sessions(self) -> list[SessionView]:
        with self._lock:
            sessions = list(self._sessions.values())
        return [s.snapshot() for s in sessions]

    def wait(self, session_id: str, timeout: float | None = None) -> SessionView:
        """Block until the session's thread exits; mainly for tests/CLI."""
        session = self._get(session_id)
        session._thread.join(timeout)
        return session.snapshot()

    def _get(self, session_id: str) -> InjectionSession:
        with self._lock:
            if session_id not in self._sessions:
                raise NotFound(f"injection session {session_id} not found")
            return self._sessions[session_id]


def parse_timestamp(value: str) -> datetime:
    """ISO-8601 parse accepting the 'Z' UTC suffix JavaScript clients emit."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def _as_epoch(value: float | datetime | None) -> float | None:
    if value is None:
        return None
    if isinstance(value, datetime):
        if value.tzinfo is None:
            value = value.replace(tzinfo=timezone.utc)
        return value.timestamp()
    return float(value)


def _probe_sink(sink: Sink) -> None:
    if isinstance(sink, FileSink):
        parent = sink.path.parent
        if not parent.is_dir():
            raise SinkUnavailable(f"directory {parent} does not exist")
    elif isinstance(sink, InterfaceSink):
        _open_raw_socket(sink.interface).close()
