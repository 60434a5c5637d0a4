import time

import pytest

from socbench.builder import AttackScenario, AttackBlock, assemble
from socbench.errors import AlreadyFinished, NotFound, PastSchedule, SinkUnavailable
from socbench.frames import capture_of, udp_frame
from socbench.injector import CallbackSink, DiscardSink, FileSink, Injector, parse_timestamp
from socbench.pcap import read_capture, write_capture
from socbench.rewrite import AddressMap
from test_library import add_scan


def uniform_capture(count=20, gap=0.005):
    frames = [
        (gap * i, udp_frame(bytes([i % 256]) * 8, src="10.0.0.1", dst="10.0.0.2",
                            sport=1000, dport=2000, identification=i))
        for i in range(count)
    ]
    return capture_of(frames)


def assembled(library, trace_id, scenario_id="inj"):
    scenario = AttackScenario(
        id=scenario_id, name="inject me",
        blocks=(AttackBlock(trace_id=trace_id, address_map=AddressMap()),),
    )
    return assemble(scenario, library)


class TestFileSink:
    def test_output_equals_assembled_capture(self, library, tmp_path):
        trace = add_scan(library)
        attack = assembled(library, trace.id)
        out = tmp_path / "replay.pcap"
        injector = Injector()
        view = injector.start_injection(attack, FileSink(out))
        final = injector.wait(view.id, timeout=10)
        assert final.state == "completed"
        assert final.progress == 1.0
        assert out.read_bytes() == write_capture(attack.capture)

    def test_background_merged_by_timestamp(self, library, tmp_path):
        trace = add_scan(library)
        attack = assembled(library, trace.id)
        background = uniform_capture(count=10, gap=0.25)
        out = tmp_path / "mixed.pcap"
        injector = Injector()
        view = injector.start_injection(attack, FileSink(out), background=background)
        injector.wait(view.id, timeout=10)
        merged = read_capture(out.read_bytes())
        assert len(merged.packets) == len(attack.capture.packets) + 10
        assert merged.monotonic

    def test_missing_directory_unavailable(self, library, tmp_path):
        trace = add_scan(library)
        attack = assembled(library, trace.id)
        with pytest.raises(SinkUnavailable):
            Injector().start_injection(attack, FileSink(tmp_path / "no" / "dir" / "f.pcap"))


class TestCallbackSink:
    def test_emission_order_and_bytes(self):
        capture = uniform_capture(count=15, gap=0.001)
        got = []
        injector = Injector()
        view = injector.start_injection(
            capture, CallbackSink(lambda when, frame: got.append(frame))
        )
        final = injector.wait(view.id, timeout=10)
        assert final.state == "completed"
        assert got == [p.data for p in capture.packets]

    def test_gaps_follow_timestamps(self):
        capture = uniform_capture(count=30, gap=0.01)
        stamps = []
        injector = Injector()
        view = injector.start_injection(
            capture, CallbackSink(lambda when, frame: stamps.append(when))
        )
        injector.wait(view.id, timeout=30)
        gaps = [b - a for a, b in zip(stamps, stamps[1:])]
        mean_error = sum(abs(g - 0.01) for g in gaps) / len(gaps)
        assert mean_error < 0.002
        total = stamps[-1] - stamps[0]
        assert abs(total - 0.29) < 0.29 * 0.05

    def test_status_mid_run_progress(self):
        capture = uniform_capture(count=40, gap=0.01)
        injector = Injector()
        view = injector.start_injection(capture, CallbackSink(lambda *_: None))
        time.sleep(0.1)
        mid = injector.status(view.id)
        assert mid.state == "running"
        assert 0 < mid.progress < 1
        time.sleep(0.05)
        later = injector.status(view.id)
        assert later.packets_sent > mid.packets_sent
        final = injector.wait(view.id, timeout=10)
        assert final.state == "completed"
        assert final.progress == 1.0


class TestDiscardSink:
    def test_paced_dry_run_completes(self):
        capture = uniform_capture(count=10, gap=0.005)
        injector = Injector()
        view = injector.start_injection(capture, DiscardSink())
        final = injector.wait(view.id, timeout=10)
        assert final.state == "completed"
        assert final.packets_sent == 10

    def test_dry_run_paces_like_live_replay(self):
        capture = uniform_capture(count=100, gap=0.01)  # 0.99 s total
        injector = Injector()
        start = time.monotonic()
        view = injector.start_injection(capture, DiscardSink())
        injector.wait(view.id, timeout=10)
        elapsed = time.monotonic() - start
        assert elapsed >= 0.9

    def test_cancellable_mid_run(self):
        capture = uniform_capture(count=500, gap=0.01)
        injector = Injector()
        view = injector.start_injection(capture, DiscardSink())
        time.sleep(0.1)
        cancelled = injector.cancel(view.id)
        assert cancelled.state == "cancelled"
        assert 0 < cancelled.packets_sent < 500


class TestTimestampParsing:
    def test_accepts_javascript_utc_suffix(self):
        parsed = parse_timestamp("2026-08-09T10:09:32.000Z")
        assert parsed.utcoffset().total_seconds() == 0

    def test_accepts_plain_isoformat(self):
        assert parse_timestamp("2026-08-09T10:09:32+02:00").hour == 10


class TestScheduling:
    def test_past_schedule_rejected(self):
        with pytest.raises(PastSchedule):
            Injector().start_injection(
                uniform_capture(3), CallbackSink(lambda *_: None),
                scheduled_start=time.time() - 5,
            )

    def test_scheduled_state_before_start(self):
        injector = Injector()
        view = injector.start_injection(
            uniform_capture(3), CallbackSink(lambda *_: None),
            scheduled_start=time.time() + 30,
        )
        snap = injector.status(view.id)
        assert snap.state == "scheduled"
        assert snap.progress == 0.0
        injector.cancel(view.id)

    def test_scheduled_start_honored(self):
        injector = Injector()
        stamps = []
        start = time.monotonic()
        view = injector.start_injection(
            uniform_capture(2, gap=0.001),
            CallbackSink(lambda when, frame: stamps.append(when)),
            scheduled_start=time.time() + 0.3,
        )
        injector.wait(view.id, timeout=10)
        assert stamps[0] - start >= 0.25


class TestCancel:
    def test_cancel_scheduled(self):
        injector = Injector()
        view = injector.start_injection(
            uniform_capture(3), CallbackSink(lambda *_: None),
            scheduled_start=time.time() + 60,
        )
        cancelled = injector.cancel(view.id)
        assert cancelled.state == "cancelled"
        assert cancelled.packets_sent == 0

    def test_cancel_mid_run_freezes_counter(self):
        capture = uniform_capture(count=200, gap=0.01)
        sent = []
        injector = Injector()
        view = injector.start_injection(
            capture, CallbackSink(lambda when, frame: sent.append(frame))
        )
        time.sleep(0.12)
        cancelled = injector.cancel(view.id)
        assert cancelled.state == "cancelled"
        assert 0 < cancelled.packets_sent < 200
        assert cancelled.packets_sent == len(sent)
        count_after = cancelled.packets_sent
        time.sleep(0.05)
        assert injector.status(view.id).packets_sent == count_after

    def test_cancel_completed_rejected(self):
        injector = Injector()
        view = injector.start_injection(
            uniform_capture(2, gap=0.001), CallbackSink(lambda *_: None)
        )
        injector.wait(view.id, timeout=10)
        with pytest.raises(AlreadyFinished):
            injector.cancel(view.id)

    def test_unknown_session(self):
        injector = Injector()
        with pytest.raises(NotFound):
            injector.status("ghost")
        with pytest.raises(NotFound):
            injector.cancel("ghost")


class TestStateTransitions:
    def test_terminal_states_from_lifecycle(self):
        injector = Injector()
        done = injector.start_injection(
            uniform_capture(2, gap=0.001), CallbackSink(lambda *_: None)
        )
        assert injector.wait(done.id, timeout=10).state == "completed"

        cancelled = injector.start_injection(
            uniform_capture(2), CallbackSink(lambda *_: None),
            scheduled_start=time.time() + 60,
        )
        assert injector.cancel(cancelled.id).state == "cancelled"

    def test_sink_agnostic_byte_sequence(self, tmp_path):
        capture = uniform_capture(count=12, gap=0.001)
        frames = []
        injector = Injector()
        cb = injector.start_injection(
            capture, CallbackSink(lambda when, frame: frames.append(frame))
        )
        injector.wait(cb.id, timeout=10)
        out = tmp_path / "same.pcap"
        fs = injector.start_injection(capture, FileSink(out))
        injector.wait(fs.id, timeout=10)
        replayed = read_capture(out.read_bytes())
        assert [p.data for p in replayed.packets] == frames

    def test_failing_callback_fails_session(self):
        def boom(when, frame):
            raise RuntimeError("sink exploded")

        injector = Injector()
        view = injector.start_injection(uniform_capture(3, gap=0.001), CallbackSink(boom))
        final = injector.wait(view.id, timeout=10)
        assert final.state == "failed"
        assert any("sink exploded" in err for err in final.errors)
