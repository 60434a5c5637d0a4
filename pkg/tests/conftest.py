import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from socbench.frames import capture_of, icmp_frame, tcp_frame, udp_frame
from socbench.library import TraceLibrary


@pytest.fixture
def library(tmp_path):
    return TraceLibrary(tmp_path)


def random_ipv4_corpus(count: int, seed: int, nets=("10.0.0.0/16", "172.16.0.0/16")) -> list:
    """(time, frame) pairs mixing TCP/UDP/ICMP with valid checksums."""
    rng = random.Random(seed)
    items = []
    for i in range(count):
        src = f"10.0.{rng.randrange(256)}.{rng.randrange(1, 255)}"
        dst = f"172.16.{rng.randrange(256)}.{rng.randrange(1, 255)}"
        if rng.random() < 0.5:
            src, dst = dst, src
        payload = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 64)))
        kind = rng.choice(("tcp", "udp", "icmp"))
        if kind == "tcp":
            frame = tcp_frame(
                payload, src=src, dst=dst,
                sport=rng.randrange(1024, 65535), dport=rng.randrange(1, 1024),
                seq=rng.randrange(2**32), identification=rng.randrange(2**16),
            )
        elif kind == "udp":
            frame = udp_frame(
                payload, src=src, dst=dst,
                sport=rng.randrange(1024, 65535), dport=rng.randrange(1, 1024),
                identification=rng.randrange(2**16),
            )
        else:
            frame = icmp_frame(
                payload, src=src, dst=dst,
                identifier=rng.randrange(2**16), sequence=i % 65536,
                identification=rng.randrange(2**16),
            )
        items.append((0.001 * i, frame))
    return items


@pytest.fixture
def mixed_corpus_capture():
    return capture_of(random_ipv4_corpus(200, seed=7))
