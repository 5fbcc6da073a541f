# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause

import logging

import pytest
from hypothesis import example, given, note
from hypothesis import strategies as st

from qdsat.timing import ContextTimer, format_time


@given(st.floats(min_value=0, max_value=1e9), st.integers(min_value=1, max_value=10))
@example(0.0, 2)
@example(1e-9, 3)
@example(1e-3, 3)
@example(1000.0, 3)
def test_format_time(t: float, precision: int) -> None:
    s = format_time(t, precision=precision, fmt="f")
    note(f"formatted: {s!r}")
    num_str, unit = s.split()
    if t >= 1e-9:
        assert float(num_str) >= 1.0
    if t <= 1.0:
        assert float(num_str) <= 1000.0

    if t < 1e-6:
        assert unit == "ns"
    elif t < 1e-3:
        assert unit == "μs"
    elif t < 1.0:
        assert unit == "ms"
    else:
        assert unit == "s"
    assert len(num_str.partition(".")[2]) == precision


# Borrowed from cpython/Lib/test/test_timeit.py
class FakeTimer:
    BASE_TIME = 42.0

    def __init__(self, seconds_per_increment: float = 1.0):
        self.count = 0
        self.seconds_per_increment = seconds_per_increment

    def __call__(self) -> float:
        return self.BASE_TIME + self.count * self.seconds_per_increment

    def inc(self) -> None:
        self.count += 1


class TestContextTimer:
    def test_elapsed(self):
        fake_timer = FakeTimer()
        with ContextTimer(timer=fake_timer) as t:
            assert t.elapsed == 0.0
            fake_timer.inc()
            assert t.elapsed == 1.0
        assert t.elapsed == 1.0
        fake_timer.inc()
        assert t.elapsed == 1.0

    def test_str(self):
        fake_timer = FakeTimer()
        with ContextTimer(timer=fake_timer) as t:
            fake_timer.inc()
            fake_timer.inc()
        assert str(t) == format_time(2.0)

    def test_elapsed_before_with(self):
        t = ContextTimer()
        with pytest.raises(ValueError, match="before entering a with block"):
            _ = t.elapsed

    def test_logging(self, caplog):
        fake_timer = FakeTimer(seconds_per_increment=0.5)
        with caplog.at_level(logging.INFO, logger="qdsat.timing"):
            with ContextTimer("sweep", timer=fake_timer):
                fake_timer.inc()
        assert caplog.messages == ["sweep: 500 ms"]

    def test_logging_empty(self, caplog):
        fake_timer = FakeTimer(seconds_per_increment=0.0361)
        with caplog.at_level(logging.INFO, logger="qdsat.timing"):
            with ContextTimer("", timer=fake_timer):
                fake_timer.inc()
        assert caplog.messages == ["36.1 ms"]

    def test_custom_logger_and_level(self, caplog):
        log = logging.getLogger("qdsat.test")
        fake_timer = FakeTimer()
        with caplog.at_level(logging.DEBUG, logger="qdsat.test"):
            with ContextTimer(
                "chunk", logger=log, level=logging.DEBUG, timer=fake_timer
            ):
                fake_timer.inc()
        assert [(r.name, r.levelno) for r in caplog.records] == [
            ("qdsat.test", logging.DEBUG)
        ]

    def test_silent_without_name(self, caplog):
        with caplog.at_level(logging.DEBUG):
            with ContextTimer(timer=FakeTimer()):
                pass
        assert not caplog.records

    def test_silent_on_exception(self, caplog):
        with caplog.at_level(logging.DEBUG), pytest.raises(RuntimeError):
            with ContextTimer("boom", timer=FakeTimer()):
                raise RuntimeError
        assert not caplog.records
