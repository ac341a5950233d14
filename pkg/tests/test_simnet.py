import pytest

from websync.errors import SchedulingInPast
from websync.simnet import NetworkModel, SimClock, transfer_time


class TestNetworkModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            NetworkModel(0)
        with pytest.raises(ValueError):
            NetworkModel(1000, -0.1)

    def test_zero_bytes_costs_only_overhead(self):
        model = NetworkModel(1000, 0.25)
        assert transfer_time(model, 0) == 250

    def test_arithmetic(self):
        # 500 B at 1000 B/s plus 10 ms overhead -> 0.51 s
        assert transfer_time(NetworkModel(1000, 0.01), 500) == 510

    def test_affine_monotone(self):
        model = NetworkModel(2000, 0.01)
        times = [transfer_time(model, n) for n in range(0, 5000, 137)]
        assert times == sorted(times)
        # slope: doubling payload doubles only the wire term
        base = transfer_time(model, 0)
        assert transfer_time(model, 4000) - base == 2 * (transfer_time(model, 2000) - base)

    def test_negative_bytes(self):
        with pytest.raises(ValueError):
            transfer_time(NetworkModel(1000), -1)


class TestSimClock:
    def test_equal_due_runs_in_enqueue_order(self):
        clock = SimClock()
        seen = []
        clock.schedule(5, lambda: seen.append("first"))
        clock.schedule(5, lambda: seen.append("second"))
        assert clock.run_until(10) == 2
        assert seen == ["first", "second"]

    def test_run_until_empty_queue(self):
        clock = SimClock()
        assert clock.run_until(42) == 0
        assert clock.now == 42

    def test_follow_up_event_within_horizon(self):
        clock = SimClock()
        seen = []

        def first():
            seen.append(clock.now)
            clock.schedule(clock.now + 3, lambda: seen.append(clock.now))

        clock.schedule(2, first)
        assert clock.run_until(10) == 2
        assert seen == [2, 5]

    def test_follow_up_beyond_horizon_not_run(self):
        clock = SimClock()
        clock.schedule(2, lambda: clock.schedule(20, lambda: None))
        assert clock.run_until(10) == 1
        assert clock.pending() == 1

    def test_scheduling_in_past(self):
        clock = SimClock()
        clock.run_until(10)
        with pytest.raises(SchedulingInPast):
            clock.schedule(5, lambda: None)

    def test_time_monotone(self):
        clock = SimClock()
        times = []
        for due in (3, 1, 7, 7, 2):
            clock.schedule(due, lambda: times.append(clock.now))
        clock.run_until(100)
        assert times == sorted(times)
