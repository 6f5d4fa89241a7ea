"""Shared construction helpers for the test suite."""

from datetime import datetime, timedelta

import numpy as np

from tripcast.trip_data import StopRecord, Trip


def make_trip(trip_id, start, sched_s, actual_s, num_stops=5, num_cities=4):
    """Hand-built Trip with the given scheduled/actual durations (seconds)."""
    start = datetime.fromisoformat(start) if isinstance(start, str) else start
    stops = tuple(
        StopRecord(
            trip_number=trip_id,
            trip_description="d",
            stop_number=i + 1,
            client_name="c",
            address="a",
            city=f"C{i % num_cities}",
            scheduled_time=start + timedelta(seconds=sched_s * i // max(num_stops - 1, 1)),
            actual_time=start + timedelta(seconds=actual_s * i // max(num_stops - 1, 1)),
        )
        for i in range(num_stops)
    )
    return Trip(
        trip_id=trip_id,
        stops=stops,
        num_stops=num_stops,
        num_cities=num_cities,
        actual_duration=float(actual_s),
        scheduled_duration=float(sched_s),
        delay=float(actual_s - sched_s),
        start_time=start,
    )


class MeanModel:
    """Predicts the training-target mean; the unconditional baseline."""

    def fit(self, X, y):
        self.mean = float(np.mean(y))
        return self

    def predict(self, X):
        return np.full(X.shape[0], self.mean)
