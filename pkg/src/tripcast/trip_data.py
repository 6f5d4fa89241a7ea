"""Stop-level delivery log model: CSV ingestion, trip assembly, summary stats.

The raw unit is a stop row (one scheduled/actual arrival at one address);
the unit of analysis is the trip, an ordered sequence of stops sharing a
trip number. Rows that fail validation are rejected with diagnostics, never
silently coerced.
"""

from __future__ import annotations

import csv
import math
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .errors import DataError

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"

#: Canonical stops CSV column order. A schema mapping may rename columns in
#: the file, but all eight logical fields are mandatory.
CANONICAL_COLUMNS = (
    "trip_number",
    "trip_description",
    "stop_number",
    "client_name",
    "address",
    "city",
    "scheduled_time",
    "actual_time",
)

#: Day-type buckets used by the per-day trip-count statistics.
DAY_TYPES = ("Weekday", "Saturday", "Sunday")

#: All standard deviations reported by :func:`summarize` use this convention.
STD_CONVENTION = "sample (n-1 denominator)"


@dataclass(slots=True, frozen=True)
class StopRecord:
    """One row of the raw delivery log."""

    trip_number: str
    trip_description: str
    stop_number: int
    client_name: str
    address: str
    city: str
    scheduled_time: datetime
    actual_time: datetime


@dataclass(slots=True, frozen=True)
class Trip:
    """An assembled trip: stops ordered by stop number plus derived fields.

    Durations are in seconds. ``delay`` is actual minus scheduled duration
    and may be negative (the trip finished faster than planned).
    """

    trip_id: str
    stops: tuple[StopRecord, ...]
    num_stops: int
    num_cities: int
    actual_duration: float
    scheduled_duration: float
    delay: float
    start_time: datetime


@dataclass(slots=True, frozen=True)
class RowDiagnostic:
    """Why one CSV row was rejected during parsing."""

    line_number: int
    reason: str


@dataclass(slots=True, frozen=True)
class TripDiagnostic:
    """Why one whole trip was rejected or excluded during assembly."""

    trip_id: str
    reason: str


@dataclass(slots=True)
class DatasetSummary:
    """Aggregate statistics over a list of trips (durations in hours)."""

    total_trips: int
    trips_per_day_mean: float
    trips_per_day_std: float
    trips_per_month_mean: float
    trips_per_month_std: float
    stops_per_trip_mean: float
    stops_per_trip_std: float
    cities_per_trip_mean: float
    cities_per_trip_std: float
    duration_mean: float
    duration_std: float
    delay_mean: float
    delay_std: float
    trips_per_daytype: dict[str, tuple[float, float]] = field(default_factory=dict)
    std_convention: str = STD_CONVENTION

    def as_rows(self) -> list[tuple[str, str]]:
        """Label/value pairs for human-readable output."""
        fmt = "{:.2f} ± {:.2f}".format
        rows = [
            ("Total number of trips", str(self.total_trips)),
            ("Trips per day", fmt(self.trips_per_day_mean, self.trips_per_day_std)),
            ("Trips per month", fmt(self.trips_per_month_mean, self.trips_per_month_std)),
            ("Stops per trip", fmt(self.stops_per_trip_mean, self.stops_per_trip_std)),
            ("Cities per trip", fmt(self.cities_per_trip_mean, self.cities_per_trip_std)),
            ("Trip duration (h)", fmt(self.duration_mean, self.duration_std)),
            ("Trip delay (h)", fmt(self.delay_mean, self.delay_std)),
        ]
        for day_type in DAY_TYPES:
            mean, std = self.trips_per_daytype.get(day_type, (0.0, 0.0))
            rows.append((f"Trips per {day_type}", fmt(mean, std)))
        rows.append(("Std convention", self.std_convention))
        return rows


def parse_timestamp(raw: str) -> datetime:
    """Parse a canonical ``YYYY-MM-DDTHH:MM:SS`` timestamp (naive, local)."""
    return datetime.strptime(raw.strip(), TIMESTAMP_FORMAT)


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TIMESTAMP_FORMAT)


def parse_stops_csv(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
) -> tuple[list[StopRecord], list[RowDiagnostic]]:
    """Read a stops CSV and return (valid records, per-row reject diagnostics).

    ``schema`` maps logical column names (see ``CANONICAL_COLUMNS``) to the
    header names actually present in the file; omitted entries default to the
    canonical names. Raises ``DataError`` if the file is missing, a mandatory
    column is absent from the header, or no row parses — partial results are
    never returned for structural failures.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"stops file not found: {path}")

    colmap = dict.fromkeys(CANONICAL_COLUMNS)
    for logical in CANONICAL_COLUMNS:
        colmap[logical] = (schema or {}).get(logical, logical)

    records: list[StopRecord] = []
    rejects: list[RowDiagnostic] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DataError(f"stops file has no header row: {path}")
        missing = [c for c in colmap.values() if c not in reader.fieldnames]
        if missing:
            raise DataError(
                f"stops file {path} is missing mandatory column(s): {', '.join(missing)}"
            )
        for line_number, row in enumerate(reader, start=2):
            record, reason = _parse_row(row, colmap)
            if record is None:
                rejects.append(RowDiagnostic(line_number, reason))
            else:
                records.append(record)

    if not records:
        raise DataError(f"stops file {path} contains no valid rows")
    return records, rejects


def _parse_row(
    row: Mapping[str, str | None], colmap: Mapping[str, str]
) -> tuple[StopRecord | None, str]:
    def cell(logical: str) -> str:
        value = row.get(colmap[logical])
        return "" if value is None else value

    trip_number = cell("trip_number").strip()
    if not trip_number:
        return None, "empty trip_number"

    raw_stop = cell("stop_number").strip()
    try:
        stop_number = int(raw_stop)
    except ValueError:
        return None, f"stop_number {raw_stop!r} is not an integer"
    if stop_number < 1:
        return None, f"stop_number {stop_number} < 1"

    try:
        scheduled = parse_timestamp(cell("scheduled_time"))
    except ValueError:
        return None, f"unparseable scheduled_time {cell('scheduled_time')!r}"
    try:
        actual = parse_timestamp(cell("actual_time"))
    except ValueError:
        return None, f"unparseable actual_time {cell('actual_time')!r}"

    return (
        StopRecord(
            trip_number=trip_number,
            trip_description=cell("trip_description"),
            stop_number=stop_number,
            client_name=cell("client_name"),
            address=cell("address"),
            city=cell("city").strip(),
            scheduled_time=scheduled,
            actual_time=actual,
        ),
        "",
    )


def write_stops_csv(records: Iterable[StopRecord], handle: IO[str]) -> int:
    """Write records to an open text handle in canonical CSV form; row count."""
    writer = csv.writer(handle)
    writer.writerow(CANONICAL_COLUMNS)
    count = 0
    for r in records:
        writer.writerow(
            (
                r.trip_number,
                r.trip_description,
                r.stop_number,
                r.client_name,
                r.address,
                r.city,
                format_timestamp(r.scheduled_time),
                format_timestamp(r.actual_time),
            )
        )
        count += 1
    return count


def assemble_trips(
    records: Sequence[StopRecord],
) -> tuple[list[Trip], list[TripDiagnostic]]:
    """Group stop records into trips and derive per-trip fields.

    One trip per distinct trip number, stops sorted by stop number. Trips are
    returned sorted by trip id, so any permutation of the input yields the
    same output. Trips with duplicate stop numbers, fewer than 2 stops, or a
    negative actual duration are excluded with a diagnostic.
    """
    by_trip: dict[str, list[StopRecord]] = defaultdict(list)
    for record in records:
        by_trip[record.trip_number].append(record)

    trips: list[Trip] = []
    diagnostics: list[TripDiagnostic] = []
    for trip_id in sorted(by_trip):
        stops = sorted(by_trip[trip_id], key=lambda s: s.stop_number)
        seen = Counter(s.stop_number for s in stops)
        dupes = [number for number, n in seen.items() if n > 1]
        if dupes:
            diagnostics.append(
                TripDiagnostic(trip_id, f"duplicate stop_number(s): {sorted(dupes)}")
            )
            continue
        if len(stops) < 2:
            diagnostics.append(
                TripDiagnostic(trip_id, "fewer than 2 stops; duration undefined")
            )
            continue
        actual = (stops[-1].actual_time - stops[0].actual_time).total_seconds()
        scheduled = (stops[-1].scheduled_time - stops[0].scheduled_time).total_seconds()
        if actual < 0:
            diagnostics.append(
                TripDiagnostic(trip_id, "negative actual duration (last stop before first)")
            )
            continue
        trips.append(
            Trip(
                trip_id=trip_id,
                stops=tuple(stops),
                num_stops=len(stops),
                num_cities=len({s.city for s in stops}),
                actual_duration=actual,
                scheduled_duration=scheduled,
                delay=actual - scheduled,
                start_time=stops[0].scheduled_time,
            )
        )
    return trips, diagnostics


def trips_to_stop_rows(trips: Iterable[Trip]) -> list[StopRecord]:
    """Flatten trips back to stop rows (inverse of assembly, minus rejects)."""
    return [stop for trip in trips for stop in trip.stops]


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = math.fsum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def summarize(trips: Sequence[Trip]) -> DatasetSummary:
    """Dataset-level statistics over assembled trips.

    Per-day counts group by the calendar date of the trip start; day types
    are Weekday / Saturday / Sunday. Standard deviations use the sample
    (n-1) convention; groups with a single member report std 0.
    """
    if not trips:
        raise DataError("summarize() requires at least one trip")

    per_day: Counter = Counter(t.start_time.date() for t in trips)
    per_month: Counter = Counter((t.start_time.year, t.start_time.month) for t in trips)

    day_mean, day_std = _mean_std(list(per_day.values()))
    month_mean, month_std = _mean_std(list(per_month.values()))
    stops_mean, stops_std = _mean_std([t.num_stops for t in trips])
    cities_mean, cities_std = _mean_std([t.num_cities for t in trips])
    dur_mean, dur_std = _mean_std([t.actual_duration / 3600.0 for t in trips])
    delay_mean, delay_std = _mean_std([t.delay / 3600.0 for t in trips])

    daytype_counts: dict[str, list[float]] = {d: [] for d in DAY_TYPES}
    for date, count in per_day.items():
        daytype_counts[day_type_of(date)].append(count)
    trips_per_daytype = {d: _mean_std(daytype_counts[d]) for d in DAY_TYPES}

    return DatasetSummary(
        total_trips=len(trips),
        trips_per_day_mean=day_mean,
        trips_per_day_std=day_std,
        trips_per_month_mean=month_mean,
        trips_per_month_std=month_std,
        stops_per_trip_mean=stops_mean,
        stops_per_trip_std=stops_std,
        cities_per_trip_mean=cities_mean,
        cities_per_trip_std=cities_std,
        duration_mean=dur_mean,
        duration_std=dur_std,
        delay_mean=delay_mean,
        delay_std=delay_std,
        trips_per_daytype=trips_per_daytype,
    )


def day_type_of(date) -> str:
    """Map a date to Weekday / Saturday / Sunday."""
    dow = date.weekday()
    if dow == 5:
        return "Saturday"
    if dow == 6:
        return "Sunday"
    return "Weekday"
