"""Event log ingestion: CSV / XES parsing and start-end lifecycle pairing."""

from __future__ import annotations

import csv
import enum
import io
import re
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable


class LogError(ValueError):
    """Raised for malformed or inconsistent event logs."""


class Phase(str, enum.Enum):
    START = "start"
    END = "end"


_PHASES = {"start": Phase.START, "complete": Phase.END, "end": Phase.END}


@dataclass(frozen=True)
class Event:
    label: str
    phase: Phase
    timestamp: datetime
    case_id: str

    def __post_init__(self):
        if not self.label:
            raise LogError(f"empty activity label in case {self.case_id!r}")


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[Event, ...]

    def labels(self) -> list[str]:
        return [e.label for e in self.events]

    def end_projection(self) -> list[str]:
        return [e.label for e in self.events if e.phase is Phase.END]


@dataclass(frozen=True)
class RefinedLog:
    traces: tuple[Trace, ...]

    @property
    def alphabet(self) -> frozenset[str]:
        return frozenset(e.label for t in self.traces for e in t.events)

    def __len__(self):
        return len(self.traces)

    def event_count(self) -> int:
        return sum(len(t.events) for t in self.traces)


@dataclass(frozen=True)
class ActivityInstance:
    label: str
    start_ts: datetime
    end_ts: datetime
    trace_ref: str
    synthetic: bool = False


@dataclass
class ParseOptions:
    case_column: str = "case"
    activity_column: str = "activity"
    lifecycle_column: str = "lifecycle"
    timestamp_column: str = "timestamp"
    pairing: str = "strict"
    delimiter: str = ","


# "2020-07-08 10.03" style (dot as hour/minute separator)
_DOTTED_TIME = re.compile(r"^(\d{4}-\d{2}-\d{2})[ T](\d{1,2})\.(\d{2})(?:\.(\d{2}))?$")
_FRACTION = re.compile(r"\.(\d+)(?=$|[+-])")


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; zoneless values are taken as UTC."""
    raw = text.strip()
    if not raw:
        raise LogError("missing timestamp")
    m = _DOTTED_TIME.match(raw)
    if m:
        date, hh, mm, ss = m.groups()
        raw = f"{date}T{int(hh):02d}:{mm}:{ss or '00'}"
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    time_part = raw.split("T", 1)[-1] if "T" in raw else raw.split(" ", 1)[-1]
    fm = _FRACTION.search(time_part)
    if fm:
        frac = fm.group(1)
        fixed = (frac + "000000")[:6]
        raw = raw.replace("." + frac, "." + fixed, 1)
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError:
        raise LogError(f"unparseable timestamp {text!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def normalize_phase(value: str) -> Phase:
    phase = _PHASES.get(value.strip().lower())
    if phase is None:
        raise LogError(f"unknown lifecycle value {value!r}")
    return phase


def _build_log(events: Iterable[Event], pairing: str) -> RefinedLog:
    grouped: dict[str, list[Event]] = {}
    for ev in events:
        grouped.setdefault(ev.case_id, []).append(ev)
    if not grouped:
        raise LogError("no traces")
    traces = []
    for case_id, evs in grouped.items():
        # stable: equal timestamps keep source order
        evs.sort(key=lambda e: e.timestamp)
        trace = Trace(case_id, tuple(evs))
        pair_lifecycles(trace, pairing)
        traces.append(trace)
    return RefinedLog(tuple(traces))


def parse_csv(stream: IO[str], options: ParseOptions | None = None) -> RefinedLog:
    opts = options or ParseOptions()
    reader = csv.reader(stream, delimiter=opts.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise LogError("no traces") from None
    header = [h.strip().lower() for h in header]
    wanted = {
        "case": opts.case_column.lower(),
        "activity": opts.activity_column.lower(),
        "lifecycle": opts.lifecycle_column.lower(),
        "timestamp": opts.timestamp_column.lower(),
    }
    idx = {}
    for key, name in wanted.items():
        if name not in header:
            raise LogError(f"line 1: missing column {name!r} in header")
        idx[key] = header.index(name)
    width = len(header)

    events = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise LogError(f"line {line}: expected {width} fields, got {len(row)}")
        try:
            ts = parse_timestamp(row[idx["timestamp"]])
            phase = normalize_phase(row[idx["lifecycle"]])
            label = row[idx["activity"]].strip()
            if not label:
                raise LogError("empty activity label")
        except LogError as exc:
            raise LogError(f"line {line}: {exc}") from None
        events.append(Event(label, phase, ts, row[idx["case"]].strip()))
    return _build_log(events, opts.pairing)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _xes_attrs(elem: ET.Element) -> dict[str, str]:
    return {
        child.get("key"): child.get("value")
        for child in elem
        if _local(child.tag) in ("string", "date", "int", "float", "boolean", "id")
    }


def parse_xes(data: bytes, options: ParseOptions | None = None) -> RefinedLog:
    opts = options or ParseOptions()
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise LogError(f"line {line}, column {col}: malformed XML") from None
    events = []
    for ti, trace in enumerate(e for e in root if _local(e.tag) == "trace"):
        case_id = _xes_attrs(trace).get("concept:name", str(ti))
        for ei, ev in enumerate(e for e in trace if _local(e.tag) == "event"):
            attrs = _xes_attrs(ev)
            where = f"trace {ti} ({case_id}), event {ei}"
            try:
                label = attrs.get("concept:name")
                if not label:
                    raise LogError("missing concept:name")
                if "lifecycle:transition" not in attrs:
                    raise LogError("missing lifecycle:transition")
                phase = normalize_phase(attrs["lifecycle:transition"])
                if attrs.get("time:timestamp") is None:
                    raise LogError("missing timestamp")
                ts = parse_timestamp(attrs["time:timestamp"])
            except LogError as exc:
                raise LogError(f"{where}: {exc}") from None
            events.append(Event(label, phase, ts, case_id))
    return _build_log(events, opts.pairing)


def parse_log(source: IO[bytes] | bytes, fmt: str = "csv",
              options: ParseOptions | None = None) -> RefinedLog:
    """Parse a UTF-8 encoded CSV or XES byte stream into a RefinedLog."""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    if fmt == "xes":
        return parse_xes(bytes(data), options)
    if fmt != "csv":
        raise LogError(f"unsupported format {fmt!r}")
    try:
        text = bytes(data).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise LogError(f"byte {exc.start}: input is not valid UTF-8") from None
    return parse_csv(io.StringIO(text, newline=""), options)


def read_log(path, fmt: str | None = None, options: ParseOptions | None = None) -> RefinedLog:
    path = str(path)
    if fmt is None:
        fmt = "xes" if path.lower().endswith(".xes") else "csv"
    with open(path, "rb") as fh:
        return parse_log(fh, fmt, options)


def pair_lifecycles(trace: Trace, mode: str = "strict") -> list[ActivityInstance]:
    """Pair start and end events of a trace into activity instances (FIFO per label).

    In ``repair`` mode orphan events become zero-duration instances flagged as synthetic.
    """
    if mode not in ("strict", "repair"):
        raise ValueError(f"unknown pairing mode {mode!r}")
    open_starts: dict[str, deque[Event]] = {}
    instances = []
    for ev in trace.events:
        if ev.phase is Phase.START:
            open_starts.setdefault(ev.label, deque()).append(ev)
            continue
        pending = open_starts.get(ev.label)
        if pending:
            st = pending.popleft()
            instances.append(ActivityInstance(ev.label, st.timestamp, ev.timestamp, trace.case_id))
        elif mode == "strict":
            raise LogError(f"unmatched end of {ev.label!r} in case {trace.case_id!r} "
                           f"at {ev.timestamp.isoformat()}")
        else:
            instances.append(ActivityInstance(ev.label, ev.timestamp, ev.timestamp,
                                              trace.case_id, synthetic=True))
    for label, pending in open_starts.items():
        for st in pending:
            if mode == "strict":
                raise LogError(f"unmatched start of {label!r} in case {trace.case_id!r} "
                               f"at {st.timestamp.isoformat()}")
            instances.append(ActivityInstance(label, st.timestamp, st.timestamp,
                                              trace.case_id, synthetic=True))
    instances.sort(key=lambda i: (i.start_ts, i.end_ts))
    return instances


def write_csv(log: RefinedLog) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["case", "activity", "lifecycle", "timestamp"])
    for trace in log.traces:
        for ev in trace.events:
            writer.writerow([ev.case_id, ev.label, ev.phase.value, ev.timestamp.isoformat()])
    return buf.getvalue()


def log_from_sequences(traces, start=None, step_seconds: float = 60.0) -> RefinedLog:
    """Build a log from compact event notation, e.g. ``["A_s", "A_e", "B_s", "B_e"]``.

    Events get strictly increasing timestamps in the order given. An item may be
    ``(sequence, multiplicity)`` to repeat a trace.
    """
    from datetime import timedelta

    base = start or datetime(2020, 1, 1, tzinfo=timezone.utc)
    out = []
    n = 0
    for item in traces:
        seq, mult = (item if isinstance(item, tuple) else (item, 1))
        for _ in range(mult):
            n += 1
            case = str(n)
            evs = []
            for k, tok in enumerate(seq):
                label, _, ph = tok.rpartition("_")
                phase = Phase.START if ph == "s" else Phase.END
                evs.append(Event(label, phase, base + timedelta(seconds=step_seconds * k), case))
            out.append(Trace(case, tuple(evs)))
    return RefinedLog(tuple(out))
