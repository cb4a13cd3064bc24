"""Ingestion of LMS log exports and final-mark files.

Log CSV columns: ``course,timestamp,student_id,action,activity_kind``.
Marks CSV columns: ``student_id,final_mark``.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, TextIO

from .errors import DuplicateMark, EmptyLog, MalformedRow

log = logging.getLogger(__name__)

LOG_HEADER = ("course", "timestamp", "student_id", "action", "activity_kind")
MARKS_HEADER = ("student_id", "final_mark")
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"

ACTIVITY_KINDS = frozenset({
    "assignment", "quiz", "forum", "chat", "choice", "database", "glossary",
    "lesson", "survey", "wiki", "workshop", "hotpot", "questionnaire",
    "teamwork",
})
RESOURCE_KINDS = frozenset({"page", "url", "folder", "book", "resource", "label"})


class UsageLevel(enum.IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


def normalize_action(action: str) -> str:
    return " ".join(action.split()).lower()


def parse_timestamp(text: str) -> datetime:
    """Parse a log timestamp into an aware UTC datetime.

    Naive values are taken to be UTC already; values with an offset are
    converted.
    """
    text = text.strip()
    try:
        ts = datetime.strptime(text, TIMESTAMP_FORMAT)
    except ValueError:
        ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


@dataclass(frozen=True, order=True)
class LogEvent:
    timestamp: datetime
    student_id: str
    action: str
    activity_kind: str = ""


@dataclass(frozen=True)
class CourseLog:
    course_code: str
    events: tuple[LogEvent, ...]
    marks: Mapping[str, float] = field(default_factory=dict)

    def students(self) -> list[str]:
        """Every student seen in the events or the marks, sorted."""
        return sorted({e.student_id for e in self.events} | set(self.marks))


def _read_rows(source: TextIO, header: tuple[str, ...], what: str):
    reader = csv.reader(source)
    try:
        first = next(reader)
    except StopIteration:
        raise MalformedRow(1, f"{what} file is empty (missing header)") from None
    got = tuple(h.strip().lower() for h in first)
    if got[: len(header)] != header:
        raise MalformedRow(1, f"{what} header must be {','.join(header)}, got {','.join(first)}")
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        yield reader.line_num, row


def parse_marks(source: TextIO) -> dict[str, float]:
    marks: dict[str, float] = {}
    for line, row in _read_rows(source, MARKS_HEADER, "marks"):
        if len(row) < 2:
            raise MalformedRow(line, "expected student_id,final_mark")
        sid, raw = row[0].strip(), row[1].strip()
        if not sid:
            raise MalformedRow(line, "missing student_id")
        try:
            mark = float(raw)
        except ValueError:
            raise MalformedRow(line, f"unparsable mark {raw!r}") from None
        if not 0.0 <= mark <= 10.0:
            raise MalformedRow(line, f"mark {raw} outside [0,10]")
        if sid in marks:
            raise DuplicateMark(sid)
        marks[sid] = mark
    return marks


def parse_events(source: TextIO, course_code: str | None = None) -> list[LogEvent]:
    events = []
    for line, row in _read_rows(source, LOG_HEADER, "log"):
        if len(row) < 4:
            raise MalformedRow(line, f"expected {len(LOG_HEADER)} fields, got {len(row)}")
        course, ts, sid, action = (c.strip() for c in row[:4])
        kind = row[4].strip().lower() if len(row) > 4 else ""
        if course_code is not None and course and course != course_code:
            raise MalformedRow(line, f"row belongs to course {course!r}, expected {course_code!r}")
        if not ts:
            raise MalformedRow(line, "missing timestamp")
        if not sid:
            raise MalformedRow(line, "missing student_id")
        action = normalize_action(action)
        if not action:
            raise MalformedRow(line, "missing action")
        try:
            when = parse_timestamp(ts)
        except ValueError:
            raise MalformedRow(line, f"unparsable timestamp {ts!r}") from None
        events.append(LogEvent(when, sid, action, kind))
    return events


def parse_course_log(log_source: TextIO, marks_source: TextIO, course_code: str) -> CourseLog:
    events = parse_events(log_source, course_code)
    if not events:
        raise EmptyLog(f"course {course_code}: no valid event rows")
    marks = parse_marks(marks_source)
    # stable sort keeps input order among simultaneous events
    events.sort(key=lambda e: e.timestamp)
    return CourseLog(course_code, tuple(events), marks)


def write_course_log(course: CourseLog, log_sink: TextIO, marks_sink: TextIO) -> None:
    """Serialize a course back into the two CSV formats parse_course_log reads."""
    w = csv.writer(log_sink, lineterminator="\n")
    w.writerow(LOG_HEADER)
    for e in course.events:
        w.writerow([course.course_code, e.timestamp.strftime(TIMESTAMP_FORMAT),
                    e.student_id, e.action, e.activity_kind])
    w = csv.writer(marks_sink, lineterminator="\n")
    w.writerow(MARKS_HEADER)
    for sid in sorted(course.marks):
        w.writerow([sid, repr(float(course.marks[sid]))])


def roundtrip(course: CourseLog) -> CourseLog:
    log_buf, marks_buf = io.StringIO(), io.StringIO()
    write_course_log(course, log_buf, marks_buf)
    log_buf.seek(0)
    marks_buf.seek(0)
    return parse_course_log(log_buf, marks_buf, course.course_code)


def distinct_activity_types(course: CourseLog) -> set[str]:
    kinds = {e.activity_kind for e in course.events if e.activity_kind}
    unknown = kinds - ACTIVITY_KINDS - RESOURCE_KINDS
    if unknown:
        log.info("course %s: counting unknown activity kinds as activities: %s",
                 course.course_code, ", ".join(sorted(unknown)))
    return kinds - RESOURCE_KINDS


def classify_usage_level(activity_type_count: int) -> UsageLevel:
    if activity_type_count < 0:
        raise ValueError("activity type count must be non-negative")
    if activity_type_count <= 1:
        return UsageLevel.LOW
    if activity_type_count == 2:
        return UsageLevel.MEDIUM
    return UsageLevel.HIGH


def usage_level(course: CourseLog) -> UsageLevel:
    return classify_usage_level(len(distinct_activity_types(course)))

