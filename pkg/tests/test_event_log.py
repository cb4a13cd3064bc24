from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from ontoport.errors import DuplicateMark, EmptyLog, MalformedRow
from ontoport.event_log import (CourseLog, LogEvent, UsageLevel, classify_usage_level,
                                distinct_activity_types, normalize_action, parse_course_log,
                                parse_timestamp, roundtrip)

from conftest import csv_stream

LOG = """
course,timestamp,student_id,action,activity_kind
ICS2,2020-03-02 10:00:00,s2,quiz attempt,quiz
ICS2,2020-03-01 09:30:00,s1,Forum  Add Post,forum
ICS2,2020-03-01 08:00:00,s1,course view,
"""
MARKS = """
student_id,final_mark
s1,7.5
s2,4
"""


def parse(log=LOG, marks=MARKS, code="ICS2"):
    return parse_course_log(csv_stream(log), csv_stream(marks), code)


def test_three_rows_sorted_ascending():
    course = parse()
    assert len(course.events) == 3
    stamps = [e.timestamp for e in course.events]
    assert stamps == sorted(stamps)
    assert course.events[0].action == "course view"
    assert course.marks == {"s1": 7.5, "s2": 4.0}


def test_action_normalization():
    assert normalize_action("Quiz  Attempt") == normalize_action("quiz attempt") == "quiz attempt"
    assert normalize_action("  forum\tadd   post ") == "forum add post"
    assert parse().events[1].action == "forum add post"


def test_mark_above_ten_rejected():
    with pytest.raises(MalformedRow, match="outside"):
        parse(marks="student_id,final_mark\ns1,11\n")


@pytest.mark.parametrize("marks", ["student_id,final_mark\ns1,abc\n", "student_id,final_mark\n,5\n",
                                   "student_id,final_mark\ns1,-0.5\n"])
def test_bad_marks(marks):
    with pytest.raises(MalformedRow):
        parse(marks=marks)


def test_duplicate_mark():
    with pytest.raises(DuplicateMark) as exc:
        parse(marks="student_id,final_mark\ns1,5\ns1,6\n")
    assert exc.value.student_id == "s1"


@pytest.mark.parametrize("row,reason", [
    ("ICS2,not a date,s1,course view,", "timestamp"),
    ("ICS2,,s1,course view,", "timestamp"),
    ("ICS2,2020-03-01 08:00:00,,course view,", "student_id"),
    ("ICS2,2020-03-01 08:00:00,s1,   ,", "action"),
    ("OTHER,2020-03-01 08:00:00,s1,course view,", "course"),
])
def test_malformed_log_rows(row, reason):
    with pytest.raises(MalformedRow) as exc:
        parse(log="course,timestamp,student_id,action,activity_kind\n" + row + "\n")
    assert exc.value.line == 2
    assert reason in exc.value.reason


def test_bad_header():
    with pytest.raises(MalformedRow):
        parse(log="when,who,what\n")


def test_empty_log():
    with pytest.raises(EmptyLog):
        parse(log="course,timestamp,student_id,action,activity_kind\n")


def test_timestamp_offsets_converted_to_utc():
    ts = parse_timestamp("2020-03-01T23:30:00-02:00")
    assert ts == datetime(2020, 3, 2, 1, 30, tzinfo=timezone.utc)
    assert parse_timestamp("2020-03-01 23:30:00").tzinfo is timezone.utc


def test_roundtrip_is_identity():
    course = parse()
    assert roundtrip(course) == course
    assert roundtrip(roundtrip(course)) == course


def _course(kinds):
    ts = datetime(2020, 1, 1, tzinfo=timezone.utc)
    return CourseLog("C", tuple(LogEvent(ts, "s", "x", k) for k in kinds), {"s": 5.0})


@pytest.mark.parametrize("kinds,expected", [
    (["quiz", "forum", "quiz"], {"quiz", "forum"}),
    (["page", "url"], set()),
    (["assignment", "forum", "quiz"], {"assignment", "forum", "quiz"}),
    (["", "folder", "book", "resource"], set()),
    (["quiz", "mystery"], {"quiz", "mystery"}),
])
def test_distinct_activity_types(kinds, expected):
    assert distinct_activity_types(_course(kinds)) == expected


@pytest.mark.parametrize("count,level", [(0, UsageLevel.LOW), (1, UsageLevel.LOW),
                                         (2, UsageLevel.MEDIUM), (3, UsageLevel.HIGH),
                                         (7, UsageLevel.HIGH)])
def test_classify_usage_level(count, level):
    assert classify_usage_level(count) is level


@given(st.integers(0, 100), st.integers(0, 100))
def test_usage_level_monotone(a, b):
    lo, hi = sorted((a, b))
    assert classify_usage_level(lo) <= classify_usage_level(hi)


timestamps = st.datetimes(min_value=datetime(2000, 1, 1), max_value=datetime(2030, 1, 1)) \
    .map(lambda d: d.replace(microsecond=0, tzinfo=timezone.utc))
ids = st.text("abcxyz0123456789", min_size=1, max_size=5)
actions = st.text("abcdefgh ", min_size=1, max_size=12).map(normalize_action).filter(bool)


@given(st.lists(st.tuples(timestamps, ids, actions, st.sampled_from(["", "quiz", "page"])),
                min_size=1, max_size=30),
       st.dictionaries(ids, st.integers(0, 1000).map(lambda v: v / 100), max_size=10))
def test_ingestion_idempotent_and_sorted(rows, marks):
    events = tuple(sorted((LogEvent(*r) for r in rows), key=lambda e: e.timestamp))
    course = CourseLog("C1", events, marks)
    again = roundtrip(course)
    assert again == course
    stamps = [e.timestamp for e in again.events]
    assert all(a <= b for a, b in zip(stamps, stamps[1:]))
