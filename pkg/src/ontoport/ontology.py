"""Action taxonomy and five-attribute student feature vectors.

Each graded student becomes one row with the share (0-100) of their mapped
events falling in each of the four event categories, an engagement score
(0-100) from interaction and active-day counts, and a Pass/Fail outcome.
"""

from __future__ import annotations

import csv
import enum
import logging
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence, TextIO

from .errors import (DuplicateAction, EmptyTaxonomy, MalformedRow, NoGradedStudents,
                     OutOfRangeMark, SchemaMismatch, UnknownCategory)
from .event_log import CourseLog, normalize_action

log = logging.getLogger(__name__)


class Category(str, enum.Enum):
    LEARNING = "LEARNING"
    COMMUNICATING = "COMMUNICATING"
    WORKING = "WORKING"
    EVALUATING = "EVALUATING"
    ENGAGEMENT = "ENGAGEMENT"


EVENT_CATEGORIES = (Category.LEARNING, Category.COMMUNICATING,
                    Category.WORKING, Category.EVALUATING)
ATTRIBUTES = ("learning", "communicating", "working", "evaluating", "engagement")


class Outcome(str, enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"


class Representation(str, enum.Enum):
    NUMERIC = "numeric"
    DISCRETIZED = "discretized"


class ActionTaxonomy(Mapping[str, Category]):
    """Immutable mapping from normalized action name to event category."""

    def __init__(self, mapping: Mapping[str, Category]):
        if not mapping:
            raise EmptyTaxonomy("taxonomy has no entries")
        self._mapping = dict(mapping)

    def __getitem__(self, action: str) -> Category:
        return self._mapping[action]

    def __iter__(self):
        return iter(self._mapping)

    def __len__(self) -> int:
        return len(self._mapping)

    def __repr__(self) -> str:
        return f"ActionTaxonomy({len(self)} actions)"

    def actions_of(self, category: Category) -> list[str]:
        return [a for a, c in self._mapping.items() if c is category]

    def category_sizes(self) -> dict[Category, int]:
        sizes = Counter(self._mapping.values())
        return {c: sizes.get(c, 0) for c in EVENT_CATEGORIES}


def load_taxonomy(source: TextIO) -> ActionTaxonomy:
    mapping: dict[str, Category] = {}
    for lineno, raw in enumerate(source, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedRow(lineno, f"expected 'action = CATEGORY', got {raw.strip()!r}")
        name, _, cat = line.rpartition("=")
        name = normalize_action(name)
        cat = cat.strip().upper()
        if not name:
            raise MalformedRow(lineno, "empty action name")
        try:
            category = Category(cat)
        except ValueError:
            raise UnknownCategory(cat) from None
        if category is Category.ENGAGEMENT:
            # derived attribute, never the target of an action
            raise UnknownCategory(cat)
        if name in mapping:
            raise DuplicateAction(name)
        mapping[name] = category
    return ActionTaxonomy(mapping)


def default_taxonomy() -> ActionTaxonomy:
    path = resources.files("ontoport").joinpath("data/taxonomy.txt")
    with path.open(encoding="utf-8") as fh:
        return load_taxonomy(fh)


def map_action(taxonomy: ActionTaxonomy, action: str) -> Category | None:
    """Category of an action, or None for actions outside the taxonomy."""
    return taxonomy.get(action)


def label_outcome(mark: float) -> Outcome:
    if not 0.0 <= mark <= 10.0:
        raise OutOfRangeMark(f"mark {mark} outside [0,10]")
    return Outcome.PASS if mark >= 5.0 else Outcome.FAIL


@dataclass(frozen=True)
class StudentFeatures:
    student_id: str
    learning_pct: float
    communicating_pct: float
    working_pct: float
    evaluating_pct: float
    engagement: float
    outcome: Outcome

    @property
    def values(self) -> tuple[float, ...]:
        return (self.learning_pct, self.communicating_pct, self.working_pct,
                self.evaluating_pct, self.engagement)


@dataclass(frozen=True)
class Row:
    student_id: str
    values: tuple
    outcome: Outcome


@dataclass(frozen=True)
class FeatureDataset:
    course_code: str
    representation: Representation
    attribute_names: tuple[str, ...]
    rows: tuple[Row, ...]

    def __post_init__(self):
        width = len(self.attribute_names)
        for r in self.rows:
            if len(r.values) != width:
                raise SchemaMismatch(
                    f"row {r.student_id} has {len(r.values)} values, expected {width}")

    def __len__(self) -> int:
        return len(self.rows)

    def class_counts(self) -> Counter:
        return Counter(r.outcome for r in self.rows)

    def column(self, name: str) -> list:
        i = self.attribute_names.index(name)
        return [r.values[i] for r in self.rows]

    def replace_rows(self, rows: Iterable[Row]) -> "FeatureDataset":
        return FeatureDataset(self.course_code, self.representation,
                              self.attribute_names, tuple(rows))


def student_features(course: CourseLog, taxonomy: ActionTaxonomy) -> list[StudentFeatures]:
    graded = course.marks
    if not graded:
        raise NoGradedStudents(f"course {course.course_code}: no graded students")

    per_cat: dict[str, Counter] = {sid: Counter() for sid in graded}
    interactions: Counter = Counter()
    days: dict[str, set] = {sid: set() for sid in graded}
    ungraded = set()
    for e in course.events:
        if e.student_id not in graded:
            ungraded.add(e.student_id)
            continue
        interactions[e.student_id] += 1
        days[e.student_id].add(e.timestamp.date())
        cat = taxonomy.get(e.action)
        if cat is not None:
            per_cat[e.student_id][cat] += 1
    if ungraded:
        log.warning("course %s: dropped %d student(s) with events but no mark",
                    course.course_code, len(ungraded))

    max_i = max((interactions[s] for s in graded), default=0)
    max_d = max((len(days[s]) for s in graded), default=0)

    out = []
    for sid in sorted(graded):
        counts = per_cat[sid]
        total = sum(counts.values())
        pcts = [100.0 * counts[c] / total if total else 0.0 for c in EVENT_CATEGORIES]
        i_part = interactions[sid] / max_i if max_i else 0.0
        d_part = len(days[sid]) / max_d if max_d else 0.0
        out.append(StudentFeatures(sid, *pcts, 50.0 * (i_part + d_part),
                                   label_outcome(graded[sid])))
    return out


def build_features(course: CourseLog, taxonomy: ActionTaxonomy) -> FeatureDataset:
    rows = tuple(Row(f.student_id, f.values, f.outcome)
                 for f in student_features(course, taxonomy))
    return FeatureDataset(course.course_code, Representation.NUMERIC, ATTRIBUTES, rows)


def _format_value(v) -> str:
    return v if isinstance(v, str) else f"{v:.6f}"


def write_dataset(dataset: FeatureDataset, sink: TextIO) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["student_id", *dataset.attribute_names, "outcome"])
    for r in dataset.rows:
        w.writerow([r.student_id, *map(_format_value, r.values), r.outcome.value])


def read_dataset(source: TextIO, course_code: str) -> FeatureDataset:
    """Read a numeric or discretized dataset CSV; the representation is inferred."""
    reader = csv.reader(source)
    header = next(reader, None)
    if not header or header[0] != "student_id" or header[-1] != "outcome":
        raise SchemaMismatch("dataset header must start with student_id and end with outcome")
    names = tuple(header[1:-1])
    rows = []
    discretized = None
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(reader.line_num, f"expected {len(header)} fields")
        raw = row[1:-1]
        is_label = all(v in ("LOW", "HIGH") for v in raw)
        if discretized is None:
            discretized = is_label
        elif discretized != is_label:
            raise SchemaMismatch(f"line {reader.line_num}: mixed representations")
        try:
            values = tuple(raw) if is_label else tuple(float(v) for v in raw)
            outcome = Outcome(row[-1])
        except ValueError as exc:
            raise MalformedRow(reader.line_num, str(exc)) from None
        rows.append(Row(row[0], values, outcome))
    rep = Representation.DISCRETIZED if discretized else Representation.NUMERIC
    return FeatureDataset(course_code, rep, names, tuple(rows))


def check_attributes(dataset: FeatureDataset, expected: Sequence[str]) -> None:
    if tuple(dataset.attribute_names) != tuple(expected):
        raise SchemaMismatch(
            f"attributes {dataset.attribute_names} do not match {tuple(expected)}")
