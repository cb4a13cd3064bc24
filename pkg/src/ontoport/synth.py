"""Seeded synthetic course logs with controllable per-outcome behaviour.

A course spec gives, for each outcome, one or more behaviour profiles: a
weight and the mean number of events per event category. Each student is
assigned an outcome, a profile, a mark consistent with the outcome, event
counts around the profile means and a number of active days.

Spec files are ``key = value`` lines::

    course_code = SYN1
    n_students = 80
    pass_rate = 0.5
    activity_kinds = quiz, forum, assignment
    days_range = 5, 30
    noise = 0.2
    seed = 1
    pass.COMMUNICATING = 20        # single-profile form
    fail.social.weight = 2         # named-profile form
    fail.social.COMMUNICATING = 8

Optional keys ``actions_per_category`` (use only a seeded subset of each
category's actions) and ``action_skew`` (Dirichlet concentration for
unequal action frequencies, 0 = uniform) add course-specific action-level
variation on top of the shared category-level behaviour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from typing import Mapping, TextIO

import numpy as np

from .errors import InvalidSpec
from .event_log import ACTIVITY_KINDS, RESOURCE_KINDS, CourseLog, LogEvent
from .ontology import EVENT_CATEGORIES, ActionTaxonomy, Category, Outcome, default_taxonomy

TERM_START = datetime(2021, 2, 1, tzinfo=timezone.utc)

_KIND_BY_PREFIX = {"imscp": "resource", "blog": "", "course": ""}


def action_kind(action: str) -> str:
    """Moodle module an action belongs to, or "" for course-level actions."""
    prefix = action.split(" ", 1)[0]
    if prefix in _KIND_BY_PREFIX:
        return _KIND_BY_PREFIX[prefix]
    if prefix in ACTIVITY_KINDS or prefix in RESOURCE_KINDS:
        return prefix
    return ""


@dataclass(frozen=True)
class Profile:
    weight: float
    means: Mapping[Category, float]


@dataclass(frozen=True)
class CourseSpec:
    course_code: str
    n_students: int
    pass_rate: float
    activity_kinds: frozenset[str]
    profiles: Mapping[Outcome, tuple[Profile, ...]]
    days_range: tuple[int, int] = (1, 30)
    noise: float = 0.0
    seed: int = 0
    actions_per_category: int = 0
    action_skew: float = 0.0

    def validate(self) -> None:
        if not self.course_code:
            raise InvalidSpec("course_code is required")
        if self.n_students < 1:
            raise InvalidSpec("n_students must be positive")
        if not 0.0 < self.pass_rate < 1.0:
            raise InvalidSpec(f"pass_rate must lie in (0, 1), got {self.pass_rate}")
        lo, hi = self.days_range
        if lo < 1 or hi < lo:
            raise InvalidSpec(f"days_range must satisfy 1 <= min <= max, got {self.days_range}")
        if self.noise < 0 or self.action_skew < 0 or self.actions_per_category < 0:
            raise InvalidSpec("noise, action_skew and actions_per_category must be >= 0")
        for outcome in Outcome:
            profiles = self.profiles.get(outcome, ())
            if not profiles:
                raise InvalidSpec(f"no intensities given for outcome {outcome.value}")
            for p in profiles:
                if p.weight <= 0:
                    raise InvalidSpec("profile weights must be positive")
                if any(v < 0 for v in p.means.values()):
                    raise InvalidSpec("category intensities must be non-negative")
                if not any(v > 0 for v in p.means.values()):
                    raise InvalidSpec(
                        f"{outcome.value} profile needs a positive intensity in some category")


def _parse_pair(value: str, key: str) -> tuple[int, int]:
    parts = [p for p in value.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise InvalidSpec(f"{key} needs two integers")
    return int(parts[0]), int(parts[1])


def parse_spec(source: TextIO) -> CourseSpec:
    values: dict[str, str] = {}
    profiles: dict[Outcome, dict[str, dict]] = {o: {} for o in Outcome}
    for lineno, raw in enumerate(source, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidSpec(f"line {lineno}: expected 'key = value'")
        key, value = key.strip(), value.strip()
        head = key.split(".")
        if head[0].lower() in ("pass", "fail"):
            outcome = Outcome(head[0].capitalize())
            if len(head) == 2:
                name, attr = "", head[1]
            elif len(head) == 3:
                name, attr = head[1], head[2]
            else:
                raise InvalidSpec(f"line {lineno}: bad intensity key {key!r}")
            prof = profiles[outcome].setdefault(name, {"weight": 1.0, "means": {}})
            try:
                number = float(value)
            except ValueError:
                raise InvalidSpec(f"line {lineno}: {value!r} is not a number") from None
            if attr.lower() == "weight":
                prof["weight"] = number
                continue
            try:
                cat = Category(attr.upper())
            except ValueError:
                raise InvalidSpec(f"line {lineno}: unknown category {attr!r}") from None
            if cat is Category.ENGAGEMENT:
                raise InvalidSpec(f"line {lineno}: ENGAGEMENT is derived, not generated")
            prof["means"][cat] = number
        else:
            values[key] = value

    try:
        spec = CourseSpec(
            course_code=values["course_code"],
            n_students=int(values["n_students"]),
            pass_rate=float(values["pass_rate"]),
            activity_kinds=frozenset(k.strip().lower()
                                     for k in values.get("activity_kinds", "").split(",")
                                     if k.strip()),
            profiles={o: tuple(Profile(p["weight"], p["means"]) for _, p in sorted(ps.items()))
                      for o, ps in profiles.items()},
            days_range=_parse_pair(values.get("days_range", "1, 30"), "days_range"),
            noise=float(values.get("noise", 0)),
            seed=int(values.get("seed", 0)),
            actions_per_category=int(values.get("actions_per_category", 0)),
            action_skew=float(values.get("action_skew", 0)),
        )
    except KeyError as exc:
        raise InvalidSpec(f"missing required key {exc.args[0]}") from None
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from None
    spec.validate()
    return spec


def _apportion(n: int, weights) -> list[int]:
    """Split n into integer parts proportional to weights (largest remainder)."""
    w = np.asarray(weights, dtype=float)
    exact = n * w / w.sum()
    parts = np.floor(exact).astype(int)
    for k in np.argsort(-(exact - parts), kind="stable")[: n - parts.sum()]:
        parts[k] += 1
    return parts.tolist()


def _action_pools(spec: CourseSpec, taxonomy: ActionTaxonomy, rng) -> dict:
    pools = {}
    for cat in EVENT_CATEGORIES:
        actions = taxonomy.actions_of(cat)
        allowed = [a for a in actions
                   if action_kind(a) in spec.activity_kinds or action_kind(a) not in ACTIVITY_KINDS]
        blank_kind = not allowed
        pool = allowed or actions
        if spec.actions_per_category and spec.actions_per_category < len(pool):
            pick = rng.choice(len(pool), size=spec.actions_per_category, replace=False)
            pool = [pool[i] for i in sorted(pick)]
        if spec.action_skew > 0:
            probs = rng.dirichlet(np.full(len(pool), spec.action_skew))
        else:
            probs = np.full(len(pool), 1.0 / len(pool))
        kinds = ["" if blank_kind else action_kind(a) for a in pool]
        pools[cat] = (pool, kinds, probs)
    return pools


def generate_course(spec: CourseSpec, taxonomy: ActionTaxonomy | None = None) -> CourseLog:
    spec.validate()
    taxonomy = taxonomy or default_taxonomy()
    rng = np.random.default_rng(spec.seed)
    pools = _action_pools(spec, taxonomy, rng)

    n = spec.n_students
    n_pass = min(max(round(n * spec.pass_rate), 1), n - 1) if n > 1 else round(spec.pass_rate)
    outcomes = [Outcome.PASS] * n_pass + [Outcome.FAIL] * (n - n_pass)
    assignments = []
    for outcome in Outcome:
        count = outcomes.count(outcome)
        profiles = spec.profiles[outcome]
        for k, m in enumerate(_apportion(count, [p.weight for p in profiles])):
            assignments += [(outcome, profiles[k])] * m
    order = rng.permutation(n)
    assignments = [assignments[i] for i in order]

    width = len(str(n))
    term_days = spec.days_range[1]
    events: list[LogEvent] = []
    marks: dict[str, float] = {}
    for idx, (outcome, profile) in enumerate(assignments):
        sid = f"{spec.course_code}-s{idx + 1:0{width}d}"
        if outcome is Outcome.PASS:
            mark = rng.uniform(5.0, 10.0)
        else:
            mark = rng.uniform(0.0, 5.0)
        marks[sid] = math.floor(mark * 100) / 100

        drawn: list[str] = []
        for cat in EVENT_CATEGORIES:
            mean = profile.means.get(cat, 0.0)
            sd = spec.noise * mean
            count = int(max(0, round(rng.normal(mean, sd) if sd > 0 else mean)))
            if count:
                pool, kinds, probs = pools[cat]
                drawn += [(pool[i], kinds[i]) for i in rng.choice(len(pool), size=count, p=probs)]
        n_days = int(rng.integers(spec.days_range[0], spec.days_range[1] + 1))
        days = np.sort(rng.choice(term_days, size=min(n_days, term_days), replace=False))
        day_of = rng.integers(0, len(days), size=len(drawn))
        # every chosen day gets at least one event when there are enough events
        day_of[: min(len(days), len(drawn))] = np.arange(min(len(days), len(drawn)))
        seconds = rng.integers(0, 86400, size=len(drawn))
        for (action, kind), d, s in zip(drawn, day_of, seconds):
            when = TERM_START + timedelta(days=int(days[d]), seconds=int(s))
            events.append(LogEvent(when, sid, action, kind))
    events.sort(key=lambda e: (e.timestamp, e.student_id, e.action))
    return CourseLog(spec.course_code, tuple(events), marks)


def with_seed(spec: CourseSpec, seed: int, course_code: str | None = None) -> CourseSpec:
    return replace(spec, seed=seed, course_code=course_code or spec.course_code)
