"""Cross-course transfer evaluation within usage-level groups.

For every course in a group a model is trained on its balanced dataset and
then scored on every course of the group. The diagonal (own course, by
resubstitution) is the reference AUC for its row; the loss matrix holds the
drop from that reference for every other course.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .discretizer import CutpointModel, discretize
from .errors import DataError, NoGradedStudents, SingleClassDataset
from .event_log import CourseLog, UsageLevel, distinct_activity_types, classify_usage_level
from .ontology import (ActionTaxonomy, FeatureDataset, Outcome, Representation, Row,
                       build_features, label_outcome)
from .tree import DecisionTree, TrainConfig, render_tree, score_dataset, train

log = logging.getLogger(__name__)

FEATURE_MODES = ("ontology", "raw")


# ---------------------------------------------------------------- balancing

def balance(dataset: FeatureDataset, seed: int) -> FeatureDataset:
    """Undersample the majority class down to the minority size."""
    by_class: dict[Outcome, list[int]] = {Outcome.PASS: [], Outcome.FAIL: []}
    for i, r in enumerate(dataset.rows):
        by_class[r.outcome].append(i)
    if not by_class[Outcome.PASS] or not by_class[Outcome.FAIL]:
        raise SingleClassDataset(f"course {dataset.course_code}: cannot balance one class")
    rng = np.random.default_rng(seed)
    minority, majority = sorted(by_class.values(), key=len)
    kept = rng.choice(majority, size=len(minority), replace=False) if len(majority) > len(minority) \
        else np.asarray(majority)
    idx = np.concatenate([np.asarray(minority), kept])
    rng.shuffle(idx)
    return dataset.replace_rows(dataset.rows[i] for i in idx.tolist())


# ---------------------------------------------------------------------- AUC

def auc_fraction(scored: Iterable[tuple[float, Outcome]]) -> Fraction | None:
    """Exact Mann-Whitney AUC, Pass positive, ties counting half.

    Returns None when the labels hold only one class.
    """
    scored = list(scored)
    pos = np.array([s for s, y in scored if y is Outcome.PASS], dtype=float)
    neg = np.array([s for s, y in scored if y is not Outcome.PASS], dtype=float)
    if pos.size == 0 or neg.size == 0:
        return None
    diff = pos[:, None] - neg[None, :]
    wins = int(np.count_nonzero(diff > 0))
    ties = int(np.count_nonzero(diff == 0))
    return Fraction(2 * wins + ties, 2 * pos.size * neg.size)


def auc(scored: Iterable[tuple[float, Outcome]]) -> float | None:
    """``auc_fraction`` rounded once to the nearest float."""
    exact = auc_fraction(scored)
    return None if exact is None else float(exact)


# ----------------------------------------------------------------- matrices

def _mean(values: Sequence[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


@dataclass(frozen=True)
class AucMatrix:
    courses: tuple[str, ...]
    cells: tuple[tuple[float | None, ...], ...]

    @property
    def row_averages(self) -> tuple[float | None, ...]:
        return tuple(_mean(row) for row in self.cells)

    @property
    def grand_mean(self) -> float | None:
        return _mean(self.row_averages)

    @property
    def undefined_cells(self) -> int:
        return sum(v is None for row in self.cells for v in row)

    def cell(self, model: str, test: str) -> float | None:
        return self.cells[self.courses.index(model)][self.courses.index(test)]


@dataclass(frozen=True)
class LossMatrix:
    courses: tuple[str, ...]
    cells: tuple[tuple[float | None, ...], ...]  # diagonal is always None

    @property
    def row_averages(self) -> tuple[float | None, ...]:
        return tuple(_mean([v for j, v in enumerate(row) if j != i])
                     for i, row in enumerate(self.cells))

    @property
    def grand_mean(self) -> float | None:
        return _mean(self.row_averages)

    @property
    def undefined_cells(self) -> int:
        n = len(self.courses)
        return sum(self.cells[i][j] is None for i in range(n) for j in range(n) if i != j)

    def cell(self, model: str, test: str) -> float | None:
        return self.cells[self.courses.index(model)][self.courses.index(test)]

    def off_diagonal(self) -> list[float]:
        n = len(self.courses)
        return [self.cells[i][j] for i in range(n) for j in range(n)
                if i != j and self.cells[i][j] is not None]


def auc_matrix(courses: Sequence[str], cells: Sequence[Sequence[float | None]]) -> AucMatrix:
    n = len(courses)
    if len(cells) != n or any(len(row) != n for row in cells):
        raise ValueError(f"AUC matrix must be {n}x{n}")
    return AucMatrix(tuple(courses), tuple(tuple(row) for row in cells))


def loss_matrix(aucs: AucMatrix) -> LossMatrix:
    """Loss(i, j) = AUC(i, i) - AUC(i, j); the diagonal is the row's reference."""
    rows = []
    for i, row in enumerate(aucs.cells):
        ref = row[i]
        rows.append(tuple(
            None if j == i or ref is None or v is None else ref - v
            for j, v in enumerate(row)))
    return LossMatrix(aucs.courses, tuple(rows))


# ------------------------------------------------------------------- groups

@dataclass(frozen=True)
class CourseData:
    """Both representations of one course plus the cutpoints used."""
    code: str
    numeric: FeatureDataset
    discretized: FeatureDataset
    cutpoints: CutpointModel

    def dataset(self, representation: Representation) -> FeatureDataset:
        if representation is Representation.NUMERIC:
            return self.numeric
        return self.discretized


def course_data(numeric: FeatureDataset) -> CourseData:
    disc, cuts = discretize(numeric)
    return CourseData(numeric.course_code, numeric, disc, cuts)


@dataclass(frozen=True)
class CourseGroup:
    level: UsageLevel
    courses: tuple[CourseData, ...]

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(c.code for c in self.courses)


@dataclass
class TransferBlock:
    representation: Representation
    auc: AucMatrix
    loss: LossMatrix
    trees: dict[str, DecisionTree]
    failures: dict[str, str] = field(default_factory=dict)

    def __iter__(self):
        # lets callers unpack ``auc, loss = evaluate_transfer(...)``
        return iter((self.auc, self.loss))


def evaluate_transfer(group: CourseGroup, representation: Representation,
                      config: TrainConfig = TrainConfig(), seed: int = 0) -> TransferBlock:
    datasets = [c.dataset(representation) for c in group.courses]
    codes = group.codes
    n = len(codes)
    trees: dict[str, DecisionTree] = {}
    failures: dict[str, str] = {}
    cells: list[list[float | None]] = []
    for i, ds in enumerate(datasets):
        try:
            balanced = balance(ds, seed)
            model = train(balanced, config)
        except DataError as exc:
            log.warning("group %s, %s model for %s not trained: %s",
                        group.level.label, representation.value, codes[i], exc)
            failures[codes[i]] = str(exc)
            cells.append([None] * n)
            continue
        trees[codes[i]] = model
        row = []
        for j, target in enumerate(datasets):
            test = balanced if i == j else target
            row.append(auc(score_dataset(model, test)))
        cells.append(row)
    aucs = auc_matrix(codes, cells)
    return TransferBlock(representation, aucs, loss_matrix(aucs), trees, failures)


# ---------------------------------------------------------- raw-action mode

def build_raw_features(course: CourseLog, taxonomy: ActionTaxonomy) -> FeatureDataset:
    """Per-student share (0-100) of their events spent on each taxonomy action.

    The low-level baseline: one attribute per action, same downstream
    machinery as the ontology features.
    """
    actions = tuple(taxonomy)
    index = {a: k for k, a in enumerate(actions)}
    graded = course.marks
    if not graded:
        raise NoGradedStudents(f"course {course.course_code}: no graded students")
    counts = {sid: [0] * len(actions) for sid in graded}
    totals: Counter = Counter()
    for e in course.events:
        if e.student_id not in graded:
            continue
        totals[e.student_id] += 1
        k = index.get(e.action)
        if k is not None:
            counts[e.student_id][k] += 1
    rows = []
    for sid in sorted(graded):
        t = totals[sid]
        rows.append(Row(sid, tuple(100.0 * c / t if t else 0.0 for c in counts[sid]),
                        label_outcome(graded[sid])))
    return FeatureDataset(course.course_code, Representation.NUMERIC, actions, tuple(rows))


# ------------------------------------------------------------- experiments

@dataclass
class TransferReport:
    level: UsageLevel
    courses: tuple[str, ...]
    blocks: dict[Representation, TransferBlock]
    metadata: dict


def experiment_metadata(config: TrainConfig, seed: int, feature_mode: str,
                        representations: Sequence[Representation]) -> dict:
    return {
        "tool_version": __version__,
        "feature_mode": feature_mode,
        "representations": [r.value for r in representations],
        "train_config": asdict(config),
        "balance_seed": seed,
        "balancing": "random undersampling of the majority class",
        "diagonal": "resubstitution on the balanced training set",
        "off_diagonal_test_set": "full, unbalanced target course dataset",
        "discretization": "two equal-width bins fit per course on its own data; value == cutpoint -> HIGH",
        "engagement": "50 * (interactions / course max + active UTC days / course max)",
        "pass_rule": "final mark >= 5",
        "loss_reference": "diagonal AUC of the row",
    }


def prepare_courses(courses: Sequence[CourseLog], taxonomy: ActionTaxonomy,
                    feature_mode: str = "ontology"):
    """Featurize each course; failures are collected, not raised."""
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")
    build = build_features if feature_mode == "ontology" else build_raw_features
    prepared: list[tuple[UsageLevel, CourseData]] = []
    skipped: dict[str, str] = {}
    for course in courses:
        try:
            data = course_data(build(course, taxonomy))
        except DataError as exc:
            log.warning("course %s skipped: %s", course.course_code, exc)
            skipped[course.course_code] = str(exc)
            continue
        level = classify_usage_level(len(distinct_activity_types(course)))
        prepared.append((level, data))
    return prepared, skipped


def group_courses(prepared: Sequence[tuple[UsageLevel, CourseData]]) -> list[CourseGroup]:
    groups = []
    for level in sorted(UsageLevel, reverse=True):
        members = tuple(d for lv, d in prepared if lv is level)
        if members:
            groups.append(CourseGroup(level, members))
    return groups


def evaluate_groups(groups: Sequence[CourseGroup], config: TrainConfig, seed: int,
                    representations: Sequence[Representation], metadata: dict
                    ) -> list[TransferReport]:
    reports = []
    for g in groups:
        blocks = {rep: evaluate_transfer(g, rep, config, seed) for rep in representations}
        meta = dict(metadata)
        meta["usage_level"] = g.level.label
        meta["undefined_cells"] = {rep.value: b.auc.undefined_cells for rep, b in blocks.items()}
        meta["failed_models"] = {rep.value: b.failures for rep, b in blocks.items()}
        meta["cutpoints"] = {c.code: c.cutpoints.to_json() for c in g.courses}
        reports.append(TransferReport(g.level, g.codes, blocks, meta))
    return reports


def run_experiment(courses: Sequence[CourseLog], taxonomy: ActionTaxonomy,
                   config: TrainConfig = TrainConfig(), seed: int = 0,
                   representations: Sequence[Representation] = tuple(Representation),
                   feature_mode: str = "ontology") -> list[TransferReport]:
    if not courses:
        raise ValueError("run_experiment needs at least one course")
    prepared, skipped = prepare_courses(courses, taxonomy, feature_mode)
    meta = experiment_metadata(config, seed, feature_mode, representations)
    meta["skipped_courses"] = skipped
    return evaluate_groups(group_courses(prepared), config, seed, representations, meta)


# ---------------------------------------------------------------- emission

def format_value(v: float | None, decimal_comma: bool = False) -> str:
    if v is None:
        return "n/a"
    text = f"{v:.3f}"
    return text.replace(".", ",") if decimal_comma else text


def matrix_csv(m: AucMatrix | LossMatrix, decimal_comma: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", *m.courses, "avg"])
    is_loss = isinstance(m, LossMatrix)
    for i, (code, row, avg) in enumerate(zip(m.courses, m.cells, m.row_averages)):
        cells = ["-" if is_loss and j == i else format_value(v, decimal_comma)
                 for j, v in enumerate(row)]
        w.writerow([code, *cells, format_value(avg, decimal_comma)])
    w.writerow(["avg mean", *[""] * len(m.courses), format_value(m.grand_mean, decimal_comma)])
    return buf.getvalue()


def _md_table(title: str, m: AucMatrix | LossMatrix, decimal_comma: bool) -> list[str]:
    is_loss = isinstance(m, LossMatrix)
    lines = [f"**{title}**", "", "| Course | " + " | ".join(m.courses) + " | avg |",
             "|---" * (len(m.courses) + 2) + "|"]
    for i, (code, row, avg) in enumerate(zip(m.courses, m.cells, m.row_averages)):
        cells = ["-" if is_loss and j == i else format_value(v, decimal_comma)
                 for j, v in enumerate(row)]
        lines.append(f"| {code} | " + " | ".join(cells) + f" | {format_value(avg, decimal_comma)} |")
    lines.append("| avg mean | " + " | ".join([""] * len(m.courses))
                 + f" | {format_value(m.grand_mean, decimal_comma)} |")
    return lines + [""]


def report_markdown(report: TransferReport, decimal_comma: bool = False) -> str:
    lines = [f"# Transfer report: {report.level.label}-level group", "",
             f"Courses: {', '.join(report.courses)}", ""]
    order = [r for r in (Representation.NUMERIC, Representation.DISCRETIZED) if r in report.blocks]
    for kind in ("auc", "loss"):
        for rep in order:
            title = f"{'AUC' if kind == 'auc' else 'AUC LOSS'} ({rep.value.capitalize()} Datasets)"
            lines += _md_table(title, getattr(report.blocks[rep], kind), decimal_comma)
    lines += ["## Metadata", "", "```json", json.dumps(report.metadata, indent=2, sort_keys=True),
              "```", ""]
    return "\n".join(lines)


def write_report(report: TransferReport, out_dir: Path, formats: Sequence[str] = ("csv", "markdown"),
                 decimal_comma: bool = False) -> list[Path]:
    """Write one group's matrices, trees and metadata under ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str):
        path = out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        written.append(path)

    for rep, block in report.blocks.items():
        if "csv" in formats:
            put(f"auc_{rep.value}.csv", matrix_csv(block.auc, decimal_comma))
            put(f"loss_{rep.value}.csv", matrix_csv(block.loss, decimal_comma))
        for code, model in block.trees.items():
            put(f"trees/{code}_{rep.value}.txt", render_tree(model))
            put(f"trees/{code}_{rep.value}.json", model.dumps() + "\n")
    if "markdown" in formats:
        put("report.md", report_markdown(report, decimal_comma))
    put("metadata.json", json.dumps(report.metadata, indent=2, sort_keys=True) + "\n")
    return written
