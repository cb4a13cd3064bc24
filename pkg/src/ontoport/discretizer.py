"""Two-bin equal-width discretization into LOW / HIGH labels."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import TextIO

from .errors import EmptyDataset, SchemaMismatch
from .ontology import FeatureDataset, Representation, Row

log = logging.getLogger(__name__)

LOW, HIGH = "LOW", "HIGH"


@dataclass(frozen=True)
class Cutpoint:
    low: float
    high: float

    @property
    def value(self) -> float:
        return (self.low + self.high) / 2.0

    @property
    def degenerate(self) -> bool:
        return self.low == self.high

    def label(self, x: float) -> str:
        # bins are [min, cut) and [cut, max]; out-of-range values are not clipped
        if self.degenerate or x < self.value:
            return LOW
        return HIGH


@dataclass(frozen=True)
class CutpointModel:
    attribute_names: tuple[str, ...]
    cutpoints: tuple[Cutpoint, ...]

    def __getitem__(self, name: str) -> Cutpoint:
        return self.cutpoints[self.attribute_names.index(name)]

    def to_json(self) -> dict:
        return {
            name: {"min": c.low, "max": c.high, "cutpoint": c.value, "degenerate": c.degenerate}
            for name, c in zip(self.attribute_names, self.cutpoints)
        }

    def dump(self, sink: TextIO) -> None:
        json.dump(self.to_json(), sink, indent=2)
        sink.write("\n")


def fit_cutpoints(dataset: FeatureDataset) -> CutpointModel:
    if dataset.representation is not Representation.NUMERIC:
        raise SchemaMismatch("cutpoints can only be fit on a numeric dataset")
    if not dataset.rows:
        raise EmptyDataset(f"course {dataset.course_code}: nothing to discretize")
    cuts = []
    for name in dataset.attribute_names:
        col = dataset.column(name)
        cut = Cutpoint(min(col), max(col))
        if cut.degenerate:
            log.warning("course %s: attribute %s is constant (%g); all values map to LOW",
                        dataset.course_code, name, cut.low)
        cuts.append(cut)
    return CutpointModel(tuple(dataset.attribute_names), tuple(cuts))


def apply_cutpoints(model: CutpointModel, dataset: FeatureDataset) -> FeatureDataset:
    if tuple(dataset.attribute_names) != model.attribute_names:
        raise SchemaMismatch(
            f"model attributes {model.attribute_names} != dataset {dataset.attribute_names}")
    if dataset.representation is not Representation.NUMERIC:
        raise SchemaMismatch("apply_cutpoints expects a numeric dataset")
    rows = tuple(
        Row(r.student_id, tuple(c.label(v) for c, v in zip(model.cutpoints, r.values)), r.outcome)
        for r in dataset.rows
    )
    return FeatureDataset(dataset.course_code, Representation.DISCRETIZED,
                          dataset.attribute_names, rows)


def discretize(dataset: FeatureDataset) -> tuple[FeatureDataset, CutpointModel]:
    """Fit on the dataset itself and apply; the per-course flow."""
    model = fit_cutpoints(dataset)
    return apply_cutpoints(model, dataset), model
