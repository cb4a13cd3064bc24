"""C4.5-style decision trees (the J48 flavour) for Pass/Fail prediction.

Splits are chosen by gain ratio among candidates with positive information
gain. Categorical attributes branch once per label, numeric attributes
split in two at a midpoint threshold (``<= t`` / ``> t``). Pruning is
pessimistic-error subtree replacement.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from statistics import NormalDist
from typing import NamedTuple, Sequence

from .errors import SchemaMismatch, SingleClassDataset, TooFewInstances
from .ontology import FeatureDataset, Outcome, Representation, Row

# score differences below this are treated as ties
EPS = 1e-12

LABEL_ORDER = ("LOW", "HIGH")


@dataclass(frozen=True)
class TrainConfig:
    min_instances_per_leaf: int = 2
    pruning_confidence: float = 0.25
    pruning_enabled: bool = True
    random_seed: int = 0

    def __post_init__(self):
        if self.min_instances_per_leaf < 1:
            raise ValueError("min_instances_per_leaf must be positive")
        if not 0.0 < self.pruning_confidence <= 0.5:
            raise ValueError("pruning_confidence must lie in (0, 0.5]")


Counts = tuple  # (n_pass, n_fail)


def entropy(class_counts: Sequence[float]) -> float:
    total = sum(class_counts)
    if total <= 0:
        return 0.0
    h = 0.0
    for c in class_counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


class SplitScore(NamedTuple):
    gain: float
    split_info: float
    ratio: float

    @property
    def eligible(self) -> bool:
        return self.gain > EPS


def split_score(parent: Counts, partition: Sequence[Counts]) -> SplitScore:
    n = sum(parent)
    if n == 0:
        return SplitScore(0.0, 0.0, 0.0)
    remainder = sum(sum(child) / n * entropy(child) for child in partition)
    gain = entropy(parent) - remainder
    split_info = entropy([sum(child) for child in partition])
    ratio = gain / split_info if split_info > 0 else 0.0
    return SplitScore(gain, split_info, ratio)


def gain_ratio(parent_counts: Counts, partition: Sequence[Counts]) -> float:
    return split_score(parent_counts, partition).ratio


def _counts(outcomes) -> Counts:
    p = sum(1 for o in outcomes if o is Outcome.PASS)
    return (p, len(outcomes) - p)


def best_numeric_split(values: Sequence[tuple[float, Outcome]], min_leaf: int = 1):
    """Best binary threshold for one numeric attribute.

    Every midpoint between consecutive distinct values is a candidate.
    Returns ``(threshold, gain_ratio)`` for the highest-ratio candidate with
    positive gain (smaller threshold on ties), or None.
    """
    if len(values) < 2:
        return None
    ordered = sorted(values, key=lambda vc: vc[0])
    parent = _counts([c for _, c in ordered])
    n = len(ordered)
    best = None
    left_pass = left_fail = 0
    for i in range(n - 1):
        x, cls = ordered[i]
        if cls is Outcome.PASS:
            left_pass += 1
        else:
            left_fail += 1
        nxt = ordered[i + 1][0]
        if nxt == x:
            continue
        n_left = i + 1
        if n_left < min_leaf or n - n_left < min_leaf:
            continue
        left = (left_pass, left_fail)
        right = (parent[0] - left_pass, parent[1] - left_fail)
        score = split_score(parent, [left, right])
        if not score.eligible:
            continue
        if best is None or score.ratio > best[1] + EPS:
            t = (x + nxt) / 2.0
            if not x <= t < nxt:
                t = x
            best = (t, score.ratio)
    return best


def _label_key(label: str):
    return (LABEL_ORDER.index(label), "") if label in LABEL_ORDER else (len(LABEL_ORDER), label)


@dataclass(frozen=True)
class TreeNode:
    counts: Counts
    attribute: int | None = None
    threshold: float | None = None
    # (label, child) pairs for categorical splits; ("<=", le), (">", gt) for numeric
    branches: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return not self.branches

    @property
    def total(self) -> int:
        return self.counts[0] + self.counts[1]

    @property
    def prediction(self) -> Outcome:
        return Outcome.PASS if self.counts[0] > self.counts[1] else Outcome.FAIL

    @property
    def pass_score(self) -> float:
        return self.counts[0] / self.total if self.total else 0.0

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for _, child in self.branches:
                yield from child.leaves()

    def size(self) -> int:
        return 1 + sum(child.size() for _, child in self.branches)

    def as_leaf(self) -> "TreeNode":
        return TreeNode(self.counts)


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    attribute_names: tuple[str, ...]
    representation: Representation
    course_code: str = ""
    config: TrainConfig = field(default_factory=TrainConfig)
    pruned: bool = True

    @property
    def n_leaves(self) -> int:
        return sum(1 for _ in self.root.leaves())

    @property
    def size(self) -> int:
        return self.root.size()

    def to_dict(self) -> dict:
        return {
            "course_code": self.course_code,
            "representation": self.representation.value,
            "attribute_names": list(self.attribute_names),
            "config": asdict(self.config),
            "pruned": self.pruned,
            "root": _node_to_dict(self.root, self.attribute_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        names = tuple(d["attribute_names"])
        return cls(_node_from_dict(d["root"], names), names,
                   Representation(d["representation"]), d.get("course_code", ""),
                   TrainConfig(**d.get("config", {})), d.get("pruned", True))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "DecisionTree":
        return cls.from_dict(json.loads(text))


def _node_to_dict(node: TreeNode, names) -> dict:
    d = {"pass": node.counts[0], "fail": node.counts[1]}
    if node.is_leaf:
        return d
    d["attribute"] = names[node.attribute]
    if node.threshold is not None:
        d["threshold"] = node.threshold
    d["branches"] = [{"label": lab, "node": _node_to_dict(ch, names)} for lab, ch in node.branches]
    return d


def _node_from_dict(d: dict, names) -> TreeNode:
    counts = (int(d["pass"]), int(d["fail"]))
    if "branches" not in d:
        return TreeNode(counts)
    branches = tuple((b["label"], _node_from_dict(b["node"], names)) for b in d["branches"])
    return TreeNode(counts, names.index(d["attribute"]), d.get("threshold"), branches)


# ---------------------------------------------------------------- induction

@dataclass
class _Candidate:
    ratio: float
    attribute: int
    threshold: float | None = None


def _best_split(rows: Sequence[Row], numeric: bool, used: frozenset, min_leaf: int):
    best = None
    n_attrs = len(rows[0].values)
    parent = _counts([r.outcome for r in rows])
    for a in range(n_attrs):
        if numeric:
            found = best_numeric_split([(r.values[a], r.outcome) for r in rows], min_leaf)
            if found is None:
                continue
            cand = _Candidate(found[1], a, found[0])
        else:
            if a in used:
                continue
            groups: dict[str, list] = {}
            for r in rows:
                groups.setdefault(r.values[a], []).append(r.outcome)
            if len(groups) < 2 or any(len(g) < min_leaf for g in groups.values()):
                continue
            score = split_score(parent, [_counts(g) for g in groups.values()])
            if not score.eligible:
                continue
            cand = _Candidate(score.ratio, a)
        if best is None or cand.ratio > best.ratio + EPS:
            best = cand
    return best


def _grow(rows: Sequence[Row], numeric: bool, used: frozenset, min_leaf: int) -> TreeNode:
    counts = _counts([r.outcome for r in rows])
    if 0 in counts or len(rows) < 2 * min_leaf:
        return TreeNode(counts)
    split = _best_split(rows, numeric, used, min_leaf)
    if split is None:
        return TreeNode(counts)
    a = split.attribute
    if numeric:
        t = split.threshold
        le = [r for r in rows if r.values[a] <= t]
        gt = [r for r in rows if r.values[a] > t]
        branches = (("<=", _grow(le, numeric, used, min_leaf)),
                    (">", _grow(gt, numeric, used, min_leaf)))
        return TreeNode(counts, a, t, branches)
    groups: dict[str, list] = {}
    for r in rows:
        groups.setdefault(r.values[a], []).append(r)
    used = used | {a}
    branches = tuple((lab, _grow(groups[lab], numeric, used, min_leaf))
                     for lab in sorted(groups, key=_label_key))
    return TreeNode(counts, a, None, branches)


# ------------------------------------------------------------------ pruning

_Z_CACHE: dict[float, float] = {}


def _z(confidence: float) -> float:
    if confidence not in _Z_CACHE:
        _Z_CACHE[confidence] = NormalDist().inv_cdf(1.0 - confidence)
    return _Z_CACHE[confidence]


def added_errors(n: float, e: float, confidence: float) -> float:
    """Extra errors on top of ``e`` observed in ``n`` cases, from the upper
    confidence bound of the binomial error rate (C4.5's pessimistic estimate)."""
    if n <= 0:
        return 0.0
    if e < 1:
        base = n * (1.0 - confidence ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1.0, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = _z(confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) \
        / (1 + z * z / n)
    return r * n - e


def leaf_estimated_errors(counts: Counts, confidence: float) -> float:
    n = counts[0] + counts[1]
    e = counts[0] if counts[0] <= counts[1] else counts[1]
    return e + added_errors(n, e, confidence)


def estimated_errors(node: TreeNode, confidence: float) -> float:
    return sum(leaf_estimated_errors(leaf.counts, confidence) for leaf in node.leaves())


def prune(node: TreeNode, confidence: float) -> TreeNode:
    """Bottom-up subtree replacement: a subtree becomes a leaf whenever the
    leaf's pessimistic error estimate does not exceed the subtree's."""
    if node.is_leaf:
        return node
    branches = tuple((lab, prune(ch, confidence)) for lab, ch in node.branches)
    node = TreeNode(node.counts, node.attribute, node.threshold, branches)
    if leaf_estimated_errors(node.counts, confidence) <= estimated_errors(node, confidence):
        return node.as_leaf()
    return node


def train(dataset: FeatureDataset, config: TrainConfig = TrainConfig()) -> DecisionTree:
    counts = dataset.class_counts()
    if len(counts) < 2:
        raise SingleClassDataset(f"course {dataset.course_code}: only one outcome class present")
    if len(dataset) < 2 * config.min_instances_per_leaf:
        raise TooFewInstances(
            f"course {dataset.course_code}: {len(dataset)} rows, need "
            f"{2 * config.min_instances_per_leaf}")
    numeric = dataset.representation is Representation.NUMERIC
    root = _grow(dataset.rows, numeric, frozenset(), config.min_instances_per_leaf)
    if config.pruning_enabled:
        root = prune(root, config.pruning_confidence)
    return DecisionTree(root, tuple(dataset.attribute_names), dataset.representation,
                        dataset.course_code, config, config.pruning_enabled)


# --------------------------------------------------------------- prediction

def _values(tree: DecisionTree, row) -> tuple:
    values = row.values if isinstance(row, Row) else tuple(row)
    if len(values) != len(tree.attribute_names):
        raise SchemaMismatch(
            f"row has {len(values)} values, tree expects {len(tree.attribute_names)}")
    numeric = tree.representation is Representation.NUMERIC
    for v in values:
        if numeric == isinstance(v, str):
            raise SchemaMismatch(f"value {v!r} does not fit a {tree.representation.value} tree")
    return values


def leaf_for(tree: DecisionTree, row) -> TreeNode:
    values = _values(tree, row)
    node = tree.root
    while not node.is_leaf:
        v = values[node.attribute]
        if node.threshold is not None:
            node = node.branches[0][1] if v <= node.threshold else node.branches[1][1]
            continue
        for lab, child in node.branches:
            if lab == v:
                node = child
                break
        else:
            # unseen label: heaviest branch, first one on ties
            node = max((ch for _, ch in node.branches), key=lambda ch: ch.total)
    return node


def predict(tree: DecisionTree, row) -> tuple[Outcome, float]:
    leaf = leaf_for(tree, row)
    return leaf.prediction, leaf.pass_score


def score_dataset(tree: DecisionTree, dataset: FeatureDataset) -> list[tuple[float, Outcome]]:
    if tuple(dataset.attribute_names) != tree.attribute_names:
        raise SchemaMismatch(
            f"dataset attributes {dataset.attribute_names} != tree {tree.attribute_names}")
    if dataset.representation is not tree.representation:
        raise SchemaMismatch("dataset and tree representations differ")
    return [(predict(tree, r)[1], r.outcome) for r in dataset.rows]


# ---------------------------------------------------------------- rendering

def _fmt_threshold(t: float) -> str:
    return f"{t:.6g}"


def render_tree(tree: DecisionTree, show_counts: bool = False) -> str:
    names = [n.upper() for n in tree.attribute_names]
    lines = ["J48 pruned tree" if tree.pruned else "J48 unpruned tree", "-" * 18, ""]

    def leaf_text(node: TreeNode) -> str:
        text = node.prediction.value
        if show_counts:
            errors = min(node.counts) if node.counts[0] != node.counts[1] else node.counts[0]
            text += f" ({node.total}/{errors})" if errors else f" ({node.total})"
        return text

    def walk(node: TreeNode, depth: int):
        for lab, child in node.branches:
            if node.threshold is not None:
                cond = f"{names[node.attribute]} {lab} {_fmt_threshold(node.threshold)}"
            else:
                cond = f"{names[node.attribute]} = {lab}"
            prefix = "| " * depth
            if child.is_leaf:
                lines.append(f"{prefix}{cond}: {leaf_text(child)}")
            else:
                lines.append(f"{prefix}{cond}")
                walk(child, depth + 1)

    if tree.root.is_leaf:
        lines.append(f": {leaf_text(tree.root)}")
    else:
        walk(tree.root, 0)
    lines += ["", f"Number of Leaves: {tree.n_leaves}", "", f"Size of the tree: {tree.size}", ""]
    return "\n".join(lines)
