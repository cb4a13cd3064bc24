"""Command-line entry point: ``ontoport <command> [options]``.

Commands chain as synth -> ingest -> featurize -> eval-transfer; render-tree
prints a stored model. Exit codes: 0 success, 1 usage error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .discretizer import CutpointModel, Cutpoint, apply_cutpoints, discretize
from .errors import DataError
from .event_log import (TIMESTAMP_FORMAT, CourseLog, LogEvent, distinct_activity_types,
                        parse_course_log, parse_timestamp, usage_level, write_course_log)
from .ontology import (Outcome, Representation, build_features, default_taxonomy, load_taxonomy,
                       read_dataset, write_dataset)
from .synth import generate_course, parse_spec
from .transfer_eval import (CourseData, UsageLevel, evaluate_groups, experiment_metadata,
                            group_courses, prepare_courses, write_report)
from .tree import DecisionTree, TrainConfig, render_tree

log = logging.getLogger("ontoport")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

COURSE_SUFFIX = ".course.json"


class UsageError(Exception):
    pass


# --------------------------------------------------------- course files

def course_to_json(course: CourseLog) -> str:
    doc = {
        "course_code": course.course_code,
        "marks": {sid: course.marks[sid] for sid in sorted(course.marks)},
        "events": [[e.timestamp.strftime(TIMESTAMP_FORMAT), e.student_id, e.action,
                    e.activity_kind] for e in course.events],
    }
    return json.dumps(doc, indent=1) + "\n"


def course_from_json(text: str) -> CourseLog:
    doc = json.loads(text)
    events = tuple(LogEvent(parse_timestamp(ts), sid, action, kind)
                   for ts, sid, action, kind in doc["events"])
    return CourseLog(doc["course_code"], events, {k: float(v) for k, v in doc["marks"].items()})


def read_course_file(path: Path) -> CourseLog:
    try:
        return course_from_json(path.read_text(encoding="utf-8"))
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{path}: not a course file ({exc})") from None


def _code_from_log(path: Path) -> str:
    name = path.name
    for suffix in (".log.csv", ".csv"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _require_files(paths):
    missing = [str(p) for p in paths if not Path(p).is_file()]
    if missing:
        raise UsageError("no such file: " + ", ".join(missing))


# ------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    _require_files(args.specs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    taxonomy = _taxonomy(args)
    for spec_path in args.specs:
        with open(spec_path, encoding="utf-8") as fh:
            spec = parse_spec(fh)
        course = generate_course(spec, taxonomy)
        log_path = out / f"{spec.course_code}.log.csv"
        marks_path = out / f"{spec.course_code}.marks.csv"
        with open(log_path, "w", encoding="utf-8", newline="") as lf, \
                open(marks_path, "w", encoding="utf-8", newline="") as mf:
            write_course_log(course, lf, mf)
        print(f"{spec.course_code}: {len(course.marks)} students, {len(course.events)} events "
              f"-> {log_path.name}, {marks_path.name}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    logs = [Path(p) for p in args.logs]
    _require_files(logs)
    if args.marks and len(args.marks) != len(logs):
        raise UsageError("--marks must be given once per log file")
    if args.code and len(args.code) != len(logs):
        raise UsageError("--code must be given once per log file")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    results = []
    for k, log_path in enumerate(logs):
        code = args.code[k] if args.code else _code_from_log(log_path)
        marks_path = Path(args.marks[k]) if args.marks else log_path.with_name(f"{code}.marks.csv")
        if not marks_path.is_file():
            results.append((code, f"missing marks file {marks_path}"))
            continue
        try:
            with open(log_path, encoding="utf-8", newline="") as lf, \
                    open(marks_path, encoding="utf-8", newline="") as mf:
                course = parse_course_log(lf, mf, code)
        except (DataError, UnicodeDecodeError) as exc:
            results.append((code, f"{type(exc).__name__}: {exc}"))
            continue
        (out / f"{code}{COURSE_SUFFIX}").write_text(course_to_json(course), encoding="utf-8")
        ungraded = len({e.student_id for e in course.events} - set(course.marks))
        results.append((code, None))
        print(f"{code}: {len(course.events)} events, {len(course.marks)} marks, "
              f"{ungraded} ungraded student(s), usage level {usage_level(course).label}")

    failures = [(c, msg) for c, msg in sorted(results) if msg]
    for code, msg in failures:
        print(f"{code}: FAILED: {msg}", file=sys.stderr)
    print(f"ingested {len(results) - len(failures)} course(s), {len(failures)} failure(s)")
    return EXIT_DATA if failures else EXIT_OK


def _representations(choice: str) -> list[Representation]:
    if choice == "both":
        return [Representation.NUMERIC, Representation.DISCRETIZED]
    return [Representation(choice)]


def cmd_featurize(args) -> int:
    _require_files(args.courses)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    taxonomy = _taxonomy(args)
    reps = _representations(args.representation)
    courses = sorted((read_course_file(Path(p)) for p in args.courses),
                     key=lambda c: c.course_code)
    for course in courses:
        numeric = build_features(course, taxonomy)
        disc, cuts = discretize(numeric)
        code = course.course_code
        for rep, ds in ((Representation.NUMERIC, numeric), (Representation.DISCRETIZED, disc)):
            if rep in reps:
                with open(out / f"{code}.{rep.value}.csv", "w", encoding="utf-8", newline="") as fh:
                    write_dataset(ds, fh)
        sidecar = {
            "course_code": code,
            "usage_level": usage_level(course).label,
            "activity_types": sorted(distinct_activity_types(course)),
            "cutpoints": cuts.to_json(),
        }
        (out / f"{code}.cutpoints.json").write_text(
            json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
        counts = numeric.class_counts()
        print(f"{code}: {len(numeric)} students ({counts[Outcome.PASS]} Pass / "
              f"{counts[Outcome.FAIL]} Fail), usage level {sidecar['usage_level']}")
        if len(numeric) < 4 or len(counts) < 2:
            print(f"{code}: warning: too few students or a single class; "
                  "training will fail downstream", file=sys.stderr)
    return EXIT_OK


DATASET_SUFFIXES = (".numeric.csv", ".discretized.csv")


def _dataset_code(path: Path) -> str:
    for suffix in DATASET_SUFFIXES:
        if path.name.endswith(suffix):
            return path.name[: -len(suffix)]
    raise UsageError(f"{path}: not a dataset file")


def _load_dataset_course(code: str, paths: list[Path], reps):
    """Rebuild a course's datasets from featurize output files."""
    loaded = {}
    for path in paths:
        with open(path, encoding="utf-8", newline="") as fh:
            ds = read_dataset(fh, code)
        loaded[ds.representation] = ds
    sidecar_path = paths[0].with_name(f"{code}.cutpoints.json")
    if not sidecar_path.is_file():
        raise UsageError(f"{code}: missing sidecar {sidecar_path.name}")
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    names = tuple(sidecar["cutpoints"])
    cuts = CutpointModel(names, tuple(Cutpoint(sidecar["cutpoints"][n]["min"],
                                               sidecar["cutpoints"][n]["max"]) for n in names))
    numeric = loaded.get(Representation.NUMERIC)
    disc = loaded.get(Representation.DISCRETIZED)
    if numeric is not None:
        cuts = CutpointModel(numeric.attribute_names, tuple(cuts[n] for n in numeric.attribute_names))
        if disc is None:
            disc = apply_cutpoints(cuts, numeric)
    elif Representation.NUMERIC in reps:
        raise UsageError(f"{code}: numeric representation requested but no .numeric.csv given")
    level = UsageLevel[sidecar["usage_level"].upper()]
    return level, CourseData(code, numeric, disc, cuts)


def cmd_eval_transfer(args) -> int:
    inputs = [Path(p) for p in args.inputs]
    _require_files(inputs)
    config = TrainConfig(args.min_leaf, args.confidence, not args.no_prune, args.seed)
    reps = _representations(args.representation)
    course_files = [p for p in inputs if p.name.endswith(COURSE_SUFFIX)]
    dataset_files = [p for p in inputs if p.name.endswith(DATASET_SUFFIXES)]
    if len(course_files) + len(dataset_files) != len(inputs):
        raise UsageError(f"inputs must be *{COURSE_SUFFIX} course files or "
                         "*.numeric.csv / *.discretized.csv datasets")
    if dataset_files and args.feature_mode == "raw":
        raise UsageError("--feature-mode raw needs course files")

    prepared, skipped = [], {}
    if course_files:
        courses = sorted((read_course_file(p) for p in course_files), key=lambda c: c.course_code)
        prepared, skipped = prepare_courses(courses, _taxonomy(args), args.feature_mode)
    by_code: dict[str, list[Path]] = {}
    for p in dataset_files:
        by_code.setdefault(_dataset_code(p), []).append(p)
    prepared += [_load_dataset_course(code, paths, reps) for code, paths in by_code.items()]
    prepared.sort(key=lambda lc: lc[1].code)

    groups = group_courses(prepared)
    if not groups:
        print("no course could be evaluated", file=sys.stderr)
        return EXIT_DATA
    meta = experiment_metadata(config, args.seed, args.feature_mode, reps)
    meta["skipped_courses"] = skipped
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    out = Path(args.out)
    for report in evaluate_groups(groups, config, args.seed, reps, meta):
        target = out / report.level.label.lower()
        write_report(report, target, formats, args.decimal_comma)
        summary = ", ".join(f"{rep.value} mean loss "
                            f"{'n/a' if b.loss.grand_mean is None else f'{b.loss.grand_mean:.3f}'}"
                            for rep, b in report.blocks.items())
        print(f"{report.level.label} group ({', '.join(report.courses)}): {summary} -> {target}")
    for code in sorted(skipped):
        print(f"{code}: skipped: {skipped[code]}", file=sys.stderr)
    return EXIT_OK


def cmd_render_tree(args) -> int:
    _require_files(args.trees)
    for path in args.trees:
        tree = DecisionTree.loads(Path(path).read_text(encoding="utf-8"))
        sys.stdout.write(render_tree(tree, show_counts=args.counts))
    return EXIT_OK


def _taxonomy(args):
    if getattr(args, "taxonomy", None):
        with open(args.taxonomy, encoding="utf-8") as fh:
            return load_taxonomy(fh)
    return default_taxonomy()


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="balancing / training seed")
    common.add_argument("--taxonomy", help="taxonomy file (default: built-in table)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ontoport", parents=[common], description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate course logs from spec files")
    p.add_argument("specs", nargs="+")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", parents=[common], help="parse log + marks CSVs into course files")
    p.add_argument("logs", nargs="+", help="log CSV files; marks default to <code>.marks.csv")
    p.add_argument("--marks", action="append", help="marks CSV, once per log (in order)")
    p.add_argument("--code", action="append", help="course code, once per log (in order)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", parents=[common], help="build feature datasets")
    p.add_argument("courses", nargs="+", help=f"*{COURSE_SUFFIX} files")
    p.add_argument("--representation", choices=["numeric", "discretized", "both"], default="both")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("eval-transfer", parents=[common], help="cross-course AUC / loss matrices")
    p.add_argument("inputs", nargs="+", help=f"*{COURSE_SUFFIX} files or featurize outputs")
    p.add_argument("--representation", choices=["numeric", "discretized", "both"], default="both")
    p.add_argument("--feature-mode", choices=["ontology", "raw"], default="ontology")
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--confidence", type=float, default=0.25)
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--formats", default="csv,markdown")
    p.add_argument("--decimal-comma", action="store_true")
    p.set_defaults(func=cmd_eval_transfer)

    p = sub.add_parser("render-tree", parents=[common], help="print a stored tree")
    p.add_argument("trees", nargs="+", help="tree JSON files written by eval-transfer")
    p.add_argument("--counts", action="store_true", help="show leaf instance counts")
    p.set_defaults(func=cmd_render_tree)
    return parser


def _parse(parser: argparse.ArgumentParser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        defaults = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(defaults, dict):
        raise UsageError(f"config {args.config} must hold a JSON object")
    given = list(sys.argv[1:] if argv is None else argv)
    for key, value in defaults.items():
        dest = key.replace("-", "_")
        flag = "--" + dest.replace("_", "-")
        if not hasattr(args, dest):
            raise UsageError(f"config key {key!r} is not an option of {args.command}")
        # explicit flags win over config values
        if not any(a == flag or a.startswith(flag + "=") for a in given):
            setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
