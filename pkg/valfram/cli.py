"""
Command line entry point

    valfram validate --model M.csv --validation V.csv [...]
    valfram generate --out D.csv [...]
    valfram inspect D.csv [...]
    valfram compare --report A=a.json --report B=b.json --out table.csv

Exit codes: 0 success, 1 the report holds Failed records, 2 unusable input
or usage errors.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

# Import our config
sys.path.append(str(Path(__file__).parent.parent))
from config import OUTPUT_CONFIG, TOOL_VERSION, configure_logging, validate_config

from valfram.errors import InvalidConfig, InvalidSpec, ValframError
from valfram.ingest import (
    load_generator_spec,
    load_step_config,
    parse_diary,
    parse_od,
    parse_zones,
    write_diary,
    write_od,
    write_zones,
)
from valfram.od_compare import Zone, zone_grid
from valfram.orchestrator import ValidationOrchestrator
from valfram.report import compare_reports, read_report, report_text, write_comparison, write_grids, write_report
from valfram.stat_kernels import Bounds
from valfram.steps import StepConfig
from valfram.synthgen import default_spec, derive_od, generate, perturb

logger = logging.getLogger("valfram.cli")

EXIT_OK = 0
EXIT_FAILED_RECORDS = 1
EXIT_INPUT_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="valfram", description="Statistical validation of activity-based transport models"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    parser.add_argument("--log-level", default=None, help="overrides VALFRAM_LOG_LEVEL")
    sub = parser.add_subparsers(dest="cmd", required=True)

    validate_p = sub.add_parser("validate", help="run steps A1-B3 on a model against validation data")
    validate_p.add_argument("--model", required=True, help="model diary CSV")
    validate_p.add_argument("--validation", required=True, help="validation diary CSV")
    validate_p.add_argument("--od-model", nargs=2, metavar=("TRIPS", "ZONES"))
    validate_p.add_argument("--od-validation", nargs=2, metavar=("TRIPS", "ZONES"))
    validate_p.add_argument("--zones", help="common zone set both O-D matrices are projected onto")
    validate_p.add_argument("--config", help="StepConfig JSON")
    validate_p.add_argument("--out", help="report path (stdout when omitted)")
    validate_p.add_argument("--report-format", choices=OUTPUT_CONFIG["report_formats"], default="json")
    validate_p.add_argument("--emit-grids", metavar="DIR", help="write A2 ECDF and KDE grids here")

    generate_p = sub.add_parser("generate", help="sample a synthetic diary dataset")
    generate_p.add_argument("--spec", help="GeneratorSpec JSON (built-in population when omitted)")
    generate_p.add_argument("--seed", type=int)
    generate_p.add_argument("--population", type=int)
    generate_p.add_argument("--perturb", action="append", default=[], metavar="KIND=MAGNITUDE")
    generate_p.add_argument("--out", required=True, help="diary CSV to write")
    zones_group = generate_p.add_mutually_exclusive_group()
    zones_group.add_argument("--zones", help="zones CSV to snap O-D flows to")
    zones_group.add_argument("--zone-grid", metavar="RxC", help="regular zone lattice over the data extent")
    generate_p.add_argument("--od-out", help="O-D trips CSV to write")
    generate_p.add_argument("--zones-out", help="zones CSV to write")

    inspect_p = sub.add_parser("inspect", help="print dataset summaries")
    inspect_p.add_argument("files", nargs="+")

    compare_p = sub.add_parser("compare", help="side-by-side table of several models' reports")
    compare_p.add_argument("--report", action="append", required=True, metavar="LABEL=REPORT")
    compare_p.add_argument("--out", required=True)
    return parser


def _split_pair(text: str, what: str) -> Tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key or not value:
        raise InvalidConfig(f"{what} must look like NAME=VALUE, got {text!r}")
    return key, value


def _grid_shape(text: str) -> Tuple[int, int]:
    try:
        rows, cols = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise InvalidConfig(f"--zone-grid must look like 10x12, got {text!r}")
    if rows < 1 or cols < 1:
        raise InvalidConfig(f"--zone-grid needs positive sizes, got {text!r}")
    return rows, cols


def _cmd_validate(args) -> int:
    cfg = load_step_config(args.config) if args.config else StepConfig()
    model = parse_diary(args.model)
    validation = parse_diary(args.validation)
    model_od = parse_od(*args.od_model) if args.od_model else None
    validation_od = parse_od(*args.od_validation) if args.od_validation else None
    zones = parse_zones(args.zones) if args.zones else None

    outcome = ValidationOrchestrator(cfg).run(model, validation, model_od, validation_od, zones)
    report = outcome.report

    if args.out:
        write_report(report, args.out, args.report_format)
    else:
        sys.stdout.write(report_text(report, args.report_format))
    if args.emit_grids:
        write_grids(outcome, args.emit_grids)

    failed = report.failed()
    if failed:
        logger.warning("⚠️  %d of %d records failed", len(failed), len(report.records))
        return EXIT_FAILED_RECORDS
    return EXIT_OK


def _cmd_generate(args) -> int:
    spec = load_generator_spec(args.spec) if args.spec else default_spec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.population is not None:
        spec = replace(spec, population=args.population)
    for item in args.perturb:
        kind, magnitude = _split_pair(item, "--perturb")
        try:
            spec = perturb(spec, kind, float(magnitude))
        except ValueError:
            raise InvalidSpec(f"perturbation magnitude {magnitude!r} is not a number")

    dataset = generate(spec)
    write_diary(dataset, args.out)

    zones: Optional[List[Zone]] = None
    if args.zones:
        zones = parse_zones(args.zones)
    elif args.zone_grid:
        rows, cols = _grid_shape(args.zone_grid)
        points = [a.location for a in dataset.activities() if a.location is not None]
        zones = zone_grid(Bounds.union(points), rows, cols)

    if (args.od_out or args.zones_out) and zones is None:
        raise InvalidConfig("--od-out and --zones-out need --zones or --zone-grid")
    if args.od_out:
        write_od(derive_od(dataset, zones), args.od_out)
    if args.zones_out:
        write_zones(zones, args.zones_out)
    logger.info("✅ Wrote %d schedules to %s", len(dataset.schedules), args.out)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    summaries = {path: parse_diary(path).summary() for path in args.files}
    sys.stdout.write(json.dumps(summaries, sort_keys=True, indent=OUTPUT_CONFIG["json_indent"]) + "\n")
    return EXIT_OK


def _cmd_compare(args) -> int:
    reports = []
    for item in args.report:
        label, path = _split_pair(item, "--report")
        reports.append((label, read_report(path)))
    write_comparison(compare_reports(reports), args.out)
    return EXIT_OK


COMMANDS = {
    "validate": _cmd_validate,
    "generate": _cmd_generate,
    "inspect": _cmd_inspect,
    "compare": _cmd_compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT_ERROR

    configure_logging(args.log_level.upper() if args.log_level else None)
    validate_config()
    try:
        return COMMANDS[args.cmd](args)
    except (ValframError, OSError) as exc:
        logger.error("❌ %s", exc)
        print(f"valfram {args.cmd}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
