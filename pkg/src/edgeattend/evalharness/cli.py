"""`evalharness` command line: scenario runs, comparison grids, threshold
sweeps, and fixture regeneration.

Exit code 0 means the run completed; it says nothing about accuracy.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import EvalConfig, GridSpec, ScenarioFixture, run_grid, run_scenario, threshold_sweep


def _scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("fixture", help="fixture directory (manifest.json inside)")
    p.add_argument("--metric", choices=["cosine", "euclidean"], default="cosine")
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--gallery", default=None, help="override the fixture's gallery directory")
    p.add_argument("--detector", default="scripted")
    p.add_argument("--embedder", default="pattern", help="e.g. pattern or pattern:0.35")
    p.add_argument("--json", action="store_true", dest="as_json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evalharness")
    sub = parser.add_subparsers(dest="command", required=True)

    scenario = sub.add_parser("scenario", help="score one fixture")
    _scenario_args(scenario)

    grid = sub.add_parser("grid", help="run a detector x recognizer x metric grid")
    grid.add_argument("spec", help="grid spec JSON")
    grid.add_argument("--json", action="store_true", dest="as_json")

    sweep = sub.add_parser("sweep", help="metrics across a threshold sweep")
    _scenario_args(sweep)
    sweep.add_argument(
        "--thresholds", required=True, help="comma-separated ascending thresholds"
    )

    gen = sub.add_parser("fixtures", help="regenerate the bundled fixtures")
    gen.add_argument("outdir")
    return parser


def _config(args: argparse.Namespace) -> EvalConfig:
    return EvalConfig(
        detector=args.detector,
        embedder=args.embedder,
        metric=args.metric,
        threshold=args.threshold,
        gallery_dir=args.gallery,
    )


def _print_report(report) -> None:
    c = report.counts
    print(
        f"{report.name}: detected={c.detected} correct={c.correct} "
        f"incorrect={c.incorrect} unknown={c.unknown}  "
        f"ACC={report.acc * 100:.2f}% FAR={report.far * 100:.2f}% FRR={report.frr * 100:.2f}%"
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "scenario":
        report = run_scenario(ScenarioFixture.load(args.fixture), _config(args))
        if args.as_json:
            print(json.dumps(report.to_json(), indent=1))
        else:
            _print_report(report)
        return 0

    if args.command == "grid":
        result = run_grid(GridSpec.load(args.spec))
        if args.as_json:
            print(json.dumps(result.to_json(), indent=1))
        else:
            print(result.render_text())
        return 0

    if args.command == "sweep":
        thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
        reports = threshold_sweep(ScenarioFixture.load(args.fixture), _config(args), thresholds)
        if args.as_json:
            print(json.dumps([r.to_json() for r in reports], indent=1))
        else:
            print("threshold     ACC      FAR      FRR")
            for t, r in zip(thresholds, reports):
                print(f"{t:9.4f} {r.acc * 100:7.2f}% {r.far * 100:7.2f}% {r.frr * 100:7.2f}%")
        return 0

    if args.command == "fixtures":
        from .fixtures import build_all

        built = build_all(args.outdir)
        for path in built:
            print(f"built {path}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
