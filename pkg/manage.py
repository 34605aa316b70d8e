#!/usr/bin/env python3
"""
Management script for Accuracy Forecast.
Usage: python manage.py <command> [options]
"""
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

import argparse
from typing import List, Optional

from core.exceptions import ForecastError


def runserver(host: str = "0.0.0.0", port: int = 8000, reload: bool = True):
    """Run the prediction service."""
    import uvicorn

    print(f"🚀 Starting prediction service at http://{host}:{port}")
    print(f"📚 API Documentation: http://{host}:{port}/docs")
    print(f"🔍 Health Check: http://{host}:{port}/health")
    print("\nPress CTRL+C to quit\n")

    uvicorn.run(
        "apps.main:app",
        host=host,
        port=port,
        reload=reload,
        log_level="info"
    )


def test():
    """Run tests."""
    import subprocess
    result = subprocess.run(["pytest", "tests/", "-v"])
    sys.exit(result.returncode)


def _prefix(text: str) -> List[float]:
    try:
        return [float(value) for value in text.split(",") if value.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated accuracies, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Management script for Accuracy Forecast",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python manage.py build-db --config run.toml --out artifacts     # Build the curves database
  python manage.py train-svr --db artifacts/database.csv          # Compare kernels, save best model
  python manage.py predict --model artifacts/svr_model.txt --prefix 0.2,0.45,0.55 --fin-epoch 50
  python manage.py explore --model artifacts/svr_model.txt        # Probabilistic search
  python manage.py plot artifacts/evaluation.csv                  # SVG chart
  python manage.py runserver --port 8080                          # Start prediction service
        """
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Run configuration (TOML)")
    common.add_argument("--seed", type=int, help="Override pipeline.seed")
    common.add_argument("--out", help="Output directory (default: settings.OUTPUT_DIR)")
    common.add_argument("--k", type=int, help="Override pipeline.k (prefix epochs)")
    common.add_argument("--fin-epoch", type=int, help="Override pipeline.fin_epoch")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    subparsers.add_parser("build-db", parents=[common], help="Build the full-training database")

    train_parser = subparsers.add_parser("train-svr", parents=[common], help="Train and compare SVR kernels")
    train_parser.add_argument("--db", required=True, help="Database CSV")

    evaluate_parser = subparsers.add_parser("evaluate", parents=[common], help="Evaluate a model on a database")
    evaluate_parser.add_argument("--model", required=True, help="SVR model file")
    evaluate_parser.add_argument("--db", required=True, help="Database CSV")

    predict_parser = subparsers.add_parser("predict", parents=[common], help="Predict one final accuracy")
    predict_parser.add_argument("--model", help="SVR model file (default: settings.MODEL_PATH)")
    predict_parser.add_argument("--prefix", type=_prefix, required=True, help="First-k accuracies, comma separated")
    predict_parser.add_argument("--plot", help="Write the prediction chart to this SVG file")

    explore_parser = subparsers.add_parser("explore", parents=[common], help="Run the hyper-parameter exploration")
    explore_parser.add_argument("--model", help="SVR model file (default: settings.MODEL_PATH)")
    explore_parser.add_argument("--max-iterations", type=int, help="Override explorer.max_iterations")
    explore_parser.add_argument("--exhaustive", action="store_true", help="Fully train the whole grid instead")

    plot_parser = subparsers.add_parser(
        "plot", parents=[common], help="Render a CSV as SVG into --out (default: next to the CSV)"
    )
    plot_parser.add_argument("csv", help="Input CSV")

    runserver_parser = subparsers.add_parser("runserver", help="Start the prediction service")
    runserver_parser.add_argument("--host", default="0.0.0.0", help="Host to bind to")
    runserver_parser.add_argument("--port", type=int, default=8000, help="Port to bind to")
    runserver_parser.add_argument("--noreload", action="store_true", help="Disable auto-reload")

    subparsers.add_parser("test", help="Run tests")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    try:
        if args.command == "runserver":
            runserver(host=args.host, port=args.port, reload=not args.noreload)
            return 0
        if args.command == "test":
            test()

        from apps.cli import commands
        from apps.cli.schemas.run_config import RunConfig
        from core.config import settings

        if args.command == "plot":
            commands.cmd_plot(args.csv, args.out)
            return 0

        config = RunConfig.load(args.config).with_overrides(
            pipeline__seed=args.seed,
            pipeline__k=args.k,
            pipeline__fin_epoch=args.fin_epoch,
            explorer__max_iterations=getattr(args, "max_iterations", None),
        )
        out = Path(args.out) if args.out else settings.OUTPUT_DIR

        if args.command == "build-db":
            commands.cmd_build_db(config, out)
        elif args.command == "train-svr":
            commands.cmd_train_svr(config, args.db, out)
        elif args.command == "evaluate":
            commands.cmd_evaluate(config, args.model, args.db, out)
        elif args.command == "predict":
            commands.cmd_predict(
                args.model or settings.MODEL_PATH,
                args.prefix,
                config.pipeline.fin_epoch,
                plot_path=args.plot,
            )
        elif args.command == "explore":
            if args.exhaustive:
                commands.cmd_exhaustive(config, out)
            else:
                commands.cmd_explore(config, args.model or settings.MODEL_PATH, out)
        return 0
    except KeyboardInterrupt:
        print("\n\n👋 Shutting down...")
        return 0
    except ForecastError as e:
        print(f"\n❌ Error: {e.detail}")
        return 1
    except Exception as e:
        print(f"\n❌ Error: {e}")
        import traceback
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
