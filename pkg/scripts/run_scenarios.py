# scripts/run_scenarios.py

import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import typer

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.errors import FlowError  # noqa: E402
from app.factory.run_factory import load_config, load_run_config  # noqa: E402
from app.orchestration.runner import Runner  # noqa: E402

SCENARIO_DIR = Path("configs/scenarios")

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s",
)


def run_scenario(path: Path) -> Tuple[int, Optional[object]]:
    """Runs one scenario through the command named in its meta section."""
    try:
        config = load_run_config(path)
    except FlowError as e:
        logging.error(f"{path.name}: {e}")
        document = load_config(path)
        return 1, (document.get("meta") or {}).get("expect_exit")
    runner = Runner(config)
    command = config.meta.command
    if command == "verify":
        code = runner.run_verify()
    elif command == "refine":
        code = runner.run_refine()
    elif command == "slice-scan":
        scan = config.meta.slice_scan
        code = runner.run_slice_scan(scan.t_min, scan.t_max, scan.steps)
    else:
        code = runner.run_evolve()
    return code, config.meta.expect_exit


def main(
    names: Optional[List[str]] = typer.Argument(None, help="Scenario file names; all by default."),
    directory: Path = typer.Option(SCENARIO_DIR, "--dir", help="Scenario directory."),
):
    """Runs the shipped scenarios and compares every exit code with meta.expect_exit."""
    paths = sorted(directory.glob("*.yaml"))
    if names:
        paths = [p for p in paths if p.name in names or p.stem in names]

    mismatches = []
    for path in paths:
        logging.info(f"--- Scenario {path.name} ---")
        code, expected = run_scenario(path)
        ok = expected is None or expected == "any" or code == expected
        logging.info(f"--- {path.name}: exit {code}, expected {expected} -> {'OK' if ok else 'MISMATCH'} ---")
        if not ok:
            mismatches.append(path.name)

    if mismatches:
        logging.error(f"Scenarios with unexpected exit codes: {mismatches}")
        raise typer.Exit(code=1)
    logging.info(f"All {len(paths)} scenarios behaved as expected.")


if __name__ == "__main__":
    typer.run(main)
