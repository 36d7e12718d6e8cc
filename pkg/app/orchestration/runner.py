"""
This module defines the Runner, which turns a validated run configuration into
one of the four pipelines (evolve, verify, refine, slice-scan), writes the
artifacts and maps the outcome to an exit code (0 success, 1 any failure).
"""
import logging
import time
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.analysis.audit import AuditReport, audit
from app.analysis.verification import RefinementScenario, refinement_study, slice_scan, verify_geometry
from app.errors import ArtifactError, FlowError, InsufficientTrace
from app.factory.config_schema import RunConfig
from app.factory.run_factory import RunSetup, create_run
from app.flow.evolution import FlowStatus, FlowTrace, check_lower_barrier, evolve
from app.geometry.hypersurface import IDENTITY_TOLERANCES, compute_geometry, identity_residuals, identity_violations
from app.orchestration.artifacts import ArtifactWriter

EXIT_OK = 0
EXIT_FAILURE = 1


class Runner:
    """
    Executes the pipelines of one run configuration. The output directory is
    owned exclusively by the run.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.writer = ArtifactWriter(config.output.directory)

    def _prepare(self) -> bool:
        try:
            self.writer.prepare()
            return True
        except ArtifactError as e:
            logging.error(str(e))
            return False

    def run_evolve(self) -> int:
        """
        Runs the flow, audits the trace and writes summary.json, series.csv and
        snapshots/step_K.csv. Exit 0 iff the run converged, the audit passed and
        every recorded graph keeps the geometry identities within tolerance.
        """
        if not self._prepare():
            return EXIT_FAILURE
        with self.writer.log_to_file():
            started = time.perf_counter()
            try:
                setup = create_run(self.config)
                flow, lower_report = self._apply_lower_barrier(setup)
                trace = evolve(setup.model, setup.initial.state(setup.grid), setup.f, flow)
            except FlowError as e:
                logging.error(f"Evolve failed before the flow started: {e}", exc_info=True)
                return self._write_failure_summary(e)

            report: Optional[AuditReport] = None
            audit_note = None
            try:
                report = audit(trace, self.config.audit)
            except InsufficientTrace as e:
                audit_note = f"skipped: {e}"
                logging.info(f"Audit {audit_note}")

            summary = self._summary(setup, trace, report, audit_note, lower_report)
            summary["wall_time_seconds"] = time.perf_counter() - started
            try:
                self.writer.write_series(trace.records)
                self._write_snapshots(setup, trace)
                self.writer.write_json("summary.json", summary)
            except ArtifactError as e:
                logging.error(str(e))
                return EXIT_FAILURE

        if trace.status != FlowStatus.CONVERGED:
            logging.error(f"Run ended with status {trace.status.value}: {trace.message}")
            return EXIT_FAILURE
        if report is not None and not report.passed:
            failing = [v.name for v in report.verdicts if not v.passed]
            logging.error(f"Run converged but the audit failed: {failing}")
            return EXIT_FAILURE
        if not summary["identities"]["passed"]:
            logging.error(f"Geometry identities exceeded their tolerances: {summary['identities']['violations']}")
            return EXIT_FAILURE
        return EXIT_OK

    def _apply_lower_barrier(self, setup: RunSetup):
        """Checks H <= f on the configured lower barrier and uses min u_1 as the window floor."""
        flow = setup.flow
        if setup.lower_barrier is None:
            return flow, None
        state = setup.lower_barrier.state(setup.grid)
        report = check_lower_barrier(setup.model, state, setup.f, flow.barrier_tol, flow.spacelike_margin)
        if not report.ok:
            logging.warning(
                f"Configured lower barrier violates H <= f: max(H - f) = {report.max_signed:.6g} "
                f"at node {report.worst_node}"
            )
        if flow.u_floor is None:
            flow = flow.model_copy(update={"u_floor": float(np.min(state.u))})
            logging.info(f"Window floor taken from the lower barrier: u_floor = {flow.u_floor:.6g}")
        return flow, report

    def _summary(
        self,
        setup: RunSetup,
        trace: FlowTrace,
        report: Optional[AuditReport],
        audit_note: Optional[str],
        lower_report,
    ) -> Dict[str, Any]:
        final = trace.final_state
        maxima = self._identity_maxima(setup, trace)
        violations = identity_violations(maxima)
        summary: Dict[str, Any] = {
            "status": trace.status.value,
            "message": trace.message,
            "final_residual": trace.final_residual,
            "steps": trace.steps,
            "final_time": final.time,
            "final_u_min": float(np.min(final.u)),
            "final_u_max": float(np.max(final.u)),
            "initial_upper_barrier_ok": trace.initial_barrier_ok,
            "window": {"u_floor": trace.u_floor, "u_ceiling": trace.u_ceiling},
            "spacetime": setup.model.to_dict(),
            "grid": {"dim": setup.grid.dim, "points": list(setup.grid.points), "lengths": list(setup.grid.lengths)},
            "f": setup.f.to_dict(),
            "initial": setup.initial.to_dict(),
            "identity_residuals": maxima,
            "identities": {
                "passed": not violations,
                "violations": violations,
                "tolerances": dict(IDENTITY_TOLERANCES),
            },
            "audit": report.model_dump() if report is not None else {"passed": None, "note": audit_note},
        }
        if lower_report is not None:
            summary["lower_barrier"] = {
                "ok": lower_report.ok,
                "max_signed": lower_report.max_signed,
                "worst_node": list(lower_report.worst_node),
            }
        return summary

    def _identity_maxima(self, setup: RunSetup, trace: FlowTrace) -> Dict[str, float]:
        """Worst value of every per-node identity over the stored snapshots."""
        maxima: Dict[str, float] = {}
        for state in trace.snapshots:
            try:
                fields = compute_geometry(setup.model, state, setup.flow.spacelike_margin)
            except FlowError:
                continue
            for name, value in identity_residuals(setup.model, state, fields).items():
                maxima[name] = max(maxima.get(name, 0.0), value)
        return maxima

    def _write_snapshots(self, setup: RunSetup, trace: FlowTrace) -> None:
        every = self.config.output.snapshot_every
        snapshots = trace.snapshots
        for index, state in enumerate(snapshots):
            if state.step % every != 0 and index not in (0, len(snapshots) - 1):
                continue
            try:
                fields = compute_geometry(setup.model, state, setup.flow.spacelike_margin)
            except FlowError:
                fields = None
            self.writer.write_snapshot(state, fields)

    def _write_failure_summary(self, error: Exception) -> int:
        try:
            self.writer.write_json("summary.json", {"status": "Error", "message": str(error)})
        except ArtifactError as e:
            logging.error(str(e))
        return EXIT_FAILURE

    def run_verify(self) -> int:
        """Geometry identities, dual path, constant slices and Christoffels; writes verify.json."""
        if not self._prepare():
            return EXIT_FAILURE
        with self.writer.log_to_file():
            try:
                setup = create_run(self.config)
                report = verify_geometry(setup.model, setup.grid, setup.initial, setup.flow.spacelike_margin)
                self.writer.write_json("verify.json", report.model_dump())
            except FlowError as e:
                logging.error(f"Verification failed: {e}", exc_info=True)
                return self._write_error("verify.json", e)
        if not report.passed:
            logging.error(f"Failing checks: {report.failing()}")
            return EXIT_FAILURE
        logging.info("All verification checks passed.")
        return EXIT_OK

    def run_refine(self, levels: Optional[Sequence[int]] = None) -> int:
        """Order study over the given node counts; writes refine.json."""
        if not self._prepare():
            return EXIT_FAILURE
        with self.writer.log_to_file():
            try:
                setup = create_run(self.config)
                levels = self._levels(setup, levels)
                scenario = RefinementScenario(
                    model=setup.model,
                    grid=setup.grid,
                    profile=setup.initial,
                    f=setup.f,
                    flow=setup.flow,
                    study=self.config.refine.study,
                )
                table = refinement_study(scenario, levels)
                self.writer.write_json("refine.json", table.model_dump())
            except FlowError as e:
                logging.error(f"Refinement study failed: {e}", exc_info=True)
                return self._write_error("refine.json", e)
        return EXIT_OK if table.passed else EXIT_FAILURE

    def _levels(self, setup: RunSetup, levels: Optional[Sequence[int]]) -> List[int]:
        if levels:
            return list(levels)
        if self.config.refine.levels:
            return list(self.config.refine.levels)
        base = setup.grid.points[0]
        return [base, 2 * base, 4 * base]

    def run_slice_scan(self, t_min: float, t_max: float, steps: int) -> int:
        """Tabulates the slice mean curvature; writes slices.csv."""
        if not self._prepare():
            return EXIT_FAILURE
        with self.writer.log_to_file():
            try:
                setup = create_run(self.config)
                rows = slice_scan(setup.model, t_min, t_max, steps)
                self.writer.write_table("slices.csv", rows, ["x0", "H_slice"])
            except (FlowError, ValueError) as e:
                logging.error(f"Slice scan failed: {e}", exc_info=True)
                return EXIT_FAILURE
        return EXIT_OK

    def _write_error(self, name: str, error: Exception) -> int:
        try:
            self.writer.write_json(name, {"passed": False, "error": type(error).__name__, "message": str(error)})
        except ArtifactError as e:
            logging.error(str(e))
        return EXIT_FAILURE


def run_evolve(config: RunConfig) -> int:
    return Runner(config).run_evolve()


def run_verify(config: RunConfig) -> int:
    return Runner(config).run_verify()


def run_refine(config: RunConfig, levels: Optional[Sequence[int]] = None) -> int:
    return Runner(config).run_refine(levels)


def run_slice_scan(config: RunConfig, t_min: float, t_max: float, steps: int) -> int:
    return Runner(config).run_slice_scan(t_min, t_max, steps)
