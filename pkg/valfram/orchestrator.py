"""
LangGraph Orchestrator for VALFRAM validation runs
Coordinates the six validation steps over a model and a validation data set
"""

import logging
import operator
from dataclasses import dataclass, field
from typing import Annotated, Any, Dict, List, Optional, Sequence, Tuple, TypedDict

from langgraph.graph import END, StateGraph

# Import our config
import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))
from config import RUNTIME, STEP_ORDER, TOOL_VERSION

from valfram.errors import ValframError
from valfram.od_compare import ODMatrix, Zone
from valfram.report import ValidationReport
from valfram.schedule_model import DiaryDataset
from valfram.stat_kernels import DensityGrid, EcdfGrid
from valfram.steps import (
    STATUS_FAILED,
    STATUS_SKIPPED,
    MetricRecord,
    StepConfig,
    step_a1,
    step_a2,
    step_a3,
    step_b1,
    step_b2,
    step_b3,
    step_records,
)

logger = logging.getLogger(__name__)


def _merge(left: Dict, right: Dict) -> Dict:
    return {**left, **right}


class ValidationState(TypedDict):
    """
    Shared state between all step nodes in the workflow
    """
    # Input
    model: DiaryDataset
    validation: DiaryDataset
    model_od: Optional[ODMatrix]
    validation_od: Optional[ODMatrix]
    zones: Optional[Tuple[Zone, ...]]
    config: StepConfig

    # Workflow control
    planned_steps: List[str]

    # Step results, merged across parallel branches
    records: Annotated[List[MetricRecord], operator.add]
    ecdf_grids: Annotated[Dict[str, Tuple[EcdfGrid, EcdfGrid]], _merge]
    density_grids: Annotated[Dict[Tuple[str, str], DensityGrid], _merge]

    # Final output
    report: Optional[ValidationReport]


@dataclass
class RunOutcome:
    report: ValidationReport
    ecdf_grids: Dict[str, Tuple[EcdfGrid, EcdfGrid]] = field(default_factory=dict)
    density_grids: Dict[Tuple[str, str], DensityGrid] = field(default_factory=dict)


class ValidationOrchestrator:
    """
    LangGraph orchestrator that runs every applicable validation step
    """

    def __init__(self, config: Optional[StepConfig] = None):
        self.config = config or StepConfig()
        self.workflow = self._build_workflow()

    def _build_workflow(self):
        """
        Build the LangGraph workflow: planner -> applicable steps -> assembler
        """
        workflow = StateGraph(ValidationState)

        workflow.add_node("planner", self._plan_steps)
        workflow.add_node("A1", self._run_a1)
        workflow.add_node("A2", self._run_a2)
        workflow.add_node("A3", self._run_a3)
        workflow.add_node("B1", self._run_b1)
        workflow.add_node("B2", self._run_b2)
        workflow.add_node("B3", self._run_b3)
        workflow.add_node("assembler", self._assemble_report)

        workflow.set_entry_point("planner")

        # Planner fans out to every applicable step in one superstep
        workflow.add_conditional_edges("planner", self._route_from_planner, STEP_ORDER)

        for step in STEP_ORDER:
            workflow.add_edge(step, "assembler")
        workflow.add_edge("assembler", END)

        return workflow.compile()

    def _plan_steps(self, state: ValidationState) -> Dict[str, Any]:
        """
        Decide which steps the inputs support; inapplicable ones become Skipped records
        """
        planned = ["A1", "A3", "B1", "B3"]
        skipped: List[MetricRecord] = []

        if state["model"].has_locations and state["validation"].has_locations:
            planned.append("A2")
        else:
            skipped += step_records("A2", STATUS_SKIPPED, "activity locations missing in model or validation")

        if state["model_od"] is not None and state["validation_od"] is not None:
            planned.append("B2")
        else:
            skipped += step_records("B2", STATUS_SKIPPED, "model and validation O-D matrices not both supplied")

        planned.sort(key=STEP_ORDER.index)
        logger.info("🔍 Validation plan: %s (skipped: %s)",
                    ", ".join(planned), ", ".join(sorted({r.step for r in skipped})) or "none")
        return {"planned_steps": planned, "records": skipped}

    def _route_from_planner(self, state: ValidationState) -> List[str]:
        """Route from planner to all planned steps"""
        return state["planned_steps"]

    def _run_step(self, step: str, compute) -> List[MetricRecord]:
        logger.info("📊 Running step %s...", step)
        try:
            records = compute()
        except ValframError as exc:
            logger.error("❌ Step %s failed: %s", step, exc)
            return step_records(step, STATUS_FAILED, f"{type(exc).__name__}: {exc}")
        logger.info("✅ Step %s complete (%d records)", step, len(records))
        return records

    def _run_a1(self, state: ValidationState) -> Dict[str, Any]:
        return {"records": self._run_step(
            "A1", lambda: step_a1(state["model"], state["validation"], state["config"])
        )}

    def _run_a2(self, state: ValidationState) -> Dict[str, Any]:
        outcome = {}

        def compute():
            result = step_a2(state["model"], state["validation"], state["config"])
            outcome["ecdf_grids"] = result.ecdf_grids
            outcome["density_grids"] = result.density_grids
            return result.records

        records = self._run_step("A2", compute)
        return {
            "records": records,
            "ecdf_grids": outcome.get("ecdf_grids", {}),
            "density_grids": outcome.get("density_grids", {}),
        }

    def _run_a3(self, state: ValidationState) -> Dict[str, Any]:
        return {"records": self._run_step(
            "A3", lambda: step_a3(state["model"], state["validation"], state["config"])
        )}

    def _run_b1(self, state: ValidationState) -> Dict[str, Any]:
        return {"records": self._run_step(
            "B1", lambda: step_b1(state["model"], state["validation"], state["config"])
        )}

    def _run_b2(self, state: ValidationState) -> Dict[str, Any]:
        return {"records": self._run_step(
            "B2", lambda: [step_b2(state["model_od"], state["validation_od"], state["zones"])]
        )}

    def _run_b3(self, state: ValidationState) -> Dict[str, Any]:
        return {"records": self._run_step(
            "B3", lambda: step_b3(state["model"], state["validation"], state["config"])
        )}

    def _assemble_report(self, state: ValidationState) -> Dict[str, Any]:
        """
        Order all records deterministically and build the report
        """
        records = sorted(state["records"], key=MetricRecord.sort_key)
        report = ValidationReport(
            tool_version=TOOL_VERSION,
            config=state["config"],
            dataset_summaries={
                "model": state["model"].summary(),
                "validation": state["validation"].summary(),
            },
            records=tuple(records),
        )
        failed = sum(1 for r in records if r.status == STATUS_FAILED)
        logger.info("🎯 Report assembled: %d records, %d failed", len(records), failed)
        return {"report": report}

    def run(
        self,
        model: DiaryDataset,
        validation: DiaryDataset,
        model_od: Optional[ODMatrix] = None,
        validation_od: Optional[ODMatrix] = None,
        zones: Optional[Sequence[Zone]] = None,
    ) -> RunOutcome:
        """
        Main orchestration method - runs all applicable steps

        Args:
            model: generated schedules
            validation: reference travel diaries
            model_od, validation_od: O-D matrices for step B2
            zones: optional common zone set both matrices are projected onto

        Returns:
            The report plus the A2 grids for emission
        """
        initial_state = ValidationState(
            model=model,
            validation=validation,
            model_od=model_od,
            validation_od=validation_od,
            zones=tuple(zones) if zones is not None else None,
            config=self.config,
            planned_steps=[],
            records=[],
            ecdf_grids={},
            density_grids={},
            report=None,
        )
        final_state = self.workflow.invoke(
            initial_state, config={"max_concurrency": RUNTIME["workers"]}
        )
        return RunOutcome(
            report=final_state["report"],
            ecdf_grids=final_state["ecdf_grids"],
            density_grids=final_state["density_grids"],
        )


def run_all(
    model: DiaryDataset,
    validation: DiaryDataset,
    model_od: Optional[ODMatrix] = None,
    validation_od: Optional[ODMatrix] = None,
    cfg: Optional[StepConfig] = None,
    zones: Optional[Sequence[Zone]] = None,
) -> ValidationReport:
    """Run every applicable validation step and return the report"""
    return ValidationOrchestrator(cfg).run(model, validation, model_od, validation_od, zones).report
