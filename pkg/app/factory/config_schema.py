"""
Schema of a run configuration document.

The document is YAML; every section is a pydantic model that rejects unknown
keys. Cross-section rules (model registry, grid constraints, temporal domain,
sampled table shapes) are checked by app.factory.run_factory.parse_config.
"""
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.analysis.audit import AuditConfig
from app.flow.evolution import FlowConfig


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpacetimeSection(Section):
    type: str
    params: Dict[str, Any] = Field(default_factory=dict)


class GridSection(Section):
    dim: int = 1
    points: List[int]
    lengths: List[float] = Field(default_factory=lambda: [1.0])

    @field_validator("points", "lengths", mode="before")
    @classmethod
    def _listify(cls, value: Any) -> Any:
        # a scalar applies to every direction
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return [value]
        return value

    def expanded(self, field_name: str) -> List[Any]:
        values = getattr(self, field_name)
        if len(values) == 1 and self.dim > 1:
            return values * self.dim
        return values


class CurvatureSection(Section):
    type: Literal["constant", "affine_time", "cosine_spatial", "sampled_grid"]
    params: Dict[str, Any] = Field(default_factory=dict)
    path: Optional[str] = None


class ProfileSection(Section):
    type: Literal["constant", "cosine", "sampled"]
    params: Dict[str, Any] = Field(default_factory=dict)
    path: Optional[str] = None


class BarriersSection(Section):
    lower: Optional[ProfileSection] = None


class OutputSection(Section):
    directory: str = "runs/default"
    record_every: Optional[int] = Field(None, gt=0)
    snapshot_every: int = Field(1000, gt=0)


class RefineSection(Section):
    study: Literal["auto", "curvature", "slice", "flow"] = "auto"
    levels: Optional[List[int]] = None


class SliceScanSection(Section):
    t_min: float = -1.0
    t_max: float = 1.0
    steps: int = Field(5, gt=0)


class MetaSection(Section):
    """Scenario bookkeeping for scripts/run_scenarios.py; ignored by the pipelines."""
    description: str = ""
    command: Literal["evolve", "verify", "refine", "slice-scan"] = "evolve"
    expect_exit: Optional[Union[int, Literal["any"]]] = None
    slice_scan: SliceScanSection = Field(default_factory=SliceScanSection)


class RunConfig(Section):
    """A fully validated run description with defaults filled in."""
    spacetime: SpacetimeSection
    grid: GridSection
    f: CurvatureSection = Field(default_factory=lambda: CurvatureSection(type="constant", params={"c": 0.0}))
    initial: ProfileSection = Field(default_factory=lambda: ProfileSection(type="constant", params={"c": 0.0}))
    barriers: BarriersSection = Field(default_factory=BarriersSection)
    flow: FlowConfig = Field(default_factory=FlowConfig)
    audit: AuditConfig = Field(default_factory=AuditConfig)
    output: OutputSection = Field(default_factory=OutputSection)
    refine: RefineSection = Field(default_factory=RefineSection)
    meta: MetaSection = Field(default_factory=MetaSection)
