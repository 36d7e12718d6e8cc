"""
Exception hierarchy shared by all subpackages.

Library code raises these; the orchestration layer maps them to exit codes.
"""
from typing import List, Optional, Tuple


class FlowError(Exception):
    """Base class for every error raised by this package."""
    pass


class DomainError(FlowError):
    """A time coordinate lies outside the temporal domain of a spacetime model."""
    pass


class UnsupportedModel(FlowError):
    """The operation needs a spatially homogeneous model."""
    pass


class SpacelikenessLost(FlowError):
    """The graph violates |Du|^2 < 1 - margin at some node."""

    def __init__(self, node: Tuple[int, ...], value: float, margin: float):
        self.node = node
        self.value = value
        self.margin = margin
        super().__init__(
            f"Graph is no longer uniformly spacelike: |Du|^2 = {value:.6g} at node {node} "
            f"(allowed < {1.0 - margin:.6g})"
        )


class GridMismatch(FlowError):
    """A sampled table does not live on the grid of the run."""
    pass


class ConfigError(FlowError):
    """Aggregated configuration diagnostics, one (field path, message) pair per problem."""

    def __init__(self, diagnostics: List[Tuple[str, str]]):
        self.diagnostics = list(diagnostics)
        lines = [f"{path}: {message}" for path, message in self.diagnostics]
        super().__init__("Invalid configuration:\n" + "\n".join(lines))

    def paths(self) -> List[str]:
        return [path for path, _ in self.diagnostics]


class UnknownModel(ConfigError):
    """The configured spacetime type is not in the model registry."""

    def __init__(self, name: str, known: Optional[List[str]] = None):
        self.name = name
        known_str = ", ".join(known or [])
        super().__init__([("spacetime.type", f"unknown model '{name}' (known: {known_str})")])


class InsufficientTrace(FlowError):
    """An audit needs at least two monitor records."""
    pass


class NoReference(FlowError):
    """A refinement study was requested for a scenario without a closed-form reference."""
    pass


class ArtifactError(FlowError):
    """Output artifacts could not be written (IoError diagnostic)."""
    pass
