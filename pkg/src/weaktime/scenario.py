"""Bundles of physical inputs and numerical controls passed between modules."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import DomainError
from .model import CoherentState, PhysicalParams, SquareBarrier


@dataclass(frozen=True)
class GridControls:
    """Numerical resolution knobs.

    Defaults are sized for the reference tunnelling problem and are
    converged well beyond the reported precision.
    """

    window: float = 12.0
    panels: int = 40
    nodes_per_panel: int = 50
    time_samples: int = 8192
    eps_tail: float = 1e-6
    delta_x: float = 0.5
    margin: float = 1.0
    eps_p_fraction: float = 1e-6
    mask_floor: float = 1e-14
    workers: int = 1

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise DomainError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not self.window >= 6:
            out.append(f"window must be >= 6, got {self.window}")
        if not (isinstance(self.panels, int) and self.panels >= 1):
            out.append(f"panels must be a positive integer, got {self.panels}")
        if not (isinstance(self.nodes_per_panel, int) and self.nodes_per_panel >= 2):
            out.append(f"nodes_per_panel must be an integer >= 2, got {self.nodes_per_panel}")
        if not (isinstance(self.time_samples, int) and self.time_samples >= 2):
            out.append(f"time_samples must be an integer >= 2, got {self.time_samples}")
        if not 0 < self.eps_tail < 1:
            out.append(f"eps_tail must lie in (0, 1), got {self.eps_tail}")
        if not self.delta_x > 0:
            out.append(f"delta_x must be positive, got {self.delta_x}")
        if not self.margin >= 0:
            out.append(f"margin must be non-negative, got {self.margin}")
        if not 0 < self.eps_p_fraction < 1:
            out.append(f"eps_p_fraction must lie in (0, 1), got {self.eps_p_fraction}")
        if not 0 < self.mask_floor < 1:
            out.append(f"mask_floor must lie in (0, 1), got {self.mask_floor}")
        if not (isinstance(self.workers, int) and self.workers >= 1):
            out.append(f"workers must be a positive integer, got {self.workers}")
        return out

    def doubled(self) -> "GridControls":
        """Same controls at twice the momentum and time resolution."""
        return replace(
            self,
            nodes_per_panel=2 * self.nodes_per_panel,
            time_samples=2 * self.time_samples - 1,
        )


@dataclass(frozen=True)
class Scenario:
    state: CoherentState
    barrier: SquareBarrier = field(default_factory=SquareBarrier)
    params: PhysicalParams = field(default_factory=PhysicalParams)
    controls: GridControls = field(default_factory=GridControls)

    def with_controls(self, **changes) -> "Scenario":
        return replace(self, controls=replace(self.controls, **changes))
