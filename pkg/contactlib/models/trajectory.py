import math
from dataclasses import dataclass, asdict
from typing import List, Optional
import numpy as np


@dataclass
class DiagnosticsRecord:
    step: int
    t: float
    delay_term: float
    cumulative_dissipation: float
    load_value: float
    ledger_slack: float
    squared_steps: float
    msd: float
    activation: float
    kkt_stationarity: float
    kkt_feasibility: float
    kkt_complementarity: float
    min_distance: float
    iterations: int
    converged: bool
    max_multiplier: float = 0.0
    # inf when the bound does not apply (fewer than 3 disks or no active contact)
    multiplier_bound: float = math.inf

    def to_dict(self) -> dict:
        return asdict(self)


class Trajectory:
    """
    Stored output of a run: configurations Z^n and multipliers lambda^n at every stride-th step (always including
    the first and last step), and one diagnostics record per step. Multipliers are dense over all pairs i < j in
    lexicographic order, zero for pairs that were not constrained.
    """

    def __init__(self, delta_t: float, n_particles: int, stride: int = 1, pairs: Optional[np.ndarray] = None,
                 ledger_bound: float = 0.0, noisy: bool = False):
        self.delta_t = delta_t
        self.n_particles = n_particles
        self.stride = stride
        self.pairs = pairs if pairs is not None else np.zeros((0, 2), dtype=int)
        self.ledger_bound = ledger_bound
        self.noisy = noisy
        self.steps: List[int] = []
        self.times: List[float] = []
        self.positions: List[np.ndarray] = []
        self.multipliers: List[np.ndarray] = []
        self.diagnostics: List[DiagnosticsRecord] = []

    def __repr__(self):
        return f'Trajectory({len(self.times)} frames, {len(self.diagnostics)} records, dt={self.delta_t})'

    def __len__(self):
        return len(self.times)

    def append(self, step: int, t: float, positions: np.ndarray, multipliers: np.ndarray):
        if self.steps and self.steps[-1] == step:
            return
        self.steps.append(step)
        self.times.append(t)
        self.positions.append(np.array(positions, dtype=float).reshape(-1, 2))
        self.multipliers.append(np.array(multipliers, dtype=float))

    @property
    def times_array(self) -> np.ndarray:
        return np.asarray(self.times)

    @property
    def positions_array(self) -> np.ndarray:
        return np.stack(self.positions) if self.positions else np.zeros((0, self.n_particles, 2))

    @property
    def multipliers_array(self) -> np.ndarray:
        if not self.multipliers:
            return np.zeros((0, len(self.pairs)))
        return np.stack(self.multipliers)

    @property
    def final_positions(self) -> np.ndarray:
        return self.positions[-1]
