"""Result summaries printed by the CLI commands."""

from pydantic import BaseModel


class ConvergenceRow(BaseModel):
    """L2 errors of one (N, h) run."""
    N: int
    h: float
    p: float
    u1: float
    u2: float
    v1: float
    v2: float
    sigma1: float
    sigma2: float
    sigma3: float
    total: float


class ConvergenceSummary(BaseModel):
    scenario: str
    flux: str
    rows: list[ConvergenceRow]
    slopes: dict[int, float]
    consistency_rate: float | None = None
    files: list[str]


class SpectrumSummary(BaseModel):
    """Spectrum of the assembled operator for one penalty value."""
    tau: float
    size: int
    max_real: float
    spectral_radius: float
    antisymmetry_defect: float | None = None
    file: str


class SpectraSummary(BaseModel):
    preset: str
    N: int
    n: int
    geometry_mode: str
    spectra: list[SpectrumSummary]
    radius_ratio: float | None = None


class SimulationSummary(BaseModel):
    preset: str
    N: int
    num_elements: int
    dofs: int
    dt: float
    steps: int
    t_final: float
    initial_energy: float
    final_energy: float
    max_energy_increase: float
    files: list[str]


class PatIteration(BaseModel):
    iteration: int
    relative_error: float
    kappa_est: float


class PatSummary(BaseModel):
    mode: str
    N: int
    num_elements: int
    t_final: float
    iterations: list[PatIteration]
    files: list[str]
