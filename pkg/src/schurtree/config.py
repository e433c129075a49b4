"""Run configuration shared by the sampler, the approximation stack, and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, replace

DEFAULT_SEED = 0xC0FFEE


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for the randomized pipeline.

    delta          -- overall failure probability budget of a sampling run
    eps_mode       -- "auto" | "sparse" | "dense" | "exact"; auto picks dense
                      iff m > n^(4/3), exact replaces randomized complements
                      with exact ones (and then no sparsification happens)
    c_sp           -- oversampling constant of the sparsifier
    c_jl           -- sketch-width constant of the leverage estimator
    dense_leaf     -- below this vertex count leverage scores are computed
                      exactly with dense algebra instead of sketching
    wilson_budget  -- step budget for the random-walk baseline sampler
    rho_floor      -- smallest accuracy rung of the root correction ladder
    rejection_alarm -- alarm threshold for the rejection-run monitor
    seed           -- base RNG seed (per-tree streams are derived from it)
    trace          -- record (edge, leverage, accept) per decision (tests)
    """

    delta: float = 1e-3
    eps_mode: str = "auto"
    c_sp: float = 16.0
    c_jl: float = 48.0
    dense_leaf: int = 64
    wilson_budget: int = 10**8
    rho_floor: float = 1e-14
    rejection_alarm: float = 40.0
    seed: int = DEFAULT_SEED
    trace: bool = False

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.eps_mode not in ("auto", "sparse", "dense", "exact"):
            raise ValueError("eps_mode must be auto|sparse|dense|exact")

    def with_(self, **kw) -> "SamplerConfig":
        return replace(self, **kw)
