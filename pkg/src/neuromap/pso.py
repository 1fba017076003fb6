from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class PsoParams:
    swarm_size: int = 20
    iterations: int = 200
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    velocity_clamp: float = 4.0

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValidationError("PSO swarm_size must be >= 2")
        if self.iterations < 0:
            raise ValidationError("PSO iterations must be >= 0")
        if min(self.inertia, self.cognitive, self.social) <= 0:
            raise ValidationError("PSO inertia and acceleration constants must be > 0")
        if self.velocity_clamp <= 0:
            raise ValidationError("PSO velocity clamp must be > 0")


def step(params: PsoParams, rng: np.random.Generator, pos, vel, pbest, gbest) -> None:
    """In-place velocity/position update; ``gbest`` broadcasts against ``pos``."""
    r1 = rng.random(pos.shape)
    r2 = rng.random(pos.shape)
    vel *= params.inertia
    vel += params.cognitive * r1 * (pbest - pos)
    vel += params.social * r2 * (gbest - pos)
    np.clip(vel, -params.velocity_clamp, params.velocity_clamp, out=vel)
    pos += vel
