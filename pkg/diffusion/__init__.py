"""확산 과정: 스케줄, forward noising, 결정적 샘플러"""
from diffusion.sampler import sample
from diffusion.schedule import (
    DiffusionSchedule,
    forward_noise,
    forward_noise_batch,
    from_diffusion_range,
    make_schedule,
    reverse_step,
    timestep_ladder,
    to_diffusion_range,
)

__all__ = [
    "sample",
    "DiffusionSchedule",
    "forward_noise",
    "forward_noise_batch",
    "from_diffusion_range",
    "make_schedule",
    "reverse_step",
    "timestep_ladder",
    "to_diffusion_range",
]
