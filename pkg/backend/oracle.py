"""
Oracle pose estimation.

In ``gt`` mode the backend returns the pose hint unchanged. In ``noisy`` mode
it perturbs the object pose in the camera frame: the object is turned about
its own origin by a random-axis rotation with angle ``|N(0, rot_sigma^2)|``
and shifted by ``N(0, trans_sigma^2)`` per axis. Every request draws from its
own generator seeded by ``(seed, connection, request_id)``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from geom.transforms import Pose, compose, exp_so3, inverse

from .messages import PoseResponse

logger = logging.getLogger(__name__)

GT = 'gt'
NOISY = 'noisy'
MODE_CHOICES = [
    (GT, 'Ground truth'),
    (NOISY, 'Ground truth with Gaussian noise'),
]

TRANS_NOISE_SIGMA = 0.003
ROT_NOISE_SIGMA = 0.006


@dataclass(frozen=True, eq=False)
class BackendConfig:
    mode: str = GT
    trans_noise_sigma: float = TRANS_NOISE_SIGMA
    rot_noise_sigma: float = ROT_NOISE_SIGMA
    rng_seed: int = 0
    # seconds between receiving a request and answering it
    compute_delay: float = 0.0
    world_from_obj: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        self.validate()

    def validate(self):
        errors = {}
        if self.mode not in dict(MODE_CHOICES):
            errors['mode'] = f'Unknown backend mode {self.mode!r}.'
        if self.trans_noise_sigma < 0:
            errors['trans_noise_sigma'] = 'Noise sigma cannot be negative.'
        if self.rot_noise_sigma < 0:
            errors['rot_noise_sigma'] = 'Noise sigma cannot be negative.'
        if self.compute_delay < 0:
            errors['compute_delay'] = 'Compute delay cannot be negative.'
        if errors:
            raise ValidationError(errors)


def request_rng(cfg, request_id, connection=0):
    return np.random.default_rng([cfg.rng_seed, connection, request_id])


def perturb(cam_from_obj, cfg, rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = abs(rng.normal(0.0, cfg.rot_noise_sigma))
    shift = rng.normal(0.0, cfg.trans_noise_sigma, size=3)
    return Pose(exp_so3(axis * angle) @ cam_from_obj.rotation, cam_from_obj.translation + shift)


def estimate(req, cfg, connection=0):
    """Answer ``req``; a request without a usable pose hint fails."""
    if req.true_pose_hint is None:
        logger.warning('Request %s carries no usable pose; answering failed', req.request_id)
        return PoseResponse.failed(req)
    if cfg.mode == GT:
        return PoseResponse(req.request_id, req.t0, req.true_pose_hint)

    rng = request_rng(cfg, req.request_id, connection)
    cam_from_obj = compose(req.true_pose_hint, cfg.world_from_obj)
    noisy = compose(perturb(cam_from_obj, cfg, rng), inverse(cfg.world_from_obj))
    return PoseResponse(req.request_id, req.t0, noisy)
