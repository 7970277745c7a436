"""Immutable experiment configuration built from the VIOTRACK settings."""

import dataclasses
import math
from dataclasses import dataclass, field

from django.conf import settings
from django.core.exceptions import ValidationError

from backend.oracle import GT, BackendConfig
from geom.camera import CameraIntrinsics, cuboid_corners
from geom.transforms import Pose, world_gravity
from motion.imu import ImuNoiseModel
from motion.scripts import MotionScript
from netlink.latency import LatencyModel
from tracker.state import PiaConfig, TrackerConfig

SIM = 'sim'
TCP = 'tcp'
TRANSPORT_CHOICES = [
    (SIM, 'Simulated channel'),
    (TCP, 'TCP to a running backend server'),
]

FRAME_RATES = (30.0, 60.0, 90.0, 120.0)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    script: MotionScript
    frame_rate: float
    backend: BackendConfig
    latency: LatencyModel
    noise: ImuNoiseModel
    K: CameraIntrinsics
    bbox_half_extents: tuple = (0.1, 0.1, 0.1)
    world_from_obj: Pose = field(default_factory=Pose.identity)
    gravity: tuple = field(default_factory=world_gravity)
    pia: PiaConfig = field(default_factory=PiaConfig)
    bias_smoothing: float = 1.0
    buffer_seconds: float = 1.0
    seed: int = 0
    static_init: float = 0.0
    disable_bscm: bool = False
    disable_pia: bool = False
    disable_backend: bool = False
    transport: str = SIM
    addr: str = '127.0.0.1:47474'

    def __post_init__(self):
        self.validate()

    @property
    def imu_rate(self):
        return self.noise.sample_rate

    @property
    def duration(self):
        return self.script.duration

    def validate(self):
        errors = {}
        if not (math.isfinite(self.frame_rate) and self.frame_rate > 0):
            errors['frame_rate'] = 'Frame rate must be positive.'
        if not self.imu_rate > 0:
            errors['imu_rate'] = 'IMU rate must be positive.'
        if not self.duration > 0:
            errors['duration'] = 'Duration must be positive.'
        if self.static_init < 0:
            errors['static_init'] = 'Static initialization time cannot be negative.'
        if self.transport not in dict(TRANSPORT_CHOICES):
            errors['transport'] = f'Unknown transport {self.transport!r}.'
        if not 0 < self.bias_smoothing <= 1:
            errors['bias_smoothing'] = 'Bias smoothing must lie in (0, 1].'
        if errors:
            raise ValidationError(errors)

    def tracker_config(self):
        return TrackerConfig(
            K=self.K,
            bbox3d=cuboid_corners(self.bbox_half_extents),
            world_from_obj=self.world_from_obj,
            frame_rate=self.frame_rate,
            imu_rate=self.imu_rate,
            gravity=self.gravity,
            pia=self.pia,
            bias_smoothing=self.bias_smoothing,
            buffer_seconds=self.buffer_seconds,
            disable_bscm=self.disable_bscm,
            disable_pia=self.disable_pia,
            requests_enabled=not self.disable_backend,
        )

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_settings(cls, script='trans-easy', frame_rate=None, imu_rate=None, backend=GT, seed=None,
                      duration=None, trans_sigma=None, rot_sigma=None, compute_delay=0.0, **overrides):
        """
        Build a run configuration from ``settings.VIOTRACK``.

        ``seed`` feeds every random stream of the run: trajectory perturbation,
        IMU noise, network delays and backend noise.
        """
        defaults = settings.VIOTRACK
        seed = defaults['SEED'] if seed is None else int(seed)
        imu_rate = defaults['IMU_RATE'] if imu_rate is None else float(imu_rate)
        duration = defaults['DURATION'] if duration is None else float(duration)
        if not duration > 0:
            raise ValidationError({'duration': 'Duration must be positive.'})
        if not imu_rate > 0:
            raise ValidationError({'imu_rate': 'IMU rate must be positive.'})

        motion = MotionScript.from_name(script, duration=duration, perturbation_seed=seed,
                                        distance=defaults['DISTANCE'])
        options = {
            'script': motion,
            'frame_rate': defaults['FRAME_RATE'] if frame_rate is None else float(frame_rate),
            'backend': BackendConfig(
                mode=backend,
                trans_noise_sigma=defaults['TRANS_NOISE_SIGMA'] if trans_sigma is None else trans_sigma,
                rot_noise_sigma=defaults['ROT_NOISE_SIGMA'] if rot_sigma is None else rot_sigma,
                rng_seed=seed,
                compute_delay=compute_delay,
                world_from_obj=Pose.from_row(defaults['WORLD_FROM_OBJ']),
            ),
            'latency': LatencyModel(rng_seed=seed, **defaults['LATENCY']),
            'noise': ImuNoiseModel(
                gyro_density=defaults['GYRO_DENSITY'],
                accel_density=defaults['ACCEL_DENSITY'],
                gyro_bias=tuple(defaults['GYRO_BIAS']),
                accel_bias=tuple(defaults['ACCEL_BIAS']),
                sample_rate=imu_rate,
                gyro_bias_walk=defaults['GYRO_BIAS_WALK'],
                accel_bias_walk=defaults['ACCEL_BIAS_WALK'],
            ),
            'K': CameraIntrinsics.from_dict(defaults['INTRINSICS']),
            'bbox_half_extents': tuple(defaults['BBOX_HALF_EXTENTS']),
            'world_from_obj': Pose.from_row(defaults['WORLD_FROM_OBJ']),
            'gravity': world_gravity(),
            'pia': PiaConfig(**defaults['PIA']),
            'bias_smoothing': defaults['BIAS_SMOOTHING'].get(backend, 1.0),
            'buffer_seconds': defaults['BUFFER_SECONDS'],
            'seed': seed,
            'addr': defaults['ADDR'],
        }
        options.update(overrides)
        return cls(**options)

    def as_dict(self):
        """JSON-friendly form, read back by :meth:`from_dict`."""
        return {
            'script': self.script.name,
            'duration': self.duration,
            'perturbation_seed': self.script.perturbation_seed,
            'distance': self.script.distance,
            'frame_rate': self.frame_rate,
            'backend': {
                'mode': self.backend.mode,
                'trans_noise_sigma': self.backend.trans_noise_sigma,
                'rot_noise_sigma': self.backend.rot_noise_sigma,
                'rng_seed': self.backend.rng_seed,
                'compute_delay': self.backend.compute_delay,
                'world_from_obj': list(self.backend.world_from_obj.to_row()),
            },
            'latency': dataclasses.asdict(self.latency),
            'noise': dataclasses.asdict(self.noise),
            'K': self.K.as_dict(),
            'bbox_half_extents': list(self.bbox_half_extents),
            'world_from_obj': list(self.world_from_obj.to_row()),
            'gravity': list(self.gravity),
            'pia': dataclasses.asdict(self.pia),
            'bias_smoothing': self.bias_smoothing,
            'buffer_seconds': self.buffer_seconds,
            'seed': self.seed,
            'static_init': self.static_init,
            'disable_bscm': self.disable_bscm,
            'disable_pia': self.disable_pia,
            'disable_backend': self.disable_backend,
            'transport': self.transport,
            'addr': self.addr,
        }

    @classmethod
    def from_dict(cls, data):
        backend = dict(data['backend'])
        backend['world_from_obj'] = Pose.from_row(backend['world_from_obj'])
        script = MotionScript.from_name(
            data['script'], duration=data['duration'], perturbation_seed=data['perturbation_seed'],
            distance=data['distance'],
        )
        noise = dict(data['noise'])
        return cls(
            script=script,
            frame_rate=data['frame_rate'],
            backend=BackendConfig(**backend),
            latency=LatencyModel(**data['latency']),
            noise=ImuNoiseModel(**{k: tuple(v) if isinstance(v, list) else v for k, v in noise.items()}),
            K=CameraIntrinsics.from_dict(data['K']),
            bbox_half_extents=tuple(data['bbox_half_extents']),
            world_from_obj=Pose.from_row(data['world_from_obj']),
            gravity=tuple(data['gravity']),
            pia=PiaConfig(**data['pia']),
            bias_smoothing=data['bias_smoothing'],
            buffer_seconds=data['buffer_seconds'],
            seed=data['seed'],
            static_init=data['static_init'],
            disable_bscm=data['disable_bscm'],
            disable_pia=data['disable_pia'],
            disable_backend=data['disable_backend'],
            transport=data['transport'],
            addr=data['addr'],
        )

