"""Motion scripts: two motion kinds at three difficulty levels."""

from dataclasses import dataclass

from .exceptions import MotionError

TRANSLATIONAL = 'translational'
CIRCULAR = 'circular'
KIND_CHOICES = [
    (TRANSLATIONAL, 'Translational (dolly, pedestal and truck)'),
    (CIRCULAR, 'Circular (orbit around the object)'),
]
DIFFICULTY_CHOICES = [
    ('easy', 'Easy'),
    ('medium', 'Medium'),
    ('hard', 'Hard'),
]

# Short names used on the command line and in reports.
KIND_ALIASES = {'trans': TRANSLATIONAL, 'circ': CIRCULAR}
SCRIPT_NAMES = [f'{alias}-{level}' for alias in KIND_ALIASES for level, _ in DIFFICULTY_CHOICES]

DEFAULT_DURATION = 30.0
DEFAULT_DISTANCE = 1.2


@dataclass(frozen=True)
class MotionProfile:
    """Target statistics of a script: mean speed and rate, and the allowed acceleration bands."""

    avg_speed: float
    accel_range: tuple
    avg_rate: float
    angular_accel_range: tuple


PROFILES = {
    (TRANSLATIONAL, 'easy'): MotionProfile(0.062, (0.0, 0.191), 0.001, (0.0, 0.0)),
    (TRANSLATIONAL, 'medium'): MotionProfile(0.123, (0.173, 0.364), 0.014, (0.0, 0.152)),
    (TRANSLATIONAL, 'hard'): MotionProfile(0.182, (0.346, 0.537), 0.041, (0.151, 0.303)),
    (CIRCULAR, 'easy'): MotionProfile(0.073, (0.010, 0.016), 0.056, (0.0, 0.038)),
    (CIRCULAR, 'medium'): MotionProfile(0.147, (0.039, 0.063), 0.330, (0.0, 0.150)),
    (CIRCULAR, 'hard'): MotionProfile(0.229, (0.088, 0.140), 0.402, (0.0, 0.338)),
}


@dataclass(frozen=True)
class MotionScript:
    kind: str
    difficulty: str
    duration: float = DEFAULT_DURATION
    perturbation_seed: int = 0
    distance: float = DEFAULT_DISTANCE
    target: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if (self.kind, self.difficulty) not in PROFILES:
            raise MotionError(f'Unknown motion script {self.kind}/{self.difficulty}')
        if not self.duration > 0:
            raise MotionError(f'Script duration must be positive, got {self.duration}')
        if not self.distance > 0:
            raise MotionError(f'Camera distance must be positive, got {self.distance}')

    @classmethod
    def from_name(cls, name, **kwargs):
        """Build a script from its short name, e.g. ``trans-easy`` or ``circ-hard``."""
        try:
            alias, difficulty = name.split('-', 1)
            kind = KIND_ALIASES[alias]
        except (ValueError, KeyError):
            raise MotionError(f'Unknown script name {name!r}; expected one of {", ".join(SCRIPT_NAMES)}') from None
        return cls(kind=kind, difficulty=difficulty, **kwargs)

    @property
    def name(self):
        alias = next(a for a, k in KIND_ALIASES.items() if k == self.kind)
        return f'{alias}-{self.difficulty}'

    @property
    def profile(self):
        return PROFILES[(self.kind, self.difficulty)]

    def __str__(self):
        return self.name
