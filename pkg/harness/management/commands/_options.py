"""Option handling shared by the experiment commands."""

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from backend.oracle import MODE_CHOICES
from harness.config import TRANSPORT_CHOICES
from harness.forms import ExperimentForm
from motion.scripts import SCRIPT_NAMES

FORM_FIELDS = (
    'script', 'frame_rate', 'imu_rate', 'backend', 'transport', 'addr', 'seed', 'duration', 'static_init',
    'compute_delay', 'trans_sigma', 'rot_sigma', 'disable_bscm', 'disable_pia', 'disable_backend',
)


def add_experiment_arguments(parser):
    parser.add_argument('--script', choices=SCRIPT_NAMES, default='trans-easy')
    parser.add_argument('--frame-rate', type=float, help='Camera frame rate in Hz')
    parser.add_argument('--imu-rate', type=float, help='IMU sample rate in Hz')
    parser.add_argument('--backend', choices=[mode for mode, _ in MODE_CHOICES], default='gt')
    parser.add_argument('--transport', choices=[name for name, _ in TRANSPORT_CHOICES], default='sim')
    parser.add_argument('--addr', help='HOST:PORT of a running backend server (tcp transport)')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--duration', type=float, help='Simulated seconds')
    parser.add_argument('--static-init', type=float, help='Seconds of static IMU data used to seed the biases')
    parser.add_argument('--compute-delay', type=float, help='Backend compute time per request in seconds')
    parser.add_argument('--trans-sigma', type=float, help='Noisy backend translation sigma in metres')
    parser.add_argument('--rot-sigma', type=float, help='Noisy backend rotation sigma in radians')
    parser.add_argument('--disable-bscm', action='store_true', help='Skip bias self-correction')
    parser.add_argument('--disable-pia', action='store_true', help='Skip pose inspection')
    parser.add_argument('--disable-backend', action='store_true', help='Never query the backend')


def format_errors(errors):
    return '; '.join(
        f'{field}: {" ".join(messages)}' if field != '__all__' else ' '.join(messages)
        for field, messages in errors.items()
    )


def config_from_options(options):
    """Validate command options through :class:`ExperimentForm`; raises CommandError."""
    data = {name: options.get(name) for name in FORM_FIELDS if options.get(name) is not None}
    form = ExperimentForm(data)
    if not form.is_valid():
        raise CommandError(format_errors(form.errors))
    try:
        return form.to_config()
    except ValidationError as exc:
        raise CommandError('; '.join(exc.messages))
