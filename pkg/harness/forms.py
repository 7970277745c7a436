from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from backend.oracle import GT, MODE_CHOICES
from motion.exceptions import MotionError
from motion.scripts import SCRIPT_NAMES
from netlink.sockets import parse_address

from .config import SIM, TCP, TRANSPORT_CHOICES, ExperimentConfig


class ExperimentForm(forms.Form):
    """Validates command-line experiment options before they become an ExperimentConfig"""

    script = forms.ChoiceField(choices=[(name, name) for name in SCRIPT_NAMES], initial='trans-easy')
    frame_rate = forms.FloatField(required=False, label='Frame Rate (Hz)')
    imu_rate = forms.FloatField(required=False, label='IMU Rate (Hz)')
    backend = forms.ChoiceField(choices=MODE_CHOICES, initial=GT)
    transport = forms.ChoiceField(choices=TRANSPORT_CHOICES, initial=SIM)
    addr = forms.CharField(required=False, label='Backend Address')
    seed = forms.IntegerField(required=False, min_value=0)
    duration = forms.FloatField(required=False, label='Duration (s)')
    static_init = forms.FloatField(required=False, min_value=0.0, label='Static Initialization (s)')
    compute_delay = forms.FloatField(required=False, min_value=0.0, label='Backend Compute Delay (s)')
    trans_sigma = forms.FloatField(required=False, min_value=0.0)
    rot_sigma = forms.FloatField(required=False, min_value=0.0)
    disable_bscm = forms.BooleanField(required=False)
    disable_pia = forms.BooleanField(required=False)
    disable_backend = forms.BooleanField(required=False)

    def _positive(self, name):
        value = self.cleaned_data.get(name)
        if value is not None and not value > 0:
            raise ValidationError('Must be positive.')
        return value

    def clean_frame_rate(self):
        return self._positive('frame_rate')

    def clean_imu_rate(self):
        return self._positive('imu_rate')

    def clean_duration(self):
        return self._positive('duration')

    def clean_addr(self):
        addr = self.cleaned_data.get('addr') or settings.VIOTRACK['ADDR']
        try:
            parse_address(addr)
        except ValueError as exc:
            raise ValidationError(str(exc))
        return addr

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get('disable_backend') and cleaned_data.get('transport') == TCP:
            raise ValidationError('The TCP transport needs the backend; drop --disable-backend.')
        return cleaned_data

    def to_config(self):
        data = self.cleaned_data
        overrides = {
            'transport': data['transport'],
            'addr': data['addr'],
            'disable_bscm': data['disable_bscm'],
            'disable_pia': data['disable_pia'],
            'disable_backend': data['disable_backend'],
        }
        if data.get('static_init') is not None:
            overrides['static_init'] = data['static_init']
        try:
            return ExperimentConfig.from_settings(
                script=data['script'],
                frame_rate=data.get('frame_rate'),
                imu_rate=data.get('imu_rate'),
                backend=data['backend'],
                seed=data.get('seed'),
                duration=data.get('duration'),
                trans_sigma=data.get('trans_sigma'),
                rot_sigma=data.get('rot_sigma'),
                compute_delay=data.get('compute_delay') or 0.0,
                **overrides,
            )
        except MotionError as exc:
            raise ValidationError(str(exc))
