import math

from django.db import models

from backend.oracle import MODE_CHOICES


class TimeStampedModel(models.Model):
    """Abstract base model that provides timestamp fields"""

    created_at = models.DateTimeField(auto_now_add=True, verbose_name='Created At')
    updated_at = models.DateTimeField(auto_now=True, verbose_name='Updated At')

    class Meta:
        abstract = True


def _finite(value):
    return value if value is not None and math.isfinite(value) else None


class ExperimentRun(TimeStampedModel):
    """Summary of one executed experiment"""

    script = models.CharField(max_length=20, verbose_name='Motion Script')
    frame_rate = models.FloatField(verbose_name='Frame Rate (Hz)')
    backend = models.CharField(max_length=10, choices=MODE_CHOICES, verbose_name='Backend Mode')
    seed = models.IntegerField(default=0)
    duration = models.FloatField(verbose_name='Duration (s)')

    # Ablations
    disable_bscm = models.BooleanField(default=False, verbose_name='BSCM Disabled')
    disable_pia = models.BooleanField(default=False, verbose_name='PIA Disabled')
    disable_backend = models.BooleanField(default=False, verbose_name='Backend Disabled')

    # Errors; empty when no frame could be scored
    mean_pos_mm = models.FloatField(null=True, blank=True, verbose_name='Mean Position Error (mm)')
    max_pos_mm = models.FloatField(null=True, blank=True, verbose_name='Max Position Error (mm)')
    mean_orient_deg = models.FloatField(null=True, blank=True, verbose_name='Mean Orientation Error (deg)')
    max_orient_deg = models.FloatField(null=True, blank=True, verbose_name='Max Orientation Error (deg)')
    mean_proj_px = models.FloatField(null=True, blank=True, verbose_name='Mean Projection Error (px)')
    max_proj_px = models.FloatField(null=True, blank=True, verbose_name='Max Projection Error (px)')
    final_second_proj_px = models.FloatField(
        null=True, blank=True, verbose_name='Final-Second Projection Error (px)',
        help_text='Empty when no frame of the last second could be projected',
    )

    refinement_cycles = models.IntegerField(default=0)
    tracking_lost = models.IntegerField(default=0, verbose_name='Tracking-Lost Frames')

    # Mean per-call timings in microseconds
    ppm_mean_us = models.FloatField(default=0.0, verbose_name='PPM Mean (us)')
    pim_mean_us = models.FloatField(default=0.0, verbose_name='PIM Mean (us)')
    prm_mean_us = models.FloatField(default=0.0, verbose_name='PRM Mean (us)')

    config = models.JSONField(default=dict)

    class Meta:
        verbose_name = 'Experiment Run'
        verbose_name_plural = 'Experiment Runs'
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.script} @ {self.frame_rate:g} FPS ({self.backend}, seed {self.seed})"

    @classmethod
    def from_report(cls, report, cfg):
        return cls.objects.create(
            script=report.script,
            frame_rate=report.frame_rate,
            backend=report.backend,
            seed=report.seed,
            duration=report.duration,
            disable_bscm=cfg.disable_bscm,
            disable_pia=cfg.disable_pia,
            disable_backend=cfg.disable_backend,
            mean_pos_mm=_finite(report.mean_pos_mm),
            max_pos_mm=_finite(report.max_pos_mm),
            mean_orient_deg=_finite(report.mean_orient_deg),
            max_orient_deg=_finite(report.max_orient_deg),
            mean_proj_px=_finite(report.mean_proj_px),
            max_proj_px=_finite(report.max_proj_px),
            final_second_proj_px=_finite(report.final_second_proj_px),
            refinement_cycles=report.refinement_cycles,
            tracking_lost=report.tracking_lost,
            ppm_mean_us=report.timing('ppm').mean_us,
            pim_mean_us=report.timing('pim').mean_us,
            prm_mean_us=report.timing('prm').mean_us,
            config=cfg.as_dict(),
        )
