# Generated by Django 4.2.7 on 2026-10-16 09:12

from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                (
                    "created_at",
                    models.DateTimeField(auto_now_add=True, verbose_name="Created At"),
                ),
                (
                    "updated_at",
                    models.DateTimeField(auto_now=True, verbose_name="Updated At"),
                ),
                ("script", models.CharField(max_length=20, verbose_name="Motion Script")),
                ("frame_rate", models.FloatField(verbose_name="Frame Rate (Hz)")),
                (
                    "backend",
                    models.CharField(
                        choices=[
                            ("gt", "Ground truth"),
                            ("noisy", "Ground truth with Gaussian noise"),
                        ],
                        max_length=10,
                        verbose_name="Backend Mode",
                    ),
                ),
                ("seed", models.IntegerField(default=0)),
                ("duration", models.FloatField(verbose_name="Duration (s)")),
                (
                    "disable_bscm",
                    models.BooleanField(default=False, verbose_name="BSCM Disabled"),
                ),
                (
                    "disable_pia",
                    models.BooleanField(default=False, verbose_name="PIA Disabled"),
                ),
                (
                    "disable_backend",
                    models.BooleanField(default=False, verbose_name="Backend Disabled"),
                ),
                (
                    "mean_pos_mm",
                    models.FloatField(blank=True, null=True, verbose_name="Mean Position Error (mm)"),
                ),
                (
                    "max_pos_mm",
                    models.FloatField(blank=True, null=True, verbose_name="Max Position Error (mm)"),
                ),
                (
                    "mean_orient_deg",
                    models.FloatField(blank=True, null=True, verbose_name="Mean Orientation Error (deg)"),
                ),
                (
                    "max_orient_deg",
                    models.FloatField(blank=True, null=True, verbose_name="Max Orientation Error (deg)"),
                ),
                (
                    "mean_proj_px",
                    models.FloatField(blank=True, null=True, verbose_name="Mean Projection Error (px)"),
                ),
                (
                    "max_proj_px",
                    models.FloatField(blank=True, null=True, verbose_name="Max Projection Error (px)"),
                ),
                (
                    "final_second_proj_px",
                    models.FloatField(
                        blank=True,
                        help_text="Empty when no frame of the last second could be projected",
                        null=True,
                        verbose_name="Final-Second Projection Error (px)",
                    ),
                ),
                ("refinement_cycles", models.IntegerField(default=0)),
                (
                    "tracking_lost",
                    models.IntegerField(default=0, verbose_name="Tracking-Lost Frames"),
                ),
                ("ppm_mean_us", models.FloatField(default=0.0, verbose_name="PPM Mean (us)")),
                ("pim_mean_us", models.FloatField(default=0.0, verbose_name="PIM Mean (us)")),
                ("prm_mean_us", models.FloatField(default=0.0, verbose_name="PRM Mean (us)")),
                ("config", models.JSONField(default=dict)),
            ],
            options={
                "verbose_name": "Experiment Run",
                "verbose_name_plural": "Experiment Runs",
                "ordering": ["-created_at"],
            },
        ),
    ]
