from django.contrib import admin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = [
        'script', 'frame_rate', 'backend', 'seed', 'mean_pos_mm', 'mean_orient_deg', 'mean_proj_px',
        'refinement_cycles', 'tracking_lost', 'created_at',
    ]
    list_filter = ['backend', 'script', 'frame_rate', 'disable_bscm', 'disable_pia', 'disable_backend', 'created_at']
    search_fields = ['script', 'backend']
    readonly_fields = ['created_at', 'updated_at']

    fieldsets = (
        ('Experiment', {
            'fields': ('script', 'frame_rate', 'backend', 'seed', 'duration')
        }),
        ('Ablations', {
            'fields': ('disable_bscm', 'disable_pia', 'disable_backend')
        }),
        ('Errors', {
            'fields': (
                'mean_pos_mm', 'max_pos_mm', 'mean_orient_deg', 'max_orient_deg', 'mean_proj_px', 'max_proj_px',
                'final_second_proj_px',
            )
        }),
        ('Tracker', {
            'fields': ('refinement_cycles', 'tracking_lost', 'ppm_mean_us', 'pim_mean_us', 'prm_mean_us')
        }),
        ('Configuration', {
            'fields': ('config',),
            'classes': ('collapse',)
        }),
        ('Timestamps', {
            'fields': ('created_at', 'updated_at'),
            'classes': ('collapse',)
        }),
    )
