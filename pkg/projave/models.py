"""
projave models: recorded verification runs and their report rows.
"""
from django.db import models


# ============================================================
# Verification runs
# ============================================================

class VerificationRun(models.Model):
    COMMAND_CHOICES = [
        ('constants', 'Constants'),
        ('verify-sobolev', 'Verify Sobolev'),
        ('chain', 'Chain'),
        ('petty', 'Petty'),
        ('geom-ineq', 'Geometric inequalities'),
        ('bv', 'BV'),
        ('validate-fixture', 'Validate fixture'),
    ]

    command = models.CharField(max_length=20, choices=COMMAND_CHOICES)
    seed = models.BigIntegerField()
    config = models.JSONField(help_text="Self-contained run config; replaying it reproduces the rows")
    header = models.JSONField(help_text="Report header as written to the report file")
    library_version = models.CharField(max_length=20)
    wall_clock_seconds = models.FloatField(default=0.0)
    passed = models.BooleanField(default=False)
    row_count = models.IntegerField(default=0)
    failed_count = models.IntegerField(default=0)
    output_path = models.CharField(max_length=500, blank=True)
    last_replayed_at = models.DateTimeField(null=True, blank=True)
    last_drift_count = models.IntegerField(null=True, blank=True,
                                           help_text="Cells that differed on the last replay")
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['command', 'created_at'], name='projave_run_cmd_created_idx'),
        ]

    def __str__(self):
        status = 'pass' if self.passed else f'{self.failed_count} failed'
        return f"{self.command} seed={self.seed} ({status})"

    def report_rows(self):
        """Rows as report dicts (NaN for missing numbers), ordered by index."""
        return [row.as_report_row() for row in self.rows.order_by('index')]


class ReportRow(models.Model):
    run = models.ForeignKey(VerificationRun, on_delete=models.CASCADE, related_name='rows')
    index = models.IntegerField()
    command = models.CharField(max_length=20)
    case = models.CharField(max_length=100)
    inputs = models.TextField(help_text="Canonical JSON of the row inputs")
    estimate = models.FloatField(null=True, blank=True)
    std_error = models.FloatField(null=True, blank=True)
    reference = models.FloatField(null=True, blank=True)
    margin = models.FloatField(null=True, blank=True)
    passed = models.BooleanField(default=False)
    error = models.TextField(blank=True)

    class Meta:
        unique_together = ('run', 'index')
        ordering = ['run', 'index']

    def __str__(self):
        return f"#{self.index} {self.case} ({'pass' if self.passed else 'fail'})"

    def as_report_row(self):
        def number(value):
            return float('nan') if value is None else value

        return {
            'index': self.index,
            'command': self.command,
            'case': self.case,
            'inputs': self.inputs,
            'estimate': number(self.estimate),
            'std_error': number(self.std_error),
            'reference': number(self.reference),
            'margin': number(self.margin),
            'passed': self.passed,
            'error': self.error,
        }


class AuditSettings(models.Model):
    """
    Singleton model for the reproducibility audit.
    Only one instance should exist.
    """
    audit_enabled = models.BooleanField(default=True, help_text="Let the scheduled job replay recent runs")
    runs_per_audit = models.IntegerField(default=5, help_text="How many recent runs each audit replays")
    last_audit = models.DateTimeField(null=True, blank=True, help_text="Last time the audit ran")
    last_audit_count = models.IntegerField(default=0, help_text="Runs replayed in the last audit")
    last_drift_count = models.IntegerField(default=0, help_text="Runs that drifted in the last audit")

    class Meta:
        verbose_name = "Audit Settings"
        verbose_name_plural = "Audit Settings"

    def __str__(self):
        return "Audit Settings"

    @classmethod
    def get_settings(cls):
        """Get or create the singleton settings instance"""
        settings, _ = cls.objects.get_or_create(pk=1)
        return settings

    def save(self, *args, **kwargs):
        # Ensure only one instance exists
        self.pk = 1
        super().save(*args, **kwargs)
