from django.db import models

from apps.core.models import BaseModel


class ExperimentRun(BaseModel):
    """
    One invocation of run_experiment or verify_experiment: the validated
    config, where its files went and how it ended
    """

    RUN_STATUS = [
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('verified', 'Verified'),
        ('verification_failed', 'Verification Failed'),
        ('failed', 'Failed'),
    ]

    name = models.CharField(max_length=255)
    config = models.JSONField()
    config_hash = models.CharField(max_length=64, db_index=True)
    status = models.CharField(max_length=20, choices=RUN_STATUS, default='running')
    output_dir = models.CharField(max_length=1024)
    version = models.CharField(max_length=32)

    summary = models.JSONField(default=dict, blank=True)
    verification = models.JSONField(default=dict, blank=True)
    error = models.TextField(blank=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        db_table = 'experiment_runs'
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.name} ({self.config_hash[:12]}) - {self.status}"


class SeedRun(BaseModel):
    """A single seed's trace file and headline numbers"""

    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='seed_runs')
    seed = models.PositiveIntegerField()
    rounds = models.PositiveIntegerField(default=0)

    trace_path = models.CharField(max_length=1024)
    trace_sha256 = models.CharField(max_length=64)
    cells_path = models.CharField(max_length=1024, blank=True)

    final_regrets = models.JSONField(default=dict)
    lag = models.JSONField(default=dict)
    max_bits = models.PositiveIntegerField(default=0)

    class Meta:
        db_table = 'experiment_seed_runs'
        unique_together = ['run', 'seed']
        ordering = ['seed']

    def __str__(self):
        return f"{self.run.name} seed {self.seed}"
