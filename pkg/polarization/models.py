from django.db import models


class ExperimentRun(models.Model):
    """One recorded command run with its configuration and manifest."""
    run_id = models.CharField(max_length=64, primary_key=True)
    command = models.CharField(max_length=32, db_index=True)
    seed = models.BigIntegerField(db_index=True)
    config = models.JSONField()
    manifest = models.JSONField()
    result_summary = models.JSONField(default=dict)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']
        verbose_name = 'Experiment Run'
        verbose_name_plural = 'Experiment Runs'

    def __str__(self):
        return f"{self.run_id[:8]}... - {self.command} (seed {self.seed})"
