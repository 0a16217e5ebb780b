from django.db import models


class RunRecord(models.Model):
    """One executed subcommand: its RunConfig, summary and output digest"""
    SUBCOMMAND_CHOICES = [
        ('run', 'Run'),
        ('gen', 'Generate'),
        ('compare', 'Compare'),
        ('lowerbound', 'Lower bound'),
        ('certify', 'Certify'),
    ]

    STATUS_CHOICES = [
        ('OK', 'OK'),
        ('VIOLATION', 'Invariant violation'),
        ('ERROR', 'Error'),
    ]

    subcommand = models.CharField(max_length=20, choices=SUBCOMMAND_CHOICES)
    config = models.JSONField()
    summary = models.JSONField(default=dict, blank=True)
    output_digest = models.CharField(max_length=64, blank=True)
    status = models.CharField(max_length=10, choices=STATUS_CHOICES, default='OK')
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"{self.subcommand} #{self.pk} ({self.get_status_display()})"

    class Meta:
        ordering = ['-created_at', '-id']
        indexes = [
            models.Index(fields=['subcommand', 'status'], name='scheduling_subcmd_status_idx'),
        ]
