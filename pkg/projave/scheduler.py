"""
Reproducibility audit scheduler using APScheduler.

Once a night the most recent recorded runs are replayed from their headers
and compared bit for bit with the stored rows. Runs that drift are flagged on
the run (last_drift_count) and in AuditSettings.

start_scheduler() is called from ProjaveConfig.ready() when
ENABLE_REPRODUCIBILITY_AUDIT is set.
"""
import logging
from apscheduler.schedulers.background import BackgroundScheduler
from apscheduler.triggers.cron import CronTrigger

logger = logging.getLogger(__name__)

scheduler = None


def reproducibility_audit_job():
    """
    Replay the newest recorded runs and record drift.
    Returns the number of runs that drifted (or failed to replay).
    """
    from django.utils import timezone
    from .config import library_defaults
    from .models import AuditSettings, VerificationRun
    from .services import VerificationEngine

    settings = AuditSettings.get_settings()
    if not settings.audit_enabled:
        logger.info("[Scheduler] Audit disabled in AuditSettings, skipping")
        return 0

    limit = settings.runs_per_audit or library_defaults()['AUDIT_RUNS']
    runs = list(VerificationRun.objects.order_by('-created_at')[:limit])
    logger.info(f"[Scheduler] Replaying {len(runs)} recorded runs...")

    drifted = 0
    for run in runs:
        try:
            result = VerificationEngine.replay_header(run.header, run.report_rows())
            run.last_drift_count = len(result['drift'])
            if result['drift']:
                drifted += 1
                logger.warning(f"[Scheduler] Run {run.pk} ({run.command}) drifted in {run.last_drift_count} cells")
        except Exception as e:
            drifted += 1
            run.last_drift_count = None
            logger.error(f"[Scheduler] Replay error for run {run.pk}: {e}")
        run.last_replayed_at = timezone.now()
        run.save(update_fields=['last_replayed_at', 'last_drift_count'])

    try:
        settings.last_audit = timezone.now()
        settings.last_audit_count = len(runs)
        settings.last_drift_count = drifted
        settings.save()
        logger.info(f"[Scheduler] audit replayed {len(runs)} runs, {drifted} drifted")
    except Exception as e:
        logger.error(f"[Scheduler] Failed to update AuditSettings: {e}")
    return drifted


def start_scheduler():
    """
    Start the APScheduler with the audit job.
    Should be called once when Django starts.
    """
    global scheduler

    if scheduler is not None:
        logger.warning("[Scheduler] Scheduler already running")
        return

    from .config import library_defaults
    hour = library_defaults()['AUDIT_HOUR']

    scheduler = BackgroundScheduler()
    scheduler.add_job(
        reproducibility_audit_job,
        trigger=CronTrigger(hour=str(hour), minute='0', timezone='UTC'),
        id='reproducibility_audit',
        name='Reproducibility Audit',
        replace_existing=True
    )

    scheduler.start()
    logger.info(f"[Scheduler] Reproducibility audit scheduled daily at {hour:02d}:00 UTC")

    return scheduler


def stop_scheduler():
    """Stop the scheduler gracefully."""
    global scheduler
    if scheduler:
        scheduler.shutdown()
        scheduler = None
        logger.info("[Scheduler] Reproducibility audit scheduler stopped")
