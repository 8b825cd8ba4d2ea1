from django.apps import AppConfig
import os


class ProjaveConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'projave'
    verbose_name = 'Projection-averaged Sobolev verification'

    def ready(self):
        """
        Start the reproducibility audit scheduler if enabled.
        """
        # RUN_MAIN is 'true' in the reloader's child process and unset under gunicorn;
        # either way the scheduler must start only once.
        run_main = os.environ.get('RUN_MAIN')

        if run_main == 'true' or run_main is None:
            from django.conf import settings
            if getattr(settings, 'ENABLE_REPRODUCIBILITY_AUDIT', False):
                from projave.scheduler import start_scheduler
                start_scheduler()
