"""
projave command-line interface.

    python manage.py projave <constants|verify-sobolev|chain|petty|geom-ineq|bv>
        --config <path> [--seed S] [--out <path>] [--format csv|json] [--record]
    python manage.py projave validate-fixture <path> [...]
    python manage.py projave replay <report>

Exit status is nonzero iff a row fails (or a replay drifts).
--record without --out writes the report under PROJAVE['REPORT_DIR'].
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from projave.config import COMMANDS, load_run_config, run_config_from_dict
from projave.exceptions import ProjaveError
from projave.reports import FORMATS
from projave.services import VerificationEngine

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run a projave verification command and write its report'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='subcommand', required=True)
        for name in COMMANDS:
            sub = subparsers.add_parser(name)
            if name == 'validate-fixture':
                sub.add_argument('paths', nargs='*', help='Polytope fixture JSON files')
                sub.add_argument('--config', help='Run config listing fixture paths')
            elif name == 'constants':
                sub.add_argument('--config', help='Run config (JSON)')
                sub.add_argument('--n', type=int, nargs='+', help='Dimensions (overrides the config)')
                sub.add_argument('--p', type=float, nargs='+', help='Exponents (overrides the config)')
            else:
                sub.add_argument('--config', required=True, help='Run config (JSON)')
            sub.add_argument('--seed', type=int, help='Overrides the config seed')
            sub.add_argument('--out', help='Report path')
            sub.add_argument('--format', choices=FORMATS, help='Report format (default: from --out suffix)')
            sub.add_argument('--record', action='store_true', help='Store the run in the database')
        replay = subparsers.add_parser('replay')
        replay.add_argument('report', help='CSV or JSON report written by an earlier run')

    def handle(self, *args, **options):
        subcommand = options['subcommand']
        try:
            if subcommand == 'replay':
                self._replay(options['report'])
            else:
                self._run(subcommand, options)
        except ProjaveError as e:
            logger.error(f"[CLI] {subcommand}: {e}")
            raise CommandError(str(e), returncode=2) from e

    def _config(self, subcommand, options):
        if options.get('config'):
            config = load_run_config(options['config'], seed=options.get('seed'), command=subcommand)
        else:
            data = {}
            if subcommand == 'validate-fixture':
                # Fixture validation draws no random numbers
                data['seed'] = 0
            config = run_config_from_dict(data, seed=options.get('seed'), command=subcommand)
        if subcommand == 'validate-fixture' and options.get('paths'):
            config.options['paths'] = options['paths']
        if subcommand == 'constants':
            for key in ('n', 'p'):
                if options.get(key):
                    config.options[key] = options[key]
        return config

    def _run(self, subcommand, options):
        config = self._config(subcommand, options)
        output = options.get('out')
        if options.get('record') and not output:
            output = VerificationEngine.default_report_path(config, options.get('format') or 'csv')
        result = VerificationEngine.run(config, output=output, fmt=options.get('format'))
        report = result['report']
        for row in report.rows:
            mark = 'PASS' if row['passed'] else 'FAIL'
            detail = row['error'] or f"estimate={row['estimate']:.10g} margin={row['margin']:.3e}"
            self.stdout.write(f"{mark} #{row['index']} {row['case']} {row['inputs']} {detail}")
        if options.get('record'):
            run = VerificationEngine.record(result)
            self.stdout.write(f"Recorded run {run.pk}")
        if result['output']:
            self.stdout.write(f"Report written to {result['output']}")
        summary = f"{subcommand}: {result['rows']} rows, {result['failed']} failed"
        if result['status'] != 'success':
            raise CommandError(summary, returncode=1)
        self.stdout.write(self.style.SUCCESS(summary))

    def _replay(self, path):
        result = VerificationEngine.replay(path)
        for cell in result['drift'][:20]:
            self.stdout.write(f"DRIFT row {cell['index']} {cell['column']}: "
                              f"{cell['expected']!r} -> {cell['actual']!r}")
        if result['status'] != 'success':
            raise CommandError(f"replay of {path}: {len(result['drift'])} cells drifted", returncode=1)
        self.stdout.write(self.style.SUCCESS(f"replay of {path}: bitwise identical"))
