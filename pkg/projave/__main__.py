"""
python -m projave <subcommand> ...: the management command without manage.py.
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    import django
    from django.core.management import call_command
    from django.core.management.base import CommandError

    django.setup()
    try:
        call_command('projave', *sys.argv[1:])
    except CommandError as e:
        sys.stderr.write(f"{e}\n")
        sys.exit(e.returncode)


if __name__ == '__main__':
    main()
