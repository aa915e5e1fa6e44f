'''
Merge JSON reports into a markdown verification summary::

    python manage.py report reports/verify-pong.json reports/transfer-pong.json
    python manage.py report reports/*.json --output summary.md

Accepts reports written by ``verify`` (including ``verify --mutants``),
``transfer`` and ``bench``.  When two reports cover the same environment
the later one on the command line wins, with a warning.

Exit status: 0 summary written, 2 no input files or an unreadable,
malformed or unrecognized report.

----
'''
import logging
import os

from django.core.management.base import CommandError

from twingym.core.management.twin_command import EXIT_USAGE, TwinCommand
from twingym.reports.summary import summarize_reports
from twingym.utils import ReportError

logger = logging.getLogger(__name__)


class Command(TwinCommand):
    '''Print a markdown summary of one or more JSON reports.'''
    help = __doc__

    report_name = 'summary'

    def add_arguments(self, parser):
        parser.add_argument('paths', nargs='*', metavar='REPORT',
            help='JSON reports written by verify, transfer or bench')
        parser.add_argument('--output', '-o', metavar='PATH',
            help='Also write the markdown summary to this file')

    def handle(self, *paths, **options):
        self.verbosity = int(options.get('verbosity', self.v_normal))
        paths = list(paths) or list(options.get('paths') or [])
        try:
            summary = summarize_reports(paths)
        except ReportError as err:
            raise CommandError(err, returncode=EXIT_USAGE)

        for message in summary.warnings:
            self.stderr.write('Warning: %s' % message)
        text = summary.to_markdown()
        self.stdout.write(text, ending='')

        output = options.get('output')
        if output:
            directory = os.path.dirname(output)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(output, 'w', encoding='utf-8') as outfile:
                outfile.write(text)
            if self.verbosity >= self.v_normal:
                self.stdout.write('Summary written to %s' % output)
