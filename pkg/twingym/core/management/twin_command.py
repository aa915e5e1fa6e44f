from collections import defaultdict
import logging
import os
import sys
import time

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from progressbar import ProgressBar, Bar, Percentage, Counter, ETA

from twingym.core.env import ConfigurationError, ContractViolation
from twingym.core.parallel import MIN_CHUNK, configure_default_pool, worker_count
from twingym.utils import ReportError, load_run_config, write_json


logger = logging.getLogger(__name__)

#: exit codes shared by every twingym command
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_UNSTABLE = 3


def parse_int_list(value):
    '''``"32,128,512"`` (or a YAML list) as a list of ints.'''
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        return [int(float(v)) for v in str(value).split(',') if v.strip()]
    except ValueError:
        raise CommandError('Expected a comma-separated list of integers, got %r' % value,
                           returncode=EXIT_USAGE)


class TwinCommand(BaseCommand):
    '''Local extension of :class:`django.core.management.base.BaseCommand`
    with the option handling, report writing and exit codes shared by the
    twingym commands.

    Option values resolve as: command-line flag, then ``--config`` file,
    then Django setting, then built-in default.  Flags therefore default to
    ``None`` (or ``False`` for switches) so an unset flag can be told apart.
    '''

    #: short name used for default report file names
    report_name = None
    #: option names a ``--config`` file may set (``-`` or ``_`` separated)
    config_keys = ()
    #: verbosity level; set by :meth:`setup` based on command-line arguments
    verbosity = None
    #: normal verbosity level
    v_normal = 1
    #: values loaded from ``--config``
    config = None
    #: defaultdict to track what has been done
    stats = None
    #: worker threads/processes, ``TWINGYM_WORKERS`` or the cpu count
    workers = None
    #: phase name -> seconds, reported in the ``timing`` sub-object
    timings = None

    def add_arguments(self, parser):
        parser.add_argument('--config', metavar='PATH',
            help='YAML file of option values (flags take precedence)')
        parser.add_argument('--json', metavar='PATH', dest='json_path',
            help='Write the JSON report here (default: a file in TWINGYM_REPORT_DIR)')

    def setup(self, **options):
        '''common setup: verbosity, ``--config`` values, worker pool.'''
        self.verbosity = int(options.get('verbosity', self.v_normal))
        self.stats = defaultdict(int)
        self.timings = {}
        self.config = {}
        if options.get('config'):
            try:
                self.config = load_run_config(options['config'], self.config_keys)
            except ReportError as err:
                raise CommandError(err, returncode=EXIT_USAGE)
        self.workers = worker_count(getattr(settings, 'TWINGYM_WORKERS', None))
        configure_default_pool(self.workers,
                               getattr(settings, 'TWINGYM_MIN_CHUNK', MIN_CHUNK))

    def option(self, options, name, setting=None, default=None):
        '''Resolve an option by precedence.

        :param name: option dest name, e.g. ``backend_a``
        :param setting: Django setting name consulted when neither flag nor
            config file sets the option
        '''
        value = options.get(name)
        if value is not None and value is not False:
            return value
        if name in self.config:
            return self.config[name]
        if setting is not None:
            return getattr(settings, setting, default)
        return default

    def env_setting(self, setting, env_id, default=None):
        '''Per-environment value from a dict-valued setting.'''
        values = getattr(settings, setting, None) or {}
        return values.get(env_id, default)

    def fail(self, message, returncode=EXIT_FAILED):
        raise CommandError(message, returncode=returncode)

    def usage_error(self, err):
        raise CommandError(err, returncode=EXIT_USAGE)

    def run_phase(self, name, fn, *args, **kwargs):
        '''Call ``fn`` and record its wall-clock duration under ``name``.
        Configuration and contract errors become usage errors.'''
        start = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except (ConfigurationError, ContractViolation) as err:
            self.usage_error(err)
        finally:
            self.timings[name] = time.perf_counter() - start

    def timing(self):
        return dict(('%s_seconds' % name, round(seconds, 6))
                    for name, seconds in sorted(self.timings.items()))

    def report_path(self, options, suffix):
        path = options.get('json_path')
        if path:
            return path
        report_dir = getattr(settings, 'TWINGYM_REPORT_DIR', 'reports')
        return os.path.join(report_dir, '%s-%s.json' % (self.report_name, suffix))

    def write_report(self, path, data, **measured):
        '''Write ``data`` with a ``timing`` sub-object holding phase durations
        and any other ``measured`` (non-deterministic) values.'''
        data = dict(data, timing=dict(self.timing(), **measured))
        write_json(path, data)
        if self.verbosity >= self.v_normal:
            self.stdout.write('Report written to %s' % path)
        return path

    def get_progressbar(self, label, total):
        '''Progress bar for ``total`` items, or ``None`` when there is too
        little work or stderr is not a terminal.'''
        if total < 5 or self.verbosity < self.v_normal:
            return None
        isatty = getattr(sys.stderr, 'isatty', None)
        if isatty is None or not isatty():
            return None
        return ProgressBar(widgets=['%s: ' % label, Percentage(),
                                    ' (', Counter(), ')',
                                    Bar(), ETA()],
                           max_value=total).start()
