'''Merge JSON reports written by the ``verify``, ``transfer`` and ``bench``
commands into one markdown verification summary.

One row per environment with the columns ``Env | L1 | L2 | L3 ep. | Mode |
Xfer | Status``; a throughput table and the mutation matrix follow when
their reports are among the inputs.
'''

from collections import OrderedDict
import logging

from twingym.bench.tables import throughput_table
from twingym.bench.throughput import ThroughputReport
from twingym.utils import ReportError, load_report


logger = logging.getLogger(__name__)

CHECK = '✓'
CROSS = '✗'
MISSING = '-'

SUMMARY_COLUMNS = ['Env', 'L1', 'L2', 'L3 ep.', 'Mode', 'Xfer', 'Status']


def mark(status):
    if status == 'pass':
        return CHECK
    if status == 'fail':
        return CROSS
    return MISSING


def mode_label(mode):
    '''``exact`` or ``epsilon (1e-05)`` from a serialized comparison mode.'''
    if not mode:
        return MISSING
    if mode.get('kind') == 'exact':
        return 'exact'
    return 'epsilon (%g)' % mode['epsilon']


def suite_cell(phase):
    '''Case count and mark for an L1/L2 phase, ``-`` if it did not run.'''
    if not phase or phase.get('status') not in ('pass', 'fail'):
        return MISSING
    return '%d %s' % (phase['cases'], mark(phase['status']))


def rollout_cell(phase, episodes):
    if not phase or phase.get('status') not in ('pass', 'fail'):
        return MISSING
    if phase['status'] == 'pass':
        return '%d %s' % (phase['episodes'], CHECK)
    return '%d %s (ep. %d, step %d)' % (episodes, CROSS, phase['episode_index'],
                                         phase['step_index'])


def markdown_table(header, rows):
    lines = ['| %s |' % ' | '.join(header),
             '|%s|' % '|'.join('---' for _ in header)]
    lines.extend('| %s |' % ' | '.join(str(cell) for cell in row) for row in rows)
    return '\n'.join(lines)


class Summary(object):
    '''Reports grouped by kind; verify and transfer reports are keyed by
    environment, and a later report for the same environment replaces an
    earlier one.'''

    def __init__(self):
        self.verify = OrderedDict()
        self.transfer = OrderedDict()
        self.bench = []
        self.mutants = None
        #: messages about replaced reports
        self.warnings = []

    def add(self, path, data):
        ''':raises ReportError: if ``data`` is not a report this tool emits'''
        command = data.get('command')
        if command in ('verify', 'transfer'):
            if 'env' not in data:
                raise ReportError('%s: %s report without an env' % (path, command))
            self._keyed(getattr(self, command), path, data)
        elif command == 'bench':
            baseline = data.get('baseline')
            self.bench.append((
                ThroughputReport.from_dict(baseline) if baseline else None,
                [ThroughputReport.from_dict(row) for row in data.get('rows', [])]))
        elif command == 'mutants':
            if self.mutants is not None:
                self._warn('%s: replaces an earlier mutation matrix' % path)
            self.mutants = data
        else:
            raise ReportError('%s: not a twingym report (command %r)' % (path, command))

    def _keyed(self, reports, path, data):
        env_id = data['env']
        if env_id in reports:
            self._warn('%s: replaces an earlier %s report for %s' %
                       (path, data['command'], env_id))
            del reports[env_id]
        reports[env_id] = data

    def _warn(self, message):
        logger.warning(message)
        self.warnings.append(message)

    def env_ids(self):
        env_ids = list(self.verify)
        env_ids.extend(e for e in self.transfer if e not in self.verify)
        return env_ids

    def rows(self):
        rows = []
        for env_id in self.env_ids():
            verify = self.verify.get(env_id, {})
            transfer = self.transfer.get(env_id)
            phases = verify.get('phases', {})
            statuses = [verify.get('status')]
            if transfer is not None:
                statuses.append(transfer.get('status'))
            if None in statuses:
                status = MISSING if 'fail' not in statuses else CROSS
            else:
                status = CHECK if all(s == 'pass' for s in statuses) else CROSS
            rows.append([
                env_id,
                suite_cell(phases.get('L1')),
                suite_cell(phases.get('L2')),
                rollout_cell(phases.get('L3'), verify.get('episodes', 0)),
                mode_label(verify.get('mode')),
                mark(transfer.get('status')) if transfer else MISSING,
                status,
            ])
        return rows

    def throughput(self):
        '''Throughput table text for each bench report.'''
        return [throughput_table(reports, baseline) for baseline, reports in self.bench]

    def mutation_rows(self):
        return [[row['id'], row['bug_class'], row['expected_catch_level'],
                 row.get('caught_level') or MISSING, row['status']]
                for row in self.mutants.get('mutants', [])]

    def to_markdown(self):
        sections = ['# Verification summary', '']
        if self.env_ids():
            sections.append(markdown_table(SUMMARY_COLUMNS, self.rows()))
        else:
            sections.append('No verify or transfer reports.')
        for data in self.transfer.values():
            rows = [[row['train_backend'],
                     '%.3f +/- %.3f' % (row['eval_perf_mean'], row['eval_perf_std']),
                     '%.3f +/- %.3f' % (row['eval_ref_mean'], row['eval_ref_std']),
                     CHECK if row['equivalent'] else CROSS]
                    for row in data.get('rows', []) if not row.get('failed_gate')]
            if rows:
                sections.extend(['', '## Transfer: %s (delta %g, alpha %g)' % (
                    data['env'], data['margin_delta'], data['alpha']), '',
                    markdown_table(['Train', 'Eval perf', 'Eval ref', 'Equivalent'], rows)])
        for table in self.throughput():
            sections.extend(['', '## Throughput', '', '```', table, '```'])
        if self.mutants is not None:
            sections.extend(['', '## Mutation matrix', '', markdown_table(
                ['Mutant', 'Class', 'Expected', 'Caught at', 'Status'],
                self.mutation_rows())])
        return '\n'.join(sections) + '\n'


def summarize_reports(paths):
    '''Load and merge the reports at ``paths``, in order.

    :raises ReportError: for an empty list, unreadable or malformed files,
        or JSON that is not one of our reports
    '''
    paths = list(paths)
    if not paths:
        raise ReportError('No report files given')
    summary = Summary()
    for path in paths:
        data = load_report(path)
        try:
            summary.add(path, data)
        except KeyError as err:
            raise ReportError('%s: missing field %s' % (path, err))
    return summary
