from io import StringIO
import os
import shutil
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from twingym.bench.throughput import ThroughputReport
from twingym.core.management.twin_command import EXIT_USAGE
from twingym.reports.summary import (CHECK, CROSS, Summary, mode_label,
    rollout_cell, summarize_reports)
from twingym.utils import ReportError, write_json


def verify_report(env_id, status='pass', l3=None, mode=None):
    return {
        'command': 'verify',
        'env': env_id,
        'status': status,
        'episodes': 100,
        'mode': mode or {'kind': 'exact', 'epsilon': 0.0},
        'phases': {
            'L1': {'status': 'pass', 'cases': 12},
            'L2': {'status': 'pass', 'cases': 4},
            'L3': l3 or {'status': 'pass', 'episodes': 100},
        },
    }


def transfer_report(env_id, equivalent=True):
    return {
        'command': 'transfer',
        'env': env_id,
        'status': 'pass' if equivalent else 'fail',
        'margin_delta': 25.0,
        'alpha': 0.05,
        'rows': [{'train_backend': '%s-ref' % env_id, 'equivalent': equivalent,
                  'eval_perf_mean': 498.5, 'eval_perf_std': 2.25,
                  'eval_ref_mean': 497.75, 'eval_ref_std': 3.5}],
    }


def bench_report():
    def row(backend_id, batch_size, sps):
        return ThroughputReport(backend_id, batch_size, 100, [sps, sps], sps, 0.0,
                                0.0, 100).to_dict()
    return {'command': 'bench', 'env': 'pong', 'baseline': row('pong-ref', 64, 1000.0),
            'rows': [row('pong-perf', 512, 250000.0)]}


def mutants_report():
    return {'command': 'mutants', 'status': 'fail', 'episodes': 10, 'base_seed': 0,
            'mutants': [
                {'id': 'pong-wall-sign', 'bug_class': 'sign error',
                 'expected_catch_level': 'L1', 'caught_level': 'L1', 'status': 'ok'},
                {'id': 'pong-vx-decay', 'bug_class': 'accumulated drift',
                 'expected_catch_level': 'L3', 'caught_level': None,
                 'status': 'kill-gap'}]}


class SummaryTest(SimpleTestCase):

    def test_rows(self):
        summary = Summary()
        summary.add('a.json', verify_report('pong'))
        summary.add('b.json', transfer_report('pong'))
        summary.add('c.json', verify_report('cartpole', mode={'kind': 'epsilon',
                                                             'epsilon': 1e-5}))
        self.assertEqual([['pong', '12 %s' % CHECK, '4 %s' % CHECK, '100 %s' % CHECK,
                           'exact', CHECK, CHECK],
                          ['cartpole', '12 %s' % CHECK, '4 %s' % CHECK, '100 %s' % CHECK,
                           'epsilon (1e-05)', '-', CHECK]],
                         summary.rows())

    def test_failed_rollout(self):
        l3 = {'status': 'fail', 'episode_index': 3, 'step_index': 41}
        summary = Summary()
        summary.add('a.json', verify_report('pong', status='fail', l3=l3))
        row = summary.rows()[0]
        self.assertEqual('100 %s (ep. 3, step 41)' % CROSS, row[3])
        self.assertEqual(CROSS, row[-1])

    def test_cells(self):
        self.assertEqual('-', rollout_cell({'status': 'skipped'}, 100))
        self.assertEqual('-', rollout_cell(None, 100))
        self.assertEqual('-', mode_label(None))

    def test_later_report_wins(self):
        summary = Summary()
        summary.add('old.json', verify_report('pong'))
        summary.add('new.json', verify_report('pong', status='fail'))
        self.assertEqual(1, len(summary.rows()))
        self.assertEqual(CROSS, summary.rows()[0][-1])
        self.assertEqual(1, len(summary.warnings))
        self.assertIn('new.json', summary.warnings[0])

    def test_transfer_failure(self):
        summary = Summary()
        summary.add('a.json', verify_report('cartpole'))
        summary.add('b.json', transfer_report('cartpole', equivalent=False))
        self.assertEqual([CROSS, CROSS], summary.rows()[0][-2:])

    def test_markdown_sections(self):
        summary = Summary()
        summary.add('a.json', verify_report('pong'))
        summary.add('b.json', transfer_report('pong'))
        summary.add('c.json', bench_report())
        summary.add('d.json', mutants_report())
        text = summary.to_markdown()
        self.assertTrue(text.startswith('# Verification summary'))
        self.assertIn('| Env | L1 | L2 | L3 ep. | Mode | Xfer | Status |', text)
        self.assertIn('## Transfer: pong (delta 25, alpha 0.05)', text)
        self.assertIn('498.500 +/- 2.250', text)
        self.assertIn('## Throughput', text)
        self.assertIn('250.00x', text)
        self.assertIn('## Mutation matrix', text)
        self.assertIn('| pong-vx-decay | accumulated drift | L3 | - | kill-gap |', text)

    def test_no_environments(self):
        summary = Summary()
        summary.add('c.json', bench_report())
        self.assertIn('No verify or transfer reports.', summary.to_markdown())

    def test_unrecognized(self):
        summary = Summary()
        with self.assertRaises(ReportError):
            summary.add('x.json', {'command': 'train'})
        with self.assertRaises(ReportError):
            summary.add('x.json', {'command': 'verify'})
        with self.assertRaises(ReportError):
            summarize_reports([])


class ReportCommandTest(SimpleTestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='twingym-report')

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def path(self, name, data=None):
        path = os.path.join(self.tmpdir, name)
        if data is not None:
            write_json(path, data)
        return path

    def run_report(self, *paths, **options):
        stdout, stderr = StringIO(), StringIO()
        call_command('report', *paths, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue(), stderr.getvalue()

    def test_summary(self):
        output, errors = self.run_report(self.path('verify-pong.json', verify_report('pong')),
                                         self.path('transfer-pong.json', transfer_report('pong')))
        self.assertIn('| pong | 12 %s |' % CHECK, output)
        self.assertEqual('', errors)

    def test_duplicate_env_warns(self):
        first = self.path('first.json', verify_report('pong'))
        second = self.path('second.json', verify_report('pong', status='fail'))
        output, errors = self.run_report(first, second)
        self.assertIn('Warning:', errors)
        self.assertIn('second.json', errors)
        self.assertEqual(1, output.count('| pong |'))

    def test_output_file(self):
        target = os.path.join(self.tmpdir, 'out', 'summary.md')
        output, _ = self.run_report(self.path('v.json', verify_report('pong')), output=target)
        self.assertIn('Summary written to', output)
        with open(target, encoding='utf-8') as summary:
            self.assertIn('# Verification summary', summary.read())

    def test_no_reports(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_report()
        self.assertEqual(EXIT_USAGE, ctx.exception.returncode)

    def test_malformed(self):
        path = self.path('broken.json')
        with open(path, 'w') as broken:
            broken.write('{"command": ')
        with self.assertRaises(CommandError) as ctx:
            self.run_report(path)
        self.assertEqual(EXIT_USAGE, ctx.exception.returncode)
        self.assertIn('broken.json', str(ctx.exception))

    def test_missing_file(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_report(self.path('absent.json'))
        self.assertEqual(EXIT_USAGE, ctx.exception.returncode)
        self.assertIn('absent.json', str(ctx.exception))
