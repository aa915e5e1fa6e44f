from django.test import SimpleTestCase

from twingym.core.env import ComparisonMode, ConfigurationError
from twingym.verify.mutation import (KILL_GAP, OK, WRONG_LEVEL, MutantResult,
    MutantSpec, check_mutant, default_mode, registered_mutants,
    run_mutation_matrix)


class MutationMatrixTest(SimpleTestCase):

    def test_registered(self):
        specs = registered_mutants()
        self.assertEqual(8, len(specs))
        self.assertEqual('pong-wall-sign', specs[0].id)
        self.assertEqual({'L1', 'L2', 'L3'}, set(s.expected_catch_level for s in specs))

    def test_default_mode(self):
        self.assertEqual(ComparisonMode.exact(), default_mode('pong'))
        self.assertEqual(ComparisonMode.within(1e-4), default_mode('cartpole', 1e-4))
        self.assertEqual(ComparisonMode.exact(), default_mode('cartpole',
                                                              modes={'cartpole': 'exact'}))

    def test_every_mutant_caught_at_its_level(self):
        seen = []
        matrix = run_mutation_matrix(episodes=10, progress=seen.append)
        statuses = dict((row.spec.id, (row.caught_level, row.status)) for row in matrix.rows)
        for spec in registered_mutants():
            self.assertEqual((spec.expected_catch_level, OK), statuses[spec.id])
        self.assertTrue(matrix.passed)
        self.assertEqual(list(range(1, 9)), seen)
        data = matrix.to_dict()
        self.assertEqual('mutants', data['command'])
        self.assertEqual('pass', data['status'])

    def test_levels_run_independently(self):
        # an L1 mutant still goes through L2 and L3
        result = check_mutant(registered_mutants()[0], episodes=3)
        self.assertEqual(set(['L1', 'L2', 'L3']), set(result.caught))
        self.assertTrue(result.caught['L1'])
        self.assertEqual(['wall-bottom', 'wall-top'], result.details['L1'])

    def test_status(self):
        spec = MutantSpec('pong-x', 'pong', 'drift', 'test', 'L3')
        self.assertEqual(KILL_GAP, MutantResult(spec, {'L1': False, 'L2': False,
                                                       'L3': False}, {}).status)
        self.assertEqual(WRONG_LEVEL, MutantResult(spec, {'L1': True, 'L2': False,
                                                          'L3': True}, {}).status)
        result = MutantResult(spec, {'L1': False, 'L2': False, 'L3': True}, {})
        self.assertEqual(OK, result.status)
        self.assertEqual('L3', result.to_dict()['caught_level'])

    def test_empty_registry(self):
        with self.assertRaises(ConfigurationError):
            run_mutation_matrix(mutants=[])
