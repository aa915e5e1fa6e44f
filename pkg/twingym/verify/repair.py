'''Plain-text repair report for a level 3 divergence, laid out with the
section headings a repair prompt embeds verbatim.'''

from twingym.core.rng import derive_stream


CHECKLIST = (
    'Compare the event order of the step with the reference (which update '
    'reads which value, and when).',
    'Check float32 discipline: constants, intermediate products and '
    'conversions must stay 32-bit.',
    'Check reset and rng usage: number and order of draws per reset and per '
    'event.',
    'Check boundary comparisons (< versus <=) at walls, planes and limits.',
    'Replay the last matching state with the action taken and confirm the '
    'divergence reproduces in one step.',
)


def format_value(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_state(state, indent='  '):
    return '\n'.join('%s%s = %s' % (indent, name, format_value(state[name]))
                     for name in state)


def repair_text(report, action_labels=()):
    '''Text rendering of a :class:`~twingym.verify.rollout.DivergenceReport`.'''
    k = report.step_index
    stream = derive_stream(report.base_seed, report.episode_index)
    lines = [
        'Level 3 rollout comparison failed at step %d.' % k,
        '',
        'Divergence:',
        '  Episode: %d (seed stream %d, counter %d)' % (report.episode_index,
                                                          report.base_seed, stream.counter),
        '  Field: %s' % report.field_path,
        '  %s: %s' % (report.backend_a, format_value(report.value_a)),
        '  %s: %s' % (report.backend_b, format_value(report.value_b)),
        '  Mode: %s' % report.mode.label,
    ]
    for diff in report.diffs[1:]:
        lines.append('  Also differs: %s (%s vs %s)' % (
            diff['field'], format_value(diff['value_a']), format_value(diff['value_b'])))
    lines.append('')

    if k == 0:
        lines.extend([
            'State at step 0 (last matching): none, the reset observations differ.',
            '',
            'Action taken at step 0: none (reset)',
            '',
            'No steps matched.',
        ])
    else:
        action = report.action_taken
        label = ''
        if action_labels and 0 <= action < len(action_labels):
            label = ' (%s)' % action_labels[action]
        lines.extend([
            'State at step %d (last matching):' % (k - 1),
            format_state(report.last_matching_state),
            '',
            'Action taken at step %d: %d%s' % (k, action, label),
            '',
            'All steps 0-%d matched.' % (k - 1),
        ])
    lines.append('')
    lines.append('Diagnosis checklist:')
    lines.extend('  - %s' % item for item in CHECKLIST)
    return '\n'.join(lines) + '\n'
