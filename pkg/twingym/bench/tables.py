'''Aligned text tables for throughput reports.'''


def speedup(report, baseline):
    if baseline is None or not baseline.mean_sps:
        return None
    return report.mean_sps / baseline.mean_sps


def format_sps(value):
    return '{:,.0f}'.format(value)


def throughput_rows(reports, baseline=None):
    '''Table rows: backend, batch, mean +/- std SPS, cv, speedup versus
    ``baseline`` and an unstable flag.'''
    rows = []
    for report in reports:
        ratio = speedup(report, baseline)
        rows.append([
            report.backend_id,
            str(report.batch_size),
            '%s +/- %s' % (format_sps(report.mean_sps), format_sps(report.std_sps)),
            '%.1f%%' % (100 * report.cv),
            '-' if ratio is None else '%.2fx' % ratio,
            '' if report.stable else 'unstable',
        ])
    return rows


def align(header, rows):
    widths = [max(len(str(row[i])) for row in [header] + rows) for i in range(len(header))]
    lines = ['  '.join(str(cell).ljust(width) for cell, width in zip(row, widths)).rstrip()
             for row in [header] + rows]
    lines.insert(1, '  '.join('-' * width for width in widths).rstrip())
    return '\n'.join(lines)


def throughput_table(reports, baseline=None):
    header = ['backend', 'batch', 'SPS (mean +/- std)', 'cv', 'speedup', '']
    rows = throughput_rows(reports, baseline)
    if baseline is not None:
        first = throughput_rows([baseline])[0]
        first[4] = 'baseline'
        rows.insert(0, first)
    return align(header, rows)


def breakdown_table(reports):
    header = ['backend', 'batch', 'params', 'env %', 'policy %']
    rows = [[r.backend_id, str(r.batch_size), '{:,}'.format(r.synthetic_param_count),
             '%.1f' % (100 * r.env_time_fraction), '%.1f' % (100 * r.policy_time_fraction)]
            for r in reports]
    return align(header, rows)
