import json
import logging
import os

import yaml


logger = logging.getLogger(__name__)


class ReportError(Exception):
    '''A report or config file could not be read.'''
    pass


def dumps(data):
    '''Canonical JSON text for a report: sorted keys, two-space indent,
    trailing newline.'''
    return json.dumps(data, sort_keys=True, indent=2) + '\n'


def write_json(path, data):
    '''Write ``data`` as canonical JSON to ``path``, creating the parent
    directory if needed.

    :param path: full path of the output file
    :param data: json-serializable report data
    :returns: the path written
    '''
    dirname = os.path.dirname(path)
    if dirname and not os.path.isdir(dirname):
        os.makedirs(dirname)
    with open(path, 'w') as outfile:
        outfile.write(dumps(data))
    logger.debug('wrote %s', path)
    return path


def load_report(path):
    '''Load a JSON report.  Missing files and malformed JSON both raise
    :class:`ReportError` naming the file.

    :param path: report file
    :returns: the decoded report, which must be a JSON object
    '''
    try:
        with open(path) as infile:
            data = json.load(infile)
    except (IOError, OSError) as err:
        raise ReportError('%s: %s' % (path, err))
    except ValueError as err:
        raise ReportError('%s: malformed JSON (%s)' % (path, err))
    if not isinstance(data, dict):
        raise ReportError('%s: expected a JSON object' % path)
    return data


def load_run_config(path, known_keys):
    '''Load a YAML run configuration for a command.

    :param path: YAML file; an empty file is an empty config
    :param known_keys: option names the command accepts, ``_`` separated
        (keys in the file may use ``-``); any other top-level key is an error
    :returns: dict of option values
    '''
    try:
        with open(path) as infile:
            data = yaml.safe_load(infile)
    except (IOError, OSError) as err:
        raise ReportError('%s: %s' % (path, err))
    except yaml.YAMLError as err:
        raise ReportError('%s: malformed YAML (%s)' % (path, err))
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ReportError('%s: expected a mapping of option names' % path)
    options = dict((str(key).replace('-', '_'), value) for key, value in data.items())
    unknown = sorted(set(options) - set(known_keys))
    if unknown:
        raise ReportError('%s: unknown option(s) %s' % (path, ', '.join(unknown)))
    return options
