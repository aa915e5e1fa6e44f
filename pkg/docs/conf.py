# -*- coding: utf-8 -*-
#
# twingym documentation build configuration file

import sys
import os

# before importing twingym, add the project directory to the path
sys.path.append("..")
os.environ['DJANGO_SETTINGS_MODULE'] = 'twingym.settings'

import django
django.setup()

import twingym

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.coverage',
    'sphinx.ext.viewcode',
]

templates_path = ['templates']
source_suffix = '.rst'
master_doc = 'index'

# General information about the project.
project = u'twingym'
copyright = u'2026, twingym contributors'

# The short X.Y version.
version = '%d.%d' % twingym.__version_info__[:2]
# The full version, including alpha/beta/rc tags.
release = twingym.__version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'alabaster'
html_theme_options = {
    'description': '''Twin reference and vectorized RL environments with
      layered equivalence checks and throughput benchmarks'''
}
html_sidebars = {
    '**': ['about.html', 'navigation.html', 'localtoc.html', 'searchbox.html'],
}
htmlhelp_basename = 'twingymdoc'

latex_documents = [
  ('index', 'twingym.tex', u'twingym Documentation', u'twingym contributors', 'manual'),
]
man_pages = [
    ('index', 'twingym', u'twingym Documentation', [u'twingym contributors'], 1)
]

intersphinx_mapping = {
    'django': ('https://docs.djangoproject.com/en/3.2/', 'https://docs.djangoproject.com/en/3.2/_objects/'),
    'python': ('https://docs.python.org/3/', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
}

autodoc_member_order = 'bysource'
