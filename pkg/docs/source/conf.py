#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# incnet documentation build configuration file.

import os
import sys
sys.path.insert(0, os.path.abspath('../../'))
import mock

MOCK_MODULES = ['h5py', 'mpi4py']
for mod_name in MOCK_MODULES:
    sys.modules[mod_name] = mock.Mock()

extensions = ['sphinx.ext.intersphinx', 'sphinx.ext.mathjax',
              'sphinx.ext.autodoc', 'sphinx.ext.napoleon',
              'sphinx.ext.viewcode']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'incnet'
copyright = '2024, incnet developers'
author = 'incnet developers'

version = '0.1'
release = '0.1.0'

language = None
exclude_patterns = []
pygments_style = 'sphinx'
todo_include_todos = True

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
htmlhelp_basename = 'incnetdoc'

latex_documents = [
    (master_doc, 'incnet.tex', 'incnet Documentation',
     'incnet developers', 'manual'),
]

man_pages = [
    (master_doc, 'incnet', 'incnet Documentation',
     [author], 1)
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'pandas': ('https://pandas.pydata.org/pandas-docs/stable/', None),
    'simpy': ('https://simpy.readthedocs.io/en/latest/', None),
}
