# Sphinx configuration for the jointparse documentation.
import os
import sys

sys.path.insert(0, os.path.abspath('..'))

extensions = ['sphinx.ext.autodoc']

source_suffix = '.rst'
master_doc = 'index'
exclude_patterns = ['_build']

project = u'jointparse'
copyright = u'2026, The jointparse developers'
version = '0.1'
release = '0.1.0'

pygments_style = 'sphinx'
html_theme = 'default'
