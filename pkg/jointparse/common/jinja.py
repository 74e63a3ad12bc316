"""
.. module: jointparse.common.jinja
    :platform: Unix

.. version:: $$VERSION$$

"""

import os.path
import jinja2

templates = "templates"


def percent(value):
    return "{:.2f}".format(value)


def get_jinja_env():
    """
    Returns a Jinja environment with a FileSystemLoader for our templates
    """
    directory = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    templates_directory = os.path.join(directory, templates)
    jinja_environment = jinja2.Environment(loader=jinja2.FileSystemLoader(templates_directory),
                                           keep_trailing_newline=True)
    jinja_environment.filters['percent'] = percent
    return jinja_environment
