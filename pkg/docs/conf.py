# pylint: disable=invalid-name

import sys
from importlib import metadata
from pathlib import Path

DOCS_PATH = Path(__file__).parent
EXTENSIONS_PATH = DOCS_PATH / "_extensions"

sys.path.append(str(EXTENSIONS_PATH))


##
# Project Metadata
##
_project_metadata = metadata.metadata("ellbranch")
project = _project_metadata["Name"]
release = _project_metadata["Version"]
author = "The ellbranch developers"
# pylint: disable=redefined-builtin
copyright = "2026, The ellbranch developers"  # noqa: A001


##
# Global configuration
##
extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
    "sphinx_copybutton",
    "sphinx_inline_tabs",
    "sphinxcontrib.spelling",
    # Internal extensions
    "execute",
]

templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

nitpicky = True
nitpick_ignore_regex = [
    # numpy aliases are not resolvable through intersphinx
    ("py:class", r"(numpy\.)?(typing\.)?NDArray.*"),
    ("py:class", r"np\..*"),
]
suppress_warnings = [
    # See https://github.com/sphinx-doc/sphinx/issues/12589
    "autosummary.import_cycle",
]

html_theme = "furo"
highlight_language = "python3"
pygments_style = "styles.AnsiDefaultStyle"
pygments_dark_style = "styles.AnsiMonokaiStyle"

autosummary_ignore_module_all = False
autosummary_imported_members = True
autosummary_generate = True
autodoc_default_options = {
    "autoclass_content": "class",
    "exclude-members": "__weakref__, __subclasshook__, __init__, __str__",
    "ignore-module-all": False,
    "members": True,
    "show-inheritance": True,
}

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}

rst_prolog = """
.. role:: python(code)
    :language: python
"""

rst_epilog = """
.. _pipx: https://pipx.pypa.io/stable/
.. _pytest: https://docs.pytest.org/en/stable/
.. _numpy: https://numpy.org/
.. _scipy: https://scipy.org/
"""

spelling_show_suggestions = True
spelling_word_list_filename = str(DOCS_PATH / "_spelling_allowlist.txt")
