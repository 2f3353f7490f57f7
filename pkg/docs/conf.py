"""Sphinx configuration."""
from datetime import datetime

year = datetime.now().year

project = "ssbgp"
author = "ssbgp developers"
copyright = f"{year}, {author}"
extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.napoleon",
    "myst_parser",
]
autodoc_typehints = "description"
html_theme = "pydata_sphinx_theme"
exclude_patterns = ["site/*"]
