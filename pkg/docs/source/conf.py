import importlib.metadata

# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------

project = "smld"
copyright = "2026, smld developers"
author = "smld developers"
release = importlib.metadata.version("smld")

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosectionlabel",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
]
numfig = True

templates_path = ["_templates"]

# -- Options for HTML output -------------------------------------------------

html_theme = "furo"
