"""Multi-agent query-resolution engine.

Interpret a vague query into clues, generate an analysis script, validate and
repair it through a critic debate loop, execute it in a sandbox, and produce
an expert report.
"""

__version__ = "0.1.0"
