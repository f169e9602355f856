"""Desk-scale network trace capture, anonymization, archiving and dissemination.

The pipeline: ingest packet records (files or the synthetic source), strip
payloads down to protocol headers, anonymize IPv4 addresses prefix-
preservingly, rotate bounded trace files with metadata sidecars, derive flow
and time-series summaries, manage a tiered-retention catalog, and serve the
archive over an access-controlled HTTP API.
"""

__version__ = "0.1.0"
