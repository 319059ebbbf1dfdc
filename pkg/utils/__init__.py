"""Utility modules for the Hardy projection toolkit: console, ledger, file I/O and sampling."""
