"""Ledger-backed AAA gateway for the SDN northbound interface."""

__version__ = "0.1.0"
