"""Federated language-resource metadata: providers, harvester, catalog search."""

__version__ = "0.1.0"
