"""Symmetric general linear methods: registry, verification and long-time integration."""

__version__ = "0.1.0"
