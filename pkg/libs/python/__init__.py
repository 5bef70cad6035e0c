"""Shared runtime helpers: environment settings and logfire-backed logging."""
