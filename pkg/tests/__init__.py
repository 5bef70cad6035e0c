"""Test suites for orpheus-score."""
