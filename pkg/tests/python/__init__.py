"""Tests for the shared logging and settings helpers."""
