"""Tests for the orpheus_score package."""
