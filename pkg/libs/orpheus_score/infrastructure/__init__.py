"""Adapters: ABC text, MIDI, WAV, log-mel features and dataset storage."""
