"""
orpheus-score: ABC notation tooling for audio-to-score datasets.

The package follows a ports-and-adapters layout. ``domain`` holds the score
model and the pure transformations (normalizing, augmenting, tokenizing,
scoring); ``infrastructure`` holds the ABC, MIDI, WAV and feature codecs
plus file storage; ``application`` wires them into the use cases the
``cli`` module exposes.
"""

__version__ = "0.1.0"
