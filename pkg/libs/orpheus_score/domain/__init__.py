"""Score model and pure transformations. No file or audio I/O here."""
