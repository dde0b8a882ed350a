"""Command-line surface: `python main.py <command> ...`."""
