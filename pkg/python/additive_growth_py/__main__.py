"""Main entry point for the additive growth models CLI."""

from .cli import entry_point

if __name__ == "__main__":
    entry_point()
