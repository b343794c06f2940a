"""Moving-load dynamics of simply supported skew bridge decks."""

__version__ = "0.1.0"
