"""Game-master engine for a labyrinth-crawl tabletop RPG."""

__version__ = "0.1.0"
