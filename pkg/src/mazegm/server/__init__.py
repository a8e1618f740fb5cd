from .app import create_app, offline_app

__all__ = ["create_app", "offline_app"]
