"""HTTP service wrapping the core package; the CLI calls the same handlers.

``create_app`` is imported lazily so that CLI runs that never touch the
server do not pay the web-framework import cost.
"""

__all__ = ["create_app"]


def __getattr__(name):
    if name == "create_app":
        from .app import create_app

        return create_app
    raise AttributeError(name)
