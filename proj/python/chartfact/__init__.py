"""Chart caption factuality toolkit (Python bindings)."""

try:
    from . import _chartfact as _ext
except ImportError:  # in-tree build: the extension sits on PYTHONPATH
    import _chartfact as _ext

from_ext = [name for name in dir(_ext) if not name.startswith("_")]
globals().update({name: getattr(_ext, name) for name in from_ext})
__all__ = from_ext
del from_ext
