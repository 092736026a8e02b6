"""Figure rendering for mfwaves CSV/JSON outputs.

Figures never recompute statistics: every plotted series and every annotation
value comes verbatim from the files the main toolkit emitted.
"""

__version__ = "0.1.0"

from .figures import FigureSpec, RenderedFigure, SchemaError, render  # noqa: F401
