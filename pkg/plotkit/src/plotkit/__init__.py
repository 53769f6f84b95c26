"""plotkit: renders figures from oectlink CSV/JSON result files.

Consumes only the documented results schema (no library linkage to the
simulator); every figure can be produced from canned fixture files.
"""

__version__ = "0.1.0"

from .figures import FIGURE_IDS, FigureSpec, render

__all__ = ["FIGURE_IDS", "FigureSpec", "render", "__version__"]
