"""Sketch-based slide design guidance engine.

Builds a corpus of slide layouts and binarized diagrams, retrieves layout
and diagram references from freehand sketches, renders layout heat maps,
and recognizes fonts, all served over HTTP to an interactive canvas.
"""

__version__ = "0.1.0"
