"""Handwritten-glyph recognition with window-based descriptors.

Subpackages: image primitives (`imagecore`), the five descriptors
(`descriptors`), the overlapping spatial partitioning (`pyramid`),
classifiers and tuning (`classifiers`), datasets (`dataset`), form
digitization (`formproc`), and the experiment harness (`harness`).
"""

from . import (  # noqa: F401
    classifiers,
    dataset,
    descriptors,
    errors,
    formproc,
    harness,
    imagecore,
    pyramid,
)

__version__ = "0.1.0"
