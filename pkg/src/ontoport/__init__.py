"""Ontology-based features and cross-course transfer evaluation for
student-performance prediction from LMS event logs."""

__version__ = "0.1.0"
