"""
Evader
Query-budgeted black-box attacks and defenses for image detectors
"""
__version__ = "1.0.0"
