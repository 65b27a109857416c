"""
SIG-VC: zero-shot voice conversion by removing and re-adding speaker
information around one shared speaker information manipulator.
"""

__version__ = "0.1.0"
