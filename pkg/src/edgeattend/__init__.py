"""edgeattend: face-recognition attendance for edge devices.

Subsystems: vision types and pixel kernels, centroid tracking, landmark
alignment, the embedding gallery, the recognition pipeline, edge-to-server
event delivery, the attendance server, and an evaluation harness.
"""

__version__ = "0.1.0"
