"""Video-imagined humanoid behavior pipeline.

Turns a task instruction plus a third-person scene image into a streamed
humanoid motion command sequence: prompt construction, generation-service
job orchestration, motion estimation adapters, command streaming, and a
kinematic replay simulator.  Every remote service has a deterministic mock
so the full pipeline runs offline.
"""

__version__ = "0.1.0"
