"""Botnet detection from traffic and DNS logs.

Combines a DGA domain classifier, SOM traffic clustering, DNS-history
fast-flux heuristics and file-backed threat intel into a knowledge graph
whose connected components characterize botnets.
"""

__version__ = "0.1.0"
