"""Science-technology linkage pipeline.

Publications are embedded, clustered into topics, described by ranked
keywords, and linked to patents through keyword-query search over an
approximate nearest-neighbor index.
"""

__version__ = "1.0.0"
