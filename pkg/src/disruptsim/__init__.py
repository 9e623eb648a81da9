"""Citation-inflation simulations and disruption-index analytics."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .corpus import CitationNetwork, CorpusFilter, load_corpus, write_corpus  # noqa: E402
from .generator import GrowthConfig, build_schedule, grow  # noqa: E402
from .metrics import DisruptionRecord, compute_cd, compute_cd_all  # noqa: E402

__all__ = ["BACKEND", "CitationNetwork", "CorpusFilter", "DisruptionRecord", "GrowthConfig",
           "build_schedule", "compute_cd", "compute_cd_all", "grow", "load_corpus",
           "write_corpus"]
