"""Pipeline configuration: one flat record of every stage parameter.

The config is serialized into each run manifest so artifacts carry the
exact parameters that produced them. Loading accepts a partial JSON
object and fills defaults; unknown keys are fatal (they are always
typos) and out-of-range values fail validation up front rather than
deep inside a stage.
"""

import json
from dataclasses import asdict, dataclass, fields


@dataclass
class PipelineConfig:
    # ingest
    per_year_top_cited: int = 2000
    # embedding
    min_count: int = 5
    sgns_dim: int = 100
    sgns_window: int = 5
    sgns_negatives: int = 5
    sgns_epochs: int = 5
    sgns_initial_lr: float = 0.025
    # reduction
    k_neighbors: int = 15
    dim_out: int = 5
    min_dist: float = 0.1
    n_epochs: int = 200
    reducer: str = "neighbor_embedding"
    # clustering
    min_cluster_size: int = 50
    min_samples: int = 50
    catch_all_size_ratio: float = 3.0
    catch_all_dispersion_ratio: float = 1.5
    # keywords and queries
    top_k_keywords: int = 100
    queries_per_topic: int = 50
    query_length: int = 25
    # linking
    results_per_query: int = 100
    n_trees: int = 50
    leaf_capacity: int = 32
    # analytics
    bin_width: float = 0.02
    relatedness_min_weight: float = 1.0
    fractional_counting: bool = True
    # randomness
    seed: int = 0

    def validate(self) -> None:
        positive_ints = (
            "per_year_top_cited", "min_count", "sgns_dim", "sgns_window",
            "sgns_negatives", "sgns_epochs", "k_neighbors", "dim_out",
            "n_epochs", "min_cluster_size", "min_samples", "top_k_keywords",
            "queries_per_topic", "query_length", "results_per_query",
            "n_trees", "leaf_capacity",
        )
        for name in positive_ints:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        positive_reals = (
            "sgns_initial_lr", "min_dist", "catch_all_size_ratio",
            "catch_all_dispersion_ratio", "bin_width", "relatedness_min_weight",
        )
        for name in positive_reals:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"{name} must be positive, got {value!r}")
        if self.reducer not in ("neighbor_embedding", "pca"):
            raise ValueError(f"reducer must be neighbor_embedding or pca, got {self.reducer!r}")
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be at least 2")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        config = cls(**data)
        config.validate()
        return config


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return PipelineConfig.from_dict(data)


def save_config(config: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
