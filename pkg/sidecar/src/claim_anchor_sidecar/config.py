from dataclasses import dataclass

MODES = ("rerank_scores", "embed")


@dataclass(frozen=True)
class SidecarConfig:
    model_id: str = "echo"
    mode: str = "rerank_scores"
    device: str = "cpu"
    max_batch: int = 32
    echo_dim: int = 32  # embedding dimension of the built-in test model
    deterministic: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.echo_dim < 1:
            raise ValueError("echo_dim must be >= 1")
