from dataclasses import dataclass

MAX_SEQUENCE_LENGTH = 512


@dataclass(frozen=True)
class AdapterConfig:
    """Server configuration.

    ``model``: "stub" for the deterministic no-download model, otherwise
    a model identifier handed to the transformers loader. ``mode`` must
    match the underlying model's capability ("mlm" for fill-mask
    encoders, "clm" for left-to-right generators).
    """

    model: str = "stub"
    mode: str = "mlm"
    top_k: int = 10
    listen: str | None = None  # "host:port"; None means stdio
    max_len: int = MAX_SEQUENCE_LENGTH

    def __post_init__(self):
        if self.mode not in ("mlm", "clm"):
            raise ValueError(f"mode must be 'mlm' or 'clm', not {self.mode!r}")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
