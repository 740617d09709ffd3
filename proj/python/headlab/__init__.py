"""Headline corpus analytics and a miniature personalised headline generator."""

from ._headlab import (
    HeadlabError,
    __version__,
    buzzwords,
    detokenize,
    lr_at,
    popularity_index,
    psi,
    read_corpus,
    rouge_l,
    rouge_n,
    run_cli,
    similarity,
    synth_corpus,
    tokenize,
)

__all__ = [
    "HeadlabError",
    "__version__",
    "buzzwords",
    "detokenize",
    "lr_at",
    "popularity_index",
    "psi",
    "read_corpus",
    "rouge_l",
    "rouge_n",
    "run_cli",
    "similarity",
    "synth_corpus",
    "tokenize",
]
