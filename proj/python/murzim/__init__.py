"""Python bindings for the murzim session recommender."""

try:
    from ._murzim import (  # type: ignore[attr-defined]
        DataError,
        evaluate,
        ingest,
        recommend,
        score_attributes,
        session_graph,
        train,
        write_synthetic,
    )
except ImportError:  # extension built outside the package (e.g. plain CMake)
    from _murzim import (  # type: ignore[no-redef]
        DataError,
        evaluate,
        ingest,
        recommend,
        score_attributes,
        session_graph,
        train,
        write_synthetic,
    )

__all__ = [
    "DataError",
    "evaluate",
    "ingest",
    "recommend",
    "score_attributes",
    "session_graph",
    "train",
    "write_synthetic",
]
