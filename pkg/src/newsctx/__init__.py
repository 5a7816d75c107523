"""News article retrieval in context for narrative writing.

Pipeline: ingest a hyperlinked news corpus, derive (incomplete-narrative
query, relevant article) pairs from in-body links, retrieve candidates with
BM25 under a publish-before-query-time filter, rerank with recency and a
semantic scorer fused by reciprocal ranks, and evaluate with MRR/recall.
"""

__version__ = "0.1.0"
