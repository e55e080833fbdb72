"""Ranking metrics: distance matrices, CMC curves and mean average precision.

Ties in distance are broken by ascending gallery index (stable sort), making
every metric a pure function of the distance matrix and the identity labels.
"""

from __future__ import annotations

import numpy as np

from vtreid.errors import ProtocolError, ShapeError


def distance_matrix(queries: np.ndarray, gallery: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """Q×G distances between query and gallery embedding rows."""
    queries = np.asarray(queries, dtype=np.float64)
    gallery = np.asarray(gallery, dtype=np.float64)
    if queries.ndim != 2 or gallery.ndim != 2:
        raise ShapeError("queries and gallery must be 2-D embedding arrays")
    if queries.shape[1] != gallery.shape[1]:
        raise ShapeError(f"embedding dims differ: {queries.shape[1]} vs {gallery.shape[1]}")
    if metric == "euclidean":
        diff = queries[:, None, :] - gallery[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=2))
    if metric == "cosine":
        qn = np.linalg.norm(queries, axis=1, keepdims=True)
        gn = np.linalg.norm(gallery, axis=1, keepdims=True)
        if np.any(qn == 0) or np.any(gn == 0):
            raise ShapeError("cosine distance is undefined for zero embeddings")
        sims = (queries / qn) @ (gallery / gn).T
        return np.maximum(1.0 - sims, 0.0)
    raise ShapeError(f"unknown metric {metric!r}")


def _check_ranking_inputs(dist: np.ndarray, query_ids: np.ndarray, gallery_ids: np.ndarray) -> tuple:
    dist = np.asarray(dist, dtype=np.float64)
    query_ids = np.asarray(query_ids)
    gallery_ids = np.asarray(gallery_ids)
    if dist.ndim != 2:
        raise ShapeError("distance matrix must be 2-D")
    if dist.shape != (query_ids.shape[0], gallery_ids.shape[0]):
        raise ShapeError(
            f"distance matrix shape {dist.shape} does not match "
            f"{query_ids.shape[0]} queries × {gallery_ids.shape[0]} gallery rows"
        )
    missing = set(query_ids.tolist()) - set(gallery_ids.tolist())
    if missing:
        raise ProtocolError(f"query identities absent from gallery: {sorted(missing)}")
    return dist, query_ids, gallery_ids


def cmc(dist: np.ndarray, query_ids: np.ndarray, gallery_ids: np.ndarray, max_rank: int) -> np.ndarray:
    """Cumulative matching characteristic over ranks 1..max_rank.

    Entry k-1 is the fraction of queries whose nearest k gallery rows contain
    a matching identity. Ranks past the gallery size stay at the final value.
    """
    dist, query_ids, gallery_ids = _check_ranking_inputs(dist, query_ids, gallery_ids)
    if max_rank < 1:
        raise ShapeError(f"max_rank must be >= 1, got {max_rank}")
    n_queries, n_gallery = dist.shape
    first_hit = np.empty(n_queries, dtype=np.int64)
    for qi in range(n_queries):
        order = np.argsort(dist[qi], kind="stable")
        hits = np.flatnonzero(gallery_ids[order] == query_ids[qi])
        first_hit[qi] = hits[0]
    curve = np.zeros(max_rank, dtype=np.float64)
    for rank_index in range(max_rank):
        curve[rank_index] = np.mean(first_hit <= min(rank_index, n_gallery - 1))
    return curve


def mean_average_precision(dist: np.ndarray, query_ids: np.ndarray, gallery_ids: np.ndarray) -> float:
    """Mean over queries of average precision of the ranked gallery.

    Average precision is the mean of the precision values taken at each
    matching gallery row, in ranked order.
    """
    dist, query_ids, gallery_ids = _check_ranking_inputs(dist, query_ids, gallery_ids)
    n_queries = dist.shape[0]
    ap = np.empty(n_queries, dtype=np.float64)
    for qi in range(n_queries):
        order = np.argsort(dist[qi], kind="stable")
        relevant = gallery_ids[order] == query_ids[qi]
        hit_positions = np.flatnonzero(relevant)
        precisions = (np.arange(len(hit_positions)) + 1.0) / (hit_positions + 1.0)
        ap[qi] = precisions.mean()
    return float(ap.mean())
