"""Point groupings for local and inter-group clocks.

Groups come from external label files, seeded k-means, or DBSCAN with its
noise detection. Group centers always live in the 2D embedding, because that
is where clocks are placed and where the spanning tree between groups is
measured.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, InputDataError
from .numstats import as_matrix

# Label value for points no cluster claims. The token "noise" (any case) in a
# labels file maps here; noise points never join a group or shift a center.
NOISE = -1


@dataclass(frozen=True)
class Group:
    id: int
    name: str
    members: tuple[int, ...]
    center: tuple[float, float]


@dataclass(frozen=True)
class GroupingResult:
    """Per-point group ids (NOISE allowed) plus the groups with their centers."""

    labels: np.ndarray
    groups: tuple[Group, ...]
    source: str


@dataclass(frozen=True)
class MstEdges:
    """Minimum spanning tree over group centers: (id_a, id_b, length) triples."""

    edges: tuple[tuple[int, int, float], ...]


def _make_groups(labels: np.ndarray, names: dict[int, str], embedding: np.ndarray) -> tuple[Group, ...]:
    groups = []
    for gid in sorted(names):
        members = tuple(int(i) for i in np.flatnonzero(labels == gid))
        if not members:
            continue
        rows = embedding[list(members)]
        center = (float(rows[:, 0].mean()), float(rows[:, 1].mean()))
        groups.append(Group(gid, names[gid], members, center))
    return tuple(groups)


def _check_embedding(embedding, n: int) -> np.ndarray:
    emb = as_matrix(embedding, name="embedding")
    if emb.shape[1] != 2:
        raise ComputationError(f"embedding must have 2 columns, got {emb.shape[1]}")
    if emb.shape[0] != n:
        raise ComputationError(f"embedding has {emb.shape[0]} rows, expected {n}")
    return emb


def from_labels(tokens, embedding) -> GroupingResult:
    """Group points by user-provided tokens, in first-appearance order.

    The token "noise" (case-insensitive) is reserved for unassigned points.
    """
    tokens = list(tokens)
    emb = as_matrix(embedding, name="embedding")
    if emb.shape[1] != 2:
        raise ComputationError(f"embedding must have 2 columns, got {emb.shape[1]}")
    if len(tokens) != emb.shape[0]:
        raise InputDataError(
            f"{len(tokens)} labels for {emb.shape[0]} points"
        )
    labels = np.full(len(tokens), NOISE, dtype=int)
    ids: dict[str, int] = {}
    for i, token in enumerate(tokens):
        token = str(token)
        if token.lower() == "noise":
            continue
        if token not in ids:
            ids[token] = len(ids)
        labels[i] = ids[token]
    names = {gid: token for token, gid in ids.items()}
    return GroupingResult(labels, _make_groups(labels, names, emb), "external")


def kmeans(data, k: int, seed: int, embedding) -> GroupingResult:
    """Lloyd's iterations from a seeded k-means++ start; no noise labels.

    Empty clusters are repaired by reseeding them with the point farthest
    from its current center. Identical data, k, and seed give identical
    labels. ``data`` may be the high-dimensional matrix or the embedding;
    centers are always computed from ``embedding``.
    """
    arr = as_matrix(data, name="data")
    n = arr.shape[0]
    emb = _check_embedding(embedding, n)
    if k < 1:
        raise InputDataError(f"k must be at least 1, got {k}")
    if k > n:
        raise InputDataError(f"k={k} exceeds the number of points ({n})")

    rng = np.random.default_rng(seed)
    centers = np.empty((k, arr.shape[1]))
    centers[0] = arr[int(rng.integers(n))]
    closest = ((arr - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[c] = arr[idx]
        closest = np.minimum(closest, ((arr - centers[c]) ** 2).sum(axis=1))

    labels = np.full(n, -1, dtype=int)
    for _ in range(300):
        dist = ((arr[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assignment = dist.argmin(axis=1)
        repaired: list[int] = []
        for cid in range(k):
            if not np.any(assignment == cid):
                assigned = dist[np.arange(n), assignment].copy()
                if repaired:  # keep earlier repairs from being stolen
                    assigned[repaired] = -1.0
                far = int(assigned.argmax())
                assignment[far] = cid
                repaired.append(far)
        if np.array_equal(assignment, labels):
            break
        labels = assignment
        for cid in range(k):
            centers[cid] = arr[labels == cid].mean(axis=0)

    names = {cid: str(cid) for cid in range(k)}
    return GroupingResult(labels, _make_groups(labels, names, emb), "kmeans")


def dbscan(data, eps: float, min_pts: int, embedding) -> GroupingResult:
    """Density-reachability clustering; unreachable points stay NOISE.

    Cluster ids follow the order in which core points are first encountered
    over the input point order, so results are deterministic. A point's
    eps-neighborhood includes the point itself.
    """
    arr = as_matrix(data, name="data")
    n = arr.shape[0]
    emb = _check_embedding(embedding, n)
    if eps <= 0:
        raise InputDataError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise InputDataError(f"min_pts must be at least 1, got {min_pts}")

    eps2 = eps * eps
    cache: list[np.ndarray | None] = [None] * n

    def neighbors(i: int) -> np.ndarray:
        if cache[i] is None:
            d2 = ((arr - arr[i]) ** 2).sum(axis=1)
            cache[i] = np.flatnonzero(d2 <= eps2)
        return cache[i]

    labels = np.full(n, NOISE, dtype=int)
    visited = np.zeros(n, dtype=bool)
    cid = 0
    for i in range(n):
        if visited[i]:
            continue
        visited[i] = True
        seeds = neighbors(i)
        if seeds.size < min_pts:
            continue
        labels[i] = cid
        queue = deque(int(j) for j in seeds)
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cid
            if visited[j]:
                continue
            visited[j] = True
            labels[j] = cid
            reach = neighbors(j)
            if reach.size >= min_pts:
                queue.extend(int(r) for r in reach)
        cid += 1

    names = {g: str(g) for g in range(cid)}
    return GroupingResult(labels, _make_groups(labels, names, emb), "dbscan")


class _UnionFind:
    def __init__(self, items):
        self.parent = {item: item for item in items}

    def find(self, item):
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def mst_over_centers(grouping: GroupingResult) -> MstEdges:
    """Kruskal MST over the group centers, with Euclidean edge weights.

    Equal-length edges are taken in order of their (id_a, id_b) pair, so the
    tree is deterministic.
    """
    groups = grouping.groups
    if not groups:
        raise ComputationError("no groups to span")
    centers = {g.id: g.center for g in groups}
    ids = sorted(centers)
    candidates = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            length = math.dist(centers[a], centers[b])
            candidates.append((length, a, b))
    candidates.sort()

    forest = _UnionFind(ids)
    edges = []
    for length, a, b in candidates:
        if forest.union(a, b):
            edges.append((a, b, length))
            if len(edges) == len(ids) - 1:
                break
    return MstEdges(tuple(edges))
