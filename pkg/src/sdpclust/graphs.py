"""Sparse simple graphs, SBM benchmark generation, 2-core reduction,
neighborhood-clique perturbation and edge-list I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


class InvalidParameterError(ValueError):
    """Raised when SBM / operation parameters are out of their valid range."""


class EdgeListParseError(ValueError):
    """Raised on malformed edge-list files; carries the offending line number."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _canonical_edges(edges):
    """Return edges as an (m, 2) int64 array with i<j, lexicographically sorted."""
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    order = np.lexsort((hi, lo))
    return np.column_stack((lo[order], hi[order]))


@dataclass
class Graph:
    """Immutable simple undirected graph in edge-list form.

    Edges are stored canonically (i<j, sorted); CSR adjacency and degrees are
    built lazily and cached. Instances are treated as read-only after
    construction and are safe to share across threads.
    """

    n: int
    edges: np.ndarray
    _csr: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.edges = _canonical_edges(self.edges)
        self.validate()

    def validate(self):
        if self.n < 0:
            raise InvalidParameterError("vertex count must be non-negative")
        if self.edges.shape[0]:
            if self.edges.min() < 0 or self.edges.max() >= self.n:
                raise InvalidParameterError("edge endpoint out of range")
            if np.any(self.edges[:, 0] == self.edges[:, 1]):
                raise InvalidParameterError("self-loop in edge list")
            if self.edges.shape[0] > 1:
                dup = np.all(self.edges[1:] == self.edges[:-1], axis=1)
                if np.any(dup):
                    raise InvalidParameterError("duplicate edge in edge list")

    @property
    def n_edges(self):
        return self.edges.shape[0]

    def _build_csr(self):
        u, v = self.edges[:, 0], self.edges[:, 1]
        src = np.concatenate((u, v))
        dst = np.concatenate((v, u))
        order = np.lexsort((dst, src))  # sorted neighbor lists, deterministic
        indices = dst[order]
        counts = np.bincount(src, minlength=self.n).astype(np.int64)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self._csr = (indptr, indices, counts)

    @property
    def csr(self):
        """(indptr, indices, degrees) adjacency in CSR layout."""
        if self._csr is None:
            self._build_csr()
        return self._csr

    @property
    def degrees(self):
        return self.csr[2]

    def neighbors(self, i):
        indptr, indices, _ = self.csr
        return indices[indptr[i]:indptr[i + 1]]


@dataclass(frozen=True)
class PlantedPartition:
    """Ground-truth +-1 labels; used only for scoring, never by solvers."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        object.__setattr__(self, "labels", labels)
        if not np.all(np.abs(labels) == 1):
            raise InvalidParameterError("partition labels must be +-1")

    @property
    def n(self):
        return self.labels.shape[0]


@dataclass(frozen=True)
class SbmParams:
    """Planted-partition parameters: intra/inter expected-degree coefficients."""

    n: int
    c_in: float
    c_out: float
    q: int = 2

    def __post_init__(self):
        if self.n <= 0:
            raise InvalidParameterError("n must be positive")
        if self.q != 2:
            raise InvalidParameterError("only q=2 is supported")
        if self.n % self.q:
            raise InvalidParameterError("n must be divisible by the group count")
        for name, value in (("c_in", self.c_in), ("c_out", self.c_out)):
            if value < 0:
                raise InvalidParameterError(f"{name} must be non-negative")
            if value / self.n > 1.0:
                raise InvalidParameterError(
                    f"{name}/n = {value / self.n:.4g} exceeds 1 (not a probability)"
                )

    @property
    def mean_degree(self):
        return (self.c_in + (self.q - 1) * self.c_out) / self.q

    @property
    def snr(self):
        c = self.mean_degree
        if c == 0:
            return 0.0
        return (self.c_in - self.c_out) / (self.q * math.sqrt(c))


def params_from_snr(n, c, snr, q=2):
    """Invert (mean degree, signal-to-noise) into (c_in, c_out).

    For q=2: c_in = c + snr*sqrt(c), c_out = c - snr*sqrt(c); requires
    snr <= sqrt(c) so that c_out stays non-negative.
    """
    if c <= 0:
        raise InvalidParameterError("mean degree c must be positive")
    c_out = c - snr * math.sqrt(c)
    c_in = c + (q - 1) * snr * math.sqrt(c)
    if c_out < 0:
        raise InvalidParameterError(
            f"snr={snr} exceeds sqrt(c)={math.sqrt(c):.4g}: c_out would be negative"
        )
    return SbmParams(n=n, c_in=c_in, c_out=c_out, q=q)


# ---------------------------------------------------------------------------
# SBM generation via geometric skipping over the pair sequence
# ---------------------------------------------------------------------------

def _sample_pair_positions(n_pairs, prob, rng):
    """Indices of a Bernoulli(prob) subset of range(n_pairs), via geometric jumps."""
    if n_pairs <= 0 or prob <= 0.0:
        return np.empty(0, dtype=np.int64)
    if prob >= 1.0:
        return np.arange(n_pairs, dtype=np.int64)
    chunks = []
    pos = -1
    while pos < n_pairs - 1:
        size = int((n_pairs - 1 - pos) * prob * 1.2) + 32
        steps = rng.geometric(prob, size=size).astype(np.int64)
        hits = pos + np.cumsum(steps)
        chunks.append(hits)
        pos = int(hits[-1])
    hits = np.concatenate(chunks)
    return hits[hits < n_pairs]


def _triangular_unrank(t, g):
    """Map linear indices t over the i<j pairs of range(g) back to (i, j)."""
    t = t.astype(np.float64)
    b = 2.0 * g - 1.0
    i = np.floor((b - np.sqrt(b * b - 8.0 * t)) / 2.0).astype(np.int64)
    # guard against float rounding at row boundaries
    for _ in range(2):
        start = i * (2 * g - 1 - i) // 2
        i = np.where(t.astype(np.int64) < start, i - 1, i)
        nxt = (i + 1) * (2 * g - 2 - i) // 2
        i = np.where(t.astype(np.int64) >= nxt, i + 1, i)
    ti = t.astype(np.int64)
    start = i * (2 * g - 1 - i) // 2
    j = ti - start + i + 1
    return i, j


def sbm_generate(params, seed):
    """Draw an SBM graph and its planted balanced partition.

    First n/2 vertex ids get label +1, the rest -1 (edge sampling already
    randomizes structure, so ids are not shuffled). Each unordered pair is
    present independently with probability c_in/n (intra) or c_out/n (inter).
    Deterministic for a fixed seed.
    """
    n = params.n
    half = n // 2
    p_in = params.c_in / n
    p_out = params.c_out / n
    rng = np.random.default_rng(seed)

    parts = []
    g = half
    n_intra = g * (g - 1) // 2
    # group A intra edges
    t = _sample_pair_positions(n_intra, p_in, rng)
    i, j = _triangular_unrank(t, g)
    parts.append(np.column_stack((i, j)))
    # group B intra edges
    t = _sample_pair_positions(n_intra, p_in, rng)
    i, j = _triangular_unrank(t, g)
    parts.append(np.column_stack((i + half, j + half)))
    # inter edges: pair t -> (t // half, half + t % half)
    t = _sample_pair_positions(half * half, p_out, rng)
    parts.append(np.column_stack((t // half, half + t % half)))

    edges = np.concatenate(parts, axis=0)
    labels = np.concatenate(
        (np.ones(half, dtype=np.int8), -np.ones(n - half, dtype=np.int8))
    )
    return Graph(n=n, edges=edges), PlantedPartition(labels=labels)


# ---------------------------------------------------------------------------
# 2-core reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttachmentForest:
    """Bookkeeping from 2-core pruning.

    ``attachment[v]`` is the original id of the core vertex the pruned tree
    containing v hangs from, or -1 if v's whole component peeled away.
    ``core_index`` maps original ids to dense core ids (-1 for pruned);
    ``core_vertices`` is the inverse map.
    """

    in_core: np.ndarray
    attachment: np.ndarray
    core_index: np.ndarray
    core_vertices: np.ndarray

    @property
    def n_core(self):
        return self.core_vertices.shape[0]


def two_core(g):
    """Peel degree-<=1 vertices recursively; return the re-indexed core
    and the attachment forest for the pruned trees."""
    n = g.n
    indptr, indices, deg0 = g.csr
    deg = deg0.copy()
    alive = np.ones(n, dtype=bool)
    parent = np.full(n, -1, dtype=np.int64)

    stack = list(np.flatnonzero(deg <= 1))
    while stack:
        v = stack.pop()
        if not alive[v]:
            continue
        alive[v] = False
        for u in indices[indptr[v]:indptr[v + 1]]:
            if alive[u]:
                parent[v] = u  # unique surviving neighbor at removal time
                deg[u] -= 1
                if deg[u] <= 1:
                    stack.append(u)

    core_vertices = np.flatnonzero(alive)
    core_index = np.full(n, -1, dtype=np.int64)
    core_index[core_vertices] = np.arange(core_vertices.shape[0])

    # compress pruned-tree paths to the surviving core vertex
    attachment = np.where(alive, np.arange(n), -1)

    def resolve(v):
        chain = []
        while not alive[v]:
            if attachment[v] != -1 or parent[v] == -1:
                break
            chain.append(v)
            v = parent[v]
        root = v if alive[v] else attachment[v]
        for u in chain:
            attachment[u] = root
        return root

    for v in range(n):
        if not alive[v] and attachment[v] == -1 and parent[v] != -1:
            resolve(v)
    attachment[alive] = -1  # core vertices carry no attachment

    mask = alive[g.edges[:, 0]] & alive[g.edges[:, 1]]
    core_edges = core_index[g.edges[mask]]
    core = Graph(n=core_vertices.shape[0], edges=core_edges)
    forest = AttachmentForest(
        in_core=alive,
        attachment=attachment,
        core_index=core_index,
        core_vertices=core_vertices,
    )
    return core, forest


def extend_labels_to_trees(core_labels, forest):
    """Propagate core labels to pruned vertices through their attachment.

    Vertices of components that peeled away entirely (no core attachment)
    get the deterministic placeholder label +1.
    """
    core_labels = np.asarray(core_labels, dtype=np.int8)
    if core_labels.shape[0] != forest.n_core:
        raise InvalidParameterError("core label length does not match core size")
    n = forest.in_core.shape[0]
    full = np.ones(n, dtype=np.int8)
    full[forest.core_vertices] = core_labels
    pruned = np.flatnonzero(~forest.in_core)
    att = forest.attachment[pruned]
    has_att = att >= 0
    if np.any(has_att) and not np.all(forest.in_core[att[has_att]]):
        raise RuntimeError("attachment points to a non-core vertex")
    full[pruned[has_att]] = core_labels[forest.core_index[att[has_att]]]
    return full


# ---------------------------------------------------------------------------
# neighborhood-clique perturbation
# ---------------------------------------------------------------------------

def add_neighborhood_cliques(g, p, seed):
    """For each vertex independently with probability p, add all missing
    edges among its neighbor set (neighborhoods taken from the input graph).
    Vertex set unchanged; never removes edges."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError("clique probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    selected = np.flatnonzero(rng.random(g.n) < p)
    if selected.size == 0:
        return g
    existing = set(map(tuple, g.edges.tolist()))
    new_edges = []
    for v in selected:
        nbrs = g.neighbors(v)
        for a, b in combinations(nbrs.tolist(), 2):
            key = (a, b) if a < b else (b, a)
            if key not in existing:
                existing.add(key)
                new_edges.append(key)
    if not new_edges:
        return g
    edges = np.concatenate((g.edges, np.array(new_edges, dtype=np.int64)))
    return Graph(n=g.n, edges=edges)


# ---------------------------------------------------------------------------
# edge-list I/O
# ---------------------------------------------------------------------------

def save_edge_list(path, g, partition=None):
    """Write the plain-text edge-list format (optionally with labels)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# n={g.n} m={g.n_edges}\n")
        if partition is not None:
            if partition.n != g.n:
                raise InvalidParameterError("partition length does not match graph")
            fh.write("# labels\n")
            for s in partition.labels:
                fh.write(f"{'+1' if s > 0 else '-1'}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")


def load_edge_list(path):
    """Parse the edge-list format; returns (Graph, PlantedPartition | None)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise EdgeListParseError("empty file", 1)
    header = lines[0].strip()
    if not header.startswith("#"):
        raise EdgeListParseError("missing '# n=<N> m=<M>' header", 1)
    try:
        fields = dict(tok.split("=") for tok in header[1:].split())
        n = int(fields["n"])
        m = int(fields["m"])
    except (ValueError, KeyError) as exc:
        raise EdgeListParseError(f"bad header: {exc}", 1) from None

    pos = 1
    labels = None
    if pos < len(lines) and lines[pos].strip() == "# labels":
        pos += 1
        vals = np.empty(n, dtype=np.int8)
        for k in range(n):
            line_no = pos + k + 1
            if pos + k >= len(lines):
                raise EdgeListParseError("truncated label block", line_no)
            tok = lines[pos + k].strip()
            if tok not in ("+1", "-1", "1"):
                raise EdgeListParseError(f"bad label {tok!r}", line_no)
            vals[k] = 1 if tok in ("+1", "1") else -1
        labels = PlantedPartition(labels=vals)
        pos += n

    edges = np.empty((m, 2), dtype=np.int64)
    seen = set()
    for k in range(m):
        line_no = pos + k + 1
        if pos + k >= len(lines):
            raise EdgeListParseError("truncated edge block", line_no)
        toks = lines[pos + k].split()
        if len(toks) != 2:
            raise EdgeListParseError("expected 'i j'", line_no)
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError:
            raise EdgeListParseError("non-integer endpoint", line_no) from None
        if i == j:
            raise EdgeListParseError(f"self-loop {i} {j}", line_no)
        if not (0 <= i < n and 0 <= j < n):
            raise EdgeListParseError(f"endpoint out of range: {i} {j}", line_no)
        if i > j:
            raise EdgeListParseError(f"edges must satisfy i<j: {i} {j}", line_no)
        if (i, j) in seen:
            raise EdgeListParseError(f"duplicate edge {i} {j}", line_no)
        seen.add((i, j))
        edges[k] = (i, j)
    g = Graph(n=n, edges=edges)
    return g, labels
