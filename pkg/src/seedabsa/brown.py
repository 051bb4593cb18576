"""Brown clustering with a bounded active window.

Terms are inserted in frequency order.  The first K terms start as singleton
clusters; every further term enters as a new cluster and then the pair of
active clusters whose merge loses the least average mutual information is
merged.  Once every term is in, the remaining K clusters are merged greedily
down to a single root, which yields the binary merge path of each cluster.

The quantity optimized at each step is the mutual information of adjacent
cluster pairs restricted to the active clusters::

    AMI(S) = sum_{x, y in S} p(x, y) * log(p(x, y) / (pl(x) * pr(y)))

where ``p(x, y)`` is the fraction of within-sentence bigrams going from a term
of ``x`` to a term of ``y`` and ``pl``/``pr`` are the left/right bigram
marginals over the whole corpus.  Terms not yet inserted contribute nothing.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import ClusteringError

log = logging.getLogger(__name__)


@dataclass
class ClusterAssignment:
    """Hard clustering of a vocabulary with binary merge paths.

    ``term_cluster[w]`` indexes ``paths``.  ``merges`` lists every merge as
    ``(left_node, right_node, new_node, gain, phase)`` where nodes below V are
    terms, and ``gain`` is the change in AMI (never positive except for
    rounding).
    """
    term_cluster: np.ndarray
    paths: list
    frequencies: np.ndarray
    insert_order: np.ndarray
    merges: list = field(default_factory=list)
    num_requested: int = 0

    @property
    def num_clusters(self):
        return len(self.paths)

    def path_of(self, term_id):
        return self.paths[self.term_cluster[term_id]]

    def members(self, cluster):
        return np.flatnonzero(self.term_cluster == cluster)

    def node_members(self, node):
        """Term ids under a tree node (a term id or a merge's new node)."""
        V = len(self.term_cluster)
        children = {m[2]: (m[0], m[1]) for m in self.merges}
        out, stack = [], [node]
        while stack:
            n = stack.pop()
            if n < V:
                out.append(n)
            else:
                stack.extend(children[n])
        return sorted(out)


def bigram_counts(corpus):
    """Within-sentence directed bigram counts as ``(left, right, count)`` arrays."""
    V = len(corpus.vocab)
    lefts, rights = [], []
    for s in corpus.sentences:
        t = np.asarray(s.tokens, dtype=np.int64)
        if len(t) > 1:
            lefts.append(t[:-1])
            rights.append(t[1:])
    if not lefts:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z.astype(np.float64)
    keys = np.concatenate(lefts) * V + np.concatenate(rights)
    uniq, cnt = np.unique(keys, return_counts=True)
    return uniq // V, uniq % V, cnt.astype(np.float64)


# -- shared scalar helpers (numba + numpy paths) ------------------------------

@_accel.njit
def _q(c, l, r, n):
    if c <= 0.0:
        return 0.0
    return c / n * np.log(c * n / (l * r))


@_accel.njit
def _w(M, pl, pr, i, k, n):
    return _q(M[i, k], pl[i], pr[k], n) + _q(M[k, i], pl[k], pr[i], n)


@_accel.njit
def _wm(M, pl, pr, i, j, c, n):
    # weight between the would-be union i+j and cluster c
    return (_q(M[i, c] + M[j, c], pl[i] + pl[j], pr[c], n)
            + _q(M[c, i] + M[c, j], pl[c], pr[i] + pr[j], n))


@_accel.njit
def _delta_pair(M, pl, pr, active, i, j, n):
    s = 0.0
    for k in range(M.shape[0]):
        if not active[k] or k == i or k == j:
            continue
        s += _wm(M, pl, pr, i, j, k, n) - _w(M, pl, pr, i, k, n) - _w(M, pl, pr, j, k, n)
    both = M[i, i] + M[i, j] + M[j, i] + M[j, j]
    s += _q(both, pl[i] + pl[j], pr[i] + pr[j], n)
    s -= _q(M[i, i], pl[i], pr[i], n) + _q(M[j, j], pl[j], pr[j], n)
    s -= _q(M[i, j], pl[i], pr[j], n) + _q(M[j, i], pl[j], pr[i], n)
    return s


# gains closer than this are treated as equal, so that rounding noise in the
# incremental updates cannot override the rank tie-break
TIE_TOL = 1e-12


@_accel.njit
def _brown_numba(order, out_ptr, out_idx, out_cnt, pl_w, pr_w, n, K):
    V = order.shape[0]
    S = min(K, V) + 1
    M = np.zeros((S, S))
    L = np.zeros((S, S))
    pl = np.zeros(S)
    pr = np.zeros(S)
    active = np.zeros(S, dtype=np.bool_)
    node = np.full(S, -1, dtype=np.int64)
    rank = np.zeros(S, dtype=np.int64)
    slot_of = np.full(V, -1, dtype=np.int64)
    merges = np.zeros((max(V - 1, 0), 3), dtype=np.int64)
    gains = np.zeros(max(V - 1, 0))
    nmerge = 0
    next_node = V

    ninit = min(K, V)
    for r in range(ninit):
        _insert(order[r], r, r, M, pl, pr, active, node, rank, slot_of,
                out_ptr, out_idx, out_cnt, pl_w, pr_w)
    for i in range(S):
        for j in range(i + 1, S):
            if active[i] and active[j]:
                L[i, j] = _delta_pair(M, pl, pr, active, i, j, n)

    r = ninit
    while True:
        if r < V:
            s = 0
            while active[s]:
                s += 1
            _insert(order[r], r, s, M, pl, pr, active, node, rank, slot_of,
                    out_ptr, out_idx, out_cnt, pl_w, pr_w)
            # existing pair gains pick up the interaction with the new cluster
            for i in range(S):
                if not active[i] or i == s:
                    continue
                for j in range(i + 1, S):
                    if not active[j] or j == s:
                        continue
                    L[i, j] += (_wm(M, pl, pr, i, j, s, n) - _w(M, pl, pr, i, s, n)
                                - _w(M, pl, pr, j, s, n))
            for i in range(S):
                if active[i] and i != s:
                    a, b = min(i, s), max(i, s)
                    L[a, b] = _delta_pair(M, pl, pr, active, a, b, n)
            r += 1
        else:
            count = 0
            for i in range(S):
                if active[i]:
                    count += 1
            if count <= 1:
                break
        # best pair: highest gain, then smallest (min rank, max rank) among ties
        top = -np.inf
        for i in range(S):
            if not active[i]:
                continue
            for j in range(i + 1, S):
                if active[j] and L[i, j] > top:
                    top = L[i, j]
        best = top
        ba = -1
        bb = -1
        ka = V + 1
        kb = V + 1
        for i in range(S):
            if not active[i]:
                continue
            for j in range(i + 1, S):
                if not active[j] or L[i, j] < top - TIE_TOL:
                    continue
                x = min(rank[i], rank[j])
                y = max(rank[i], rank[j])
                if x < ka or (x == ka and y < kb):
                    best = L[i, j]
                    ba = i
                    bb = j
                    ka = x
                    kb = y
        a = ba
        b = bb
        # remove the old interactions of a and b from every other pair
        for i in range(S):
            if not active[i] or i == a or i == b:
                continue
            for j in range(i + 1, S):
                if not active[j] or j == a or j == b:
                    continue
                L[i, j] -= (_wm(M, pl, pr, i, j, a, n) - _w(M, pl, pr, i, a, n)
                            - _w(M, pl, pr, j, a, n))
                L[i, j] -= (_wm(M, pl, pr, i, j, b, n) - _w(M, pl, pr, i, b, n)
                            - _w(M, pl, pr, j, b, n))
        # fold b into a
        for k in range(S):
            M[a, k] += M[b, k]
        for k in range(S):
            M[k, a] += M[k, b]
        for k in range(S):
            M[b, k] = 0.0
            M[k, b] = 0.0
            L[b, k] = 0.0
            L[k, b] = 0.0
        pl[a] += pl[b]
        pr[a] += pr[b]
        pl[b] = 0.0
        pr[b] = 0.0
        active[b] = False
        for w in range(V):
            if slot_of[w] == b:
                slot_of[w] = a
        if rank[b] < rank[a]:
            first, second = node[b], node[a]
            rank[a] = rank[b]
        else:
            first, second = node[a], node[b]
        merges[nmerge, 0] = first
        merges[nmerge, 1] = second
        merges[nmerge, 2] = next_node
        gains[nmerge] = best
        node[a] = next_node
        node[b] = -1
        next_node += 1
        nmerge += 1
        for i in range(S):
            if not active[i] or i == a:
                continue
            for j in range(i + 1, S):
                if not active[j] or j == a:
                    continue
                L[i, j] += (_wm(M, pl, pr, i, j, a, n) - _w(M, pl, pr, i, a, n)
                            - _w(M, pl, pr, j, a, n))
        for i in range(S):
            if active[i] and i != a:
                x, y = min(i, a), max(i, a)
                L[x, y] = _delta_pair(M, pl, pr, active, x, y, n)
    return merges[:nmerge], gains[:nmerge]


@_accel.njit
def _insert(w, r, s, M, pl, pr, active, node, rank, slot_of,
            out_ptr, out_idx, out_cnt, pl_w, pr_w):
    slot_of[w] = s
    active[s] = True
    node[s] = w
    rank[s] = r
    pl[s] = pl_w[w]
    pr[s] = pr_w[w]
    for k in range(M.shape[0]):
        M[s, k] = 0.0
        M[k, s] = 0.0
    # out_* holds both directions: positive count = w -> v, stored at
    # out_idx >= 0; incoming edges are encoded as -(v + 1)
    for e in range(out_ptr[w], out_ptr[w + 1]):
        v = out_idx[e]
        if v >= 0:
            t = slot_of[v]
            if t >= 0:
                M[s, t] += out_cnt[e]
        else:
            v = -v - 1
            if v == w:
                continue
            t = slot_of[v]
            if t >= 0:
                M[t, s] += out_cnt[e]


# -- numpy path ---------------------------------------------------------------

def _qv(c, l, r, n):
    c, l, r = np.broadcast_arrays(np.asarray(c, dtype=np.float64),
                                  np.asarray(l, dtype=np.float64),
                                  np.asarray(r, dtype=np.float64))
    out = np.zeros(c.shape)
    m = c > 0
    out[m] = c[m] / n * np.log(c[m] * n / (l[m] * r[m]))
    return out


def _delta_row_numpy(M, pl, pr, act, i, n):
    """Merge gains of slot ``i`` with every other active slot (dict j -> gain)."""
    J = act[act != i]
    if len(J) == 0:
        return {}
    Ma = M[np.ix_(J, act)]          # J -> k
    Mb = M[np.ix_(act, J)].T        # k -> J, rows indexed by J
    lu = (pl[i] + pl[J])[:, None]
    ru = (pr[i] + pr[J])[:, None]
    t = (_qv(M[i, act][None, :] + Ma, lu, pr[act][None, :], n)
         + _qv(M[act, i][None, :] + Mb, pl[act][None, :], ru, n))
    wi = _qv(M[i, act], pl[i], pr[act], n) + _qv(M[act, i], pl[act], pr[i], n)
    wj = _qv(Ma, pl[J][:, None], pr[act][None, :], n) + _qv(Mb, pl[act][None, :], pr[J][:, None], n)
    t = t - wi[None, :] - wj
    mask = (act[None, :] == i) | (act[None, :] == J[:, None])
    t[mask] = 0.0
    gain = t.sum(axis=1)
    both = M[i, i] + M[i, J] + M[J, i] + M[J, J]
    gain += _qv(both, pl[i] + pl[J], pr[i] + pr[J], n)
    gain -= _qv(M[i, i], pl[i], pr[i], n) + _qv(M[J, J], pl[J], pr[J], n)
    gain -= _qv(M[i, J], pl[i], pr[J], n) + _qv(M[J, i], pl[J], pr[i], n)
    return dict(zip(J.tolist(), gain.tolist()))


def _interaction_numpy(M, pl, pr, A, c, n):
    """``wm(i+j, c) - w(i, c) - w(j, c)`` for all i, j in ``A``."""
    mic, mci = M[A, c], M[c, A]
    wm = (_qv(mic[:, None] + mic[None, :], pl[A][:, None] + pl[A][None, :], pr[c], n)
          + _qv(mci[:, None] + mci[None, :], pl[c], pr[A][:, None] + pr[A][None, :], n))
    wc = _qv(mic, pl[A], pr[c], n) + _qv(mci, pl[c], pr[A], n)
    return wm - wc[:, None] - wc[None, :]


def _brown_numpy(order, out_ptr, out_idx, out_cnt, pl_w, pr_w, n, K):
    V = len(order)
    S = min(K, V) + 1
    M = np.zeros((S, S))
    L = np.zeros((S, S))
    pl = np.zeros(S)
    pr = np.zeros(S)
    active = np.zeros(S, dtype=bool)
    node = np.full(S, -1, dtype=np.int64)
    rank = np.zeros(S, dtype=np.int64)
    slot_of = np.full(V, -1, dtype=np.int64)
    merges, gains = [], []
    next_node = V

    def insert(w, r, s):
        slot_of[w] = s
        active[s] = True
        node[s] = w
        rank[s] = r
        pl[s], pr[s] = pl_w[w], pr_w[w]
        M[s, :] = 0.0
        M[:, s] = 0.0
        e = slice(out_ptr[w], out_ptr[w + 1])
        idx, cnt = out_idx[e], out_cnt[e]
        fwd = idx >= 0
        t = slot_of[idx[fwd]]
        np.add.at(M[s], t[t >= 0], cnt[fwd][t >= 0])
        src = -idx[~fwd] - 1
        keep = src != w
        t = slot_of[src[keep]]
        ok = t >= 0
        np.add.at(M[:, s], t[ok], cnt[~fwd][keep][ok])

    def shift(A, c, sign):
        if len(A) < 2:
            return
        iu = np.triu_indices(len(A), 1)
        L[A[iu[0]], A[iu[1]]] += sign * _interaction_numpy(M, pl, pr, A, c, n)[iu]

    def refresh_row(s):
        act = np.flatnonzero(active)
        for j, g in _delta_row_numpy(M, pl, pr, act, s, n).items():
            L[min(s, j), max(s, j)] = g

    for r in range(min(K, V)):
        insert(order[r], r, r)
    act = np.flatnonzero(active)
    for i in act:
        for j, g in _delta_row_numpy(M, pl, pr, act, i, n).items():
            if j > i:
                L[i, j] = g

    r = min(K, V)
    while True:
        if r < V:
            s = int(np.flatnonzero(~active)[0])
            insert(order[r], r, s)
            act = np.flatnonzero(active)
            shift(act[act != s], s, 1.0)
            refresh_row(s)
            r += 1
        elif active.sum() <= 1:
            break
        act = np.flatnonzero(active)
        iu = np.triu_indices(len(act), 1)
        g = L[act[iu[0]], act[iu[1]]]
        cand = np.flatnonzero(g >= g.max() - TIE_TOL)
        ri, rj = rank[act[iu[0][cand]]], rank[act[iu[1][cand]]]
        pick = cand[np.lexsort((np.maximum(ri, rj), np.minimum(ri, rj)))[0]]
        best = g[pick]
        ba, bb = act[iu[0][pick]], act[iu[1][pick]]
        a, b = int(ba), int(bb)
        rest = act[(act != a) & (act != b)]
        shift(rest, a, -1.0)
        shift(rest, b, -1.0)
        M[a, :] += M[b, :]
        M[:, a] += M[:, b]
        M[b, :] = 0.0
        M[:, b] = 0.0
        L[b, :] = 0.0
        L[:, b] = 0.0
        pl[a] += pl[b]
        pr[a] += pr[b]
        pl[b] = pr[b] = 0.0
        active[b] = False
        slot_of[slot_of == b] = a
        if rank[b] < rank[a]:
            first, second = node[b], node[a]
            rank[a] = rank[b]
        else:
            first, second = node[a], node[b]
        merges.append((int(first), int(second), next_node))
        gains.append(float(best))
        node[a] = next_node
        node[b] = -1
        next_node += 1
        shift(rest, a, 1.0)
        refresh_row(a)
    return np.array(merges, dtype=np.int64).reshape(-1, 3), np.array(gains)


def brown_cluster(corpus, K: int, *, use_numba=None) -> ClusterAssignment:
    """Cluster the corpus vocabulary into ``min(K, V)`` Brown clusters."""
    if K < 1:
        raise ClusteringError("number of clusters must be at least 1")
    V = len(corpus.vocab)
    if V == 0 or len(corpus) == 0:
        raise ClusteringError("empty corpus")
    words, _ = corpus.flat()
    freqs = np.bincount(words, minlength=V)
    order = np.lexsort((np.arange(V), -freqs)).astype(np.int64)
    left, right, cnt = bigram_counts(corpus)
    n = float(cnt.sum()) if len(cnt) else 1.0
    pl_w = np.bincount(left, weights=cnt, minlength=V).astype(np.float64)
    pr_w = np.bincount(right, weights=cnt, minlength=V).astype(np.float64)
    # adjacency per term: outgoing edges as target id, incoming as -(source+1)
    src = np.concatenate([left, right])
    idx = np.concatenate([right, -left - 1])
    c2 = np.concatenate([cnt, cnt])
    perm = np.lexsort((idx, src))
    src, idx, c2 = src[perm], idx[perm], c2[perm]
    ptr = np.zeros(V + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=V), out=ptr[1:])

    if _accel.pick(use_numba):
        merges, gains = _brown_numba(order, ptr, idx.astype(np.int64), c2,
                                             pl_w, pr_w, n, int(K))
    else:
        merges, gains = _brown_numpy(order, ptr, idx.astype(np.int64), c2,
                                             pl_w, pr_w, n, int(K))
    return _assemble(V, K, order, freqs, merges, gains)


def _assemble(V, K, order, freqs, merges, gains):
    ninit = min(K, V)
    phase1 = V - ninit      # one merge per inserted term
    children = {int(m[2]): (int(m[0]), int(m[1])) for m in merges}
    alive = set(int(w) for w in order[:ninit])
    for step, m in enumerate(merges[:phase1]):
        alive.add(int(order[ninit + step]))
        alive.discard(int(m[0]))
        alive.discard(int(m[1]))
        alive.add(int(m[2]))
    paths = {}
    if len(merges) > phase1:
        stack = [(int(merges[-1][2]), "")]
        while stack:
            nd, p = stack.pop()
            if nd in alive:
                paths[nd] = p
                continue
            left, right = children[nd]
            stack.append((right, p + "1"))
            stack.append((left, p + "0"))
    else:
        (only,) = alive
        paths[only] = "0"
    cluster_nodes = sorted(alive, key=lambda nd: paths[nd])
    term_cluster = np.full(V, -1, dtype=np.int64)
    for c, nd in enumerate(cluster_nodes):
        stack = [nd]
        while stack:
            x = stack.pop()
            if x < V:
                term_cluster[x] = c
            else:
                stack.extend(children[x])
    if np.any(term_cluster < 0):
        raise ClusteringError("internal error: unassigned term")
    merge_log = [(int(m[0]), int(m[1]), int(m[2]), float(g), 1 if i < phase1 else 2)
                 for i, (m, g) in enumerate(zip(merges, gains))]
    return ClusterAssignment(term_cluster, [paths[nd] for nd in cluster_nodes],
                             freqs.astype(np.int64), order, merge_log, K)


def save_clusters(assignment: ClusterAssignment, vocab, path):
    """Write ``merge-path<TAB>term<TAB>frequency`` lines, grouped by cluster."""
    with open(path, "w", encoding="utf-8") as fh:
        for c, p in enumerate(assignment.paths):
            for w in assignment.members(c):
                fh.write(f"{p}\t{vocab.terms[w]}\t{int(assignment.frequencies[w])}\n")


def load_clusters(path, vocab) -> ClusterAssignment:
    """Read a cluster file; terms missing from the file get a private cluster."""
    path_ids, term_cluster = {}, np.full(len(vocab), -1, dtype=np.int64)
    freqs = np.zeros(len(vocab), dtype=np.int64)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 2:
                raise ClusteringError(f"{path}:{lineno}: expected path<TAB>term[<TAB>freq]")
            p, term = parts[0], parts[1]
            c = path_ids.setdefault(p, len(path_ids))
            w = vocab.get(term)
            if w is not None:
                term_cluster[w] = c
                if len(parts) > 2:
                    freqs[w] = int(parts[2])
    paths = list(path_ids)
    for w in np.flatnonzero(term_cluster < 0):
        term_cluster[w] = len(paths)
        paths.append(f"<unk:{vocab.terms[w]}>")
    return ClusterAssignment(term_cluster, paths, freqs, np.arange(len(vocab)), [], len(paths))
