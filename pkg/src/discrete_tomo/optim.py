"""Exact integer network optimisation.

Every transportation-shaped problem in the package (two-direction
reconstruction, frame reconstruction in particle tracking, volume
constrained grain assignment, matchings) has a totally unimodular
constraint matrix, so an integral flow solver answers it exactly.

Algorithms
----------
* :func:`max_flow` – shortest augmenting paths (Edmonds–Karp), returns the
  saturated cut as certificate.
* :func:`min_cost_flow` – successive shortest paths with node potentials
  (Bellman–Ford initialisation when negative costs are present, Dijkstra
  afterwards); returns potentials certifying optimality.
* :func:`bounded_assignment` – unit-supply sources to a few sinks with count
  bounds, solved by successive shortest paths on the contracted sink graph.

Ties between equally short paths go to the lowest node index, so outputs
are reproducible.  Real-valued costs are quantised with
:func:`quantize_costs` before they reach the engine.
"""

import heapq
import logging
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from discrete_tomo.errors import DimensionMismatchError, InvariantViolationError
from discrete_tomo.models import (
    AssignmentResult,
    MatchingResult,
    MaxFlowResult,
    MinCostFlowResult,
)

logger = logging.getLogger(__name__)

INFINITY: int = 10**18


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    capacity: int
    cost: int = 0


class FlowNetwork:
    """Directed network with integer capacities and costs."""

    def __init__(self, num_nodes: int = 0, source: int | None = None, sink: int | None = None):
        self.num_nodes = num_nodes
        self.source = source
        self.sink = sink
        self.arcs: list[Arc] = []

    def add_node(self) -> int:
        self.num_nodes += 1
        return self.num_nodes - 1

    def add_nodes(self, count: int) -> range:
        start = self.num_nodes
        self.num_nodes += count
        return range(start, self.num_nodes)

    def add_arc(self, tail: int, head: int, capacity: int, cost: int = 0) -> int:
        """Append an arc and return its index."""
        if not (0 <= tail < self.num_nodes and 0 <= head < self.num_nodes):
            raise ValueError(f"arc {tail}->{head} references a missing node")
        if tail == head:
            raise ValueError(f"self-loop at node {tail}")
        if capacity < 0:
            raise ValueError(f"negative capacity on arc {tail}->{head}")
        self.arcs.append(Arc(tail, head, int(capacity), int(cost)))
        return len(self.arcs) - 1

    def terminals(self) -> tuple[int, int]:
        if self.source is None or self.sink is None:
            raise ValueError("source and sink must be set")
        if self.source == self.sink:
            raise ValueError("source and sink coincide")
        for node in (self.source, self.sink):
            if not 0 <= node < self.num_nodes:
                raise ValueError(f"terminal {node} is not a node")
        return self.source, self.sink


class _Residual:
    """Residual graph; arc ``k`` owns edges ``2k`` (forward) and ``2k+1`` (reverse)."""

    def __init__(self, net: FlowNetwork) -> None:
        n_edges = 2 * len(net.arcs)
        self.head = [0] * n_edges
        self.cap = [0] * n_edges
        self.cost = [0] * n_edges
        self.adj: list[list[int]] = [[] for _ in range(net.num_nodes)]
        for k, arc in enumerate(net.arcs):
            e = 2 * k
            self.head[e], self.cap[e], self.cost[e] = arc.head, arc.capacity, arc.cost
            self.head[e + 1], self.cap[e + 1], self.cost[e + 1] = arc.tail, 0, -arc.cost
            self.adj[arc.tail].append(e)
            self.adj[arc.head].append(e + 1)

    def push(self, e: int, amount: int) -> None:
        self.cap[e] -= amount
        self.cap[e ^ 1] += amount

    def flows(self) -> list[int]:
        return [self.cap[2 * k + 1] for k in range(len(self.cap) // 2)]

    def reachable(self, start: int) -> set[int]:
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                v = self.head[e]
                if self.cap[e] > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


# ---------------------------------------------------------------------------
# Maximum flow
# ---------------------------------------------------------------------------


def max_flow(net: FlowNetwork) -> MaxFlowResult:
    """Maximum flow from ``net.source`` to ``net.sink``.

    The returned ``source_side`` is the set of nodes reachable from the
    source in the final residual graph; its outgoing arcs are saturated and
    their capacities sum to the flow value.
    """
    s, t = net.terminals()
    res = _Residual(net)
    value = 0
    while True:
        parent = [-1] * net.num_nodes
        parent[s] = -2
        queue = deque([s])
        while queue and parent[t] == -1:
            u = queue.popleft()
            for e in res.adj[u]:
                v = res.head[e]
                if res.cap[e] > 0 and parent[v] == -1:
                    parent[v] = e
                    queue.append(v)
        if parent[t] == -1:
            break
        bottleneck = INFINITY
        v = t
        while v != s:
            e = parent[v]
            bottleneck = min(bottleneck, res.cap[e])
            v = res.head[e ^ 1]
        v = t
        while v != s:
            e = parent[v]
            res.push(e, bottleneck)
            v = res.head[e ^ 1]
        value += bottleneck
    side = res.reachable(s)
    logger.debug("max_flow: value %d over %d arcs", value, len(net.arcs))
    return MaxFlowResult(value=value, flows=res.flows(), source_side=frozenset(side))


# ---------------------------------------------------------------------------
# Minimum cost flow
# ---------------------------------------------------------------------------


def _bellman_ford(res: _Residual, num_nodes: int) -> list[int]:
    """Potentials from a virtual root joined to every node at cost 0."""
    dist = [0] * num_nodes
    for _ in range(num_nodes + 1):
        changed = False
        for u in range(num_nodes):
            for e in res.adj[u]:
                if res.cap[e] > 0 and dist[u] + res.cost[e] < dist[res.head[e]]:
                    dist[res.head[e]] = dist[u] + res.cost[e]
                    changed = True
        if not changed:
            return dist
    raise ValueError("network contains a negative-cost cycle")


def min_cost_flow(net: FlowNetwork, value: int) -> MinCostFlowResult:
    """Send *value* units from source to sink at minimum total cost.

    Returns ``feasible=False`` (with the largest flow it could route) when
    the network cannot carry *value* units.  For a feasible result every
    residual arc has nonnegative reduced cost ``cost + pi[tail] - pi[head]``
    under the returned potentials ``pi``.
    """
    s, t = net.terminals()
    if value < 0:
        raise ValueError("flow value must be nonnegative")
    res = _Residual(net)
    n = net.num_nodes
    if any(arc.cost < 0 for arc in net.arcs):
        pot = _bellman_ford(res, n)
    else:
        pot = [0] * n

    sent = 0
    augmentations = 0
    while sent < value:
        dist = [INFINITY] * n
        parent = [-1] * n
        dist[s] = 0
        heap: list[tuple[int, int]] = [(0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for e in res.adj[u]:
                if res.cap[e] <= 0:
                    continue
                v = res.head[e]
                nd = d + res.cost[e] + pot[u] - pot[v]
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = e
                    heapq.heappush(heap, (nd, v))
        if dist[t] == INFINITY:
            logger.info("min_cost_flow: only %d of %d units can be routed", sent, value)
            flows = res.flows()
            return MinCostFlowResult(
                feasible=False,
                value=sent,
                flows=flows,
                cost=sum(f * a.cost for f, a in zip(flows, net.arcs, strict=True)),
                potentials=pot,
            )
        cap_t = dist[t]
        for v in range(n):
            pot[v] += min(dist[v], cap_t)
        push = value - sent
        v = t
        while v != s:
            e = parent[v]
            push = min(push, res.cap[e])
            v = res.head[e ^ 1]
        v = t
        while v != s:
            e = parent[v]
            res.push(e, push)
            v = res.head[e ^ 1]
        sent += push
        augmentations += 1

    flows = res.flows()
    cost = sum(f * a.cost for f, a in zip(flows, net.arcs, strict=True))
    logger.debug(
        "min_cost_flow: value %d, cost %d after %d augmentations", sent, cost, augmentations
    )
    return MinCostFlowResult(feasible=True, value=sent, flows=flows, cost=cost, potentials=pot)


def reduced_cost(net: FlowNetwork, potentials: Sequence[int], arc_index: int) -> int:
    arc = net.arcs[arc_index]
    return arc.cost + potentials[arc.tail] - potentials[arc.head]


def certifies_optimality(net: FlowNetwork, result: MinCostFlowResult) -> bool:
    """Complementary slackness of ``result.flows`` under ``result.potentials``."""
    for k, (arc, f) in enumerate(zip(net.arcs, result.flows, strict=True)):
        rc = reduced_cost(net, result.potentials, k)
        if f < arc.capacity and rc < 0:
            return False
        if f > 0 and rc > 0:
            return False
    return True


def solve_balanced(net: FlowNetwork, balances: Mapping[int, int]) -> MinCostFlowResult:
    """Min-cost flow meeting node balances (positive = supply, negative = demand).

    ``net.source`` and ``net.sink`` are ignored.  The result lists flows for
    the arcs of *net* and potentials for its nodes.
    """
    supply = sum(b for b in balances.values() if b > 0)
    demand = -sum(b for b in balances.values() if b < 0)
    ext = FlowNetwork(net.num_nodes)
    ext.arcs = list(net.arcs)
    ext.source = ext.add_node()
    ext.sink = ext.add_node()
    for node, b in sorted(balances.items()):
        if b > 0:
            ext.add_arc(ext.source, node, b)
        elif b < 0:
            ext.add_arc(node, ext.sink, -b)
    result = min_cost_flow(ext, supply)
    k = len(net.arcs)
    flows = result.flows[:k]
    return MinCostFlowResult(
        feasible=result.feasible and supply == demand,
        value=result.value,
        flows=flows,
        cost=sum(f * a.cost for f, a in zip(flows, net.arcs, strict=True)),
        potentials=result.potentials[: net.num_nodes],
    )


def transportation(
    supplies: Sequence[int],
    demands: Sequence[int],
    arcs: Iterable[tuple[int, int, int, int]],
) -> MinCostFlowResult:
    """Transportation problem with arcs ``(supply i, demand j, capacity, cost)``.

    Supply node ``i`` is network node ``i``; demand node ``j`` is
    ``len(supplies) + j``.  Feasible iff every supply and demand is met exactly.
    """
    offset = len(supplies)
    net = FlowNetwork(offset + len(demands))
    for i, j, cap, cost in arcs:
        net.add_arc(i, offset + j, cap, cost)
    balances = {i: s for i, s in enumerate(supplies) if s}
    balances.update({offset + j: -d for j, d in enumerate(demands) if d})
    return solve_balanced(net, balances)


# ---------------------------------------------------------------------------
# Matchings and assignments
# ---------------------------------------------------------------------------


def quantize_costs(values: npt.ArrayLike, scale: int) -> npt.NDArray[np.int64]:
    """``floor(x * scale + 0.5)``: half-up rounding onto the integer cost lattice."""
    return np.floor(np.asarray(values, dtype=np.float64) * scale + 0.5).astype(np.int64)


def min_weight_perfect_matching_bipartite(costs: npt.ArrayLike) -> MatchingResult:
    """Permutation ``pi`` minimising ``sum_i costs[i, pi[i]]`` for a square integer matrix."""
    c = np.asarray(costs)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionMismatchError(f"cost matrix must be square, got shape {c.shape}")
    if not np.issubdtype(c.dtype, np.integer):
        raise ValueError("matching costs must be integers; quantize real costs first")
    n = c.shape[0]
    if n == 0:
        return MatchingResult(permutation=(), cost=0)
    shifted = c - c.min(axis=1, keepdims=True)
    arcs = [(i, j, 1, int(shifted[i, j])) for i in range(n) for j in range(n)]
    result = transportation([1] * n, [1] * n, arcs)
    if not result.feasible:
        raise InvariantViolationError("complete bipartite graph without a perfect matching")
    perm = [-1] * n
    for (i, j, _, _), f in zip(arcs, result.flows, strict=True):
        if f not in (0, 1):
            raise InvariantViolationError(f"fractional matching flow {f}")
        if f:
            perm[i] = j
    total = int(sum(int(c[i, perm[i]]) for i in range(n)))
    return MatchingResult(permutation=tuple(perm), cost=total)


def _bf_path(
    num_nodes: int, edges: list[tuple[int, int, int]], start: int
) -> tuple[list[int], list[int]]:
    dist = [INFINITY] * num_nodes
    parent = [-1] * num_nodes
    dist[start] = 0
    for _ in range(num_nodes):
        changed = False
        for u, v, w in edges:
            if dist[u] != INFINITY and dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                parent[v] = u
                changed = True
        if not changed:
            break
    return dist, parent


def bounded_assignment(
    costs: npt.ArrayLike, lower: Sequence[int], upper: Sequence[int]
) -> AssignmentResult:
    """Assign each row of *costs* to one column with column counts in ``[lower, upper]``.

    Exact minimum of ``sum_i costs[i, label[i]]``.  Starting from the
    row-wise argmin, successive shortest paths on the graph of columns
    (an arc ``j -> k`` moves the cheapest row from ``j`` to ``k``) repair the
    count violations.  ``offsets`` are column potentials under which every row
    sits in an argmin of ``costs[i, k] - offsets[k]``.
    """
    c = np.asarray(costs)
    if c.ndim != 2:
        raise DimensionMismatchError(f"cost matrix must be 2-D, got shape {c.shape}")
    if not np.issubdtype(c.dtype, np.integer):
        raise ValueError("assignment costs must be integers; quantize real costs first")
    q, cols = c.shape
    lo = [int(x) for x in lower]
    hi = [int(x) for x in upper]
    if len(lo) != cols or len(hi) != cols:
        raise DimensionMismatchError("one lower and one upper bound per column is required")
    if any(a < 0 or a > b for a, b in zip(lo, hi, strict=True)) or not (sum(lo) <= q <= sum(hi)):
        logger.info("bounded_assignment: bounds %s..%s cannot hold %d rows", lo, hi, q)
        return AssignmentResult(feasible=False)
    if q == 0:
        return AssignmentResult(
            feasible=True,
            labels=np.zeros(0, dtype=np.int64),
            counts=[0] * cols,
            cost=0,
            offsets=np.zeros(cols, dtype=np.int64),
        )

    labels = np.argmin(c, axis=1).astype(np.int64)
    counts = np.bincount(labels, minlength=cols).tolist()
    rows = [[int(x) for x in row] for row in c.tolist()]
    heaps: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for j in range(cols):
        members = np.flatnonzero(labels == j)
        for k in range(cols):
            if k == j:
                continue
            delta = (c[members, k] - c[members, j]).tolist()
            heap = list(zip(delta, members.tolist(), strict=True))
            heapq.heapify(heap)
            heaps[(j, k)] = heap

    def top(j: int, k: int) -> tuple[int, int] | None:
        heap = heaps[(j, k)]
        while heap and labels[heap[0][1]] != j:
            heapq.heappop(heap)
        return heap[0] if heap else None

    big = 2 * (cols + 1) * (int(c.max()) - int(c.min()) + 1)
    source, sink = cols, cols + 1
    moves = 0
    while True:
        edges: list[tuple[int, int, int]] = []
        for j in range(cols):
            if counts[j] > lo[j]:
                edges.append((source, j, -big if counts[j] > hi[j] else 0))
            if counts[j] < hi[j]:
                edges.append((j, sink, -big if counts[j] < lo[j] else 0))
            for k in range(cols):
                if k != j:
                    best = top(j, k)
                    if best is not None:
                        edges.append((j, k, best[0]))
        dist, parent = _bf_path(cols + 2, edges, source)
        if dist[sink] >= 0:
            break
        # S -> j ... k -> T sheds one row from j and adds one to k
        path = [sink]
        while path[-1] != source:
            path.append(parent[path[-1]])
        grains = path[::-1][1:-1]
        chosen: list[tuple[int, int, int]] = []
        for a, b in zip(grains, grains[1:], strict=False):
            best = top(a, b)
            if best is None:
                raise InvariantViolationError(f"shortest path uses an empty move {a}->{b}")
            chosen.append((best[1], a, b))
        for i, a, b in chosen:
            labels[i] = b
            counts[a] -= 1
            counts[b] += 1
            row = rows[i]
            for k in range(cols):
                if k != b:
                    heapq.heappush(heaps[(b, k)], (row[k] - row[b], i))
        moves += 1

    if any(n < a or n > b for n, a, b in zip(counts, lo, hi, strict=True)):
        raise InvariantViolationError(f"assignment counts {counts} violate {lo}..{hi}")

    move_edges = [(cols, j, 0) for j in range(cols)]
    for j in range(cols):
        for k in range(cols):
            if k != j:
                best = top(j, k)
                if best is not None:
                    move_edges.append((j, k, best[0]))
    dist, _ = _bf_path(cols + 1, move_edges, cols)
    offsets = np.array(dist[:cols], dtype=np.int64)
    total = int(sum(rows[i][int(labels[i])] for i in range(q)))
    logger.info("bounded_assignment: %d rows, %d columns, %d repair paths", q, cols, moves)
    return AssignmentResult(
        feasible=True,
        labels=labels,
        counts=[int(x) for x in counts],
        cost=total,
        offsets=offsets,
    )
