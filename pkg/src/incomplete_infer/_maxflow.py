"""Highest-label push-relabel maximum flow with the gap heuristic.

Capacities may be Python ints (exact arithmetic) or floats; for floats,
residuals at or below ``eps`` are treated as saturated.
"""
from __future__ import annotations

from collections import deque


class FlowNetwork:
    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.adj: list[list[int]] = [[] for _ in range(n_nodes)]
        self.head: list[int] = []
        self.cap: list = []
        self.orig: list = []

    def add_edge(self, u: int, v: int, capacity) -> int:
        """Add ``u -> v``; returns the edge id (its reverse is ``id ^ 1``)."""
        eid = len(self.head)
        self.head += [v, u]
        self.cap += [capacity, capacity * 0]
        self.orig += [capacity, capacity * 0]
        self.adj[u].append(eid)
        self.adj[v].append(eid + 1)
        return eid

    def flow_on(self, eid: int):
        return self.orig[eid] - self.cap[eid]

    def max_flow(self, s: int, t: int, eps=0):
        n, head, cap, adj = self.n, self.head, self.cap, self.adj
        zero = cap[0] * 0 if cap else 0

        # exact distance labels to the sink
        height = [n] * n
        height[t] = 0
        queue = deque([t])
        while queue:
            v = queue.popleft()
            for e in adj[v]:
                u = head[e]
                if height[u] == n and u != t and cap[e ^ 1] > eps:
                    height[u] = height[v] + 1
                    queue.append(u)
        height[s] = n

        count = [0] * (2 * n + 1)
        for v in range(n):
            count[height[v]] += 1
        excess = [zero] * n
        buckets: list[list[int]] = [[] for _ in range(2 * n + 1)]
        current = [0] * n
        highest = 0

        def activate(v):
            nonlocal highest
            if v != s and v != t:
                buckets[height[v]].append(v)
                highest = max(highest, height[v])

        for e in adj[s]:
            c = cap[e]
            if c > eps:
                v = head[e]
                cap[e] -= c
                cap[e ^ 1] += c
                was = excess[v]
                excess[v] += c
                if was <= eps:
                    activate(v)

        while highest >= 0:
            if not buckets[highest]:
                highest -= 1
                continue
            u = buckets[highest].pop()
            if height[u] != highest or excess[u] <= eps:
                continue
            edges = adj[u]
            while excess[u] > eps:
                if current[u] == len(edges):
                    old = height[u]
                    new = 2 * n
                    for e in edges:
                        if cap[e] > eps:
                            new = min(new, height[head[e]] + 1)
                    count[old] -= 1
                    height[u] = new
                    count[new] += 1
                    current[u] = 0
                    if count[old] == 0 and old < n:
                        # gap: nothing above `old` can still reach the sink
                        for v in range(n):
                            if old < height[v] < n and v != s:
                                count[height[v]] -= 1
                                height[v] = n + 1
                                count[n + 1] += 1
                                if excess[v] > eps and v != u:
                                    activate(v)
                    if height[u] >= 2 * n:
                        break
                    continue
                e = edges[current[u]]
                v = head[e]
                if cap[e] > eps and height[u] == height[v] + 1:
                    d = excess[u] if excess[u] < cap[e] else cap[e]
                    cap[e] -= d
                    cap[e ^ 1] += d
                    excess[u] -= d
                    was = excess[v]
                    excess[v] += d
                    if was <= eps:
                        activate(v)
                else:
                    current[u] += 1
            if excess[u] > eps and height[u] < 2 * n:
                activate(u)
        return excess[t]

    def source_side(self, s: int, eps=0) -> set[int]:
        """Nodes reachable from ``s`` in the residual graph (minimal min-cut side)."""
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                v = self.head[e]
                if v not in seen and self.cap[e] > eps:
                    seen.add(v)
                    queue.append(v)
        return seen
