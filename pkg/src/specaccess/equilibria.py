"""Constructive pure-equilibrium routines for special graph classes.

Three constructions, each valid under explicit structural hypotheses:
topological best responses on DAGs, recursive node addition on directed
trees/forests under the congestion property, and the two-case channel
assignment on complete/regular bipartite graphs under random backoff.
Outputs are verified against the generic equilibrium check before returning.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

from .contention import RandomBackoff, backoff_success_probability, satisfies_congestion_property
from .errors import PreconditionError
from .game import Profile, SpectrumGame, enumerate_pure_ne, is_pure_ne
from .graph import classify

logger = logging.getLogger(__name__)


def _verify(spec: SpectrumGame, a: Profile, routine: str) -> Profile:
    check = is_pure_ne(spec, a)
    if not check.is_ne:
        raise RuntimeError(f"{routine} produced a non-equilibrium profile: witness {check.witness}")
    return a


def _best_channel(spec: SpectrumGame, n: int, contenders_by_channel) -> int:
    """argmax_m theta_m * h_n B_m^n * g_n(contenders(m)); lowest index wins ties."""
    best_m, best_u = 1, -1.0
    for m in range(1, spec.n_channels + 1):
        u = spec.idle_prob[m - 1] * spec.effective_rate(n, m) * spec.grab(n, contenders_by_channel(m))
        if u > best_u:
            best_m, best_u = m, u
    return best_m


def construct_ne_dag(spec: SpectrumGame, verify: bool = True) -> Profile:
    """Pure NE on a directed acyclic interference graph.

    Users are processed in topological order; by acyclicity every in-neighbour
    is already placed, so a plain best response per user is mutually stable.
    """
    cls = classify(spec.graph)
    if not cls.directed_acyclic:
        raise PreconditionError("construct_ne_dag requires a directed acyclic graph")
    assignment: dict[int, int] = {}
    for n in cls.topological_order:
        placed = spec.graph.in_neighbors(n)
        choice = _best_channel(
            spec, n, lambda m: frozenset(i for i in placed if assignment[i] == m)
        )
        assignment[n] = choice
    a = tuple(assignment[n] for n in range(1, spec.n_users + 1))
    return _verify(spec, a, "construct_ne_dag") if verify else a


@dataclass
class _TreeState:
    solves: int = 0


class _BudgetExceeded(Exception):
    pass


def construct_ne_directed_tree(
    spec: SpectrumGame,
    recursion_budget: int = 10_000,
    verify: bool = True,
) -> Profile:
    """Pure NE on a directed tree or forest under the congestion property.

    Nodes are added one at a time along the skeleton (each new node touches
    exactly one placed node). A new node best-responds to its placed
    interferer; if it lands on the channel of a node it interferes with, the
    placed prefix is re-solved with that node's payoff carrying the newcomer
    as a phantom contender on the conflicted channel. Exceeding the recursion
    budget falls back to exhaustive enumeration (logged).
    """
    cls = classify(spec.graph)
    if not cls.directed_forest:
        raise PreconditionError("construct_ne_directed_tree requires a directed tree or forest")
    for n in range(1, spec.n_users + 1):
        if not satisfies_congestion_property(spec.mechanism, n, spec.graph.in_neighbors(n)):
            raise PreconditionError(
                f"construct_ne_directed_tree requires the congestion property (fails for user {n})"
            )

    sequence, parent = _forest_addition_order(spec)
    state = _TreeState()
    edges = spec.graph.edges

    def best_response(v: int, prefix: dict[int, int], mods: dict[tuple[int, int], frozenset[int]]) -> int:
        par = parent[v]

        def contenders(m: int) -> frozenset[int]:
            extra = mods.get((v, m), frozenset())
            if par is not None and (par, v) in edges and prefix.get(par) == m:
                return extra | {par}
            return extra

        return _best_channel(spec, v, contenders)

    def solve(k: int, mods: dict[tuple[int, int], frozenset[int]]) -> dict[int, int]:
        state.solves += 1
        if state.solves > recursion_budget:
            raise _BudgetExceeded
        if k == 0:
            return {}
        prefix = solve(k - 1, mods)
        v = sequence[k - 1]
        choice = best_response(v, prefix, mods)
        par = parent[v]
        if par is not None and (v, par) in edges and prefix.get(par) == choice:
            # the newcomer interferes with its placed neighbour on that same
            # channel: re-solve the prefix with the newcomer as a phantom
            key = (par, choice)
            mods2 = dict(mods)
            mods2[key] = mods.get(key, frozenset()) | {v}
            prefix = solve(k - 1, mods2)
        prefix[v] = choice
        return prefix

    try:
        assignment = solve(len(sequence), {})
        a = tuple(assignment[n] for n in range(1, spec.n_users + 1))
    except _BudgetExceeded:
        logger.warning(
            "tree construction exceeded its recursion budget (%d solves); "
            "falling back to exhaustive enumeration", recursion_budget,
        )
        ne = enumerate_pure_ne(spec)
        if not ne:
            raise RuntimeError("enumeration fallback found no pure NE on a CP forest instance")
        a = ne[0]
    return _verify(spec, a, "construct_ne_directed_tree") if verify else a


def _forest_addition_order(spec: SpectrumGame) -> tuple[list[int], dict[int, int | None]]:
    """BFS over each skeleton component from its lowest node: every non-root
    node is added after exactly one skeleton neighbour (its parent)."""
    g = spec.graph
    adj = {
        n: sorted(set(g.in_neighbors(n)) | set(g.out_neighbors(n)))
        for n in range(1, g.n_users + 1)
    }
    parent: dict[int, int | None] = {}
    order: list[int] = []
    visited: set[int] = set()
    for root in range(1, g.n_users + 1):
        if root in visited:
            continue
        parent[root] = None
        visited.add(root)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in adj[u]:
                if v not in visited:
                    parent[v] = u
                    visited.add(v)
                    queue.append(v)
    return order, parent


def construct_ne_bipartite(spec: SpectrumGame, verify: bool = True) -> Profile:
    """Pure NE on a complete or regular bipartite graph under random backoff.

    Channels are ranked by theta_m B_m. Either the top channel is good enough
    to hold everyone even at full contention, or the two sides split across
    the top two channels.
    """
    cls = classify(spec.graph)
    if not (cls.complete_bipartite or cls.regular_bipartite):
        raise PreconditionError(
            "construct_ne_bipartite requires a complete or regular bipartite graph"
        )
    if not isinstance(spec.mechanism, RandomBackoff):
        raise PreconditionError("construct_ne_bipartite requires the random backoff mechanism")
    first = spec.mean_rate[0]
    if any(abs(row[m] - first[m]) > 1e-12 * first[m] for row in spec.mean_rate for m in range(spec.n_channels)):
        raise PreconditionError(
            "construct_ne_bipartite requires channel-wise rates (identical mean-rate rows; "
            "user specificity only through gains)"
        )

    v1, v2 = cls.bipartition
    if len(v2) > len(v1):
        v1, v2 = v2, v1
    if cls.complete_bipartite:
        contention = len(v1)  # a smaller-side user faces the whole larger side
    else:
        contention = cls.regular_degree

    value = [spec.idle_prob[m] * first[m] for m in range(spec.n_channels)]
    ranked = sorted(range(1, spec.n_channels + 1), key=lambda m: (-value[m - 1], m))
    top = ranked[0]
    lam = spec.mechanism.max_counter
    f = lambda k: backoff_success_probability(lam, k)

    if spec.n_channels == 1 or value[top - 1] * f(contention) >= value[ranked[1] - 1]:
        a = (top,) * spec.n_users
    else:
        second = ranked[1]
        assignment = {n: top for n in v1}
        assignment.update({n: second for n in v2})
        a = tuple(assignment[n] for n in range(1, spec.n_users + 1))
    return _verify(spec, a, "construct_ne_bipartite") if verify else a
