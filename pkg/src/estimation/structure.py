# src/estimation/structure.py
"""
R-vine tree sequences: data model, validation, and sequential structure
selection by maximum spanning trees on |Kendall's tau|.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from networkx.utils import UnionFind

from ..errors import InsufficientDataError, ValidationError
from .numerics import clamp_probabilities, kendalls_tau, pseudo_observations, std_normal_quantile
from .paircop import eval_pair_all, fit_pair_copula

logger = logging.getLogger(__name__)

# Pseudo-observation columns are keyed by (variable, conditioning set)
ColumnKey = Tuple[int, FrozenSet[int]]
EdgeFitter = Callable[["VineEdge", np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
TauFn = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class VineEdge:
    tree: int
    conditioned: Tuple[int, int]
    conditioning: Tuple[int, ...] = ()
    parents: Optional[Tuple[int, int]] = None

    @property
    def variables(self) -> FrozenSet[int]:
        return frozenset(self.conditioned) | frozenset(self.conditioning)

    @property
    def first_input(self) -> ColumnKey:
        return self.conditioned[0], frozenset(self.conditioning)

    @property
    def second_input(self) -> ColumnKey:
        return self.conditioned[1], frozenset(self.conditioning)

    @property
    def first_output(self) -> ColumnKey:
        j, k = self.conditioned
        return j, frozenset(self.conditioning) | {k}

    @property
    def second_output(self) -> ColumnKey:
        j, k = self.conditioned
        return k, frozenset(self.conditioning) | {j}

    def label(self) -> str:
        j, k = self.conditioned
        if not self.conditioning:
            return f"{j},{k}"
        return f"{j},{k};{','.join(str(c) for c in self.conditioning)}"

    def to_record(self) -> Dict:
        return {
            "tree": self.tree,
            "conditioned": list(self.conditioned),
            "conditioning": list(self.conditioning),
            "parents": list(self.parents) if self.parents is not None else None,
        }

    @classmethod
    def from_record(cls, record: Dict) -> "VineEdge":
        parents = record.get("parents")
        return cls(
            tree=int(record["tree"]),
            conditioned=(int(record["conditioned"][0]), int(record["conditioned"][1])),
            conditioning=tuple(sorted(int(c) for c in record.get("conditioning", []))),
            parents=(int(parents[0]), int(parents[1])) if parents is not None else None,
        )


@dataclass(frozen=True)
class RVineStructure:
    d: int
    trees: Tuple[Tuple[VineEdge, ...], ...]

    def edges(self) -> List[VineEdge]:
        return [edge for tree in self.trees for edge in tree]

    @property
    def n_edges(self) -> int:
        return sum(len(tree) for tree in self.trees)

    def to_records(self) -> List[Dict]:
        return [edge.to_record() for edge in self.edges()]

    @classmethod
    def from_records(cls, d: int, records: Iterable[Dict]) -> "RVineStructure":
        edges = [VineEdge.from_record(r) for r in records]
        trees = []
        for level in range(1, d):
            trees.append(tuple(e for e in edges if e.tree == level))
        return cls(d=d, trees=tuple(trees))


@dataclass(frozen=True)
class StructureViolation:
    condition: str
    tree: int
    edge: Optional[int]
    message: str

    def __str__(self) -> str:
        where = f"tree {self.tree}" + (f", edge {self.edge}" if self.edge is not None else "")
        return f"{self.condition} violated at {where}: {self.message}"


class Dependence(str, Enum):
    DEPENDENT = "dependent"
    INDEPENDENT = "independent"


def join_edges(a: VineEdge, b: VineEdge, ia: int, ib: int) -> Optional[VineEdge]:
    """
    Edge of the next tree joining a and b, or None when the proximity
    condition fails. The conditioned pair is the symmetric difference of the
    two variable sets, the conditioning set their intersection.
    """
    if ia == ib:
        return None
    if a.tree == 1:
        shared = set(a.conditioned) & set(b.conditioned)
    else:
        shared = set(a.parents or ()) & set(b.parents or ())
    if not shared:
        return None
    only_a = a.variables - b.variables
    only_b = b.variables - a.variables
    if len(only_a) != 1 or len(only_b) != 1:
        return None
    return VineEdge(
        tree=a.tree + 1,
        conditioned=(next(iter(only_a)), next(iter(only_b))),
        conditioning=tuple(sorted(a.variables & b.variables)),
        parents=(ia, ib),
    )


def from_edge_lists(d: int, trees: Sequence[Sequence[Tuple[int, int]]]) -> RVineStructure:
    """
    Build a structure from node pairs per tree: variable pairs for the first
    tree, parent-edge index pairs for every later tree.
    """
    built: List[Tuple[VineEdge, ...]] = []
    for level, pairs in enumerate(trees, start=1):
        if level == 1:
            built.append(tuple(VineEdge(tree=1, conditioned=(int(a), int(b))) for a, b in pairs))
            continue
        prev = built[-1]
        edges = []
        for ia, ib in pairs:
            if not (0 <= ia < len(prev) and 0 <= ib < len(prev)):
                raise ValidationError(f"Tree {level}: parent index out of range in {(ia, ib)}")
            edge = join_edges(prev[ia], prev[ib], ia, ib)
            if edge is None:
                raise ValidationError(f"Tree {level}: edges {ia} and {ib} violate the proximity condition")
            edges.append(edge)
        built.append(tuple(edges))
    return RVineStructure(d=d, trees=tuple(built))


def _tree_violation(nodes: int, pairs: List[Tuple[int, int]], level: int) -> Optional[StructureViolation]:
    if len(pairs) != nodes - 1:
        return StructureViolation(
            "tree", level, None, f"expected {nodes - 1} edges on {nodes} nodes, found {len(pairs)}"
        )
    graph = nx.Graph()
    graph.add_nodes_from(range(nodes))
    for idx, (a, b) in enumerate(pairs):
        if not (0 <= a < nodes and 0 <= b < nodes):
            return StructureViolation("tree", level, idx, f"node index out of range: {(a, b)}")
        if graph.has_edge(a, b):
            return StructureViolation("tree", level, idx, f"duplicate edge {(a, b)}")
        graph.add_edge(a, b)
    if not nx.is_tree(graph):
        return StructureViolation("tree", level, None, "edges do not form a spanning tree")
    return None


def validate_structure(s: RVineStructure) -> Optional[StructureViolation]:
    """
    Returns None if s is a valid R-vine tree sequence, otherwise the first
    violated condition with the offending tree/edge.
    """
    if s.d < 2:
        return StructureViolation("size", 0, None, "dimension must be at least 2")
    if len(s.trees) != s.d - 1:
        return StructureViolation("size", 0, None, f"expected {s.d - 1} trees, found {len(s.trees)}")

    first = s.trees[0]
    for idx, edge in enumerate(first):
        j, k = edge.conditioned
        if edge.tree != 1 or edge.conditioning:
            return StructureViolation("sets", 1, idx, "first-tree edges have empty conditioning sets")
        if j == k:
            return StructureViolation("tree", 1, idx, "conditioned variables must be distinct")
    violation = _tree_violation(s.d, [e.conditioned for e in first], 1)
    if violation:
        return violation

    for level in range(2, s.d):
        prev = s.trees[level - 2]
        current = s.trees[level - 1]
        for idx, edge in enumerate(current):
            if edge.tree != level or edge.parents is None:
                return StructureViolation("sets", level, idx, "edge must reference two parent edges")
            ia, ib = edge.parents
            if not (0 <= ia < len(prev) and 0 <= ib < len(prev)):
                return StructureViolation("tree", level, idx, f"parent index out of range: {edge.parents}")
            expected = join_edges(prev[ia], prev[ib], ia, ib)
            if expected is None:
                return StructureViolation(
                    "proximity", level, idx, "joined edges of the previous tree share no common node"
                )
            if (set(expected.conditioned) != set(edge.conditioned)
                    or set(expected.conditioning) != set(edge.conditioning)):
                return StructureViolation(
                    "sets", level, idx,
                    f"expected {expected.label()} from parents, found {edge.label()}",
                )
            if len(edge.conditioning) != level - 1:
                return StructureViolation("sets", level, idx, "conditioning set has the wrong size")
        violation = _tree_violation(len(prev), [e.parents for e in current], level)
        if violation:
            return violation

    if s.n_edges != s.d * (s.d - 1) // 2:
        return StructureViolation("size", s.d - 1, None, "total edge count must be d(d-1)/2")
    return None


def candidate_edges(d: int, prev_tree: Optional[Sequence[VineEdge]]) -> List[VineEdge]:
    """All proximity-admissible edges of the next tree."""
    if prev_tree is None:
        return [VineEdge(tree=1, conditioned=(j, k)) for j in range(d) for k in range(j + 1, d)]
    candidates = []
    for ia in range(len(prev_tree)):
        for ib in range(ia + 1, len(prev_tree)):
            edge = join_edges(prev_tree[ia], prev_tree[ib], ia, ib)
            if edge is not None:
                candidates.append(edge)
    return candidates


def _node_pair(edge: VineEdge) -> Tuple[int, int]:
    return edge.parents if edge.tree > 1 else edge.conditioned


def maximum_spanning_tree(
        n_nodes: int, candidates: Sequence[VineEdge], weights: Sequence[float]
) -> List[VineEdge]:
    """
    Kruskal on (weight descending, sorted conditioned pair, parents). The
    explicit ordering makes ties deterministic.
    """
    order = sorted(
        range(len(candidates)),
        key=lambda i: (-weights[i], tuple(sorted(candidates[i].conditioned)), _node_pair(candidates[i])),
    )
    forest = UnionFind(range(n_nodes))
    chosen = []
    for i in order:
        a, b = _node_pair(candidates[i])
        if forest[a] != forest[b]:
            forest.union(a, b)
            chosen.append(candidates[i])
            if len(chosen) == n_nodes - 1:
                break
    if len(chosen) != n_nodes - 1:
        raise ValidationError("Candidate edges do not connect every node")
    return chosen


def independence_test(tau_hat: float, n: int, level: float = 0.05) -> Dependence:
    """Asymptotic normal test of tau = 0."""
    if n < 10:
        raise InsufficientDataError("Independence test needs at least 10 observations")
    statistic = abs(tau_hat) * np.sqrt(9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0)))
    critical = float(std_normal_quantile(1.0 - level / 2.0))
    return Dependence.INDEPENDENT if statistic <= critical else Dependence.DEPENDENT


@dataclass
class SequentialResult:
    structure: RVineStructure
    taus: List[float]
    columns: Dict[ColumnKey, np.ndarray]


def build_vine_sequentially(
        pseudo_obs: Sequence[np.ndarray],
        fit_edge: EdgeFitter,
        tau_fn: TauFn = kendalls_tau,
        structure: Optional[RVineStructure] = None,
        map_fn: Callable = map,
) -> SequentialResult:
    """
    Walk the trees in order. For each tree the edge set is either taken from
    `structure` or selected as the maximum spanning tree on |tau| over the
    admissible candidates; then every edge is handed to fit_edge, whose two
    outputs become the pseudo-observations of the next tree.
    """
    d = len(pseudo_obs)
    if d < 2:
        raise ValidationError("Structure selection needs at least 2 columns")
    columns: Dict[ColumnKey, np.ndarray] = {(j, frozenset()): np.asarray(col, dtype=float)
                                             for j, col in enumerate(pseudo_obs)}
    trees: List[Tuple[VineEdge, ...]] = []
    taus: List[float] = []
    prev: Optional[Tuple[VineEdge, ...]] = None

    for level in range(1, d):
        if structure is not None:
            edges = list(structure.trees[level - 1])
            tree_taus = list(map_fn(lambda e: tau_fn(columns[e.first_input], columns[e.second_input]), edges))
        else:
            candidates = candidate_edges(d, prev)
            cand_taus = list(map_fn(
                lambda e: tau_fn(columns[e.first_input], columns[e.second_input]), candidates
            ))
            n_nodes = d if prev is None else len(prev)
            edges = maximum_spanning_tree(n_nodes, candidates, [abs(t) for t in cand_taus])
            lookup = {id(c): t for c, t in zip(candidates, cand_taus)}
            tree_taus = [lookup[id(e)] for e in edges]
            logger.debug(f"Tree {level}: selected {[e.label() for e in edges]}")

        outputs = list(map_fn(
            lambda e: fit_edge(e, columns[e.first_input], columns[e.second_input]), edges
        ))
        for edge, (out_first, out_second) in zip(edges, outputs):
            columns[edge.first_output] = out_first
            columns[edge.second_output] = out_second
        trees.append(tuple(edges))
        taus.extend(tree_taus)
        prev = tuple(edges)

    return SequentialResult(structure=RVineStructure(d=d, trees=tuple(trees)), taus=taus, columns=columns)


def _transformation_fitter(n: int) -> EdgeFitter:
    def fit_edge(edge: VineEdge, u: np.ndarray, v: np.ndarray):
        estimate = fit_pair_copula(np.column_stack([u, v]))
        _, h_first, h_second, _ = eval_pair_all(estimate, u, v)
        return clamp_probabilities(h_first, n), clamp_probabilities(h_second, n)

    return fit_edge


def select_structure_mst(
        data_columns,
        tau_fn: TauFn = kendalls_tau,
        fit_edge: Optional[EdgeFitter] = None,
) -> SequentialResult:
    """
    Select an R-vine structure from raw data using rank pseudo-observations
    and the transformation estimator for the h-functions between trees.
    """
    data = np.asarray(data_columns, dtype=float)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValidationError("Structure selection needs an (n, d) array with d >= 2")
    n = data.shape[0]
    if n < 2:
        raise InsufficientDataError("Structure selection needs at least 2 observations")
    pseudo = [pseudo_observations(data[:, j]) for j in range(data.shape[1])]
    return build_vine_sequentially(pseudo, fit_edge or _transformation_fitter(n), tau_fn)
