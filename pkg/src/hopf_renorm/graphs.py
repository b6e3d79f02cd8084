"""phi^3 Feynman graphs: construction, canonical labels, 1PI tests, subgraphs.

A graph is a connected multigraph whose internal vertices are trivalent and
whose external vertices are univalent.  External vertices carry an ordering
index 1..E.  Edges touching an external vertex are external legs; every other
edge is internal.  Self-loops count twice towards a vertex's valence.
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Sequence

from .errors import DomainError, GraphInvariantError, ResourceError

INTERNAL = "internal"
EXTERNAL = "external"

# Largest loop order enumerate_1pi_graphs will attempt.
MAX_LOOPS = 4

EMPTY_LABEL = "()"


@dataclass(frozen=True, order=True)
class Vertex:
    id: int
    kind: str
    ext_index: int | None = None


@dataclass(frozen=True)
class FeynmanGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        verts = tuple(sorted(self.vertices, key=lambda v: v.id))
        edges = tuple(sorted((min(a, b), max(a, b)) for a, b in self.edges))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)
        self._validate()

    # -- construction -----------------------------------------------------

    @classmethod
    def build(cls, n_internal: int, internal_edges: Iterable[tuple[int, int]],
              legs: Sequence[int]) -> "FeynmanGraph":
        """Internal vertices are 0..n_internal-1; leg j (ext index j+1) attaches to legs[j]."""
        verts = [Vertex(i, INTERNAL) for i in range(n_internal)]
        edges = list(internal_edges)
        for j, host in enumerate(legs):
            vid = n_internal + j
            verts.append(Vertex(vid, EXTERNAL, j + 1))
            edges.append((host, vid))
        return cls(tuple(verts), tuple(edges))

    @classmethod
    def empty(cls) -> "FeynmanGraph":
        return cls((), ())

    @classmethod
    def from_dict(cls, data: dict) -> "FeynmanGraph":
        try:
            verts = tuple(
                Vertex(int(v["id"]), v["kind"], v.get("ext_index"))
                for v in data["vertices"]
            )
            edges = tuple((int(a), int(b)) for a, b in data["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphInvariantError(f"malformed graph JSON: {exc}") from exc
        return cls(verts, edges)

    @classmethod
    def from_json(cls, text: str) -> "FeynmanGraph":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        verts = []
        for v in self.vertices:
            d = {"id": v.id, "kind": v.kind}
            if v.kind == EXTERNAL:
                d["ext_index"] = v.ext_index
            verts.append(d)
        return {"vertices": verts, "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    # -- invariants -------------------------------------------------------

    def _validate(self):
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise GraphInvariantError("duplicate vertex ids")
        kinds = {v.id: v for v in self.vertices}
        for v in self.vertices:
            if v.kind not in (INTERNAL, EXTERNAL):
                raise GraphInvariantError(f"vertex {v.id}: unknown kind {v.kind!r}")
            if v.kind == INTERNAL and v.ext_index is not None:
                raise GraphInvariantError(f"internal vertex {v.id} carries an ext_index")
        for a, b in self.edges:
            if a not in kinds or b not in kinds:
                raise GraphInvariantError(f"edge ({a},{b}) refers to a missing vertex")
        val = self.valences()
        for v in self.vertices:
            want = 3 if v.kind == INTERNAL else 1
            if val[v.id] != want:
                raise GraphInvariantError(
                    f"vertex {v.id} ({v.kind}) has valence {val[v.id]}, expected {want}")
        ext = sorted(v.ext_index for v in self.vertices if v.kind == EXTERNAL)
        if ext != list(range(1, len(ext) + 1)):
            raise GraphInvariantError(f"external indices {ext} are not 1..E")
        if self.vertices and not _connected(ids, self.edges):
            raise GraphInvariantError("graph is not connected")

    # -- basic structure --------------------------------------------------

    def valences(self) -> dict[int, int]:
        val = {v.id: 0 for v in self.vertices}
        for a, b in self.edges:
            val[a] += 1
            val[b] += 1
        return val

    @property
    def internal_vertices(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.vertices if v.kind == INTERNAL)

    @property
    def external_vertices(self) -> tuple[int, ...]:
        ext = [v for v in self.vertices if v.kind == EXTERNAL]
        return tuple(v.id for v in sorted(ext, key=lambda v: v.ext_index))

    @property
    def n_ext(self) -> int:
        return sum(1 for v in self.vertices if v.kind == EXTERNAL)

    def is_internal_edge(self, idx: int) -> bool:
        a, b = self.edges[idx]
        ints = set(self.internal_vertices)
        return a in ints and b in ints

    @property
    def internal_edge_indices(self) -> tuple[int, ...]:
        ints = set(self.internal_vertices)
        return tuple(i for i, (a, b) in enumerate(self.edges) if a in ints and b in ints)

    def legs(self) -> dict[int, int]:
        """Map external vertex id -> the vertex its leg attaches to."""
        out = {}
        ext = set(self.external_vertices)
        for a, b in self.edges:
            if a in ext:
                out[a] = b
            elif b in ext:
                out[b] = a
        return out

    def __len__(self):
        return len(self.vertices)


def _connected(ids, edges) -> bool:
    ids = list(ids)
    if not ids:
        return True
    adj = {i: [] for i in ids}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(ids)


# -- counting -----------------------------------------------------------------

def loop_number(g: FeynmanGraph) -> int:
    """First Betti number of the internal part: I_int - V_int + 1."""
    if not g.vertices:
        return 0
    n_int = len(g.internal_vertices)
    if n_int == 0:
        return 0
    return len(g.internal_edge_indices) - n_int + 1


def is_one_particle_irreducible(g: FeynmanGraph) -> bool:
    internal = g.internal_edge_indices
    if not internal:
        return False
    ids = [v.id for v in g.vertices]
    for idx in internal:
        rest = g.edges[:idx] + g.edges[idx + 1:]
        if not _connected(ids, rest):
            return False
    return True


def superficial_degree(g: FeynmanGraph, dim: int = 6) -> int:
    if not is_one_particle_irreducible(g):
        raise DomainError("superficial degree is defined for 1PI graphs only")
    return dim * loop_number(g) - 2 * len(g.internal_edge_indices)


def is_divergent(g: FeynmanGraph, dim: int = 6) -> bool:
    return superficial_degree(g, dim) >= 0


# -- canonical labelling --------------------------------------------------------

def _rank(keys):
    table = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [table[k] for k in keys]


def _refine(colors, adj, loops):
    n = len(colors)
    while True:
        sigs = [
            (colors[v], loops[v], tuple(sorted((colors[u], m) for u, m in adj[v].items())))
            for v in range(n)
        ]
        new = _rank(sigs)
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def canonical_certificate(initial, mult):
    """Exact canonical certificate of a small coloured multigraph.

    ``initial`` holds one sortable colour per vertex 0..n-1 and ``mult`` maps
    ``(u, v)`` with ``u <= v`` to an edge multiplicity.  Individualisation and
    refinement explores the full search tree, so the number of leaves carrying
    the minimal certificate equals the order of the vertex automorphism group.
    """
    n = len(initial)
    adj = [dict() for _ in range(n)]
    loops = [0] * n
    for (a, b), m in mult.items():
        if a == b:
            loops[a] += m
        else:
            adj[a][b] = adj[a].get(b, 0) + m
            adj[b][a] = adj[b].get(a, 0) + m
    best = None
    count = 0

    def leaf(colors):
        pos = colors
        verts = [None] * n
        for v in range(n):
            verts[pos[v]] = initial[v]
        edges = tuple(sorted(
            (min(pos[a], pos[b]), max(pos[a], pos[b]), m) for (a, b), m in mult.items()
        ))
        return tuple(verts), edges

    def visit(colors):
        nonlocal best, count
        colors = _refine(colors, adj, loops)
        cells = Counter(colors)
        if len(cells) == n:
            cert = leaf(colors)
            if best is None or cert < best:
                best, count = cert, 1
            elif cert == best:
                count += 1
            return
        target = min(c for c, k in cells.items() if k > 1)
        for v in range(n):
            if colors[v] == target:
                visit(_rank([(c, 0 if u == v else 1) for u, c in enumerate(colors)]))

    if n:
        visit(_rank(initial))
    else:
        best, count = ((), ()), 1
    return best, count


def _edge_symmetry(mult) -> int:
    out = 1
    for (a, b), m in mult.items():
        out *= factorial(m) * (2 ** m if a == b else 1)
    return out


def _graph_certificate(g: FeynmanGraph, fix_externals: bool):
    index = {v.id: i for i, v in enumerate(g.vertices)}
    initial = []
    for v in g.vertices:
        if v.kind == INTERNAL:
            initial.append((0, 0))
        else:
            initial.append((1, v.ext_index if fix_externals else 0))
    mult = Counter()
    for a, b in g.edges:
        ia, ib = index[a], index[b]
        mult[(min(ia, ib), max(ia, ib))] += 1
    cert, n_aut = canonical_certificate(initial, mult)
    return cert, n_aut, mult


def _cert_string(g: FeynmanGraph, cert, sep: str) -> str:
    if not g.vertices:
        return EMPTY_LABEL
    _, edges = cert
    body = ".".join(f"{a}-{b}" + (f"x{m}" if m > 1 else "") for a, b, m in edges)
    return f"i{len(g.internal_vertices)}e{g.n_ext}{sep}{body}"


def canonical_form(g: FeynmanGraph, fix_externals: bool = True) -> tuple[str, int]:
    """Return (canonical label, |Aut(g)|).

    Automorphisms fix external legs pointwise when ``fix_externals`` is set;
    the count includes permutations of parallel edges and self-loop flips.
    """
    cert, n_aut, mult = _graph_certificate(g, fix_externals)
    return _cert_string(g, cert, "|" if fix_externals else ":"), n_aut * _edge_symmetry(mult)


def generator_label(g: FeynmanGraph) -> str:
    """Label of the Hopf generator x_g: canonical form with external legs unordered."""
    return canonical_form(g, fix_externals=False)[0]


def symmetry_factor(g: FeynmanGraph | None) -> Fraction:
    if g is None or not g.vertices:
        return Fraction(1)
    return Fraction(1, canonical_form(g)[1])


def relabeled(g: FeynmanGraph, perm: dict[int, int]) -> FeynmanGraph:
    """Copy of g with vertex ids renamed through ``perm``."""
    verts = tuple(Vertex(perm[v.id], v.kind, v.ext_index) for v in g.vertices)
    edges = tuple((perm[a], perm[b]) for a, b in g.edges)
    return FeynmanGraph(verts, edges)


# -- subgraphs --------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Component:
    vertices: tuple[int, ...]
    edges: tuple[int, ...]


@dataclass(frozen=True)
class SubgraphEmbedding:
    parent: FeynmanGraph = field(compare=False, repr=False)
    components: tuple[Component, ...]

    @property
    def parent_label(self) -> str:
        return canonical_form(self.parent)[0]

    def component_graphs(self) -> list[FeynmanGraph]:
        return [component_graph(self.parent, c) for c in self.components]


def component_graph(g: FeynmanGraph, comp: Component) -> FeynmanGraph:
    """The Feynman graph formed by a component together with its induced external legs."""
    local = {v: i for i, v in enumerate(comp.vertices)}
    inner = []
    degree = Counter()
    for idx in comp.edges:
        a, b = g.edges[idx]
        inner.append((local[a], local[b]))
        degree[a] += 1
        degree[b] += 1
    legs = []
    for v in comp.vertices:
        legs.extend([local[v]] * (3 - degree[v]))
    return FeynmanGraph.build(len(comp.vertices), inner, legs)


def _component_of(g: FeynmanGraph, edge_set) -> Component:
    verts = set()
    for idx in edge_set:
        verts.update(g.edges[idx])
    return Component(tuple(sorted(verts)), tuple(sorted(edge_set)))


def _connected_admissible(g: FeynmanGraph, dim: int) -> list[Component]:
    internal = g.internal_edge_indices
    found = []
    full = set(internal)
    for r in range(1, len(internal) + 1):
        for subset in itertools.combinations(internal, r):
            if set(subset) == full:
                continue
            comp = _component_of(g, subset)
            if not _connected(comp.vertices, [g.edges[i] for i in subset]):
                continue
            cg = component_graph(g, comp)
            if is_one_particle_irreducible(cg) and superficial_degree(cg, dim) >= 0:
                found.append(comp)
    return sorted(found)


def enumerate_admissible_subgraphs(g: FeynmanGraph, dim: int = 6) -> list[SubgraphEmbedding]:
    """All proper admissible subgraphs: disjoint unions of divergent 1PI components."""
    if not is_one_particle_irreducible(g):
        raise DomainError("admissible subgraphs are defined for 1PI graphs")
    comps = _connected_admissible(g, dim)
    out = []

    def extend(start, chosen, used):
        for i in range(start, len(comps)):
            c = comps[i]
            if used.isdisjoint(c.vertices):
                picked = chosen + [c]
                out.append(SubgraphEmbedding(g, tuple(picked)))
                extend(i + 1, picked, used | set(c.vertices))

    extend(0, [], set())
    return out


def _check_admissible(g: FeynmanGraph, s: SubgraphEmbedding, dim: int):
    if not s.components:
        raise DomainError("empty subgraph is not a proper admissible subgraph")
    used = set()
    all_edges = set()
    internal = set(g.internal_edge_indices)
    for c in s.components:
        if used.intersection(c.vertices):
            raise DomainError("subgraph components are not vertex-disjoint")
        used.update(c.vertices)
        if not set(c.edges) <= internal:
            raise DomainError("subgraph uses a non-internal edge")
        if _component_of(g, c.edges) != c:
            raise DomainError("component vertex set does not match its edges")
        cg = component_graph(g, c)
        if not is_one_particle_irreducible(cg) or superficial_degree(cg, dim) < 0:
            raise DomainError("component is not a divergent 1PI graph")
        all_edges.update(c.edges)
    if all_edges == internal:
        raise DomainError("the full graph is not a proper subgraph")


def contract(g: FeynmanGraph, s: SubgraphEmbedding, dim: int = 6) -> FeynmanGraph:
    """Gamma // gamma: collapse each component to a vertex.

    A component with two external legs collapses to a propagator: the
    resulting bivalent vertex is removed and its two edges are joined.
    """
    _check_admissible(g, s, dim)
    owner = {}
    next_id = max(v.id for v in g.vertices) + 1
    new_ids = []
    for c in s.components:
        for v in c.vertices:
            owner[v] = next_id
        new_ids.append(next_id)
        next_id += 1
    removed = {idx for c in s.components for idx in c.edges}
    edges = []
    for idx, (a, b) in enumerate(g.edges):
        if idx in removed:
            continue
        edges.append((owner.get(a, a), owner.get(b, b)))
    verts = [v for v in g.vertices if v.id not in owner]
    for w in new_ids:
        ends = [e for e in edges if w in e]
        valence = sum(2 if e[0] == e[1] else 1 for e in ends)
        if valence == 3:
            verts.append(Vertex(w, INTERNAL))
        elif valence == 2:
            if len(ends) != 2:
                raise DomainError("contraction leaves an isolated propagator loop")
            for e in ends:
                edges.remove(e)
            a = ends[0][0] if ends[0][1] == w else ends[0][1]
            b = ends[1][0] if ends[1][1] == w else ends[1][1]
            edges.append((a, b))
        else:
            raise DomainError(f"collapsed vertex has unsupported valence {valence}")
    return FeynmanGraph(tuple(verts), tuple(edges))


# -- enumeration --------------------------------------------------------------------

def _state_key(caps, hosts, mult):
    initial = [(1 if hosts[i] else 0, caps[i]) for i in range(len(caps))]
    return canonical_certificate(initial, mult)[0]


def _graphs_at_order(loops: int, ext_legs: int, allow_self_loops: bool) -> list[FeynmanGraph]:
    n_int = 2 * loops + ext_legs - 2
    n_edges = 3 * loops + ext_legs - 3
    if n_int < max(ext_legs, 1) or n_edges < 1:
        return []
    hosts = [i < ext_legs for i in range(n_int)]
    self_loops = allow_self_loops and ext_legs <= 1
    states = {None: ([2 if h else 3 for h in hosts], Counter())}
    for _ in range(n_edges):
        nxt = {}
        for caps, mult in states.values():
            v = next((i for i, c in enumerate(caps) if c > 0), None)
            if v is None:
                continue
            for u in range(v, n_int):
                if u == v and (not self_loops or caps[v] < 2):
                    continue
                if u != v and caps[u] == 0:
                    continue
                c2 = list(caps)
                c2[v] -= 1
                c2[u] -= 1
                m2 = Counter(mult)
                m2[(v, u)] += 1
                key = _state_key(c2, hosts, m2)
                if key not in nxt:
                    nxt[key] = (c2, m2)
        states = nxt
    out = {}
    for caps, mult in states.values():
        if any(caps):
            continue
        edges = [e for e, m in mult.items() for _ in range(m)]
        try:
            g = FeynmanGraph.build(n_int, edges, list(range(ext_legs)))
        except GraphInvariantError:
            continue
        if is_one_particle_irreducible(g):
            out.setdefault(generator_label(g), g)
    return [out[k] for k in sorted(out)]


def enumerate_1pi_graphs(max_loops: int, ext_legs: int, allow_self_loops: bool = True,
                         bound: int = MAX_LOOPS) -> list[FeynmanGraph]:
    """One representative per isomorphism class (external legs unordered), loops 1..max_loops."""
    if max_loops > bound:
        raise ResourceError(f"max_loops={max_loops} exceeds the configured bound {bound}")
    if max_loops < 0 or ext_legs < 0:
        raise DomainError("max_loops and ext_legs must be non-negative")
    out = []
    for loops in range(1, max_loops + 1):
        out.extend(_graphs_at_order(loops, ext_legs, allow_self_loops))
    return out


# -- reference fixtures ---------------------------------------------------------------

def bubble() -> FeynmanGraph:
    """One-loop self-energy B."""
    return FeynmanGraph.build(2, [(0, 1), (0, 1)], [0, 1])


def triangle() -> FeynmanGraph:
    """One-loop vertex graph T."""
    return FeynmanGraph.build(3, [(0, 1), (1, 2), (0, 2)], [0, 1, 2])


def nested_self_energy() -> FeynmanGraph:
    """Gamma_2: a bubble inserted into one line of a bubble.

    Vertices v1..v4 are 0..3 here; externals sit on v1 and v2.
    """
    return FeynmanGraph.build(4, [(0, 1), (0, 2), (2, 3), (2, 3), (3, 1)], [0, 1])


def box() -> FeynmanGraph:
    """One-loop four-point graph (convergent in six dimensions)."""
    return FeynmanGraph.build(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [0, 1, 2, 3])


def tree_vertex() -> FeynmanGraph:
    """A single internal vertex with three external legs."""
    return FeynmanGraph.build(1, [], [0, 0, 0])
