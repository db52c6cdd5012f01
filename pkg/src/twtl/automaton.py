"""Deterministic finite automata over symbol sets, with annotation trees.

Symbols are subsets of the proposition alphabet, canonicalized as bitmasks
through :class:`Alphabet`.  Automata are blocking (the transition map is
partial) and, once built, treated as immutable values.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Tuple

from .errors import TwtlError

DUMP_FORMAT_VERSION = 1


class Alphabet:
    """Proposition names mapped to bit positions; symbols are bitmasks."""

    def __init__(self, props: Iterable[str], max_props: int = 16):
        names = tuple(sorted(set(props)))
        if len(names) > max_props:
            raise TwtlError(
                f"{len(names)} propositions exceed the configured cap of "
                f"{max_props}; raise max_props explicitly for large alphabets"
            )
        self.props = names
        self.bit = {name: 1 << i for i, name in enumerate(names)}

    def __len__(self):
        return len(self.props)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.props == other.props

    def __hash__(self):
        return hash(self.props)

    def __repr__(self):
        return f"Alphabet({list(self.props)!r})"

    @property
    def size(self):
        """Number of symbols, 2**len(props)."""
        return 1 << len(self.props)

    def symbols(self):
        return range(self.size)

    def mask(self, names: Iterable[str]) -> int:
        value = 0
        for name in names:
            try:
                value |= self.bit[name]
            except KeyError:
                raise TwtlError(f"proposition {name!r} not in {self!r}") from None
        return value

    def names(self, mask: int) -> FrozenSet[str]:
        return frozenset(p for p in self.props if mask & self.bit[p])

    def word_to_masks(self, word) -> Tuple[int, ...]:
        return tuple(self.mask(symbol) for symbol in word)

    def masks_with(self, prop: str):
        """Symbols containing the proposition."""
        bit = self.bit[prop]
        return [m for m in self.symbols() if m & bit]

    def masks_without(self, prop: str):
        bit = self.bit[prop]
        return [m for m in self.symbols() if not m & bit]

    def format_symbol(self, mask: int) -> str:
        names = sorted(self.names(mask))
        return ",".join(names) if names else "-"

    def parse_symbol(self, text: str) -> int:
        text = text.strip()
        if text in ("-", ""):
            return 0
        return self.mask(part.strip() for part in text.split(","))


@dataclass
class TreeNode:
    """Annotation-tree node mirroring the formula's syntax tree.

    ``initials``/``finals`` are the automaton states where the node's
    subformula starts/finishes tracking.  Disjunction nodes carry
    ``choices``: the incoming transitions of the merged accepting state,
    partitioned by whether they complete the left, right, or both operands.
    """

    op: str  # 'hold' | 'and' | 'or' | 'cat' | 'within'
    initials: frozenset = frozenset()
    finals: frozenset = frozenset()
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    lo: int = 0
    hi: int = 0
    choices: Optional[Tuple[frozenset, frozenset, frozenset]] = None  # (both, left, right)

    def clone(self):
        return TreeNode(
            op=self.op,
            initials=self.initials,
            finals=self.finals,
            left=self.left.clone() if self.left else None,
            right=self.right.clone() if self.right else None,
            lo=self.lo,
            hi=self.hi,
            choices=self.choices,
        )

    def post_order(self):
        if self.left is not None:
            yield from self.left.post_order()
        if self.right is not None:
            yield from self.right.post_order()
        yield self

    def within_nodes(self):
        """Window nodes in post-order, the shared relaxation index base."""
        return [n for n in self.post_order() if n.op == "within"]

    def is_primitive(self):
        return not self.within_nodes()


class Dfa:
    """Blocking DFA with optional annotation tree.

    ``trans`` maps state -> symbol mask -> successor.  States are hashable
    labels; published automata use dense integers (see :func:`relabel`),
    construction intermediates may use tuples.
    """

    def __init__(self, alphabet: Alphabet, initial=None, tree: Optional[TreeNode] = None):
        self.alphabet = alphabet
        self.states = set()
        self.initial = initial
        self.finals = set()
        self.trans: Dict[Hashable, Dict[int, Hashable]] = {}
        self.tree = tree
        if initial is not None:
            self.add_state(initial)

    # -- construction -------------------------------------------------------

    def add_state(self, state):
        if state not in self.states:
            self.states.add(state)
            self.trans[state] = {}
        return state

    def add_edge(self, src, mask, dst):
        self.add_state(src)
        self.add_state(dst)
        row = self.trans[src]
        if mask in row and row[mask] != dst:
            raise TwtlError(
                f"nondeterminism at state {src!r} on symbol {mask}: "
                f"{row[mask]!r} vs {dst!r}"
            )
        row[mask] = dst

    def add_edges(self, src, masks, dst):
        for mask in masks:
            self.add_edge(src, mask, dst)

    # -- queries -------------------------------------------------------------

    def step(self, state, mask):
        return self.trans.get(state, {}).get(mask)

    def accepts(self, masks: Iterable[int]) -> bool:
        state = self.initial
        if state is None or state not in self.states:
            return False
        for mask in masks:
            state = self.step(state, mask)
            if state is None:
                return False
        return state in self.finals

    def accepts_word(self, word) -> bool:
        return self.accepts(self.alphabet.word_to_masks(word))

    def num_states(self):
        return len(self.states)

    def num_edges(self):
        """State pairs connected by at least one symbol."""
        return sum(len(set(row.values())) for row in self.trans.values())

    def num_transitions(self):
        """(state, symbol) pairs with a defined successor."""
        return sum(len(row) for row in self.trans.values())

    def edges(self):
        """Deterministic iteration of (src, dst, sorted mask list)."""
        for src in sorted(self.states, key=repr):
            grouped: Dict[Hashable, List[int]] = {}
            for mask, dst in self.trans[src].items():
                grouped.setdefault(dst, []).append(mask)
            for dst in sorted(grouped, key=repr):
                yield src, dst, sorted(grouped[dst])

    def is_empty_language(self):
        if self.initial is None or self.initial not in self.states:
            return True
        reach = _forward(self)
        return not (reach & self.finals)

    def copy(self):
        out = Dfa(self.alphabet, tree=self.tree.clone() if self.tree else None)
        out.states = set(self.states)
        out.initial = self.initial
        out.finals = set(self.finals)
        out.trans = {s: dict(row) for s, row in self.trans.items()}
        return out

    def __repr__(self):
        return (
            f"Dfa(states={self.num_states()}, transitions={self.num_transitions()},"
            f" finals={len(self.finals)})"
        )


# ---------------------------------------------------------------------------
# Reachability helpers

def _forward(dfa: Dfa):
    if dfa.initial is None or dfa.initial not in dfa.states:
        return set()
    seen = {dfa.initial}
    queue = deque([dfa.initial])
    while queue:
        state = queue.popleft()
        for dst in dfa.trans[state].values():
            if dst not in seen:
                seen.add(dst)
                queue.append(dst)
    return seen


def _backward(dfa: Dfa):
    preds: Dict[Hashable, set] = {s: set() for s in dfa.states}
    for src, row in dfa.trans.items():
        for dst in row.values():
            preds[dst].add(src)
    seen = set(dfa.finals)
    queue = deque(seen)
    while queue:
        state = queue.popleft()
        for src in preds.get(state, ()):
            if src not in seen:
                seen.add(src)
                queue.append(src)
    return seen


def bfs_depths(dfa: Dfa):
    """Breadth-first depth of every reachable state."""
    depths = {}
    if dfa.initial is None or dfa.initial not in dfa.states:
        return depths
    depths[dfa.initial] = 0
    queue = deque([dfa.initial])
    while queue:
        state = queue.popleft()
        for dst in dfa.trans[state].values():
            if dst not in depths:
                depths[dst] = depths[state] + 1
                queue.append(dst)
    return depths


def shortest_accepting_length(dfa: Dfa) -> Optional[int]:
    """Length of the shortest accepted word (unit-cost BFS)."""
    depths = bfs_depths(dfa)
    lengths = [depths[f] for f in dfa.finals if f in depths]
    return min(lengths) if lengths else None


# ---------------------------------------------------------------------------
# Relabeling

def relabel_tree(tree: Optional[TreeNode], mapping, expand: bool = False) -> Optional[TreeNode]:
    """Rewrite all state references in an annotation tree.

    With ``expand=True`` the mapping sends a state to a set of states and
    the rewritten sets are unions; otherwise it is state-to-state.  States
    missing from the mapping raise ``KeyError``.
    """
    if tree is None:
        return None

    def image(state):
        if expand:
            return frozenset(mapping[state])
        return frozenset((mapping[state],))

    def rewrite(node):
        choices = None
        if node.choices is not None:
            both, left, right = node.choices
            choices = tuple(
                frozenset((s2, mask) for s, mask in part for s2 in image(s))
                for part in (both, left, right)
            )
        return TreeNode(
            op=node.op,
            initials=frozenset(s2 for s in node.initials for s2 in image(s)),
            finals=frozenset(s2 for s in node.finals for s2 in image(s)),
            left=rewrite(node.left) if node.left else None,
            right=rewrite(node.right) if node.right else None,
            lo=node.lo,
            hi=node.hi,
            choices=choices,
        )

    return rewrite(tree)


def relabel(dfa: Dfa, mapping: Optional[dict] = None, start: int = 0) -> Dfa:
    """Relabel states; unspecified states get fresh integers from ``start``.

    The mapping must be injective.  The annotation tree, when present, is
    relabeled along.
    """
    mapping = dict(mapping) if mapping else {}
    used = set(mapping.values())
    if len(used) != len(mapping):
        raise TwtlError("relabel mapping is not injective")
    next_id = start
    for state in sorted(dfa.states, key=repr):
        if state not in mapping:
            while next_id in used:
                next_id += 1
            mapping[state] = next_id
            used.add(next_id)
            next_id += 1
    out = Dfa(dfa.alphabet)
    out.states = {mapping[s] for s in dfa.states}
    out.trans = {mapping[s]: {} for s in dfa.states}
    for src, row in dfa.trans.items():
        out.trans[mapping[src]] = {mask: mapping[dst] for mask, dst in row.items()}
    out.initial = mapping[dfa.initial] if dfa.initial is not None else None
    out.finals = {mapping[s] for s in dfa.finals}
    out.tree = relabel_tree(dfa.tree, mapping)
    return out


# ---------------------------------------------------------------------------
# Structural operations

def strictify(dfa: Dfa) -> Dfa:
    """Drop states not reachable from the initial or not reaching a final."""
    keep = _forward(dfa) & _backward(dfa)
    out = Dfa(dfa.alphabet, tree=dfa.tree.clone() if dfa.tree else None)
    out.states = set(keep)
    out.trans = {
        s: {m: d for m, d in dfa.trans[s].items() if d in keep} for s in keep
    }
    out.initial = dfa.initial if dfa.initial in keep else None
    out.finals = set(dfa.finals) & keep
    return out


def _unique_depths(dfa: Dfa):
    """BFS depths if every edge advances depth by exactly one, else None."""
    depths = bfs_depths(dfa)
    for src, row in dfa.trans.items():
        if src not in depths:
            continue
        for dst in row.values():
            if depths.get(dst) != depths[src] + 1:
                return None
    return depths


def truncate(dfa: Dfa, limit: int) -> Dfa:
    """Restrict the language to words of length at most ``limit``.

    When every state sits at a single depth (hold chains and their
    synchronous products), this prunes transitions beyond the horizon and
    keeps state identities.  Otherwise states are unrolled per depth so the
    length bound is exact; the result is strict either way.
    """
    if dfa.initial is None or dfa.initial not in dfa.states:
        return strictify(dfa)
    depths = _unique_depths(dfa)
    if depths is not None:
        out = dfa.copy()
        out.trans = {
            s: (
                {m: d for m, d in row.items() if depths.get(s, limit) < limit}
                if s in depths
                else {}
            )
            for s, row in out.trans.items()
        }
        return strictify(out)
    out = Dfa(dfa.alphabet)
    out.initial = (dfa.initial, 0)
    out.add_state(out.initial)
    queue = deque([out.initial])
    seen = {out.initial}
    while queue:
        state, depth = queue.popleft()
        if depth >= limit:
            continue
        for mask, dst in dfa.trans[state].items():
            nxt = (dst, depth + 1)
            out.add_edge((state, depth), mask, nxt)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    out.finals = {s for s in out.states if s[0] in dfa.finals}
    return strictify(out)


def is_finite_language(dfa: Dfa) -> bool:
    """True iff the accepted language is finite (strict part is acyclic)."""
    strict = strictify(dfa)
    color = {}

    def has_cycle(state):
        color[state] = 1
        for dst in set(strict.trans[state].values()):
            c = color.get(dst)
            if c == 1:
                return True
            if c is None and has_cycle(dst):
                return True
        color[state] = 2
        return False

    return not any(has_cycle(s) for s in strict.states if s not in color)


def check_unambiguous(dfa: Dfa) -> bool:
    """True iff no accepted word is a proper prefix of another.

    On the strict form, that is exactly: no accepting state has an outgoing
    transition (any such transition leads to a co-reachable state and hence
    to another acceptance).
    """
    strict = strictify(dfa)
    return all(not strict.trans[s] for s in strict.finals)


def prefix_overlap(a: Dfa, b: Dfa) -> bool:
    """True when some word of one language is a proper prefix of the other's.

    Used to diagnose disjunctions whose merged automaton trims the union to
    its shortest witnesses.
    """
    sa, sb = strictify(a), strictify(b)
    if sa.initial is None or sb.initial is None:
        return False
    start = (sa.initial, sb.initial)
    seen = {start}
    queue = deque([start])
    while queue:
        u, v = queue.popleft()
        u_final = u in sa.finals
        v_final = v in sb.finals
        if u_final and v is not None and not v_final:
            return True
        if v_final and u is not None and not u_final:
            return True
        if u_final or v_final:
            continue
        for mask in set(sa.trans.get(u, {})) | set(sb.trans.get(v, {})):
            nu = sa.trans.get(u, {}).get(mask) if u is not None else None
            nv = sb.trans.get(v, {}).get(mask) if v is not None else None
            if nu is None and nv is None:
                continue
            nxt = (nu, nv)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


# ---------------------------------------------------------------------------
# Export

def _guard_label(alphabet: Alphabet, masks) -> str:
    masks = sorted(masks)
    if len(masks) == alphabet.size:
        return "true"
    for prop in alphabet.props:
        if masks == alphabet.masks_with(prop):
            return prop
        if masks == alphabet.masks_without(prop):
            return f"!{prop}"
    parts = []
    for mask in masks:
        lits = [p if mask & alphabet.bit[p] else f"!{p}" for p in alphabet.props]
        parts.append(" & ".join(lits) if lits else "true")
    return " | ".join(f"({p})" if " & " in p else p for p in parts)


def to_dot(dfa: Dfa, name: str = "dfa") -> str:
    """Graphviz text; accepting states double-circled, guards on edges."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  node [shape=circle];']
    order = {s: i for i, s in enumerate(sorted(dfa.states, key=repr))}
    for state in sorted(dfa.states, key=repr):
        shape = "doublecircle" if state in dfa.finals else "circle"
        lines.append(f'  n{order[state]} [label="{state}" shape={shape}];')
    if dfa.initial is not None and dfa.initial in dfa.states:
        lines.append("  init [shape=point];")
        lines.append(f"  init -> n{order[dfa.initial]};")
    for src, dst, masks in dfa.edges():
        label = _guard_label(dfa.alphabet, masks)
        lines.append(f'  n{order[src]} -> n{order[dst]} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dumps(dfa: Dfa) -> str:
    """Versioned plain-text dump with stable ordering, for golden tests.

    Line format:
        twtl-dfa <version>
        ap <prop>...
        state <id>
        initial <id>
        final <id>
        edge <src> <dst> <symbol>[;<symbol>...]
    where a symbol is a comma-separated proposition list, '-' for the empty
    set. States must be integers.
    """
    lines = [f"twtl-dfa {DUMP_FORMAT_VERSION}", "ap " + " ".join(dfa.alphabet.props)]
    for state in sorted(dfa.states):
        lines.append(f"state {state}")
    if dfa.initial is not None:
        lines.append(f"initial {dfa.initial}")
    for state in sorted(dfa.finals):
        lines.append(f"final {state}")
    for src in sorted(dfa.states):
        grouped: Dict[Hashable, List[int]] = {}
        for mask, dst in dfa.trans[src].items():
            grouped.setdefault(dst, []).append(mask)
        for dst in sorted(grouped):
            syms = ";".join(dfa.alphabet.format_symbol(m) for m in sorted(grouped[dst]))
            lines.append(f"edge {src} {dst} {syms}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Dfa:
    """Parse a dump produced by :func:`dumps`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("twtl-dfa"):
        raise TwtlError("not a twtl-dfa dump")
    version = int(lines[0].split()[1])
    if version != DUMP_FORMAT_VERSION:
        raise TwtlError(f"unsupported dump version {version}")
    if not lines[1].startswith("ap"):
        raise TwtlError("dump missing alphabet line")
    alphabet = Alphabet(lines[1].split()[1:])
    dfa = Dfa(alphabet)
    pending = []
    for line in lines[2:]:
        kind, *rest = line.split(None, 1)
        if kind == "state":
            dfa.add_state(int(rest[0]))
        elif kind == "initial":
            dfa.initial = int(rest[0])
            dfa.add_state(dfa.initial)
        elif kind == "final":
            state = int(rest[0])
            dfa.add_state(state)
            dfa.finals.add(state)
        elif kind == "edge":
            src, dst, syms = rest[0].split(None, 2)
            for sym in syms.split(";"):
                dfa.add_edge(int(src), alphabet.parse_symbol(sym), int(dst))
        else:
            raise TwtlError(f"unknown dump line {line!r}")
    return dfa
