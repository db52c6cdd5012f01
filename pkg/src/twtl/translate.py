"""Compile formulas to strict single-final DFAs, plain or annotated.

``translate(f, inf=False)`` builds the automaton of the formula itself;
``inf=True`` builds the automaton of the arbitrarily-relaxed formula (all
window deadlines lifted), annotated with the tree that monitoring and
synthesis consume.  The input must be negation-normalized, window bodies
must be disjunction-free, and every window must be feasible.

Window automata retry on failure: every symbol that blocks the body jumps
back to the body's initial state.  In the deadline-bounded form the body is
unrolled into truncated copies, one per remaining time unit; a restart from
depth ``j`` of copy ``k`` lands in copy ``k+j+1``, whose truncation budget
is exactly the time left after the consumed symbols.
"""

from __future__ import annotations

from typing import Optional

from .automaton import (
    Alphabet,
    Dfa,
    TreeNode,
    bfs_depths,
    check_unambiguous,
    relabel,
    relabel_tree,
    shortest_accepting_length,
    strictify,
    truncate,
)
from .errors import AmbiguityError, InfeasibleFormulaError, NormalizationError, TwtlError
from .formula import (
    And,
    Concat,
    Formula,
    Hold,
    Not,
    Or,
    Within,
    has_disjunction_in_window,
    is_feasible,
    propositions,
)

_TRAP = "#trap"


def _single_final(dfa: Dfa):
    if len(dfa.finals) != 1:
        raise TwtlError(f"expected a single accepting state, found {len(dfa.finals)}")
    (final,) = dfa.finals
    if dfa.trans[final]:
        raise TwtlError("accepting state must have no outgoing transitions")
    return final


def _vacate(tree: Optional[TreeNode]) -> Optional[TreeNode]:
    """Tree with the same shape but no state references; used when the
    automaton side collapsed to the empty language."""
    if tree is None:
        return None
    return TreeNode(
        op=tree.op,
        initials=frozenset(),
        finals=frozenset(),
        left=_vacate(tree.left),
        right=_vacate(tree.right),
        lo=tree.lo,
        hi=tree.hi,
        choices=(frozenset(), frozenset(), frozenset())
        if tree.choices is not None
        else None,
    )


def _empty(alphabet: Alphabet, tree: Optional[TreeNode]) -> Dfa:
    dfa = Dfa(alphabet, initial=0)
    dfa.tree = tree
    return dfa


def _merge_finals(dfa: Dfa) -> Dfa:
    """Collapse accepting states (all without out-edges) into one."""
    if len(dfa.finals) <= 1:
        return dfa
    finals = sorted(dfa.finals, key=repr)
    keep = finals[0]
    out = Dfa(dfa.alphabet, tree=dfa.tree)
    out.initial = keep if dfa.initial in dfa.finals else dfa.initial
    for state in dfa.states:
        if state not in dfa.finals:
            out.add_state(state)
    out.add_state(keep)
    for src, row in dfa.trans.items():
        if src in dfa.finals:
            continue
        for mask, dst in row.items():
            out.add_edge(src, mask, keep if dst in dfa.finals else dst)
    out.finals = {keep}
    return out


# ---------------------------------------------------------------------------
# Operator constructions

def build_hold(
    prop: Optional[str],
    duration: int,
    alphabet: Alphabet,
    negated: bool = False,
    inf: bool = False,
) -> Dfa:
    """Chain of duration+2 states; edges carry the matching symbols."""
    if prop is None:
        masks = list(alphabet.symbols())
    elif negated:
        masks = alphabet.masks_without(prop)
    else:
        masks = alphabet.masks_with(prop)
    tree = None
    if inf:
        tree = TreeNode("hold", initials=frozenset([0]), finals=frozenset([duration + 1]))
    dfa = Dfa(alphabet, initial=0, tree=tree)
    for i in range(duration + 1):
        dfa.add_edges(i, masks, i + 1)
    dfa.add_state(duration + 1)
    dfa.finals = {duration + 1}
    return dfa


def _expansion_maps(states, left_states, right_states):
    left = {u: set() for u in left_states}
    right = {v: set() for v in right_states}
    for state in states:
        u, v = state
        if u in left:
            left[u].add(state)
        if v in right:
            right[v].add(state)
    return left, right


def _and_tree(a1, a2, initials=frozenset(), finals=frozenset()):
    if a1.tree is None or a2.tree is None:
        return None
    return TreeNode("and", initials=initials, finals=finals, left=a1.tree, right=a2.tree)


def build_and(a1: Dfa, a2: Dfa) -> Dfa:
    """Synchronous product; a finished operand idles while the other runs."""
    if a1.is_empty_language() or a2.is_empty_language():
        tree = (
            TreeNode("and", left=_vacate(a1.tree), right=_vacate(a2.tree))
            if a1.tree is not None or a2.tree is not None
            else None
        )
        return _empty(a1.alphabet, tree)
    f1, f2 = _single_final(a1), _single_final(a2)
    start = (a1.initial, a2.initial)
    prod = Dfa(a1.alphabet, initial=start)
    final = (f1, f2)
    stack = [start]
    seen = {start}
    while stack:
        s1, s2 = stack.pop()
        if (s1, s2) == final:
            continue
        if s1 == f1:
            moves = [(m, (s1, d2)) for m, d2 in a2.trans[s2].items()]
        elif s2 == f2:
            moves = [(m, (d1, s2)) for m, d1 in a1.trans[s1].items()]
        else:
            moves = [
                (m, (d1, a2.trans[s2][m]))
                for m, d1 in a1.trans[s1].items()
                if m in a2.trans[s2]
            ]
        for mask, nxt in moves:
            prod.add_edge((s1, s2), mask, nxt)
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    if final in prod.states:
        prod.finals = {final}
    prod = strictify(prod)
    if prod.initial is None:
        tree = (
            TreeNode("and", left=_vacate(a1.tree), right=_vacate(a2.tree))
            if a1.tree is not None and a2.tree is not None
            else None
        )
        return _empty(a1.alphabet, tree)
    if a1.tree is not None and a2.tree is not None:
        left_map, right_map = _expansion_maps(prod.states, a1.states, a2.states)
        prod.tree = TreeNode(
            "and",
            initials=frozenset([start]) if start in prod.states else frozenset(),
            finals=frozenset([final]),
            left=relabel_tree(a1.tree, left_map, expand=True),
            right=relabel_tree(a2.tree, right_map, expand=True),
        )
    return relabel(prod)


def build_or(a1: Dfa, a2: Dfa) -> Dfa:
    """Product over trap-completed operands with accepting states merged.

    The incoming transitions of the merged accepting state are recorded on
    the tree as (state, symbol) choice sets: completing the left operand,
    the right one, or both at once.
    """
    if a1.is_empty_language() or a2.is_empty_language():
        if a1.is_empty_language() and a2.is_empty_language():
            tree = (
                TreeNode("or", left=_vacate(a1.tree), right=_vacate(a2.tree))
                if a1.tree is not None and a2.tree is not None
                else None
            )
            return _empty(a1.alphabet, tree)
        alive, dead, alive_left = (
            (a1, a2, True) if a2.is_empty_language() else (a2, a1, False)
        )
        out = relabel(alive)
        if alive.tree is not None and dead.tree is not None:
            final = _single_final(out)
            closing = frozenset(
                (src, mask)
                for src, row in out.trans.items()
                for mask, dst in row.items()
                if dst == final
            )
            empty3 = frozenset()
            out.tree = TreeNode(
                "or",
                initials=frozenset([out.initial]),
                finals=frozenset([final]),
                left=out.tree if alive_left else _vacate(dead.tree),
                right=_vacate(dead.tree) if alive_left else out.tree,
                choices=(
                    empty3,
                    closing if alive_left else empty3,
                    empty3 if alive_left else closing,
                ),
            )
        return out
    f1, f2 = _single_final(a1), _single_final(a2)

    def stepped(a, f, s, mask):
        if s == _TRAP:
            return _TRAP
        nxt = a.trans[s].get(mask)
        if nxt is None:
            return _TRAP if s != f else None
        return nxt

    start = (a1.initial, a2.initial)
    merged = (f1, f2)
    prod = Dfa(a1.alphabet, initial=start)
    both, left, right = set(), set(), set()
    stack = [start]
    seen = {start}
    while stack:
        state = stack.pop()
        s1, s2 = state
        for mask in prod.alphabet.symbols():
            d1 = stepped(a1, f1, s1, mask)
            d2 = stepped(a2, f2, s2, mask)
            if d1 == _TRAP and d2 == _TRAP:
                continue
            hit1, hit2 = d1 == f1, d2 == f2
            if hit1 or hit2:
                if hit1 and hit2:
                    both.add((state, mask))
                elif hit1:
                    left.add((state, mask))
                else:
                    right.add((state, mask))
                prod.add_edge(state, mask, merged)
                continue
            nxt = (d1, d2)
            prod.add_edge(state, mask, nxt)
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    if merged in prod.states:
        prod.finals = {merged}
    prod = strictify(prod)
    if prod.initial is None:
        tree = (
            TreeNode("or", left=_vacate(a1.tree), right=_vacate(a2.tree))
            if a1.tree is not None and a2.tree is not None
            else None
        )
        return _empty(a1.alphabet, tree)
    if a1.tree is not None and a2.tree is not None:
        left_map, right_map = _expansion_maps(prod.states, a1.states, a2.states)
        kept = set(prod.states)
        prod.tree = TreeNode(
            "or",
            initials=frozenset([start]),
            finals=frozenset([merged]),
            left=relabel_tree(a1.tree, left_map, expand=True),
            right=relabel_tree(a2.tree, right_map, expand=True),
            choices=tuple(
                frozenset(pair for pair in part if pair[0] in kept)
                for part in (both, left, right)
            ),
        )
    return relabel(prod)


def build_concat(a1: Dfa, a2: Dfa) -> Dfa:
    """Identify the left accepting state with the right initial state."""
    if a1.is_empty_language() or a2.is_empty_language():
        tree = (
            TreeNode("cat", left=_vacate(a1.tree), right=_vacate(a2.tree))
            if a1.tree is not None and a2.tree is not None
            else None
        )
        return _empty(a1.alphabet, tree)
    if not check_unambiguous(a1):
        raise AmbiguityError(
            "left operand of a concatenation must have an unambiguous language"
        )
    f1 = _single_final(a1)
    mapping = {s: i for i, s in enumerate(sorted(a1.states, key=repr))}
    left = relabel(a1, mapping)
    glue = mapping[f1]
    right = relabel(a2, {a2.initial: glue}, start=left.num_states())
    out = Dfa(left.alphabet)
    out.states = set(left.states) | set(right.states)
    out.trans = {s: {} for s in out.states}
    for part in (left, right):
        for src, row in part.trans.items():
            for mask, dst in row.items():
                out.add_edge(src, mask, dst)
    out.initial = left.initial
    (f2,) = right.finals
    out.finals = {f2}
    if left.tree is not None and right.tree is not None:
        out.tree = TreeNode(
            "cat",
            initials=frozenset([left.initial]),
            finals=frozenset([f2]),
            left=left.tree,
            right=right.tree,
        )
    return out


def build_within_inf(a: Dfa, lo: int, hi: int) -> Dfa:
    """Body with restart edges and ``lo`` leading delay states.

    Every symbol blocking a non-accepting body state jumps back to the
    body's initial state (unbounded retries), so the structure does not
    depend on the deadline ``hi``; the deadline is kept on the tree node
    for relaxation accounting.
    """
    if a.is_empty_language():
        tree = (
            TreeNode("within", left=_vacate(a.tree), lo=lo, hi=hi)
            if a.tree is not None
            else None
        )
        return _empty(a.alphabet, tree)
    body = relabel(a)
    final = _single_final(body)
    out = body.copy()
    for state in sorted(body.states):
        if state == final:
            continue
        for mask in out.alphabet.symbols():
            if mask not in out.trans[state]:
                out.add_edge(state, mask, body.initial)
    n = out.num_states()
    if lo > 0:
        all_masks = list(out.alphabet.symbols())
        for i in range(lo - 1):
            out.add_edges(n + i, all_masks, n + i + 1)
        out.add_edges(n + lo - 1, all_masks, body.initial)
        out.initial = n
    if body.tree is not None:
        out.tree = TreeNode(
            "within",
            initials=frozenset([out.initial]),
            finals=frozenset([final]),
            left=body.tree,
            lo=lo,
            hi=hi,
        )
    return out


def build_within(a: Dfa, lo: int, hi: int) -> Dfa:
    """Deadline-bounded window: truncated retry copies sharing one final.

    Copy k (1-based) is the body truncated to ``hi-lo+2-k`` steps, the
    symbol budget left after k-1 consumed symbols.  A blocking symbol read
    at depth j of copy k is consumed by a restart edge into copy ``k+j+1``
    when that copy exists; otherwise the word is rejected.
    """
    if a.is_empty_language():
        return _empty(a.alphabet, None)
    shortest = shortest_accepting_length(a)
    if shortest is None:
        raise InfeasibleFormulaError("window body accepts no word")
    retries = hi - lo - shortest + 2
    if retries <= 0:
        raise InfeasibleFormulaError(
            f"window [{lo},{hi}] is shorter than the body's minimal word"
        )
    out = Dfa(a.alphabet)
    final = -1
    out.add_state(final)
    initials = []
    depth_of = {}
    next_id = 0
    for k in range(1, retries + 1):
        copy = _merge_finals(truncate(a, hi - lo + 2 - k))
        copy_final = _single_final(copy)
        copy = relabel(copy, {copy_final: final}, start=next_id)
        next_id += copy.num_states() - 1
        for src, row in copy.trans.items():
            for mask, dst in row.items():
                out.add_edge(src, mask, dst)
        out.add_state(copy.initial)
        initials.append(copy.initial)
        for state, depth in bfs_depths(copy).items():
            if state != final:
                depth_of[state] = (k, depth)
    for state, (k, depth) in depth_of.items():
        target = k + depth + 1
        if target > retries:
            continue
        for mask in out.alphabet.symbols():
            if mask not in out.trans[state]:
                out.add_edge(state, mask, initials[target - 1])
    out.initial = initials[0]
    if lo > 0:
        all_masks = list(out.alphabet.symbols())
        base = next_id
        for i in range(lo - 1):
            out.add_edges(base + i, all_masks, base + i + 1)
        out.add_edges(base + lo - 1, all_masks, initials[0])
        out.initial = base
    out.finals = {final}
    return relabel(strictify(out))


# ---------------------------------------------------------------------------
# Recursive translation

def translate(
    f: Formula,
    alphabet: Optional[Alphabet] = None,
    inf: bool = False,
    check: bool = True,
) -> Dfa:
    """Build the automaton of ``f`` (``inf=False``) or of its arbitrarily
    relaxed version with annotation tree (``inf=True``).

    Preconditions (checked unless ``check=False``): negation appears only on
    atomic propositions, no window body contains a disjunction, and the
    formula is feasible.  Use :func:`twtl.formula.normalize` to establish
    the first two.
    """
    if check:
        if any(isinstance(n, Not) for n in _nodes(f)):
            raise NormalizationError("translate requires a negation-normalized formula")
        if has_disjunction_in_window(f):
            raise NormalizationError("translate requires disjunction-free window bodies")
        if not is_feasible(f):
            raise InfeasibleFormulaError("formula has a window shorter than its task")
    if alphabet is None:
        alphabet = Alphabet(propositions(f))

    def rec(node):
        if isinstance(node, Hold):
            return build_hold(node.prop, node.duration, alphabet, node.negated, inf)
        if isinstance(node, And):
            return build_and(rec(node.left), rec(node.right))
        if isinstance(node, Or):
            return build_or(rec(node.left), rec(node.right))
        if isinstance(node, Concat):
            return build_concat(rec(node.left), rec(node.right))
        if isinstance(node, Within):
            child = rec(node.child)
            if inf:
                return build_within_inf(child, node.lo, node.hi)
            return build_within(child, node.lo, node.hi)
        raise NormalizationError("translate requires a negation-normalized formula")

    result = rec(f)
    if check and not result.is_empty_language() and not check_unambiguous(result):
        raise AmbiguityError("translated automaton is ambiguous")
    return result


def _nodes(f):
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, (And, Or, Concat)):
            stack.extend((node.left, node.right))
        elif isinstance(node, (Not, Within)):
            stack.append(node.child)
