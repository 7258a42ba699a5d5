"""Regular path query expressions: parsing, DFA compilation, matching.

Query syntax (see README):

    expr   := term ('|' term)*
    term   := factor ('.' factor)*
    factor := base ('*' | '+')?
    base   := IDENT | '_' | 'eps' | '(' expr ')'

``_`` matches any single edge tag, ``eps`` the empty word.  Alternation is
spelled ``|`` because a bare ``+`` is postfix one-or-more.

Compilation runs Thompson construction, subset construction over the given
tag alphabet, then Hopcroft minimization.  The resulting DFA is total: a
designated dead state (when one exists) absorbs all undefined moves.  Each
state stores explicit moves plus a default target so wide alphabets stay
compact.
"""

from __future__ import annotations

from dataclasses import dataclass


class RegexAst:
    """Base class for query expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Epsilon(RegexAst):
    pass


@dataclass(frozen=True)
class Wildcard(RegexAst):
    pass


@dataclass(frozen=True)
class Symbol(RegexAst):
    tag: str


@dataclass(frozen=True)
class Concat(RegexAst):
    left: RegexAst
    right: RegexAst


@dataclass(frozen=True)
class Alt(RegexAst):
    left: RegexAst
    right: RegexAst


@dataclass(frozen=True)
class Star(RegexAst):
    inner: RegexAst


@dataclass(frozen=True)
class Plus(RegexAst):
    inner: RegexAst


class RegexSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"query syntax error at position {pos}: {message}")
        self.pos = pos


def parse_regex(text: str) -> RegexAst:
    """Parse query text into an AST; raises RegexSyntaxError with a position."""
    toks = _tokenize(text)
    ast, idx = _parse_expr(toks, 0)
    if idx != len(toks):
        raise RegexSyntaxError(f"unexpected {toks[idx][0]!r}", toks[idx][1])
    return ast


def _tokenize(text: str) -> list[tuple[str, int]]:
    toks = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "|.*+()_":
            toks.append((c, i))
            i += 1
            continue
        if c.isalpha():
            j = i + 1
            while j < len(text) and (text[j].isalnum()):
                j += 1
            toks.append((text[i:j], i))
            i = j
            continue
        raise RegexSyntaxError(f"unexpected character {c!r}", i)
    if not toks:
        raise RegexSyntaxError("empty query", 0)
    return toks


def _parse_expr(toks, i):
    left, i = _parse_term(toks, i)
    while i < len(toks) and toks[i][0] == "|":
        right, i = _parse_term(toks, i + 1)
        left = Alt(left, right)
    return left, i


def _parse_term(toks, i):
    left, i = _parse_factor(toks, i)
    while i < len(toks) and toks[i][0] == ".":
        right, i = _parse_factor(toks, i + 1)
        left = Concat(left, right)
    return left, i


def _parse_factor(toks, i):
    base, i = _parse_base(toks, i)
    while i < len(toks) and toks[i][0] in ("*", "+"):
        base = Star(base) if toks[i][0] == "*" else Plus(base)
        i += 1
    return base, i


def _parse_base(toks, i):
    if i >= len(toks):
        raise RegexSyntaxError("unexpected end of query", toks[-1][1] + 1)
    tok, pos = toks[i]
    if tok == "(":
        inner, i = _parse_expr(toks, i + 1)
        if i >= len(toks) or toks[i][0] != ")":
            raise RegexSyntaxError("missing ')'", pos)
        return inner, i + 1
    if tok == "_":
        return Wildcard(), i + 1
    if tok == "eps":
        return Epsilon(), i + 1
    if tok[0].isalpha():
        return Symbol(tok), i + 1
    raise RegexSyntaxError(f"unexpected {tok!r}", pos)


def regex_to_text(ast: RegexAst) -> str:
    """Canonical textual form that reparses to an equal AST."""
    if isinstance(ast, Epsilon):
        return "eps"
    if isinstance(ast, Wildcard):
        return "_"
    if isinstance(ast, Symbol):
        return ast.tag
    if isinstance(ast, Concat):
        return f"({regex_to_text(ast.left)}.{regex_to_text(ast.right)})"
    if isinstance(ast, Alt):
        return f"({regex_to_text(ast.left)}|{regex_to_text(ast.right)})"
    if isinstance(ast, Star):
        return f"({regex_to_text(ast.inner)})*"
    if isinstance(ast, Plus):
        return f"({regex_to_text(ast.inner)})+"
    raise TypeError(f"not a regex node: {ast!r}")


def ast_symbols(ast: RegexAst) -> set[str]:
    if isinstance(ast, Symbol):
        return {ast.tag}
    if isinstance(ast, (Concat, Alt)):
        return ast_symbols(ast.left) | ast_symbols(ast.right)
    if isinstance(ast, (Star, Plus)):
        return ast_symbols(ast.inner)
    return set()


def ast_size(ast: RegexAst) -> int:
    """Operator/leaf count, used for benchmark query-size columns."""
    if isinstance(ast, (Concat, Alt)):
        return 1 + ast_size(ast.left) + ast_size(ast.right)
    if isinstance(ast, (Star, Plus)):
        return 1 + ast_size(ast.inner)
    return 1


def match_ifq(ast: RegexAst) -> list[str] | None:
    """Recognize the indexed-filter shape ``_*.a1._*.a2...ak._*`` syntactically.

    Returns [a1..ak] on a match (k=0 for a bare ``_*``), else None.  Only the
    literal alternating shape matches; no rewriting is attempted.
    """
    items = _flatten_concat(ast)
    if len(items) % 2 == 0:
        return None
    symbols = []
    for idx, node in enumerate(items):
        if idx % 2 == 0:
            if not (isinstance(node, Star) and isinstance(node.inner, Wildcard)):
                return None
        else:
            if not isinstance(node, Symbol):
                return None
            symbols.append(node.tag)
    return symbols


def _flatten_concat(ast: RegexAst) -> list[RegexAst]:
    if isinstance(ast, Concat):
        return _flatten_concat(ast.left) + _flatten_concat(ast.right)
    return [ast]


# --- DFA ---------------------------------------------------------------

ANY = None  # NFA transition label for the wildcard


@dataclass(frozen=True)
class Dfa:
    """Minimal total DFA over a fixed tag alphabet.

    ``trans[q]`` holds explicit moves; any tag missing there goes to
    ``default[q]``.  ``dead`` is the absorbing reject state's id when the
    minimal automaton has one, else None.  Matrix-based callers size their
    state space as ``n`` (dead state included).
    """

    n: int
    start: int
    accepting: frozenset[int]
    trans: tuple[tuple[tuple[str, int], ...], ...]
    default: tuple[int, ...]
    dead: int | None
    gamma: tuple[str, ...]

    def step(self, q: int, tag: str) -> int:
        for t, target in self.trans[q]:
            if t == tag:
                return target
        return self.default[q]

    def live_states(self) -> list[int]:
        return [q for q in range(self.n) if q != self.dead]


def dfa_accepts(dfa: Dfa, word: list[str] | tuple[str, ...]) -> bool:
    q = dfa.start
    for tag in word:
        q = dfa.step(q, tag)
    return q in dfa.accepting


def compile_minimal_dfa(ast: RegexAst, gamma) -> Dfa:
    """Compile to the minimal DFA over alphabet ``gamma``.

    Raises ValueError when the expression names tags outside gamma; those can
    never occur on a run edge, so the query is almost certainly a mistake.
    """
    gamma = tuple(sorted(set(gamma)))
    if not gamma:
        raise ValueError("empty tag alphabet")
    unknown = ast_symbols(ast) - set(gamma)
    if unknown:
        raise ValueError(f"query uses tags not in the workflow alphabet: {sorted(unknown)}")

    nfa_start, nfa_accept, edges, n_states = _thompson(ast)
    eps_adj = [[] for _ in range(n_states)]
    sym_moves = [[] for _ in range(n_states)]  # (label, dst); label=ANY for wildcard
    for src, label, dst in edges:
        if label == "":
            eps_adj[src].append(dst)
        else:
            sym_moves[src].append((label, dst))

    def closure(states: frozenset[int]) -> frozenset[int]:
        seen = set(states)
        stack = list(states)
        while stack:
            s = stack.pop()
            for t in eps_adj[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    start_set = closure(frozenset([nfa_start]))
    subset_ids: dict[frozenset[int], int] = {start_set: 0}
    subsets = [start_set]
    table: list[list[int]] = []  # state -> per-gamma-target
    work = [start_set]
    while work:
        cur = work.pop()
        row = []
        for tag in gamma:
            nxt = set()
            for s in cur:
                for label, dst in sym_moves[s]:
                    if label is ANY or label == tag:
                        nxt.add(dst)
            nxt_c = closure(frozenset(nxt))
            if nxt_c not in subset_ids:
                subset_ids[nxt_c] = len(subsets)
                subsets.append(nxt_c)
                work.append(nxt_c)
            row.append(subset_ids[nxt_c])
        # rows may be appended out of order relative to ids; index later
        table.append((subset_ids[cur], row))
    full = [None] * len(subsets)
    for sid, row in table:
        full[sid] = row
    accept = frozenset(i for i, ss in enumerate(subsets) if nfa_accept in ss)

    part = _hopcroft(len(subsets), full, accept, len(gamma))
    return _build_min_dfa(part, full, accept, 0, gamma)


def _thompson(ast: RegexAst):
    """Return (start, accept, edges, n) with edge labels '', tag, or ANY."""
    edges: list[tuple[int, object, int]] = []
    counter = [0]

    def fresh():
        counter[0] += 1
        return counter[0] - 1

    def build(node) -> tuple[int, int]:
        s, a = fresh(), fresh()
        if isinstance(node, Epsilon):
            edges.append((s, "", a))
        elif isinstance(node, Wildcard):
            edges.append((s, ANY, a))
        elif isinstance(node, Symbol):
            edges.append((s, node.tag, a))
        elif isinstance(node, Concat):
            ls, la = build(node.left)
            rs, ra = build(node.right)
            edges.append((s, "", ls))
            edges.append((la, "", rs))
            edges.append((ra, "", a))
        elif isinstance(node, Alt):
            ls, la = build(node.left)
            rs, ra = build(node.right)
            edges.extend([(s, "", ls), (s, "", rs), (la, "", a), (ra, "", a)])
        elif isinstance(node, Star):
            is_, ia = build(node.inner)
            edges.extend([(s, "", is_), (s, "", a), (ia, "", is_), (ia, "", a)])
        elif isinstance(node, Plus):
            is_, ia = build(node.inner)
            edges.extend([(s, "", is_), (ia, "", is_), (ia, "", a)])
        else:
            raise TypeError(f"not a regex node: {node!r}")
        return s, a

    start, accept = build(ast)
    return start, accept, edges, counter[0]


def _hopcroft(n: int, table: list[list[int]], accept: frozenset[int], n_tags: int) -> list[int]:
    """Hopcroft partition refinement; returns state -> block id."""
    non_accept = frozenset(range(n)) - accept
    blocks: list[set[int]] = []
    for grp in (accept, non_accept):
        if grp:
            blocks.append(set(grp))
    block_of = [0] * n
    for bi, blk in enumerate(blocks):
        for q in blk:
            block_of[q] = bi
    # preimage[tag][state]
    pre = [[[] for _ in range(n)] for _ in range(n_tags)]
    for q in range(n):
        for ti in range(n_tags):
            pre[ti][table[q][ti]].append(q)
    worklist = {(bi, ti) for bi in range(len(blocks)) for ti in range(n_tags)}
    while worklist:
        bi, ti = worklist.pop()
        splitter = blocks[bi]
        moved: dict[int, set[int]] = {}
        for target in splitter:
            for q in pre[ti][target]:
                moved.setdefault(block_of[q], set()).add(q)
        for src_bi, hit in moved.items():
            blk = blocks[src_bi]
            if len(hit) == len(blk):
                continue
            rest = blk - hit
            small, large = (hit, rest) if len(hit) <= len(rest) else (rest, hit)
            blocks[src_bi] = large
            new_bi = len(blocks)
            blocks.append(small)
            for q in small:
                block_of[q] = new_bi
            for tj in range(n_tags):
                if (src_bi, tj) in worklist:
                    worklist.add((new_bi, tj))
                else:
                    # add the smaller side; either choice keeps refinement correct
                    worklist.add((new_bi, tj) if len(small) <= len(large) else (src_bi, tj))
    return block_of


def _build_min_dfa(block_of: list[int], table: list[list[int]], accept: frozenset[int],
                   start: int, gamma: tuple[str, ...]) -> Dfa:
    # canonical renumbering: BFS from the start block, tags in sorted order
    n_blocks = max(block_of) + 1
    reps = [None] * n_blocks
    for q, b in enumerate(block_of):
        if reps[b] is None:
            reps[b] = q
    order: dict[int, int] = {block_of[start]: 0}
    queue = [block_of[start]]
    while queue:
        b = queue.pop(0)
        rep = reps[b]
        for ti in range(len(gamma)):
            nb = block_of[table[rep][ti]]
            if nb not in order:
                order[nb] = len(order)
                queue.append(nb)
    # unreachable blocks are dropped (could only arise from NFA artifacts)
    n = len(order)
    new_trans: list[dict[str, int]] = [dict() for _ in range(n)]
    for b, nid in order.items():
        rep = reps[b]
        for ti, tag in enumerate(gamma):
            new_trans[nid][tag] = order[block_of[table[rep][ti]]]
    new_accept = frozenset(order[b] for b in range(n_blocks)
                           if b in order and reps[b] in accept)
    dead = None
    for q in range(n):
        if q not in new_accept and all(t == q for t in new_trans[q].values()):
            dead = q
            break
    # compress: per-state default = most frequent target, exceptions explicit
    defaults = []
    explicit: list[tuple[tuple[str, int], ...]] = []
    for q in range(n):
        counts: dict[int, int] = {}
        for t in new_trans[q].values():
            counts[t] = counts.get(t, 0) + 1
        best = max(sorted(counts), key=lambda t: counts[t])
        defaults.append(best)
        explicit.append(tuple(sorted((tag, tgt) for tag, tgt in new_trans[q].items() if tgt != best)))
    return Dfa(
        n=n,
        start=0,
        accepting=new_accept,
        trans=tuple(explicit),
        default=tuple(defaults),
        dead=dead,
        gamma=gamma,
    )


def interpret(ast: RegexAst, word: tuple[str, ...]) -> bool:
    """Direct AST matcher used as the compilation oracle in tests."""
    n = len(word)
    memo: dict[tuple[int, int, int], bool] = {}

    def match(node, i, j, node_id) -> bool:
        key = (node_id, i, j)
        if key in memo:
            return memo[key]
        memo[key] = False  # cut Star/Plus self-recursion on the same span
        if isinstance(node, Epsilon):
            res = i == j
        elif isinstance(node, Wildcard):
            res = j == i + 1
        elif isinstance(node, Symbol):
            res = j == i + 1 and word[i] == node.tag
        elif isinstance(node, Concat):
            res = any(match(node.left, i, m, node_id * 2 + 1) and match(node.right, m, j, node_id * 2 + 2)
                      for m in range(i, j + 1))
        elif isinstance(node, Alt):
            res = match(node.left, i, j, node_id * 2 + 1) or match(node.right, i, j, node_id * 2 + 2)
        elif isinstance(node, Star):
            res = i == j or any(match(node.inner, i, m, node_id * 2 + 1) and match(node, m, j, node_id)
                                for m in range(i + 1, j + 1))
        elif isinstance(node, Plus):
            res = match(node.inner, i, j, node_id * 2 + 1) or \
                any(match(node.inner, i, m, node_id * 2 + 1) and match(node, m, j, node_id)
                    for m in range(i + 1, j))
        else:
            raise TypeError(node)
        memo[key] = res
        return res

    return match(ast, 0, n, 0)
