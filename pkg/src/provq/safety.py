"""Safety of a query DFA with respect to a workflow specification.

A module's transfer matrix records, for each DFA state pair (q, q'), whether
some source-to-sink path of an execution drives the DFA from q to q'.  A DFA
is safe when every module's transfer matrix is the same across all of its
executions; that uniqueness is what lets run labels be decoded against the
query-rewritten grammar without looking at the run itself.

The checker seeds atomic modules with the identity matrix and runs a worklist
over productions, mirroring the classic emptiness check for context-free
grammars: a production is verifiable once all its right-hand-side modules
have matrices.  The first verifiable production binds a composite's matrix;
any later verifiable production producing a different matrix is a conflict
witness and the DFA is unsafe.  Recursive productions are checked against the
already-bound matrix, which covers all deeper unrollings by induction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .boolmat import BoolMat
from .grammar import Production, WorkflowSpec, analyze_spec, validate_spec
from .rpq import Dfa, RegexAst, compile_minimal_dfa


def tag_matrix(dfa: Dfa, tag: str) -> BoolMat:
    return BoolMat.from_pairs(dfa.n, [(q, dfa.step(q, tag)) for q in range(dfa.n)])


def production_transfer(prod: Production, dfa: Dfa, transfers: dict[str, BoolMat]) -> BoolMat:
    """Transfer matrix of one production's rhs, given matrices for its modules.

    Forward dynamic programming over the (topologically ordered) positions:
    reach[y][q][q'] says the rhs source's input port q reaches node y's input
    port q'.  The result routes on through the sink module itself.
    """
    n = dfa.n
    rhs = prod.rhs
    reach: dict[int, BoolMat] = {rhs.source: BoolMat.identity(n)}
    tmats = {tag: tag_matrix(dfa, tag) for tag in {t for _, _, t in rhs.edges}}
    for pos in range(1, rhs.size + 1):
        if pos not in reach:
            continue
        through = reach[pos].mul(transfers[rhs.node_at(pos)])
        for s, d, tag in rhs.edges:
            if s != pos:
                continue
            contrib = through.mul(tmats[tag])
            reach[d] = contrib if d not in reach else reach[d].union(contrib)
    return reach[rhs.sink].mul(transfers[rhs.node_at(rhs.sink)])


# spec-facing alias: matrices are traditionally written lambda(M)
lambda_of_production = production_transfer


@dataclass(frozen=True)
class SafetyWitness:
    module: str
    bound_production: int
    bound_matrix: BoolMat
    conflict_production: int
    conflict_matrix: BoolMat


@dataclass(frozen=True)
class SafetyReport:
    verdict: str  # "safe" | "unsafe" | "unproductive"
    transfers: dict[str, BoolMat]
    witness: SafetyWitness | None = None

    @property
    def safe(self) -> bool:
        return self.verdict == "safe"


def check_safety(spec: WorkflowSpec, dfa: Dfa) -> SafetyReport:
    """Decide safety of a (minimal) DFA for this specification."""
    transfers: dict[str, BoolMat] = {
        m: BoolMat.identity(dfa.n) for m in spec.sigma if m not in spec.delta
    }
    bound_by: dict[str, int] = {}
    pending = list(spec.productions)
    verified: set[int] = set()
    progress = True
    while progress:
        progress = False
        for prod in pending:
            if prod.k in verified:
                continue
            if any(nm not in transfers for nm in prod.rhs.nodes):
                continue
            matrix = production_transfer(prod, dfa, transfers)
            verified.add(prod.k)
            progress = True
            if prod.lhs not in transfers:
                transfers[prod.lhs] = matrix
                bound_by[prod.lhs] = prod.k
            elif transfers[prod.lhs] != matrix:
                witness = SafetyWitness(
                    module=prod.lhs,
                    bound_production=bound_by.get(prod.lhs, 0),
                    bound_matrix=transfers[prod.lhs],
                    conflict_production=prod.k,
                    conflict_matrix=matrix,
                )
                return SafetyReport("unsafe", dict(transfers), witness)
    if any(m not in transfers for m in spec.delta):
        return SafetyReport("unproductive", dict(transfers))
    return SafetyReport("safe", dict(transfers))


def is_safe_query(spec: WorkflowSpec, ast: RegexAst) -> tuple[bool, SafetyReport]:
    """Compile the minimal DFA and check it; safe iff the minimal DFA is safe."""
    report = validate_spec(spec)
    if not report.ok:
        raise ValueError("invalid specification: " + "; ".join(report.violations))
    analyze_spec(spec)  # rejects non-strictly-linear grammars up front
    dfa = compile_minimal_dfa(ast, spec.gamma)
    sr = check_safety(spec, dfa)
    return sr.safe, sr
