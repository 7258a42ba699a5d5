"""provq: regular path queries over workflow provenance graphs.

Runs are derived from context-free graph grammars and labeled at derivation
time; safe queries are then answered from labels alone in constant time, and
all-pairs queries through reachability-filtered structural joins.
"""

__version__ = "0.1.0"

from .grammar import (ModuleSym, Production, SimpleWorkflow, ValidationReport,
                      WorkflowSpec, analyze_spec, build_production_graph,
                      check_strictly_linear_recursive, make_rhs, make_spec,
                      parse_spec_file, validate_spec, write_spec_file)
from .rpq import (Dfa, RegexAst, compile_minimal_dfa, dfa_accepts, match_ifq,
                  parse_regex)
from .derivation import (Run, RunNode, derive, deserialize_run, fire_production,
                         init_run, random_run, serialize_run)
from .safety import SafetyReport, check_safety, is_safe_query, lambda_of_production
from .intersect import (DecodeTables, FineGrainedSpec, build_tables,
                        compute_decode_tables, intersect, power_query,
                        reach_tables)
from .decode import answer_pairwise_safe_query, decode_reach, lcp_split
from .allpairs import (LabelTree, answer_all_pairs_safe_query, all_pairs_reach,
                       build_label_tree, nested_loop_all_pairs, sorted_by_label)
from .general import (build_tag_index, dfs_oracle, eval_general, eval_ifq,
                      eval_join_tree, largest_safe_subtrees)
from .fixtures import sample_run, sample_spec
