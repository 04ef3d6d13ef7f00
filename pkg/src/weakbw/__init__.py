"""Weak Bolzano-Weierstrass for l2, executably: exact arithmetic, the Pi-0-2
encoding, weak cluster points and the Weihrauch chains around them."""
from .exact import CReal, FinVec, L2Point, BoundedSeq, embed, l2_inner, l2_norm
from .dsl import PredicateSpec, parse, parse_predicate, load_predicate, decide_A
from .families import family, all_families, FAMILY_NAMES
from .oracle import Oracle, OracleBudget, OracleUnknown, Answer
from .forward import build_sequence, extract_g, project_Mn, f_fn, pair, unpair
from .reverse import weak_cluster, verify_cluster, product_cluster, mct_solve
from .weihrauch import run_reduction, CHAINS, instance_corpus

__version__ = "0.1.0"
