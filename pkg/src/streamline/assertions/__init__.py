from .evaluate import Evaluator, Undefined, eval_formula, eval_seq, eval_term, seq_range
from .ranges import (
    IndexRange, LinExpr, RangeError, RestrictedAssertion, linear_of_expr,
    linear_of_term, range_to_formula, restricted_to_formula,
)
from .subst import SortError, Subst, subst
from .terms import *  # noqa: F401,F403
from .text import (
    AssertionSyntaxError, fmt, fmt_int, fmt_seq, normalize, parse_assertion,
    parse_term, same,
)
