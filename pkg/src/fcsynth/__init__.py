"""Rule-based function-call dataset toolkit.

Generate question/call demonstrations from phrase pools, render them as
fine-tuning records, mix them with a textbook corpus and grade model output
with a single-call AST matcher.
"""

from .calls import CallExpr, parse_call
from .evaluator import EvalReport, MatchVerdict, Prediction, fclaa, grade, match
from .formatter import DF1, DF2, PromptBundle, TrainingRecord, build_prompt, render, split
from .grammar import (
    Demonstration,
    PhrasePools,
    Router,
    SlotValueMapping,
    capacity,
    generate,
    load_pools,
    load_pools_dir,
    make_oofc,
    oracle_route,
)
from .mixer import MixedRecord, MixSpec, ingest_textbook, mix
from .registry import (
    FunctionSchema,
    ParamSpec,
    Registry,
    SpecialToken,
    load_registry,
    name_for,
    token_for,
    write_registry,
)

__version__ = "0.1.0"
