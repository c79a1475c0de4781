"""laborlens: mining indicators of forced labor in supply chains from news data.

The pipeline: fetch articles (ingest), score their relevance with a
weighted question tree (qtree), record incidents as 25-feature typed
records (features), and mine Boolean and bounded temporal formulas that
separate instances from non-instances (formulas, temporal). The cli and
service modules wrap it all for batch and interactive use.
"""

from .features import (
    BooleanizedDataset,
    FeatureSchema,
    IncidentRecord,
    Label,
    LabeledDataset,
    booleanize,
    default_schema,
    integer_stats,
    parse_incident_csv,
    validate_record,
    write_incident_csv,
)
from .formulas import (
    EnumerationConfig,
    FormulaScore,
    enumerate_formulas,
    eval_formula,
    format_formula,
    mine,
    parse_formula,
    sat_status,
    score_formula,
    truth_table,
)
from .ingest import (
    ArticleRecord,
    CorpusStore,
    KeywordQuery,
    dedup_corpus,
    fetch_articles,
    generate_keywords,
)
from .qtree import (
    Answer,
    Evaluation,
    QuestionTree,
    classify,
    default_tree,
    eligible_frontier,
    evaluate,
    relevance_score,
    validate_tree,
)
from .temporal import (
    BoundInference,
    MltlFormula,
    TemporalMiningConfig,
    Trace,
    eval_mltl,
    eval_response,
    infer_bound,
    mine_temporal,
)

__version__ = "0.1.0"
