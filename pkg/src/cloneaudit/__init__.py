"""Audit toolkit for code clones between Q&A snippets and project corpora.

Detection (token bags and normalized line runs), report merging under the
ok-match criterion, license conflict classification, outdated-origin
analysis, and a reviewer triage service share the artifact formats defined
here. The heavy lifting lives in the submodules; this package root only
re-exports the types most callers need.
"""

from .detect import DetectorConfig, detect_line_clones, detect_token_clones, run_detection
from .errors import (
    AmbiguousOriginError,
    CloneAuditError,
    DumpTruncatedError,
    PhaseError,
    ValidationError,
)
from .ingest import IngestConfig, Snippet, SourceFile, ingest_dump, normalize, scan_corpus
from .licensing import LicenseFinding, classify_conflict, identify_license
from .merge import (
    ConsolidatedPair,
    MergeConfig,
    MergedClonePair,
    cloned_ratio,
    consolidate,
    contained,
    is_ok_match,
    merge_reports,
    ok_value,
)
from .outdated import (
    LatestCorpus,
    OriginLocation,
    OutdatedVerdict,
    clone_age_months,
    diff_classify,
    locate_latest,
    outdated_report,
)
from .pipeline import PipelineConfig, load_config, run_pipeline
from .records import ClonePair, CodeFragment, Diagnostics
from .triage import ClassificationRecord, ConflictItem, TriageStore, rank_evidence

__version__ = "0.1.0"
