// JSON shapes as the triage service emits them. Field names stay snake_case
// so payloads round-trip without a mapping layer.

export type Pattern = "QS" | "SQ" | "EX" | "UD" | "BP" | "IN" | "NC";

export const PATTERNS: readonly Pattern[] = ["QS", "SQ", "EX", "UD", "BP", "IN", "NC"];

export const PATTERN_LABELS: Record<Pattern, string> = {
  QS: "Q&A answered from the project",
  SQ: "project copied the answer",
  EX: "shared external ancestor",
  UD: "undecided direction",
  BP: "boilerplate",
  IN: "inconclusive",
  NC: "not a clone",
};

export type BoilerplateKind = "APIConstraints" | "Templating" | "DesignPatterns";

export const BOILERPLATE_KINDS: readonly BoilerplateKind[] = [
  "APIConstraints",
  "Templating",
  "DesignPatterns",
];

export type ConflictKind = "TruthConflict" | "PatternConflict";

export interface Fragment {
  corpus: string;
  unit: string;
  start: number;
  end: number;
}

export interface ConsolidatedPair {
  id: string;
  snippet_fragment: Fragment;
  origins: Fragment[];
  contributors: string[];
  source_pair_count: number;
}

export interface BundleOrigin {
  key: string;
  fragment: Fragment;
  text: string;
}

export interface Bundle {
  pair_id: string;
  snippet: { fragment: Fragment; text: string };
  origins: BundleOrigin[];
  post: { text: string; url: string };
  ranking: [string, number][];
}

export interface ClassificationRecord {
  pair_id: string;
  reviewer_id: string;
  pattern: Pattern;
  boilerplate_kind: BoilerplateKind | null;
  evidence_note: string;
  evidence_url: string | null;
  timestamp: string;
}

export interface ClassificationInput {
  reviewer_id: string;
  pattern: Pattern;
  boilerplate_kind?: BoilerplateKind;
  evidence_note?: string;
  evidence_url?: string;
}

export interface QueueItem {
  pair: ConsolidatedPair;
  bundle: Bundle;
}

export interface PairDetail extends QueueItem {
  records: ClassificationRecord[];
}

export interface Conflict {
  pair_id: string;
  kind: ConflictKind;
  records: ClassificationRecord[];
  resolution: ClassificationRecord | null;
}

export interface ExportCounts {
  patterns: Record<Pattern, number>;
  patterns_weighted: Record<Pattern, number>;
  per_project: Record<string, { QS: number; UD: number }>;
  totals: { pairs: number; classified: number; unclassified: number };
  open_conflicts: number;
}

export interface Draft {
  pattern: Pattern | null;
  boilerplateKind: BoilerplateKind | null;
  note: string;
  url: string;
}

export const emptyDraft = (): Draft => ({
  pattern: null,
  boilerplateKind: null,
  note: "",
  url: "",
});
