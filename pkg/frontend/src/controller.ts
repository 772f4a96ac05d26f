import { ApiError, TriageApi } from "./api.js";
import {
  BOILERPLATE_KINDS,
  PATTERNS,
  emptyDraft,
  type BoilerplateKind,
  type ClassificationInput,
  type Conflict,
  type ConflictKind,
  type Draft,
  type Pattern,
  type QueueItem,
} from "./types.js";

// All review-loop state lives here, DOM-free, so the same code path the
// browser takes can be driven end to end from tests.

export type SubmitOutcome = "stored" | "invalid" | "failed" | "no-pair";

export interface SessionState {
  current: QueueItem | null;
  draft: Draft;
  /** Inline validation message; never clears the draft. */
  draftError: string | null;
  /** Network trouble; the retry banner. State underneath is preserved. */
  banner: string | null;
  queueEmpty: boolean;
  position: number; // pairs classified this session
}

/** Pattern hotkeys 1-7, in the service's declared pattern order. */
export function hotkeyPattern(key: string): Pattern | null {
  const index = Number.parseInt(key, 10) - 1;
  return index >= 0 && index < PATTERNS.length ? PATTERNS[index]! : null;
}

export function validateDraft(draft: Draft): string | null {
  if (draft.pattern === null) return "pick a pattern first";
  if (draft.pattern === "BP" && draft.boilerplateKind === null) {
    return "boilerplate needs a kind (API constraints, templating, or design patterns)";
  }
  if (draft.pattern !== "BP" && draft.boilerplateKind !== null) {
    return "a kind only goes with boilerplate";
  }
  return null;
}

function payloadFrom(draft: Draft, reviewerId: string): ClassificationInput {
  const input: ClassificationInput = {
    reviewer_id: reviewerId,
    pattern: draft.pattern!,
  };
  if (draft.boilerplateKind !== null) input.boilerplate_kind = draft.boilerplateKind;
  if (draft.note.trim() !== "") input.evidence_note = draft.note.trim();
  if (draft.url.trim() !== "") input.evidence_url = draft.url.trim();
  return input;
}

export class Session {
  readonly state: SessionState = {
    current: null,
    draft: emptyDraft(),
    draftError: null,
    banner: null,
    queueEmpty: false,
    position: 0,
  };

  private skipped = new Set<string>();
  private inflight: Promise<SubmitOutcome> | null = null;

  constructor(
    private readonly api: TriageApi,
    readonly reviewerId: string,
  ) {}

  setPattern(pattern: Pattern): void {
    this.state.draft.pattern = pattern;
    if (pattern !== "BP") this.state.draft.boilerplateKind = null;
    this.state.draftError = null;
  }

  setKind(kind: BoilerplateKind): void {
    this.state.draft.boilerplateKind = kind;
    this.state.draftError = null;
  }

  setNote(note: string): void {
    this.state.draft.note = note;
  }

  setUrl(url: string): void {
    this.state.draft.url = url;
  }

  /** Fetch the next reviewable pair; network failure keeps current state. */
  async loadNext(): Promise<void> {
    let head: QueueItem | null;
    try {
      head = await this.api.nextUnclassified(this.reviewerId);
    } catch (err) {
      this.state.banner = describe(err);
      return;
    }
    this.state.banner = null;
    if (head === null) {
      this.state.current = null;
      this.state.queueEmpty = true;
      return;
    }
    this.state.queueEmpty = false;
    if (!this.skipped.has(head.pair.id)) {
      this.state.current = head;
      return;
    }
    await this.nextPastSkips(head);
  }

  /** Walk the full pair list for the first unskipped pair without my record. */
  private async nextPastSkips(head: QueueItem): Promise<void> {
    try {
      for (const pairId of await this.api.pairs()) {
        if (this.skipped.has(pairId)) continue;
        const detail = await this.api.pairDetail(pairId);
        if (detail.records.some((r) => r.reviewer_id === this.reviewerId)) continue;
        this.state.current = { pair: detail.pair, bundle: detail.bundle };
        return;
      }
    } catch (err) {
      this.state.banner = describe(err);
      return;
    }
    // everything left was skipped once: wrap around rather than dead-end
    this.skipped.clear();
    this.state.current = head;
  }

  async skip(): Promise<void> {
    if (this.state.current === null) return;
    this.skipped.add(this.state.current.pair.id);
    this.state.draft = emptyDraft();
    this.state.draftError = null;
    await this.loadNext();
  }

  /**
   * Validate, POST, clear the draft and advance. While one submit is in
   * flight the same promise is handed back, so a double-click (or a held
   * Enter key) produces exactly one record.
   */
  submit(): Promise<SubmitOutcome> {
    if (this.inflight !== null) return this.inflight;
    if (this.state.current === null) return Promise.resolve("no-pair");
    const problem = validateDraft(this.state.draft);
    if (problem !== null) {
      this.state.draftError = problem;
      return Promise.resolve("invalid");
    }
    const pairId = this.state.current.pair.id;
    this.inflight = (async () => {
      try {
        await this.api.classify(pairId, payloadFrom(this.state.draft, this.reviewerId));
      } catch (err) {
        this.state.banner = describe(err);
        return "failed";
      } finally {
        this.inflight = null;
      }
      this.state.draft = emptyDraft();
      this.state.draftError = null;
      this.state.position += 1;
      await this.loadNext();
      return "stored";
    })();
    return this.inflight;
  }
}

export type ResolveOutcome = "resolved" | "stale" | "failed";

export interface BoardState {
  items: Conflict[];
  tab: ConflictKind;
  /** Set when an item was resolved elsewhere; prompts a refresh. */
  stale: boolean;
  banner: string | null;
}

export class ConflictsBoard {
  readonly state: BoardState = {
    items: [],
    tab: "TruthConflict",
    stale: false,
    banner: null,
  };

  constructor(private readonly api: TriageApi) {}

  setTab(tab: ConflictKind): void {
    this.state.tab = tab;
  }

  /** Open items under the active tab; resolved ones drop off the board. */
  open(): Conflict[] {
    return this.state.items.filter(
      (c) => c.resolution === null && c.kind === this.state.tab,
    );
  }

  async refresh(): Promise<void> {
    try {
      this.state.items = await this.api.conflicts();
      this.state.banner = null;
      this.state.stale = false;
    } catch (err) {
      this.state.banner = describe(err);
    }
  }

  async resolve(pairId: string, input: ClassificationInput): Promise<ResolveOutcome> {
    try {
      await this.api.resolve(pairId, input);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state.stale = true;
        await this.refresh();
        return "stale";
      }
      this.state.banner = describe(err);
      return "failed";
    }
    await this.refresh();
    return "resolved";
  }
}

export { BOILERPLATE_KINDS, PATTERNS };

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return "service unreachable; check the connection and retry";
}
