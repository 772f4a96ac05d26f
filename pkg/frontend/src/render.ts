import { matchedLines } from "./lines.js";
import {
  BOILERPLATE_KINDS,
  PATTERNS,
  PATTERN_LABELS,
  type BoilerplateKind,
  type Bundle,
  type Conflict,
  type Fragment,
  type Pattern,
} from "./types.js";
import type { BoardState, SessionState } from "./controller.js";

// DOM assembly only; every decision this file renders was made in
// controller.ts or came straight off the wire.

export interface ClassifyHandlers {
  onPattern(pattern: Pattern): void;
  onKind(kind: BoilerplateKind): void;
  onNote(note: string): void;
  onUrl(url: string): void;
  onSubmit(): void;
  onSkip(): void;
  onRetry(): void;
}

export interface BoardHandlers {
  onTab(tab: "TruthConflict" | "PatternConflict"): void;
  onResolve(pairId: string, pattern: Pattern, kind: BoilerplateKind | null, note: string): void;
  onRefresh(): void;
}

const el = <K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] => {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
};

function fragmentTitle(fragment: Fragment): string {
  return `${fragment.corpus}/${fragment.unit} ${fragment.start}-${fragment.end}`;
}

/** One code pane; line numbers are the fragment's original coordinates. */
function codePane(
  title: string,
  fragment: Fragment,
  text: string,
  matched: Set<number>,
): HTMLElement {
  const pane = el("section", "pane");
  pane.append(el("h3", "pane-title", title));
  const scroller = el("div", "pane-scroll");
  const lines = text.replace(/\n$/, "").split("\n");
  lines.forEach((line, i) => {
    const row = el("div", matched.has(i) ? "line matched" : "line");
    row.append(el("span", "lineno", String(fragment.start + i)));
    row.append(el("span", "code", line === "" ? " " : line));
    scroller.append(row);
  });
  pane.append(scroller);
  return pane;
}

/** Mirror scrollTop between the two panes without feedback loops. */
function syncScroll(a: HTMLElement, b: HTMLElement): void {
  let muted = false;
  const follow = (from: HTMLElement, to: HTMLElement) => () => {
    if (muted) return;
    muted = true;
    to.scrollTop = from.scrollTop;
    requestAnimationFrame(() => {
      muted = false;
    });
  };
  a.addEventListener("scroll", follow(a, b));
  b.addEventListener("scroll", follow(b, a));
}

function evidencePanel(bundle: Bundle): HTMLElement {
  const panel = el("aside", "evidence");
  panel.append(el("h3", "pane-title", "evidence"));
  const link = el("a", "post-link", bundle.post.url);
  link.href = bundle.post.url;
  link.target = "_blank";
  panel.append(link);
  panel.append(el("pre", "post-text", bundle.post.text));
  const list = el("ol", "ranking");
  for (const [key, score] of bundle.ranking) {
    list.append(el("li", "ranked", `${key}  (${score.toFixed(3)})`));
  }
  panel.append(el("h4", "pane-title", "ranked origins"));
  panel.append(list);
  return panel;
}

function draftForm(state: SessionState, handlers: ClassifyHandlers): HTMLElement {
  const form = el("div", "draft");
  const buttons = el("div", "patterns");
  PATTERNS.forEach((pattern, i) => {
    const button = el(
      "button",
      state.draft.pattern === pattern ? "pattern selected" : "pattern",
      `${i + 1} ${pattern}`,
    );
    button.title = PATTERN_LABELS[pattern];
    button.addEventListener("click", () => handlers.onPattern(pattern));
    buttons.append(button);
  });
  form.append(buttons);

  if (state.draft.pattern === "BP") {
    const kinds = el("div", "kinds");
    for (const kind of BOILERPLATE_KINDS) {
      const button = el(
        "button",
        state.draft.boilerplateKind === kind ? "kind selected" : "kind",
        kind,
      );
      button.addEventListener("click", () => handlers.onKind(kind));
      kinds.append(button);
    }
    form.append(kinds);
  }

  const note = el("textarea", "note");
  note.placeholder = "evidence note";
  note.value = state.draft.note;
  note.addEventListener("input", () => handlers.onNote(note.value));
  form.append(note);

  const url = el("input", "url");
  url.placeholder = "evidence url";
  url.value = state.draft.url;
  url.addEventListener("input", () => handlers.onUrl(url.value));
  form.append(url);

  if (state.draftError !== null) {
    form.append(el("p", "draft-error", state.draftError));
  }

  const actions = el("div", "actions");
  const submit = el("button", "submit", "classify (enter)");
  submit.addEventListener("click", () => handlers.onSubmit());
  const skip = el("button", "skip", "skip (s)");
  skip.addEventListener("click", () => handlers.onSkip());
  actions.append(submit, skip);
  form.append(actions);
  return form;
}

export function renderClassify(
  root: HTMLElement,
  state: SessionState,
  handlers: ClassifyHandlers,
): void {
  root.replaceChildren();
  if (state.banner !== null) {
    const banner = el("div", "banner");
    banner.append(el("span", undefined, state.banner));
    const retry = el("button", "retry", "retry");
    retry.addEventListener("click", () => handlers.onRetry());
    banner.append(retry);
    root.append(banner);
  }
  if (state.queueEmpty) {
    const done = el("div", "done");
    done.append(el("h2", undefined, "queue empty"));
    done.append(el("p", undefined, `classified this session: ${state.position}`));
    const link = el("a", "export-link", "download export");
    link.href = "/api/export";
    done.append(link);
    root.append(done);
    return;
  }
  if (state.current === null) return;
  const { pair, bundle } = state.current;
  root.append(el("h2", "pair-id", pair.id));
  const firstOrigin = bundle.origins[0];
  const matched = firstOrigin
    ? matchedLines(bundle.snippet.text, firstOrigin.text)
    : { left: new Set<number>(), right: new Set<number>() };
  const panes = el("div", "panes");
  const left = codePane(
    `snippet ${fragmentTitle(bundle.snippet.fragment)}`,
    bundle.snippet.fragment,
    bundle.snippet.text,
    matched.left,
  );
  panes.append(left);
  if (firstOrigin) {
    const right = codePane(
      `origin ${firstOrigin.key}`,
      firstOrigin.fragment,
      firstOrigin.text,
      matched.right,
    );
    panes.append(right);
    syncScroll(
      left.querySelector<HTMLElement>(".pane-scroll")!,
      right.querySelector<HTMLElement>(".pane-scroll")!,
    );
  }
  panes.append(evidencePanel(bundle));
  root.append(panes);
  root.append(draftForm(state, handlers));
}

export function renderBoard(
  root: HTMLElement,
  state: BoardState,
  open: Conflict[],
  handlers: BoardHandlers,
): void {
  root.replaceChildren();
  if (state.banner !== null) root.append(el("div", "banner", state.banner));
  if (state.stale) {
    const prompt = el("div", "banner stale");
    prompt.append(el("span", undefined, "an item was resolved elsewhere"));
    const refresh = el("button", "retry", "refresh");
    refresh.addEventListener("click", () => handlers.onRefresh());
    prompt.append(refresh);
    root.append(prompt);
  }
  const tabs = el("div", "tabs");
  for (const kind of ["TruthConflict", "PatternConflict"] as const) {
    const count = state.items.filter(
      (c) => c.kind === kind && c.resolution === null,
    ).length;
    const tab = el("button", state.tab === kind ? "tab selected" : "tab", `${kind} (${count})`);
    tab.addEventListener("click", () => handlers.onTab(kind));
    tabs.append(tab);
  }
  root.append(tabs);
  if (open.length === 0) {
    root.append(el("p", "empty", "no open conflicts in this tab"));
    return;
  }
  for (const conflict of open) {
    const card = el("div", "conflict");
    card.append(el("h3", "pair-id", conflict.pair_id));
    const sides = el("div", "sides");
    for (const record of conflict.records) {
      const side = el("div", "side");
      side.append(el("strong", undefined, record.reviewer_id));
      side.append(el("span", "chosen", ` ${record.pattern}`));
      if (record.evidence_note) side.append(el("p", "note", record.evidence_note));
      sides.append(side);
    }
    card.append(sides);
    card.append(resolutionForm(conflict, handlers));
    root.append(card);
  }
}

function resolutionForm(conflict: Conflict, handlers: BoardHandlers): HTMLElement {
  const form = el("div", "resolution");
  const select = el("select", "resolve-pattern");
  for (const pattern of PATTERNS) {
    const option = el("option", undefined, pattern);
    option.value = pattern;
    select.append(option);
  }
  const kindSelect = el("select", "resolve-kind");
  const blank = el("option", undefined, "(kind)");
  blank.value = "";
  kindSelect.append(blank);
  for (const kind of BOILERPLATE_KINDS) {
    const option = el("option", undefined, kind);
    option.value = kind;
    kindSelect.append(option);
  }
  const note = el("input", "resolve-note");
  note.placeholder = "consensus note";
  const button = el("button", "resolve", "resolve");
  button.addEventListener("click", () =>
    handlers.onResolve(
      conflict.pair_id,
      select.value as Pattern,
      (kindSelect.value || null) as BoilerplateKind | null,
      note.value,
    ),
  );
  form.append(select, kindSelect, note, button);
  return form;
}
