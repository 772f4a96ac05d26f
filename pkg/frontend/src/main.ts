import { TriageApi } from "./api.js";
import { ConflictsBoard, Session, hotkeyPattern } from "./controller.js";
import { renderBoard, renderClassify } from "./render.js";
import type { BoilerplateKind, Pattern } from "./types.js";

// Shell: reviewer sign-in, classify/conflicts tabs, hotkeys. The reviewer id
// rides on ?reviewer= so a bookmarked queue survives a reload.

const api = new TriageApi("");
let session: Session | null = null;
const board = new ConflictsBoard(api);
let view: "classify" | "conflicts" = "classify";

const main = document.getElementById("main") as HTMLElement;
const who = document.getElementById("reviewer") as HTMLInputElement;
const start = document.getElementById("start") as HTMLButtonElement;
const tabClassify = document.getElementById("tab-classify") as HTMLButtonElement;
const tabConflicts = document.getElementById("tab-conflicts") as HTMLButtonElement;

const handlers = {
  onPattern(pattern: Pattern) {
    session?.setPattern(pattern);
    repaint();
  },
  onKind(kind: BoilerplateKind) {
    session?.setKind(kind);
    repaint();
  },
  onNote(note: string) {
    session?.setNote(note);
  },
  onUrl(url: string) {
    session?.setUrl(url);
  },
  onSubmit() {
    void session?.submit().then(repaint);
  },
  onSkip() {
    void session?.skip().then(repaint);
  },
  onRetry() {
    void session?.loadNext().then(repaint);
  },
};

const boardHandlers = {
  onTab(tab: "TruthConflict" | "PatternConflict") {
    board.setTab(tab);
    repaint();
  },
  onResolve(pairId: string, pattern: Pattern, kind: BoilerplateKind | null, note: string) {
    if (session === null) return;
    void board
      .resolve(pairId, {
        reviewer_id: session.reviewerId,
        pattern,
        ...(kind !== null ? { boilerplate_kind: kind } : {}),
        ...(note.trim() !== "" ? { evidence_note: note.trim() } : {}),
      })
      .then(repaint);
  },
  onRefresh() {
    void board.refresh().then(repaint);
  },
};

function repaint(): void {
  tabClassify.className = view === "classify" ? "tab selected" : "tab";
  tabConflicts.className = view === "conflicts" ? "tab selected" : "tab";
  if (session === null) {
    main.replaceChildren();
    return;
  }
  if (view === "classify") {
    renderClassify(main, session.state, handlers);
  } else {
    renderBoard(main, board.state, board.open(), boardHandlers);
  }
}

async function begin(reviewerId: string): Promise<void> {
  session = new Session(api, reviewerId);
  const url = new URL(window.location.href);
  url.searchParams.set("reviewer", reviewerId);
  window.history.replaceState(null, "", url.toString());
  await session.loadNext();
  repaint();
}

start.addEventListener("click", () => {
  const id = who.value.trim();
  if (id !== "") void begin(id);
});

tabClassify.addEventListener("click", () => {
  view = "classify";
  repaint();
});

tabConflicts.addEventListener("click", () => {
  view = "conflicts";
  void board.refresh().then(repaint);
});

document.addEventListener("keydown", (event) => {
  if (session === null || view !== "classify") return;
  const target = event.target as HTMLElement | null;
  if (target && (target.tagName === "TEXTAREA" || target.tagName === "INPUT")) return;
  const pattern = hotkeyPattern(event.key);
  if (pattern !== null) {
    session.setPattern(pattern);
    repaint();
    return;
  }
  if (event.key === "Enter") {
    void session.submit().then(repaint);
  } else if (event.key === "s") {
    void session.skip().then(repaint);
  }
});

const preset = new URL(window.location.href).searchParams.get("reviewer");
if (preset) {
  who.value = preset;
  void begin(preset);
}
