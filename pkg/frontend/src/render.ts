/** DOM rendering: one chat screen as a pure function of the view. */

import type { ExerciseSummary } from "./api.js";
import type { SessionView } from "./state.js";

export interface Handlers {
  onSend(text: string): void;
  onChoose(option: string): void;
  onRetry(): void;
  onDismissError(): void;
  onStart(exerciseId: string): void;
  onNewSession(): void;
}

export interface UiState {
  view: SessionView | null;
  exercises: ExerciseSummary[];
  error: string | null;
  canRetry: boolean;
  draft: string;
}

const KIND_LABELS: Record<string, string> = {
  sub_question: "answer this follow-up, then retry the exercise",
  mcq: "pick one of the options below",
  verdict: "session finished",
};

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderPicker(
  doc: Document,
  state: UiState,
  handlers: Handlers,
): HTMLElement {
  const panel = el(doc, "section", "picker");
  panel.append(el(doc, "h1", "title", "Tutoring chat"));
  panel.append(
    el(doc, "p", "picker-hint", "Pick an exercise to start a session."),
  );
  const select = el(doc, "select", "exercise-select");
  for (const exercise of state.exercises) {
    const option = el(doc, "option");
    option.value = exercise.id;
    option.textContent = exercise.problem;
    select.append(option);
  }
  const start = el(doc, "button", "start-button", "Start session");
  start.disabled = state.exercises.length === 0;
  start.addEventListener("click", () => {
    if (select.value) handlers.onStart(select.value);
  });
  panel.append(select, start);
  return panel;
}

function renderTranscript(doc: Document, view: SessionView): HTMLElement {
  const list = el(doc, "ol", "transcript");
  for (const bubble of view.bubbles) {
    const item = el(doc, "li", `bubble ${bubble.speaker}`);
    item.dataset.kind = bubble.kind;
    if (bubble.pending) item.classList.add("pending");
    const label = KIND_LABELS[bubble.kind];
    if (label) item.append(el(doc, "span", "bubble-label", label));
    item.append(el(doc, "p", "bubble-text", bubble.text));
    list.append(item);
  }
  return list;
}

function renderComposer(
  doc: Document,
  state: UiState,
  view: SessionView,
  handlers: Handlers,
): HTMLElement {
  const area = el(doc, "footer", "composer");

  if (view.inputMode === "mcq_buttons" && view.mcqOptions) {
    const group = el(doc, "div", "mcq-options");
    for (const option of view.mcqOptions) {
      const button = el(doc, "button", "mcq-option", option);
      button.addEventListener("click", () => handlers.onChoose(option));
      group.append(button);
    }
    area.append(group);
    return area;
  }

  if (view.inputMode === "disabled") {
    const note =
      view.phase === "done"
        ? view.verdict
          ? "Solved! Start another exercise whenever you like."
          : "Session over. Start another exercise whenever you like."
        : "Waiting for the tutor…";
    area.append(el(doc, "p", "composer-note", note));
    if (view.phase === "done") {
      const again = el(doc, "button", "new-session", "New session");
      again.addEventListener("click", () => handlers.onNewSession());
      area.append(again);
    }
    return area;
  }

  const input = el(doc, "input", "answer-input") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "Type your answer";
  input.value = state.draft;
  const send = el(doc, "button", "send-button", "Send");
  send.disabled = state.draft.trim().length === 0;
  input.addEventListener("input", () => {
    state.draft = input.value;
    send.disabled = input.value.trim().length === 0;
  });
  const submit = () => {
    const text = input.value.trim();
    if (text) handlers.onSend(text);
  };
  send.addEventListener("click", submit);
  input.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") submit();
  });
  area.append(input, send);
  return area;
}

function renderError(
  doc: Document,
  state: UiState,
  handlers: Handlers,
): HTMLElement {
  const banner = el(doc, "div", "error-banner");
  banner.setAttribute("role", "alert");
  banner.append(el(doc, "span", "error-text", state.error ?? ""));
  if (state.canRetry) {
    const retry = el(doc, "button", "retry-button", "Retry");
    retry.addEventListener("click", () => handlers.onRetry());
    banner.append(retry);
  }
  const dismiss = el(doc, "button", "dismiss-button", "Dismiss");
  dismiss.addEventListener("click", () => handlers.onDismissError());
  banner.append(dismiss);
  return banner;
}

export function render(
  root: HTMLElement,
  state: UiState,
  handlers: Handlers,
): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const shell = el(doc, "main", "chat");
  if (state.error !== null) {
    shell.append(renderError(doc, state, handlers));
  }
  if (!state.view) {
    shell.append(renderPicker(doc, state, handlers));
  } else {
    shell.append(renderTranscript(doc, state.view));
    shell.append(renderComposer(doc, state, state.view, handlers));
  }
  root.append(shell);
}
