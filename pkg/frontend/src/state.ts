/** Pure view derivation: service snapshot + in-flight turns in, view out.
 *
 * No tutoring logic lives here. Input mode, option strings, verdicts, and
 * message kinds all derive from fields the service reported; a refresh from
 * the latest snapshot always converges to server truth.
 */

import type { MessageResponse, Snapshot } from "./api.js";

export type InputMode = "free_text" | "mcq_buttons" | "disabled";

export type BubbleKind =
  | "problem"
  | "student"
  | "feedback"
  | "sub_question"
  | "mcq"
  | "verdict";

export interface Bubble {
  speaker: "student" | "system";
  text: string;
  kind: BubbleKind;
  pending?: boolean;
}

export interface SessionView {
  sessionId: string;
  exerciseId: string;
  problem: string;
  phase: string;
  verdict: boolean | null;
  attemptCount: number;
  inputMode: InputMode;
  mcqOptions: string[] | null;
  bubbles: Bubble[];
}

export function inputModeFor(phase: string): InputMode {
  if (phase === "awaiting_mcq") return "mcq_buttons";
  if (phase === "done") return "disabled";
  return "free_text";
}

/** Presentation kind of a system reply, given the phase it produced. */
export function replyKind(phaseAfter: string): BubbleKind {
  switch (phaseAfter) {
    case "awaiting_subanswer":
      return "sub_question";
    case "awaiting_mcq":
      return "mcq";
    case "done":
      return "verdict";
    default:
      return "feedback";
  }
}

export function viewFromSnapshot(
  snapshot: Snapshot,
  pending: string[] = [],
): SessionView {
  const bubbles: Bubble[] = [];
  const lastReplyIndex = snapshot.transcript
    .map((entry) => entry.kind)
    .lastIndexOf("reply");
  snapshot.transcript.forEach((entry, index) => {
    if (entry.kind === "problem") {
      bubbles.push({ speaker: "system", text: entry.text, kind: "problem" });
    } else if (entry.speaker === "student") {
      bubbles.push({ speaker: "student", text: entry.text, kind: "student" });
    } else {
      // only the newest reply still carries an actionable expectation
      const kind =
        index === lastReplyIndex ? replyKind(snapshot.phase) : "feedback";
      bubbles.push({ speaker: "system", text: entry.text, kind });
    }
  });
  for (const text of pending) {
    bubbles.push({ speaker: "student", text, kind: "student", pending: true });
  }
  const inFlight = pending.length > 0;
  return {
    sessionId: snapshot.session_id,
    exerciseId: snapshot.exercise_id,
    problem: snapshot.problem,
    phase: snapshot.phase,
    verdict: snapshot.verdict,
    attemptCount: snapshot.attempt_count,
    inputMode: inFlight ? "disabled" : inputModeFor(snapshot.phase),
    mcqOptions: snapshot.mcq_options ? [...snapshot.mcq_options] : null,
    bubbles,
  };
}

/** Fold a send's response into the view without waiting for a refetch. */
export function applyReply(
  view: SessionView,
  sentText: string,
  response: MessageResponse,
): SessionView {
  // older replies lose their actionable kind, exactly as a refetch would
  const bubbles = view.bubbles
    .filter((bubble) => !bubble.pending)
    .map((bubble) =>
      bubble.speaker === "system" && bubble.kind !== "problem"
        ? { ...bubble, kind: "feedback" as BubbleKind }
        : bubble,
    );
  bubbles.push({ speaker: "student", text: sentText, kind: "student" });
  bubbles.push({
    speaker: "system",
    text: response.reply,
    kind: replyKind(response.phase),
  });
  return {
    ...view,
    phase: response.phase,
    verdict: response.verdict,
    attemptCount: response.attempt_count,
    inputMode: inputModeFor(response.phase),
    mcqOptions: response.mcq_options ? [...response.mcq_options] : null,
    bubbles,
  };
}

/** The same view with an optimistic student turn and sending disabled. */
export function withPendingTurn(view: SessionView, text: string): SessionView {
  return {
    ...view,
    inputMode: "disabled",
    bubbles: [
      ...view.bubbles,
      { speaker: "student", text, kind: "student", pending: true },
    ],
  };
}

/** Drop the optimistic turn after a failed send. */
export function withoutPendingTurns(view: SessionView): SessionView {
  return {
    ...view,
    inputMode: inputModeFor(view.phase),
    bubbles: view.bubbles.filter((bubble) => !bubble.pending),
  };
}
