/** Shared fixtures: the worked tutoring exchange and small DOM helpers. */

import type { ChatApp, StorageLike } from "../src/app";

export const PROBLEM =
  "We want to choose between 2 treatments A and B. For both, we got same " +
  "mean recovery rate but higher variance for treatment A. Which treatment " +
  "would you discard, and why?";

export const REPLY_SUBQUESTION =
  '"Treatment A" is correct! Try supplying a reason for it. ' +
  "Do we prefer more homogeneous results or less?";
export const REPLY_RETRY = "Ok, now try to answer the original exercise.";
export const REPLY_CORRECT = "That's correct!";
export const FINAL_ANSWER =
  "Treatment A, because it is less homogeneous than treatment B.";

export const MCQ_PROBE =
  "We should discard treatment B instead since it is less homogeneous " +
  "than treatment B";
export const MCQ_REPLY =
  'Did you mean "Treatment A" because "it is less homogeneous than ' +
  'treatment B"?';
export const MCQ_OPTIONS = ["Yes, I agree", "No, I disagree"];

export function memoryStorage(): StorageLike {
  const map = new Map<string, string>();
  return {
    getItem: (key) => map.get(key) ?? null,
    setItem: (key, value) => void map.set(key, value),
    removeItem: (key) => void map.delete(key),
  };
}

export function bubbleTexts(root: HTMLElement): string[] {
  return [...root.querySelectorAll(".bubble .bubble-text")].map(
    (node) => node.textContent ?? "",
  );
}

export function bubbleKinds(root: HTMLElement): string[] {
  return [...root.querySelectorAll<HTMLElement>(".bubble")].map(
    (node) => node.dataset.kind ?? "",
  );
}

export function typeAnswer(root: HTMLElement, text: string): void {
  const input = root.querySelector(".answer-input") as HTMLInputElement;
  input.value = text;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

export function clickSend(root: HTMLElement): void {
  (root.querySelector(".send-button") as HTMLButtonElement).click();
}

export async function sendAnswer(
  root: HTMLElement,
  app: ChatApp,
  text: string,
): Promise<void> {
  typeAnswer(root, text);
  clickSend(root);
  await app.settle();
}

export function clickStart(root: HTMLElement): void {
  (root.querySelector(".start-button") as HTMLButtonElement).click();
}
