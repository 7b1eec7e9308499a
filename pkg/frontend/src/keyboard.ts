// Keyboard-first review: A accepts, R rejects, S skips. Bindings stay out
// of the way while the annotator is typing a note or an id.

import { Decision } from "./api.js";

const KEYMAP: Record<string, Decision> = {
  a: "accept",
  r: "reject",
  s: "skip",
};

// Structural subsets of KeyboardEvent / EventTarget so the handler can be
// exercised without a DOM.
export interface KeyEventLike {
  key: string;
  metaKey: boolean;
  ctrlKey: boolean;
  altKey: boolean;
  target: unknown;
  preventDefault(): void;
}

export interface KeyTarget {
  addEventListener(type: "keydown", handler: (event: KeyEventLike) => void): void;
  removeEventListener(type: "keydown", handler: (event: KeyEventLike) => void): void;
}

export function isTypingContext(target: unknown): boolean {
  const el = target as { tagName?: string; isContentEditable?: boolean } | null;
  if (!el) {
    return false;
  }
  if (el.isContentEditable) {
    return true;
  }
  return el.tagName === "INPUT" || el.tagName === "TEXTAREA" || el.tagName === "SELECT";
}

/** Attach the review shortcuts; returns the unbind function. */
export function bindReviewKeys(
  target: KeyTarget,
  onDecision: (decision: Decision) => void
): () => void {
  const handler = (event: KeyEventLike) => {
    if (event.metaKey || event.ctrlKey || event.altKey) {
      return;
    }
    if (isTypingContext(event.target)) {
      return;
    }
    const decision = KEYMAP[event.key.toLowerCase()];
    if (!decision) {
      return;
    }
    event.preventDefault();
    onDecision(decision);
  };
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}
