// Entry point: wires the session state machine to the static page served
// by the adjudication service. Everything rendered here is read back from
// the server on each transition, so reloading the tab loses nothing.

import { ApiClient, Decision, FetchLike } from "./api.js";
import { bindReviewKeys } from "./keyboard.js";
import { ReviewSession, SessionView } from "./state.js";

const ANNOTATOR_KEY = "review-ui.annotator";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

const annotatorForm = el<HTMLFormElement>("annotator-form");
const annotatorInput = el<HTMLInputElement>("annotator-input");
const whoami = el<HTMLElement>("whoami");
const cardSection = el<HTMLElement>("card");
const topicA = el<HTMLElement>("topic-a");
const topicB = el<HTMLElement>("topic-b");
const cardSource = el<HTMLElement>("card-source");
const cardContext = el<HTMLElement>("card-context");
const cardPosition = el<HTMLElement>("card-position");
const noteInput = el<HTMLTextAreaElement>("note-input");
const emptySection = el<HTMLElement>("empty");
const loadingSection = el<HTMLElement>("loading");
const banner = el<HTMLElement>("banner");
const bannerText = el<HTMLElement>("banner-text");
const flash = el<HTMLElement>("flash");
const progressText = el<HTMLElement>("progress-text");
const barAccepted = el<HTMLElement>("bar-accepted");
const barRejected = el<HTMLElement>("bar-rejected");

const session = new ReviewSession(
  new ApiClient(window.fetch.bind(window) as FetchLike),
  render
);

let shownPairId: string | null = null;

function render(view: SessionView): void {
  annotatorForm.hidden = view.phase !== "idle";
  loadingSection.hidden = view.phase !== "loading";
  cardSection.hidden = view.phase !== "reviewing";
  emptySection.hidden = view.phase !== "empty";

  banner.hidden = view.error === null;
  bannerText.textContent = view.error ?? "";

  whoami.textContent = view.annotator ? `annotator: ${view.annotator}` : "";

  if (view.card) {
    const { candidate, position } = view.card;
    topicA.textContent = candidate.topic_a;
    topicB.textContent = candidate.topic_b;
    cardSource.textContent = candidate.source;
    cardContext.textContent = candidate.context;
    cardPosition.textContent = `#${position}`;
    if (candidate.pair_id !== shownPairId) {
      shownPairId = candidate.pair_id;
      noteInput.value = "";
    }
  }

  if (view.lastVerdict) {
    flash.textContent = `recorded: ${view.lastVerdict.status}`;
    flash.hidden = false;
  } else {
    flash.hidden = true;
  }

  if (view.progress) {
    const { pending, accepted, rejected, total } = view.progress;
    progressText.textContent = `${accepted} accepted / ${rejected} rejected / ${pending} pending of ${total}`;
    const pct = (n: number) => (total ? `${(100 * n) / total}%` : "0%");
    barAccepted.style.width = pct(accepted);
    barRejected.style.width = pct(rejected);
  }

  for (const button of document.querySelectorAll<HTMLButtonElement>("button[data-decision]")) {
    button.disabled = view.busy;
  }
}

annotatorForm.addEventListener("submit", (event) => {
  event.preventDefault();
  const id = annotatorInput.value;
  if (id.trim()) {
    window.localStorage.setItem(ANNOTATOR_KEY, id.trim());
  }
  void session.start(id);
});

function decide(decision: Decision): void {
  void session.decide(decision, noteInput.value);
}

for (const button of document.querySelectorAll<HTMLButtonElement>("button[data-decision]")) {
  button.addEventListener("click", () => decide(button.dataset.decision as Decision));
}

el<HTMLButtonElement>("btn-retry").addEventListener("click", () => void session.retry());

bindReviewKeys(document, decide);

const remembered = window.localStorage.getItem(ANNOTATOR_KEY);
if (remembered) {
  annotatorInput.value = remembered;
  void session.start(remembered);
} else {
  render(session.view());
}
