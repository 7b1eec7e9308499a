// Session state machine for one annotator. All transitions round-trip
// through the service; nothing here caches a status the server did not
// just report, so a page reload rebuilds the same view from the API.

import { Candidate, Decision, Progress } from "./api.js";

export type Phase = "idle" | "loading" | "reviewing" | "empty" | "error";

export interface ReviewApi {
  nextCandidate(annotator: string): Promise<Candidate | null>;
  submitVerdict(body: {
    pair_id: string;
    annotator: string;
    decision: Decision;
    note?: string | null;
  }): Promise<{ status: string }>;
  progress(): Promise<Progress>;
}

export interface ReviewCard {
  candidate: Candidate;
  position: number; // 1-based count of cards shown this session
  progress: Progress;
}

export interface SessionView {
  phase: Phase;
  annotator: string | null;
  card: ReviewCard | null;
  progress: Progress | null;
  error: string | null;
  lastVerdict: { pairId: string; status: string } | null;
  busy: boolean;
}

export class ReviewSession {
  private phase: Phase = "idle";
  private annotator: string | null = null;
  private card: ReviewCard | null = null;
  private progress: Progress | null = null;
  private error: string | null = null;
  private lastVerdict: { pairId: string; status: string } | null = null;
  private position = 0;
  private busy = false;
  private pendingRetry: (() => Promise<void>) | null = null;

  constructor(
    private readonly api: ReviewApi,
    private readonly onChange: (view: SessionView) => void = () => undefined
  ) {}

  view(): SessionView {
    return {
      phase: this.phase,
      annotator: this.annotator,
      card: this.card,
      progress: this.progress,
      error: this.error,
      lastVerdict: this.lastVerdict,
      busy: this.busy,
    };
  }

  private notify(): void {
    this.onChange(this.view());
  }

  async start(annotator: string): Promise<void> {
    if (this.busy) {
      return;
    }
    const trimmed = annotator.trim();
    if (!trimmed) {
      this.error = "enter an annotator id to start reviewing";
      this.notify();
      return;
    }
    this.annotator = trimmed;
    this.position = 0;
    this.card = null;
    this.lastVerdict = null;
    await this.advance();
  }

  /** Submit a verdict for the current card, then pull the next one. */
  async decide(decision: Decision, note?: string): Promise<void> {
    if (this.busy || this.phase !== "reviewing" || !this.card || !this.annotator) {
      return;
    }
    const body = {
      pair_id: this.card.candidate.pair_id,
      annotator: this.annotator,
      decision,
      note: note && note.trim() ? note.trim() : null,
    };
    this.busy = true;
    this.error = null;
    this.notify();
    try {
      const result = await this.api.submitVerdict(body);
      this.lastVerdict = { pairId: body.pair_id, status: result.status };
    } catch (err) {
      // Keep the card on screen; the verdict was not recorded.
      this.busy = false;
      this.error = `could not record verdict: ${describe(err)}`;
      this.pendingRetry = () => this.decide(decision, note);
      this.notify();
      return;
    }
    this.busy = false;
    await this.advance();
  }

  async retry(): Promise<void> {
    if (this.busy) {
      return;
    }
    const op = this.pendingRetry ?? (() => this.advance());
    this.pendingRetry = null;
    await op();
  }

  private async advance(): Promise<void> {
    if (!this.annotator) {
      return;
    }
    this.busy = true;
    this.error = null;
    if (!this.card) {
      this.phase = "loading";
    }
    this.notify();
    try {
      const progress = await this.api.progress();
      const candidate = await this.api.nextCandidate(this.annotator);
      this.progress = progress;
      if (candidate === null) {
        this.card = null;
        this.phase = "empty";
      } else {
        this.position += 1;
        this.card = { candidate, position: this.position, progress };
        this.phase = "reviewing";
      }
    } catch (err) {
      this.card = null;
      this.phase = "error";
      this.error = `could not reach the adjudication service: ${describe(err)}`;
      this.pendingRetry = () => this.advance();
    }
    this.busy = false;
    this.notify();
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
