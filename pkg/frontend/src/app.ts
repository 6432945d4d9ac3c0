/** Wiring: session lifecycle, optimistic sends, and reload recovery. */

import { ApiClient, ApiError, type ExerciseSummary } from "./api.js";
import {
  applyReply,
  viewFromSnapshot,
  withPendingTurn,
  withoutPendingTurns,
  type SessionView,
} from "./state.js";
import { render, type Handlers, type UiState } from "./render.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const SESSION_KEY = "socratic.session";

export class ChatApp {
  private state: UiState = {
    view: null,
    exercises: [],
    error: null,
    canRetry: false,
    draft: "",
  };
  private inFlight = false;
  private lastFailedAction: (() => Promise<void>) | null = null;
  private operation: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly storage: StorageLike,
  ) {}

  /** Resolves when every queued operation has finished. */
  settle(): Promise<void> {
    return this.operation;
  }

  view(): SessionView | null {
    return this.state.view;
  }

  boot(): Promise<void> {
    return this.enqueue(async () => {
      const stored = this.storage.getItem(SESSION_KEY);
      if (stored) {
        try {
          const snapshot = await this.client.getSession(stored);
          this.state.view = viewFromSnapshot(snapshot);
          return;
        } catch {
          // stale session (service restarted, or id invalid): fall through
          this.storage.removeItem(SESSION_KEY);
        }
      }
      await this.loadPicker();
    });
  }

  start(exerciseId: string): Promise<void> {
    return this.enqueue(async () => {
      try {
        const snapshot = await this.client.createSession(exerciseId);
        this.storage.setItem(SESSION_KEY, snapshot.session_id);
        this.state.view = viewFromSnapshot(snapshot);
        this.state.error = null;
        this.state.canRetry = false;
        this.lastFailedAction = null;
      } catch (error) {
        this.lastFailedAction = () => this.start(exerciseId);
        this.fail(error, true);
      }
    });
  }

  send(text: string): Promise<void> {
    return this.enqueue(async () => {
      const view = this.state.view;
      if (!view || this.inFlight) return;
      if (view.inputMode === "disabled") return;
      const trimmed = text.trim();
      if (!trimmed) return;
      this.inFlight = true;
      this.state.view = withPendingTurn(view, trimmed);
      this.state.error = null;
      this.state.canRetry = false;
      this.paint();
      try {
        const response = await this.client.sendMessage(
          view.sessionId,
          trimmed,
        );
        this.state.view = applyReply(this.state.view, trimmed, response);
        this.state.draft = "";
        this.lastFailedAction = null;
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          // the session moved on without us; server truth wins
          try {
            await this.refresh();
          } catch (refreshError) {
            this.state.view = withoutPendingTurns(this.state.view);
            this.fail(refreshError, false);
          }
        } else {
          this.state.view = withoutPendingTurns(this.state.view);
          this.state.draft = trimmed;
          this.lastFailedAction = () => this.send(trimmed);
          this.fail(error, true);
        }
      } finally {
        this.inFlight = false;
      }
    });
  }

  retry(): Promise<void> {
    const action = this.lastFailedAction;
    if (!action) return this.settle();
    this.lastFailedAction = null;
    return action();
  }

  newSession(): Promise<void> {
    return this.enqueue(async () => {
      this.storage.removeItem(SESSION_KEY);
      this.state.view = null;
      this.state.draft = "";
      await this.loadPicker();
    });
  }

  private async refresh(): Promise<void> {
    const view = this.state.view;
    if (!view) return;
    const snapshot = await this.client.getSession(view.sessionId);
    this.state.view = viewFromSnapshot(snapshot);
  }

  private async loadPicker(): Promise<void> {
    try {
      this.state.exercises = await this.client.listExercises();
      this.state.error = null;
      this.state.canRetry = false;
    } catch (error) {
      this.lastFailedAction = () => this.enqueue(() => this.loadPicker());
      this.fail(error, true);
    }
  }

  private fail(error: unknown, canRetry: boolean): void {
    this.state.error =
      error instanceof Error ? error.message : "something went wrong";
    this.state.canRetry = canRetry;
  }

  private enqueue(task: () => Promise<void>): Promise<void> {
    const run = this.operation.then(task).then(() => this.paint());
    // keep the chain alive after failures so later operations still run
    this.operation = run.catch(() => undefined);
    return run;
  }

  private handlers(): Handlers {
    return {
      onSend: (text) => void this.send(text).catch(() => undefined),
      onChoose: (option) => void this.send(option).catch(() => undefined),
      onRetry: () => void this.retry().catch(() => undefined),
      onDismissError: () => {
        this.state.error = null;
        this.state.canRetry = false;
        this.paint();
      },
      onStart: (exerciseId) => void this.start(exerciseId).catch(() => undefined),
      onNewSession: () => void this.newSession().catch(() => undefined),
    };
  }

  private paint(): void {
    render(this.root, this.state, this.handlers());
  }
}

export function mount(
  root: HTMLElement,
  client: ApiClient,
  storage: StorageLike,
): ChatApp {
  const app = new ChatApp(root, client, storage);
  void app.boot();
  return app;
}

export type { ExerciseSummary };
