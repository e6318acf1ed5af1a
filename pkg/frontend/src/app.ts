/**
 * Session controller: fetches blinded tasks one at a time, maintains the
 * selection state for the task on screen, and submits decisions.
 *
 * Submission is optimistic against an idempotent server: an accepted
 * POST advances to the next task; an already-recorded answer (duplicate)
 * advances without resubmitting; a validation rejection shows the
 * server's reason inline and keeps the selection; a transport failure
 * queues the decision locally and waits for connectivity.
 */

import {
  ApiError,
  type SessionApiLike,
  type Task,
  type TickerEntry,
} from './api.js';
import { DraftStore, type StringStore } from './persistence.js';
import { OfflineQueue } from './queue.js';
import {
  canSubmit,
  emptySelection,
  filterUniverse,
  setRemark,
  toggle,
  toPayload,
  SUBMIT_HINT,
  type SelectionState,
  type Side,
} from './selection.js';
import {
  buildLayout,
  renderDone,
  renderProgress,
  renderSelectedSummary,
  renderSubmitState,
  renderTask,
  renderTickerList,
  renderTitle,
  showErrorBanner,
  showOfflineBanner,
  showValidationMessage,
  type ViewElements,
} from './view.js';

/** The slice of `window` the app listens to for connectivity changes. */
export interface ConnectivityEvents {
  addEventListener(type: 'online' | 'offline', listener: () => void): void;
}

export interface AppOptions {
  api: SessionApiLike;
  annotatorId: string;
  storage: StringStore;
  connectivity?: ConnectivityEvents;
}

const NETWORK_MESSAGE = 'could not reach the session service — check the connection and retry.';

export class AnnotationApp {
  readonly view: ViewElements;
  private readonly api: SessionApiLike;
  private readonly drafts: DraftStore;
  private readonly queue: OfflineQueue;

  private universeEntries: TickerEntry[] = [];
  private task: Task | null = null;
  private selection: SelectionState = emptySelection();
  private completed = 0;
  private total = 0;
  private retryAction: (() => Promise<void>) | null = null;

  constructor(root: HTMLElement, options: AppOptions) {
    this.api = options.api;
    this.drafts = new DraftStore(options.storage, options.annotatorId);
    this.queue = new OfflineQueue(options.storage, options.annotatorId);
    this.view = buildLayout(root);
    this.wireEvents(options.connectivity);
  }

  private wireEvents(connectivity?: ConnectivityEvents): void {
    this.view.buy.search.addEventListener('input', () => this.renderSide('buy'));
    this.view.sell.search.addEventListener('input', () => this.renderSide('sell'));
    this.view.remark.addEventListener('input', () => {
      this.selection = setRemark(this.selection, this.view.remark.value);
      this.persistDraft();
      this.renderSubmit();
    });
    this.view.submitButton.addEventListener('click', () => {
      void this.submitCurrent();
    });
    this.view.retryButton.addEventListener('click', () => {
      void this.retry();
    });
    connectivity?.addEventListener('online', () => {
      void this.onReconnect();
    });
  }

  async start(): Promise<void> {
    try {
      const config = await this.api.config();
      renderTitle(this.view, config.title);
      if (config.closed) {
        this.renderClosed();
        return;
      }
      this.universeEntries = await this.api.universe();
      const progress = await this.api.progress();
      this.completed = progress.completed;
      this.total = progress.total;
      showErrorBanner(this.view, null);
      this.retryAction = null;
    } catch (error) {
      this.handleNetworkFailure(error, () => this.start());
      return;
    }
    if (this.queue.size() > 0) {
      await this.flushQueue();
    }
    await this.loadNext();
  }

  /** The selection currently on screen (read-only snapshot for tests). */
  get currentSelection(): SelectionState {
    return { ...this.selection, buys: [...this.selection.buys], sells: [...this.selection.sells] };
  }

  get currentTask(): Task | null {
    return this.task;
  }

  get queuedCount(): number {
    return this.queue.size();
  }

  private renderClosed(): void {
    this.view.taskCard.hidden = true;
    this.view.decisionPanel.hidden = true;
    this.view.doneScreen.hidden = false;
    this.view.doneScreen.textContent =
      'this experiment is closed — no further submissions are collected.';
  }

  private async loadNext(): Promise<void> {
    let task: Task | null;
    try {
      task = await this.api.nextTask();
      showErrorBanner(this.view, null);
      this.retryAction = null;
    } catch (error) {
      this.handleNetworkFailure(error, () => this.loadNext());
      return;
    }
    this.task = task;
    if (task === null) {
      renderDone(this.view, this.queue.size());
      renderProgress(this.view, this.completed, this.total);
      return;
    }
    this.selection = this.drafts.load(task.task_id) ?? emptySelection();
    this.view.buy.search.value = '';
    this.view.sell.search.value = '';
    this.view.remark.value = this.selection.remark;
    renderTask(this.view, task);
    renderProgress(this.view, this.completed, this.total);
    showValidationMessage(this.view, null);
    this.renderSide('buy');
    this.renderSide('sell');
    this.renderSubmit();
  }

  private renderSide(side: Side): void {
    const sideView = side === 'buy' ? this.view.buy : this.view.sell;
    const selected = side === 'buy' ? this.selection.buys : this.selection.sells;
    const visible = filterUniverse(this.universeEntries, sideView.search.value);
    renderTickerList(this.view, side, visible, selected, (code) => this.onToggle(side, code));
    renderSelectedSummary(this.view, side, selected);
  }

  private renderSubmit(): void {
    renderSubmitState(this.view, this.task !== null && canSubmit(this.selection), SUBMIT_HINT);
  }

  private onToggle(side: Side, code: string): void {
    this.selection = toggle(this.selection, side, code);
    this.persistDraft();
    showValidationMessage(this.view, null);
    this.renderSide('buy');
    this.renderSide('sell');
    this.renderSubmit();
  }

  private persistDraft(): void {
    if (this.task !== null) {
      this.drafts.save(this.task.task_id, this.selection);
    }
  }

  private async submitCurrent(): Promise<void> {
    if (this.task === null || !canSubmit(this.selection)) {
      return;
    }
    const task = this.task;
    const payload = toPayload(this.selection);
    try {
      await this.api.submit(task.task_id, payload);
    } catch (error) {
      if (error instanceof ApiError) {
        if (error.status === 409) {
          // Already recorded server-side; advance without resubmitting.
          this.finishTask(task.task_id);
          await this.loadNext();
          return;
        }
        showValidationMessage(this.view, error.message);
        return;
      }
      this.queue.enqueue(task.task_id, payload);
      this.finishTask(task.task_id);
      this.renderWaiting();
      return;
    }
    this.finishTask(task.task_id);
    await this.loadNext();
  }

  private finishTask(taskId: string): void {
    this.drafts.clear(taskId);
    this.completed += 1;
    this.selection = emptySelection();
    this.task = null;
  }

  /** Submission queued while offline: hold the session until reconnect. */
  private renderWaiting(): void {
    this.view.taskCard.hidden = true;
    this.view.decisionPanel.hidden = true;
    this.view.doneScreen.hidden = true;
    showOfflineBanner(this.view, true);
  }

  private async onReconnect(): Promise<void> {
    await this.flushQueue();
    if (this.task === null && this.queue.size() === 0) {
      await this.loadNext();
    }
  }

  private async flushQueue(): Promise<void> {
    const result = await this.queue.flush(this.api);
    if (result.rejected.length > 0) {
      const first = result.rejected[0];
      showErrorBanner(
        this.view,
        `a queued submission for ${first.task_id} was rejected: ${first.detail}`,
      );
    }
    showOfflineBanner(this.view, result.remaining > 0);
  }

  private handleNetworkFailure(error: unknown, retryAction: () => Promise<void>): void {
    if (error instanceof ApiError) {
      // The server answered; this is not a connectivity problem.
      showErrorBanner(this.view, error.message);
    } else {
      showErrorBanner(this.view, NETWORK_MESSAGE);
    }
    this.retryAction = retryAction;
  }

  private async retry(): Promise<void> {
    const action = this.retryAction;
    this.retryAction = null;
    showErrorBanner(this.view, null);
    if (action !== null) {
      await action();
    }
  }
}
