/**
 * DOM construction and rendering. No business logic lives here: the view
 * shows exactly what it is handed and reports clicks back through
 * callbacks.
 *
 * Blinding is structural. The task card renders only the fields present
 * in the blinded task payload — kind badge, digest text, task id — plus a
 * session-relative progress counter. There is deliberately no element for
 * a source, pipeline, or calendar date, and no market data, charts, or
 * external links anywhere.
 */

import type { Task, TickerEntry } from './api.js';

/** Horizon badges: what price movement each digest kind is judged against. */
export const KIND_BADGES: Record<string, string> = {
  morning: 'morning horizon: same-day close',
  closing: 'closing-bell horizon: next open',
};

export interface SideElements {
  column: HTMLElement;
  search: HTMLInputElement;
  list: HTMLUListElement;
  summary: HTMLElement;
}

export interface ViewElements {
  root: HTMLElement;
  title: HTMLElement;
  progress: HTMLElement;
  offlineBanner: HTMLElement;
  errorBanner: HTMLElement;
  errorText: HTMLElement;
  retryButton: HTMLButtonElement;
  taskCard: HTMLElement;
  taskId: HTMLElement;
  kindBadge: HTMLElement;
  digestText: HTMLElement;
  decisionPanel: HTMLElement;
  buy: SideElements;
  sell: SideElements;
  remark: HTMLTextAreaElement;
  validationMessage: HTMLElement;
  submitButton: HTMLButtonElement;
  submitHint: HTMLElement;
  doneScreen: HTMLElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className: string,
  text = '',
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== '') {
    node.textContent = text;
  }
  return node;
}

function buildSide(doc: Document, side: 'buy' | 'sell', heading: string): SideElements {
  const column = el(doc, 'section', `side-column side-${side}`);
  const title = el(doc, 'h2', 'side-heading', heading);
  const search = el(doc, 'input', 'search-input');
  search.type = 'search';
  search.placeholder = 'search by code or name';
  search.setAttribute('aria-label', `${heading} search`);
  const list = el(doc, 'ul', 'ticker-list');
  const summary = el(doc, 'p', 'selected-summary', 'selected: none');
  column.append(title, search, list, summary);
  return { column, search, list, summary };
}

/** Build the static screen skeleton inside `root` and return handles. */
export function buildLayout(root: HTMLElement): ViewElements {
  const doc = root.ownerDocument;
  root.textContent = '';
  root.classList.add('annotation-app');

  const header = el(doc, 'header', 'app-header');
  const title = el(doc, 'h1', 'experiment-title');
  const progress = el(doc, 'span', 'progress-indicator');
  header.append(title, progress);

  const offlineBanner = el(
    doc,
    'div',
    'banner banner-offline',
    'connection lost — your submission is saved locally and will be sent once when the connection returns.',
  );
  offlineBanner.hidden = true;

  const errorBanner = el(doc, 'div', 'banner banner-error');
  const errorText = el(doc, 'span', 'banner-error-text');
  const retryButton = el(doc, 'button', 'retry-button', 'retry');
  retryButton.type = 'button';
  errorBanner.append(errorText, retryButton);
  errorBanner.hidden = true;

  const taskCard = el(doc, 'section', 'task-card');
  const taskMeta = el(doc, 'div', 'task-meta');
  const taskId = el(doc, 'span', 'task-id');
  const kindBadge = el(doc, 'span', 'kind-badge');
  taskMeta.append(taskId, kindBadge);
  const digestText = el(doc, 'div', 'digest-text');
  taskCard.append(taskMeta, digestText);

  const decisionPanel = el(doc, 'section', 'decision-panel');
  const buy = buildSide(doc, 'buy', 'buy — expect a rise');
  const sell = buildSide(doc, 'sell', 'sell — expect a fall');
  const columns = el(doc, 'div', 'side-columns');
  columns.append(buy.column, sell.column);

  const remarkLabel = el(doc, 'label', 'remark-label', 'remark');
  const remark = el(doc, 'textarea', 'remark-input');
  remark.placeholder =
    'portfolio reasoning, or why no trade is warranted (e.g. "No directly relevant stocks")';
  remarkLabel.append(remark);

  const validationMessage = el(doc, 'div', 'validation-message');
  validationMessage.hidden = true;
  const submitButton = el(doc, 'button', 'submit-button', 'submit decisions');
  submitButton.type = 'button';
  submitButton.disabled = true;
  const submitHint = el(doc, 'p', 'submit-hint');

  decisionPanel.append(columns, remarkLabel, validationMessage, submitButton, submitHint);

  const doneScreen = el(doc, 'section', 'done-screen');
  doneScreen.hidden = true;

  root.append(header, offlineBanner, errorBanner, taskCard, decisionPanel, doneScreen);
  return {
    root,
    title,
    progress,
    offlineBanner,
    errorBanner,
    errorText,
    retryButton,
    taskCard,
    taskId,
    kindBadge,
    digestText,
    decisionPanel,
    buy,
    sell,
    remark,
    validationMessage,
    submitButton,
    submitHint,
    doneScreen,
  };
}

export function renderTitle(view: ViewElements, title: string): void {
  view.title.textContent = title;
}

export function renderProgress(view: ViewElements, completed: number, total: number): void {
  view.progress.textContent = `task ${Math.min(completed + 1, total)} of ${total}`;
}

/** Show one blinded task: id, kind badge, and the digest text, read-only. */
export function renderTask(view: ViewElements, task: Task): void {
  view.taskCard.hidden = false;
  view.decisionPanel.hidden = false;
  view.doneScreen.hidden = true;
  view.taskId.textContent = task.task_id;
  view.kindBadge.textContent = KIND_BADGES[task.kind] ?? task.kind;
  view.kindBadge.className = `kind-badge kind-${task.kind}`;
  view.digestText.textContent = task.text;
}

export function renderTickerList(
  view: ViewElements,
  side: 'buy' | 'sell',
  entries: TickerEntry[],
  selected: string[],
  onToggle: (code: string) => void,
): void {
  const sideView = side === 'buy' ? view.buy : view.sell;
  const doc = sideView.list.ownerDocument;
  sideView.list.textContent = '';
  for (const entry of entries) {
    const item = doc.createElement('li');
    const button = doc.createElement('button');
    button.type = 'button';
    button.className = selected.includes(entry.code) ? 'ticker-option selected' : 'ticker-option';
    button.dataset.code = entry.code;
    button.textContent = `${entry.code} ${entry.name}`;
    button.addEventListener('click', () => onToggle(entry.code));
    item.append(button);
    sideView.list.append(item);
  }
}

export function renderSelectedSummary(
  view: ViewElements,
  side: 'buy' | 'sell',
  selected: string[],
): void {
  const sideView = side === 'buy' ? view.buy : view.sell;
  sideView.summary.textContent =
    selected.length === 0 ? 'selected: none' : `selected: ${selected.join(', ')}`;
}

export function renderSubmitState(view: ViewElements, enabled: boolean, hint: string): void {
  view.submitButton.disabled = !enabled;
  view.submitHint.textContent = enabled ? '' : hint;
}

export function showValidationMessage(view: ViewElements, message: string | null): void {
  if (message === null) {
    view.validationMessage.hidden = true;
    view.validationMessage.textContent = '';
  } else {
    view.validationMessage.hidden = false;
    view.validationMessage.textContent = message;
  }
}

export function showOfflineBanner(view: ViewElements, visible: boolean): void {
  view.offlineBanner.hidden = !visible;
}

export function showErrorBanner(view: ViewElements, message: string | null): void {
  if (message === null) {
    view.errorBanner.hidden = true;
    view.errorText.textContent = '';
  } else {
    view.errorBanner.hidden = false;
    view.errorText.textContent = message;
  }
}

/** End-of-session screen; shown when the server has no task left. */
export function renderDone(view: ViewElements, queued: number): void {
  view.taskCard.hidden = true;
  view.decisionPanel.hidden = true;
  view.doneScreen.hidden = false;
  view.doneScreen.textContent =
    queued === 0
      ? 'session complete — every task has been submitted.'
      : `session complete — ${queued} submission(s) are queued and will be sent when the connection returns.`;
}
