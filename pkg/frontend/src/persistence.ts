/**
 * Draft persistence: the in-progress selection for the current task is
 * mirrored into storage on every change, so a page reload mid-task
 * restores exactly what was on screen. Drafts are cleared once the
 * submission is durably recorded (accepted or queued).
 */

import { parseSelection, type SelectionState } from './selection.js';

/** The subset of the Web Storage API this package uses; injectable. */
export interface StringStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/** In-memory stand-in used by tests and non-browser callers. */
export class MemoryStore implements StringStore {
  private readonly data = new Map<string, string>();

  getItem(key: string): string | null {
    return this.data.has(key) ? (this.data.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }

  removeItem(key: string): void {
    this.data.delete(key);
  }
}

export class DraftStore {
  constructor(
    private readonly store: StringStore,
    private readonly annotatorId: string,
  ) {}

  private key(taskId: string): string {
    return `annotation-ui:draft:${this.annotatorId}:${taskId}`;
  }

  save(taskId: string, state: SelectionState): void {
    try {
      this.store.setItem(this.key(taskId), JSON.stringify(state));
    } catch (error) {
      console.error('failed to persist draft selection:', error);
    }
  }

  load(taskId: string): SelectionState | null {
    try {
      const raw = this.store.getItem(this.key(taskId));
      return raw === null ? null : parseSelection(raw);
    } catch (error) {
      console.error('failed to restore draft selection:', error);
      return null;
    }
  }

  clear(taskId: string): void {
    try {
      this.store.removeItem(this.key(taskId));
    } catch (error) {
      console.error('failed to clear draft selection:', error);
    }
  }
}
