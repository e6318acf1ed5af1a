/**
 * Offline submission queue. A decision that cannot reach the server is
 * stored locally and flushed when connectivity returns. Flushing submits
 * each queued decision at most once: an entry leaves the queue the moment
 * the server answers at all (accepted, already-recorded, or rejected);
 * only a transport failure keeps it queued for the next attempt.
 */

import { ApiError, type DecisionPayload, type SessionApiLike } from './api.js';
import type { StringStore } from './persistence.js';

export interface QueuedSubmission {
  task_id: string;
  payload: DecisionPayload;
}

export interface FlushResult {
  /** Task ids the server accepted during this flush. */
  submitted: string[];
  /** Task ids the server had already recorded (first write wins). */
  duplicates: string[];
  /** Task ids the server rejected as invalid, with its reason. */
  rejected: { task_id: string; detail: string }[];
  /** Entries still queued because the server stayed unreachable. */
  remaining: number;
}

export class OfflineQueue {
  private flushing = false;

  constructor(
    private readonly store: StringStore,
    private readonly annotatorId: string,
  ) {}

  private get key(): string {
    return `annotation-ui:queue:${this.annotatorId}`;
  }

  entries(): QueuedSubmission[] {
    try {
      const raw = this.store.getItem(this.key);
      if (raw === null) {
        return [];
      }
      const data: unknown = JSON.parse(raw);
      if (!Array.isArray(data)) {
        return [];
      }
      return data.filter(
        (item): item is QueuedSubmission =>
          typeof item === 'object' &&
          item !== null &&
          typeof (item as QueuedSubmission).task_id === 'string' &&
          typeof (item as QueuedSubmission).payload === 'object',
      );
    } catch (error) {
      console.error('failed to read offline queue:', error);
      return [];
    }
  }

  private write(entries: QueuedSubmission[]): void {
    try {
      this.store.setItem(this.key, JSON.stringify(entries));
    } catch (error) {
      console.error('failed to save offline queue:', error);
    }
  }

  size(): number {
    return this.entries().length;
  }

  has(taskId: string): boolean {
    return this.entries().some((entry) => entry.task_id === taskId);
  }

  enqueue(taskId: string, payload: DecisionPayload): void {
    const entries = this.entries().filter((entry) => entry.task_id !== taskId);
    entries.push({ task_id: taskId, payload });
    this.write(entries);
  }

  /**
   * Submit queued decisions in order. Stops at the first transport
   * failure (still offline); everything the server answered is removed
   * from the queue so it can never be sent twice.
   */
  async flush(api: SessionApiLike): Promise<FlushResult> {
    const result: FlushResult = { submitted: [], duplicates: [], rejected: [], remaining: 0 };
    if (this.flushing) {
      result.remaining = this.size();
      return result;
    }
    this.flushing = true;
    try {
      const pending = this.entries();
      const kept: QueuedSubmission[] = [];
      for (let i = 0; i < pending.length; i += 1) {
        const entry = pending[i];
        try {
          await api.submit(entry.task_id, entry.payload);
          result.submitted.push(entry.task_id);
        } catch (error) {
          if (error instanceof ApiError) {
            if (error.status === 409) {
              result.duplicates.push(entry.task_id);
            } else {
              result.rejected.push({ task_id: entry.task_id, detail: error.message });
            }
          } else {
            kept.push(...pending.slice(i));
            break;
          }
        }
        this.write([...kept, ...pending.slice(i + 1)]);
      }
      this.write(kept);
      result.remaining = kept.length;
      return result;
    } finally {
      this.flushing = false;
    }
  }
}
