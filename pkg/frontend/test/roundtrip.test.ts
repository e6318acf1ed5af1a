/**
 * End-to-end round trip against the real session service: a scripted
 * browser session completes all four tasks — including one no-action
 * submission carrying only a remark — then the service's event log is
 * replayed in a fresh process and the reconstructed state is compared
 * against exactly what the client submitted. Every rendered screen is
 * also scanned to confirm the client never shows a source or date.
 */

import { afterAll, beforeAll, expect, it } from 'vitest';

import { SessionApi } from '../src/api.js';
import { AnnotationApp } from '../src/app.js';
import { MemoryStore } from '../src/persistence.js';
import { KIND_BADGES } from '../src/view.js';
import {
  replaySessionState,
  startFixtureService,
  type ServiceHandle,
} from './service.js';

const ANNOTATOR = 'ann-1';
const ISO_DATE = /\b\d{4}-\d{2}-\d{2}\b/;
const PROVENANCE = /journalist|performance_based|professional[-_]insight/i;
const FIELD_LABELS = /\bsource:\s|\bpipeline:\s|\bdate:\s|\bpublished\b/i;

let service: ServiceHandle;

beforeAll(async () => {
  service = await startFixtureService({ annotators: [ANNOTATOR], seed: 7 });
});

afterAll(async () => {
  await service.stop();
});

function assertBlinded(root: HTMLElement): void {
  const html = root.innerHTML;
  expect(html).not.toMatch(ISO_DATE);
  expect(html).not.toMatch(PROVENANCE);
  expect(html).not.toMatch(FIELD_LABELS);
  expect(root.querySelector('[class*="source"], [class*="pipeline"], [class*="date"]')).toBeNull();
}

function clickTicker(root: HTMLElement, side: 'buy' | 'sell', code: string): void {
  const buttons = root.querySelectorAll<HTMLButtonElement>(`.side-${side} .ticker-option`);
  for (const button of buttons) {
    if (button.dataset.code === code) {
      button.click();
      return;
    }
  }
  throw new Error(`no ${side} option for ${code}`);
}

function typeRemark(root: HTMLElement, text: string): void {
  const remark = root.querySelector<HTMLTextAreaElement>('.remark-input');
  if (remark === null) {
    throw new Error('remark input missing');
  }
  remark.value = text;
  remark.dispatchEvent(new Event('input', { bubbles: true }));
}

async function settle(): Promise<void> {
  for (let i = 0; i < 6; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
}

interface Script {
  buys: string[];
  sells: string[];
  remark: string;
}

const SCRIPTS: Script[] = [
  { buys: ['2330', '2454'], sells: ['2317'], remark: 'chip strength, assembler weakness' },
  // The no-action path: both lists empty, decision carried by the remark.
  { buys: [], sells: [], remark: 'No directly relevant stocks' },
  { buys: ['2881'], sells: ['1301', '2303'], remark: 'rotate toward financials' },
  { buys: ['2303'], sells: [], remark: 'follow-through on foundry order flow' },
];

it('completes a 4-task session whose replayed state matches the submissions', async () => {
  const root = document.createElement('div');
  document.body.append(root);
  const api = new SessionApi(service.baseUrl, ANNOTATOR);
  const app = new AnnotationApp(root, {
    api,
    annotatorId: ANNOTATOR,
    storage: new MemoryStore(),
  });
  await app.start();

  const expected: Record<string, Script> = {};
  const seenKinds = new Set<string>();

  for (const script of SCRIPTS) {
    const task = app.currentTask;
    expect(task).not.toBeNull();
    if (task === null) {
      throw new Error('unreachable');
    }
    expect(root.querySelector('.task-id')?.textContent).toBe(task.task_id);
    expect(root.querySelector('.digest-text')?.textContent).toBe(task.text);
    expect(root.querySelector('.kind-badge')?.textContent).toBe(KIND_BADGES[task.kind]);
    seenKinds.add(task.kind);
    assertBlinded(root);

    const submit = root.querySelector<HTMLButtonElement>('.submit-button');
    expect(submit?.disabled).toBe(true);
    for (const code of script.buys) {
      clickTicker(root, 'buy', code);
    }
    for (const code of script.sells) {
      clickTicker(root, 'sell', code);
    }
    if (script.buys.length === 0 && script.sells.length === 0) {
      // No action without a remark must stay unsubmittable.
      expect(submit?.disabled).toBe(true);
    }
    typeRemark(root, script.remark);
    expect(submit?.disabled).toBe(false);

    expected[task.task_id] = {
      buys: [...script.buys].sort(),
      sells: [...script.sells].sort(),
      remark: script.remark,
    };
    submit?.click();
    await settle();
  }

  expect(seenKinds).toEqual(new Set(['morning', 'closing']));
  const done = root.querySelector<HTMLElement>('.done-screen');
  expect(done?.hidden).toBe(false);
  expect(done?.textContent).toContain('session complete');
  assertBlinded(root);

  const replayed = await replaySessionState(service.logPath, service.seed);
  expect(Object.keys(replayed)).toEqual([ANNOTATOR]);
  expect(replayed[ANNOTATOR]).toEqual(expected);
  expect(Object.keys(replayed[ANNOTATOR])).toHaveLength(4);
});
