/**
 * Selection state for one task: a buy set, a sell set, and a remark.
 *
 * Two rules do all the work here:
 *  - side exclusivity: adding a ticker to one side removes it from the
 *    other, so the last-clicked side wins;
 *  - the no-action rule: with both sides empty, a submission needs a
 *    non-blank remark, so submit stays disabled until one exists.
 *
 * Everything is immutable; callers re-render from the returned state.
 */

import type { DecisionPayload, TickerEntry } from './api.js';

export type Side = 'buy' | 'sell';

export interface SelectionState {
  buys: string[];
  sells: string[];
  remark: string;
}

export function emptySelection(): SelectionState {
  return { buys: [], sells: [], remark: '' };
}

export function isSelected(state: SelectionState, side: Side, code: string): boolean {
  const codes = side === 'buy' ? state.buys : state.sells;
  return codes.includes(code);
}

/**
 * Toggle `code` on `side`: select it if absent, deselect it if present.
 * Selecting a code that sits on the opposite side moves it over.
 */
export function toggle(state: SelectionState, side: Side, code: string): SelectionState {
  const same = side === 'buy' ? state.buys : state.sells;
  const other = side === 'buy' ? state.sells : state.buys;
  const nextSame = same.includes(code) ? same.filter((c) => c !== code) : [...same, code];
  const nextOther = other.filter((c) => c !== code);
  return side === 'buy'
    ? { ...state, buys: nextSame, sells: nextOther }
    : { ...state, buys: nextOther, sells: nextSame };
}

export function setRemark(state: SelectionState, remark: string): SelectionState {
  return { ...state, remark };
}

/** Submittable unless buys, sells, and the (trimmed) remark are all empty. */
export function canSubmit(state: SelectionState): boolean {
  return state.buys.length > 0 || state.sells.length > 0 || state.remark.trim().length > 0;
}

export const SUBMIT_HINT = 'select at least one stock, or leave a remark explaining the no-action call';

/** Normalized wire payload: deduplicated, sorted, disjoint sides. */
export function toPayload(state: SelectionState): DecisionPayload {
  return {
    buys: [...new Set(state.buys)].sort(),
    sells: [...new Set(state.sells)].sort(),
    remark: state.remark,
  };
}

/**
 * Type-ahead filter over the company list: case-insensitive substring
 * match on the ticker code or the company name. A blank query keeps
 * the full universe visible.
 */
export function filterUniverse(entries: TickerEntry[], query: string): TickerEntry[] {
  const needle = query.trim().toUpperCase();
  if (needle === '') {
    return entries;
  }
  return entries.filter(
    (entry) =>
      entry.code.toUpperCase().includes(needle) || entry.name.toUpperCase().includes(needle),
  );
}

/** Parse a persisted draft, rejecting anything that is not shaped right. */
export function parseSelection(raw: string): SelectionState | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== 'object' || data === null) {
    return null;
  }
  const draft = data as { buys?: unknown; sells?: unknown; remark?: unknown };
  const isCodeList = (value: unknown): value is string[] =>
    Array.isArray(value) && value.every((item) => typeof item === 'string');
  if (!isCodeList(draft.buys) || !isCodeList(draft.sells) || typeof draft.remark !== 'string') {
    return null;
  }
  const buys = [...new Set(draft.buys)];
  const sells = [...new Set(draft.sells)].filter((code) => !buys.includes(code));
  return { buys, sells, remark: draft.remark };
}
