import { describe, expect, it } from 'vitest';

import { ApiError, SessionApi, type FetchLike } from '../src/api.js';

interface RecordedCall {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: string | null;
}

function recordingFetch(
  responses: Response[],
): { fetchFn: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const queue = [...responses];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? 'GET',
      headers: (init?.headers as Record<string, string>) ?? {},
      body: typeof init?.body === 'string' ? init.body : null,
    });
    const next = queue.shift();
    if (next === undefined) {
      throw new Error('no scripted response left');
    }
    return next;
  };
  return { fetchFn, calls };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

describe('SessionApi', () => {
  it('fetches config from the bootstrap endpoint', async () => {
    const { fetchFn, calls } = recordingFetch([
      jsonResponse({ title: 'study', closed: false, n_tasks: 4 }),
    ]);
    const api = new SessionApi('http://svc', 'ann-1', { fetchFn });
    const config = await api.config();
    expect(config).toEqual({ title: 'study', closed: false, n_tasks: 4 });
    expect(calls[0].url).toBe('http://svc/api/config');
    expect(calls[0].method).toBe('GET');
  });

  it('sends the bearer token on authenticated routes', async () => {
    const { fetchFn, calls } = recordingFetch([jsonResponse([])]);
    const api = new SessionApi('http://svc', 'ann-1', { fetchFn, token: 'sekrit' });
    await api.universe();
    expect(calls[0].url).toBe('http://svc/api/universe');
    expect(calls[0].headers['Authorization']).toBe('Bearer sekrit');
  });

  it('omits the authorization header when no token is configured', async () => {
    const { fetchFn, calls } = recordingFetch([jsonResponse([])]);
    await new SessionApi('http://svc', 'ann-1', { fetchFn }).universe();
    expect('Authorization' in calls[0].headers).toBe(false);
  });

  it('returns null from nextTask when the session is finished', async () => {
    const { fetchFn } = recordingFetch([jsonResponse({ done: true })]);
    const api = new SessionApi('http://svc', 'ann-1', { fetchFn });
    expect(await api.nextTask()).toBeNull();
  });

  it('passes blinded task payloads through untouched', async () => {
    const task = { task_id: 't0001', kind: 'closing', text: 'digest', date_ordinal: 2 };
    const { fetchFn, calls } = recordingFetch([jsonResponse(task)]);
    const api = new SessionApi('http://svc', 'ann-7', { fetchFn });
    expect(await api.nextTask()).toEqual(task);
    expect(calls[0].url).toBe('http://svc/api/annotators/ann-7/next-task');
  });

  it('posts decisions as JSON to the task submission route', async () => {
    const { fetchFn, calls } = recordingFetch([jsonResponse({ accepted: true, task_id: 't1' })]);
    const api = new SessionApi('http://svc', 'ann-1', { fetchFn });
    const payload = { buys: ['2330'], sells: ['2317'], remark: 'why' };
    await api.submit('t0002', payload);
    expect(calls[0].url).toBe('http://svc/api/annotators/ann-1/tasks/t0002/decisions');
    expect(calls[0].method).toBe('POST');
    expect(calls[0].headers['Content-Type']).toBe('application/json');
    expect(JSON.parse(calls[0].body ?? '')).toEqual(payload);
  });

  it('escapes path segments built from caller input', async () => {
    const { fetchFn, calls } = recordingFetch([jsonResponse({ done: true })]);
    await new SessionApi('http://svc', 'ann/1 x', { fetchFn }).nextTask();
    expect(calls[0].url).toBe('http://svc/api/annotators/ann%2F1%20x/next-task');
  });

  it('maps non-2xx responses to ApiError with the server detail', async () => {
    const { fetchFn } = recordingFetch([jsonResponse({ detail: "unknown ticker '9'" }, 422)]);
    const api = new SessionApi('http://svc', 'ann-1', { fetchFn });
    const error = await api
      .submit('t0001', { buys: ['9'], sells: [], remark: '' })
      .then(() => null)
      .catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(422);
    expect((error as ApiError).message).toBe("unknown ticker '9'");
  });

  it('falls back to the bare status for non-JSON error bodies', async () => {
    const { fetchFn } = recordingFetch([new Response('boom', { status: 500 })]);
    const api = new SessionApi('http://svc', 'ann-1', { fetchFn });
    const error = await api.progress().then(() => null).catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(500);
    expect((error as ApiError).message).toBe('HTTP 500');
  });

  it('lets transport failures propagate as-is (not ApiError)', async () => {
    const fetchFn: FetchLike = () => Promise.reject(new TypeError('fetch failed'));
    const api = new SessionApi('http://svc', 'ann-1', { fetchFn });
    const error = await api.config().then(() => null).catch((e: unknown) => e);
    expect(error).toBeInstanceOf(TypeError);
  });
});
