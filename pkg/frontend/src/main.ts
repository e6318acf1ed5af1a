/**
 * Browser entry point. Reads the session coordinates from the query
 * string and boots the app against the live session service:
 *
 *   index.html?annotator=ann-1&api=http://localhost:8000[&token=...]
 */

import { SessionApi } from './api.js';
import { AnnotationApp } from './app.js';

function boot(): void {
  const root = document.getElementById('app');
  if (root === null) {
    console.error('annotation-ui: missing #app element');
    return;
  }
  const params = new URLSearchParams(window.location.search);
  const annotatorId = params.get('annotator') ?? '';
  const baseUrl = (params.get('api') ?? window.location.origin).replace(/\/$/, '');
  const token = params.get('token') ?? undefined;
  if (annotatorId === '') {
    root.textContent =
      'missing annotator id — open this page as index.html?annotator=<id>&api=<service url>';
    return;
  }
  const api = new SessionApi(baseUrl, annotatorId, { token });
  const app = new AnnotationApp(root, {
    api,
    annotatorId,
    storage: window.localStorage,
    connectivity: window,
  });
  void app.start();
}

boot();
