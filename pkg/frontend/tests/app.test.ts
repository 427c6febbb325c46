import { beforeEach, describe, expect, it } from 'vitest';

import { initApp } from '../src/app.js';
import type { HistoryTurn, SessionState } from '../src/types.js';
import { smallGraph } from './fixtures.js';

/** In-memory stand-in for the session API, driven through fetchImpl. */
class FakeServer {
  sessions = new Map<string, SessionState>();
  nextId = 1;
  requests: string[] = [];
  failing = false;

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? 'GET';
    this.requests.push(`${method} ${input}`);
    if (this.failing) throw new Error('connection refused');

    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { 'Content-Type': 'application/json' },
      });

    if (method === 'GET' && input === '/api/graph') return json(smallGraph());
    if (method === 'POST' && input === '/api/sessions') {
      const id = `s${this.nextId++}`;
      this.sessions.set(id, {
        session_id: id,
        current_node: 'greet',
        topic_stack: [],
        pending_intent: null,
        bindings: {},
        diagnostics: [],
        history: [
          { kind: 'system', index: 0, node: 'greet', messages: ['Hello!'], diagnostic: false, response_to: null },
        ],
      });
      return json({ session_id: id, outputs: ['Hello!'] }, 201);
    }
    const utterance = input.match(/^\/api\/sessions\/([^/]+)\/utterance$/);
    if (method === 'POST' && utterance) {
      const state = this.sessions.get(utterance[1]!);
      if (!state) return json({ detail: 'unknown session' }, 404);
      const { text } = JSON.parse(String(init?.body)) as { text: string };
      const userIndex = state.history.length;
      const user: HistoryTurn = {
        kind: 'user', index: userIndex, text, tokens: text.split(' '), mapped: [], intent: null,
      };
      const reply: HistoryTurn = {
        kind: 'system', index: userIndex + 1, node: 'present',
        messages: [`you said: ${text}`], diagnostic: false, response_to: userIndex,
      };
      state.history.push(user, reply);
      state.current_node = 'present';
      return json({
        outputs: reply.kind === 'system' ? reply.messages : [],
        current_node: state.current_node,
        topic_stack: state.topic_stack,
        pending_intent: state.pending_intent,
        diagnostics: [],
      });
    }
    const stateMatch = input.match(/^\/api\/sessions\/([^/]+)\/state$/);
    if (method === 'GET' && stateMatch) {
      const state = this.sessions.get(stateMatch[1]!);
      return state ? json(state) : json({ detail: 'unknown session' }, 404);
    }
    const delMatch = input.match(/^\/api\/sessions\/([^/]+)$/);
    if (method === 'DELETE' && delMatch) {
      return this.sessions.delete(delMatch[1]!)
        ? new Response(null, { status: 204 })
        : json({ detail: 'unknown session' }, 404);
    }
    return json({ detail: 'no route' }, 404);
  };
}

function texts(root: HTMLElement, selector: string): string[] {
  return Array.from(root.querySelectorAll(selector)).map((el) => el.textContent ?? '');
}

describe('console app', () => {
  let root: HTMLElement;
  let server: FakeServer;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById('app')!;
    server = new FakeServer();
  });

  it('boots a session and shows the greeting with the graph highlighted', async () => {
    const app = await initApp(root, { fetchImpl: server.fetch });
    expect(texts(root, '.transcript .bubble')).toEqual(['Hello!']);
    expect(app.highlightedNode()).toBe('greet');
    expect(root.querySelector('[data-ref="current-node"]')!.textContent).toBe('greet');
  });

  it('sends an utterance and mirrors the server history', async () => {
    const app = await initApp(root, { fetchImpl: server.fetch });
    await app.sendUtterance('find me food');
    expect(texts(root, '.transcript .bubble')).toEqual([
      'Hello!',
      'find me food',
      'you said: find me food',
    ]);
    expect(app.highlightedNode()).toBe('present');
  });

  it('ignores empty input', async () => {
    const app = await initApp(root, { fetchImpl: server.fetch });
    const before = server.requests.length;
    await app.sendUtterance('   ');
    expect(server.requests.length).toBe(before);
  });

  it('shows an error banner without losing the transcript', async () => {
    const app = await initApp(root, { fetchImpl: server.fetch });
    await app.sendUtterance('one');
    server.failing = true;
    await app.sendUtterance('two');
    const banner = root.querySelector('[data-ref="banner"]')!;
    expect(banner.classList.contains('hidden')).toBe(false);
    expect(banner.textContent).toContain('cannot reach server');
    expect(texts(root, '.transcript .bubble')).toEqual(['Hello!', 'one', 'you said: one']);
    // recovery clears the banner
    server.failing = false;
    await app.sendUtterance('three');
    expect(banner.classList.contains('hidden')).toBe(true);
  });

  it('starts over with an independent session on reset', async () => {
    const app = await initApp(root, { fetchImpl: server.fetch });
    await app.sendUtterance('remember me');
    const first = app.sessionId;
    await app.newSession();
    expect(app.sessionId).not.toBe(first);
    expect(texts(root, '.transcript .bubble')).toEqual(['Hello!']);
    expect(app.highlightedNode()).toBe('greet');
  });

  it('reload with the same session id reproduces the view', async () => {
    const app = await initApp(root, { fetchImpl: server.fetch });
    await app.sendUtterance('persist this');
    const snapshot = texts(root, '.transcript .bubble');
    const highlight = app.highlightedNode();

    document.body.innerHTML = '<div id="app"></div>';
    const fresh = document.getElementById('app')!;
    const again = await initApp(fresh, { fetchImpl: server.fetch });
    again.sessionId = app.sessionId; // same session id, state refetched
    await again.refresh();
    expect(texts(fresh, '.transcript .bubble')).toEqual(snapshot);
    expect(again.highlightedNode()).toBe(highlight);
  });

  it('boot failure surfaces as a banner', async () => {
    server.failing = true;
    await initApp(root, { fetchImpl: server.fetch });
    const banner = root.querySelector('[data-ref="banner"]')!;
    expect(banner.classList.contains('hidden')).toBe(false);
  });
});
