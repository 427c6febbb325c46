// Round-trip against the real server: spawn `dwg serve` with the bundled
// restaurant model and drive the reference dialogue through the DOM.

import { spawn, type ChildProcess } from 'node:child_process';
import { existsSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { initApp, type ConsoleApp } from '../src/app.js';

const repoRoot = dirname(dirname(dirname(fileURLToPath(import.meta.url))));
const PORT = 8771;
const BASE = `http://127.0.0.1:${PORT}`;
const nodeFetch: typeof fetch = (input, init) => fetch(input, init);

const models = join(repoRoot, 'models');
const available = existsSync(join(models, 'restaurant.dwg'));

let server: ChildProcess | null = null;

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 60; i++) {
    try {
      const response = await nodeFetch(`${BASE}/api/graph`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error('server did not come up');
}

describe.runIf(available)('live round-trip against dwg serve', () => {
  beforeAll(async () => {
    server = spawn(
      'python3',
      [
        '-m', 'dwg.cli', 'serve',
        join(models, 'restaurant.dwg'),
        '-o', join(models, 'restaurant.onto'),
        '--port', String(PORT),
      ],
      { cwd: repoRoot, stdio: 'ignore' },
    );
    await waitForServer();
  });

  afterAll(() => {
    server?.kill();
  });

  it('reproduces the restaurant transcript on screen with a live highlight', async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById('app')!;
    const app: ConsoleApp = await initApp(root, { apiBase: BASE, fetchImpl: nodeFetch });

    const bubbles = () =>
      Array.from(root.querySelectorAll('.transcript .bubble')).map((el) => el.textContent);

    expect(bubbles()).toEqual(['Hello! I can help you find a restaurant.']);
    expect(app.highlightedNode()).toBe('greet');

    const script: Array<{ say: string; expect: string; node: string }> = [
      { say: 'I am looking for a restaurant!', expect: 'In what city?', node: 'greet' },
      { say: 'In Palo Alto.', expect: 'How about McDonalds?', node: 'present_first' },
      {
        say: 'Chinese please.',
        expect: 'Got it – Su Hong on 4256 El Camino Real?',
        node: 'present_refined',
      },
    ];
    for (const step of script) {
      await app.sendUtterance(step.say);
      const lines = bubbles();
      expect(lines[lines.length - 1]).toBe(step.expect);
      // the highlight always equals the server's current node
      const state = await app.client.getState(app.sessionId!);
      expect(app.highlightedNode()).toBe(state.current_node);
      expect(state.current_node).toBe(step.node);
    }

    expect(bubbles()).toEqual([
      'Hello! I can help you find a restaurant.',
      'I am looking for a restaurant!',
      'In what city?',
      'In Palo Alto.',
      'How about McDonalds?',
      'Chinese please.',
      'Got it – Su Hong on 4256 El Camino Real?',
    ]);
  });

  it('debug panes track the pending intent slots', async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById('app')!;
    const app = await initApp(root, { apiBase: BASE, fetchImpl: nodeFetch });
    await app.sendUtterance('I am looking for a restaurant!');
    expect(root.querySelector('[data-ref="intent-name"]')!.textContent).toContain(
      'FindRestaurantIntent',
    );
    const rows = Array.from(root.querySelectorAll('.slots tr')).map((tr) => tr.textContent);
    expect(rows.some((r) => r!.includes('location: City'))).toBe(true);
    await app.sendUtterance('In Palo Alto.');
    const filled = Array.from(root.querySelectorAll('.slots tr.filled')).map(
      (tr) => tr.textContent,
    );
    expect(filled.some((r) => r!.includes('PaloAlto'))).toBe(true);
  });

  it('two sessions stay independent', async () => {
    document.body.innerHTML = '<div id="a"></div><div id="b"></div>';
    const appA = await initApp(document.getElementById('a')!, {
      apiBase: BASE,
      fetchImpl: nodeFetch,
    });
    const appB = await initApp(document.getElementById('b')!, {
      apiBase: BASE,
      fetchImpl: nodeFetch,
    });
    await appA.sendUtterance('I am looking for a restaurant!');
    const stateB = await appB.client.getState(appB.sessionId!);
    expect(stateB.history.length).toBe(1);
    expect(appA.sessionId).not.toBe(appB.sessionId);
  });
});
