import { ApiError, Client } from './api.js';
import { renderGraph, renderGraphFallback } from './graph.js';
import { slotRows, transcriptFromHistory } from './state.js';
import type { GraphDoc, SessionState } from './types.js';

export interface AppOptions {
  apiBase?: string;
  fetchImpl?: (input: string, init?: RequestInit) => Promise<Response>;
}

const SHELL = `
<header class="topbar">
  <span class="logo">dwg console</span>
  <span class="session-label" data-ref="session"></span>
  <button type="button" data-ref="reset">new session</button>
</header>
<div class="banner hidden" data-ref="banner" role="alert"></div>
<main class="panes">
  <section class="chat">
    <ol class="transcript" data-ref="transcript"></ol>
    <form class="composer" data-ref="form">
      <input type="text" data-ref="input" placeholder="Say something…" autocomplete="off"/>
      <button type="submit" data-ref="send">send</button>
    </form>
  </section>
  <aside class="debug">
    <h2>Dialogue state</h2>
    <dl class="state-grid">
      <dt>current node</dt><dd data-ref="current-node">–</dd>
      <dt>topic stack</dt><dd data-ref="topic-stack">(empty)</dd>
      <dt>intent</dt><dd data-ref="intent-name">none</dd>
    </dl>
    <table class="slots" data-ref="slots"></table>
    <h2>Diagnostics</h2>
    <ul class="diagnostics" data-ref="diagnostics"></ul>
  </aside>
</main>
<section class="graph-pane">
  <h2>Workflow graph</h2>
  <div class="graph" data-ref="graph"></div>
</section>
`;

export class ConsoleApp {
  readonly client: Client;
  sessionId: string | null = null;
  graphDoc: GraphDoc | null = null;
  currentNode: string | null = null;
  private inFlight = false;
  private refs = new Map<string, HTMLElement>();

  constructor(private root: HTMLElement, options: AppOptions = {}) {
    this.client = new Client(options.apiBase ?? '', options.fetchImpl);
    root.innerHTML = SHELL;
    root.querySelectorAll<HTMLElement>('[data-ref]').forEach((el) => {
      this.refs.set(el.dataset.ref!, el);
    });
    this.ref<HTMLFormElement>('form').addEventListener('submit', (event) => {
      event.preventDefault();
      void this.sendUtterance(this.ref<HTMLInputElement>('input').value);
    });
    this.ref('reset').addEventListener('click', () => void this.newSession());
  }

  ref<T extends HTMLElement = HTMLElement>(name: string): T {
    const el = this.refs.get(name);
    if (!el) throw new Error(`missing element: ${name}`);
    return el as T;
  }

  async boot(): Promise<void> {
    try {
      this.graphDoc = await this.client.getGraph();
    } catch (err) {
      this.showError(err);
    }
    await this.newSession();
  }

  /** Create a fresh session; the previous transcript is dropped with it. */
  async newSession(): Promise<void> {
    const old = this.sessionId;
    try {
      const created = await this.client.createSession();
      this.sessionId = created.session_id;
      this.clearError();
      this.ref('session').textContent = `session ${created.session_id.slice(0, 8)}`;
      if (old) {
        this.client.deleteSession(old).catch(() => undefined);
      }
      await this.refresh();
    } catch (err) {
      this.showError(err);
    }
  }

  /**
   * Send one utterance. At most one request is in flight: the input is
   * disabled until the exchange (and the state refetch) completes.
   */
  async sendUtterance(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || this.inFlight || !this.sessionId) return;
    this.setBusy(true);
    try {
      await this.client.sendUtterance(this.sessionId, trimmed);
      this.ref<HTMLInputElement>('input').value = '';
      this.clearError();
      await this.refresh();
    } catch (err) {
      this.showError(err);
    } finally {
      this.setBusy(false);
    }
  }

  /** Refetch the authoritative state and redraw transcript, panes, graph. */
  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    const state = await this.client.getState(this.sessionId);
    this.renderTranscript(state);
    this.renderDebug(state);
    this.currentNode = state.current_node;
    this.renderGraphPane();
  }

  private renderTranscript(state: SessionState): void {
    const list = this.ref('transcript');
    list.innerHTML = '';
    for (const entry of transcriptFromHistory(state.history)) {
      const item = document.createElement('li');
      item.className = entry.kind + (entry.diagnostic ? ' diagnostic' : '');
      const who = document.createElement('span');
      who.className = 'who';
      who.textContent = entry.kind === 'user' ? 'you' : entry.node ?? 'system';
      const bubble = document.createElement('span');
      bubble.className = 'bubble';
      bubble.textContent = entry.text;
      item.append(who, bubble);
      list.appendChild(item);
    }
    list.scrollTop = list.scrollHeight;
  }

  private renderDebug(state: SessionState): void {
    this.ref('current-node').textContent = state.current_node;
    this.ref('topic-stack').textContent = state.topic_stack.length
      ? state.topic_stack.join(' › ')
      : '(empty)';
    const intent = state.pending_intent;
    this.ref('intent-name').textContent = intent
      ? `${intent.intent} · ${intent.status.replace(/_/g, ' ')}`
      : 'none';
    const table = this.ref<HTMLTableElement>('slots');
    table.innerHTML = '';
    for (const row of slotRows(intent)) {
      const tr = document.createElement('tr');
      tr.className = row.filled ? 'filled' : 'open';
      const name = document.createElement('td');
      name.textContent = row.label;
      const value = document.createElement('td');
      value.textContent = row.value;
      tr.append(name, value);
      table.appendChild(tr);
    }
    const diagnostics = this.ref('diagnostics');
    diagnostics.innerHTML = '';
    for (const line of state.diagnostics) {
      const item = document.createElement('li');
      item.textContent = line;
      diagnostics.appendChild(item);
    }
  }

  renderGraphPane(): void {
    const container = this.ref('graph');
    if (!this.graphDoc) {
      container.textContent = 'graph unavailable';
      return;
    }
    try {
      container.innerHTML = renderGraph(this.graphDoc, this.currentNode);
    } catch {
      container.innerHTML = renderGraphFallback(this.graphDoc, this.currentNode);
    }
  }

  highlightedNode(): string | null {
    const svgHit = this.ref('graph').querySelector('g.current[data-node-id]');
    if (svgHit) return svgHit.getAttribute('data-node-id');
    for (const li of Array.from(this.ref('graph').querySelectorAll('li[data-node-id]'))) {
      if ((li.textContent ?? '').includes('◀ current')) return li.getAttribute('data-node-id');
    }
    return null;
  }

  private setBusy(busy: boolean): void {
    this.inFlight = busy;
    this.ref<HTMLInputElement>('input').disabled = busy;
    this.ref<HTMLButtonElement>('send').disabled = busy;
  }

  private showError(err: unknown): void {
    const banner = this.ref('banner');
    const message =
      err instanceof ApiError
        ? err.status === null
          ? err.message
          : `server error ${err.status}: ${err.message}`
        : String(err);
    banner.textContent = message;
    banner.classList.remove('hidden');
  }

  private clearError(): void {
    const banner = this.ref('banner');
    banner.textContent = '';
    banner.classList.add('hidden');
  }
}

export async function initApp(root: HTMLElement, options: AppOptions = {}): Promise<ConsoleApp> {
  const app = new ConsoleApp(root, options);
  await app.boot();
  return app;
}
