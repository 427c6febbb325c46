import { describe, expect, it } from 'vitest';

import { layoutGraph, renderGraph, renderGraphFallback } from '../src/graph.js';
import { smallGraph } from './fixtures.js';

describe('layoutGraph', () => {
  it('assigns BFS levels from the initial node', () => {
    const layout = layoutGraph(smallGraph());
    expect(layout.levels.get(0)).toBe(0);
    expect(layout.levels.get(1)).toBe(1);
    expect(layout.levels.get(2)).toBe(2);
  });

  it('places trigger-only and unwired nodes in a trailing column', () => {
    const layout = layoutGraph(smallGraph());
    expect(layout.levels.get(3)).toBe(3);
    expect(layout.levels.get(4)).toBe(3);
  });

  it('positions every node inside the reported canvas', () => {
    const doc = smallGraph();
    const layout = layoutGraph(doc);
    expect(layout.positions.size).toBe(doc.nodes.length);
    for (const pos of layout.positions.values()) {
      expect(pos.x).toBeGreaterThanOrEqual(0);
      expect(pos.y).toBeGreaterThanOrEqual(0);
      expect(pos.x).toBeLessThan(layout.width);
      expect(pos.y).toBeLessThan(layout.height);
    }
  });
});

describe('renderGraph', () => {
  it('draws every node and highlights the current one', () => {
    const svg = renderGraph(smallGraph(), 'recommend');
    document.body.innerHTML = svg;
    const nodes = document.querySelectorAll('g[data-node-id]');
    expect(nodes.length).toBe(5);
    const current = document.querySelectorAll('g.current');
    expect(current.length).toBe(1);
    expect(current[0]!.getAttribute('data-node-id')).toBe('recommend');
  });

  it('styles trigger edges apart from transition edges', () => {
    document.body.innerHTML = renderGraph(smallGraph(), null);
    expect(document.querySelectorAll('path.edge:not(.trigger)').length).toBe(2);
    expect(document.querySelectorAll('path.edge.trigger').length).toBe(1);
  });

  it('renders a single-node model', () => {
    const doc = smallGraph();
    doc.nodes = [doc.nodes[0]!];
    doc.edges = [];
    doc.triggers = [];
    document.body.innerHTML = renderGraph(doc, 'greet');
    expect(document.querySelectorAll('g[data-node-id]').length).toBe(1);
  });

  it('escapes markup in labels', () => {
    const doc = smallGraph();
    doc.edges[0]!.label = '<script>"x"&</script>';
    const svg = renderGraph(doc, null);
    expect(svg).not.toContain('<script>');
    expect(svg).toContain('&lt;script&gt;');
  });
});

describe('renderGraphFallback', () => {
  it('lists every node and marks the current one', () => {
    document.body.innerHTML = renderGraphFallback(smallGraph(), 'present');
    const items = document.querySelectorAll('li[data-node-id]');
    expect(items.length).toBe(5);
    const marked = Array.from(items).filter((li) => li.textContent!.includes('◀ current'));
    expect(marked.length).toBe(1);
    expect(marked[0]!.getAttribute('data-node-id')).toBe('present');
  });
});
