import type { GraphDoc } from './types.js';

export interface NodePosition {
  x: number;
  y: number;
}

export interface GraphLayout {
  positions: Map<number, NodePosition>;
  levels: Map<number, number>;
  width: number;
  height: number;
}

export const NODE_W = 132;
export const NODE_H = 44;
const COL_GAP = 196;
const ROW_GAP = 72;
const MARGIN = 28;

/**
 * Column per BFS depth from the initial node; trigger-entered and
 * unreachable nodes fall into a trailing column so every node is visible.
 */
export function layoutGraph(doc: GraphDoc): GraphLayout {
  const adjacency = new Map<number, number[]>();
  for (const edge of doc.edges) {
    const outs = adjacency.get(edge.from) ?? [];
    outs.push(edge.to);
    adjacency.set(edge.from, outs);
  }

  const levels = new Map<number, number>();
  const queue: number[] = [doc.initial];
  levels.set(doc.initial, 0);
  while (queue.length) {
    const node = queue.shift()!;
    for (const next of adjacency.get(node) ?? []) {
      if (!levels.has(next)) {
        levels.set(next, (levels.get(node) ?? 0) + 1);
        queue.push(next);
      }
    }
  }

  let maxLevel = 0;
  for (const level of levels.values()) maxLevel = Math.max(maxLevel, level);
  const overflow = maxLevel + 1;
  for (const node of doc.nodes) {
    if (!levels.has(node.index)) levels.set(node.index, overflow);
  }

  const rows = new Map<number, number>();
  const positions = new Map<number, NodePosition>();
  let maxRow = 0;
  for (const node of doc.nodes) {
    const level = levels.get(node.index)!;
    const row = rows.get(level) ?? 0;
    rows.set(level, row + 1);
    maxRow = Math.max(maxRow, row);
    positions.set(node.index, {
      x: MARGIN + level * COL_GAP,
      y: MARGIN + row * ROW_GAP,
    });
  }

  let maxUsedLevel = 0;
  for (const level of rows.keys()) maxUsedLevel = Math.max(maxUsedLevel, level);
  return {
    positions,
    levels,
    width: MARGIN * 2 + maxUsedLevel * COL_GAP + NODE_W,
    height: MARGIN * 2 + maxRow * ROW_GAP + NODE_H,
  };
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function edgePath(from: NodePosition, to: NodePosition): string {
  const x1 = from.x + NODE_W;
  const y1 = from.y + NODE_H / 2;
  const x2 = to.x;
  const y2 = to.y + NODE_H / 2;
  const bend = Math.max(32, (x2 - x1) / 2);
  return `M ${x1} ${y1} C ${x1 + bend} ${y1}, ${x2 - bend} ${y2}, ${x2} ${y2}`;
}

/**
 * Render the workflow graph as an SVG string. The node matching
 * `currentNode` gets the `current` class; trigger edges are dashed.
 */
export function renderGraph(doc: GraphDoc, currentNode: string | null): string {
  const layout = layoutGraph(doc);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${layout.width} ${layout.height}" ` +
      `width="${layout.width}" height="${layout.height}" role="img">`,
  );
  parts.push(
    '<defs><marker id="arrow" viewBox="0 0 8 8" refX="7" refY="4" markerWidth="7" ' +
      'markerHeight="7" orient="auto"><path d="M 0 0 L 8 4 L 0 8 z" fill="#7d8590"/></marker></defs>',
  );

  for (const edge of doc.edges) {
    const from = layout.positions.get(edge.from);
    const to = layout.positions.get(edge.to);
    if (!from || !to) continue;
    parts.push(
      `<path class="edge" data-edge="${edge.from}-${edge.to}" d="${edgePath(from, to)}" ` +
        'fill="none" marker-end="url(#arrow)"/>',
    );
    const labelX = (from.x + NODE_W + to.x) / 2;
    const labelY = (from.y + to.y + NODE_H) / 2 - 6;
    parts.push(
      `<text class="edge-label" x="${labelX}" y="${labelY}" text-anchor="middle">` +
        `${escapeXml(edge.label)}</text>`,
    );
  }

  for (const trigger of doc.triggers) {
    const to = layout.positions.get(trigger.node);
    if (!to) continue;
    const x = to.x - 46;
    const y = to.y + NODE_H / 2;
    parts.push(
      `<path class="edge trigger" data-trigger="${trigger.node}" ` +
        `d="M ${x} ${y} L ${to.x} ${y}" fill="none" marker-end="url(#arrow)"/>`,
    );
    parts.push(`<text class="trigger-glyph" x="${x - 4}" y="${y + 4}" text-anchor="end">⚡</text>`);
    parts.push(
      `<text class="edge-label" x="${x + 20}" y="${y - 6}" text-anchor="middle">` +
        `${escapeXml(trigger.label)}</text>`,
    );
  }

  for (const node of doc.nodes) {
    const pos = layout.positions.get(node.index)!;
    const classes = ['node'];
    if (node.id === currentNode) classes.push('current');
    if (node.index === doc.initial) classes.push('initial');
    if (node.trigger !== null) classes.push('triggerable');
    parts.push(`<g class="${classes.join(' ')}" data-node-id="${escapeXml(node.id)}">`);
    parts.push(
      `<rect x="${pos.x}" y="${pos.y}" width="${NODE_W}" height="${NODE_H}" rx="7"/>`,
    );
    parts.push(
      `<text class="node-id" x="${pos.x + NODE_W / 2}" y="${pos.y + (node.flags.length ? 19 : 26)}" ` +
        `text-anchor="middle">${escapeXml(node.id)}</text>`,
    );
    if (node.flags.length) {
      parts.push(
        `<text class="node-flags" x="${pos.x + NODE_W / 2}" y="${pos.y + 34}" ` +
          `text-anchor="middle">${escapeXml(node.flags.join(' '))}</text>`,
      );
    }
    parts.push('</g>');
  }

  parts.push('</svg>');
  return parts.join('');
}

/** Plain list used when SVG rendering fails for any reason. */
export function renderGraphFallback(doc: GraphDoc, currentNode: string | null): string {
  const items = doc.nodes
    .map((node) => {
      const marker = node.id === currentNode ? ' ◀ current' : '';
      const flags = node.flags.length ? ` [${node.flags.join(', ')}]` : '';
      return `<li data-node-id="${escapeXml(node.id)}">${escapeXml(node.id)}${flags}${marker}</li>`;
    })
    .join('');
  return `<ul class="graph-fallback">${items}</ul>`;
}
