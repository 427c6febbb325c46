import { describe, expect, it } from 'vitest';

import { slotRows, transcriptFromHistory } from '../src/state.js';
import type { HistoryTurn } from '../src/types.js';

const history: HistoryTurn[] = [
  { kind: 'system', index: 0, node: 'greet', messages: ['Hello!'], diagnostic: false, response_to: null },
  { kind: 'user', index: 1, text: 'hi there', tokens: ['hi', 'there'], mapped: [], intent: null },
  {
    kind: 'system',
    index: 2,
    node: 'answer',
    messages: ['first', 'second'],
    diagnostic: false,
    response_to: 1,
  },
];

describe('transcriptFromHistory', () => {
  it('keeps server order and flattens multi-message turns', () => {
    const entries = transcriptFromHistory(history);
    expect(entries.map((e) => e.text)).toEqual(['Hello!', 'hi there', 'first', 'second']);
    expect(entries.map((e) => e.kind)).toEqual(['system', 'user', 'system', 'system']);
    expect(entries[2]!.node).toBe('answer');
  });

  it('marks diagnostic turns', () => {
    const entries = transcriptFromHistory([
      { kind: 'system', index: 0, node: 'x', messages: ['limit'], diagnostic: true, response_to: null },
    ]);
    expect(entries[0]!.diagnostic).toBe(true);
  });

  it('is empty for an empty history', () => {
    expect(transcriptFromHistory([])).toEqual([]);
  });
});

describe('slotRows', () => {
  it('renders required and optional slots with fill state', () => {
    const rows = slotRows({
      intent: 'FindRestaurantIntent',
      status: 'incomplete',
      slots: [
        { property: 'location', range: 'City', required: true, value: 'PaloAlto' },
        { property: 'cuisine', range: 'Cuisine', required: false, value: null },
      ],
    });
    expect(rows).toEqual([
      { label: 'location: City', value: 'PaloAlto', filled: true },
      { label: 'cuisine: Cuisine?', value: '—', filled: false },
    ]);
  });

  it('returns nothing without a pending intent', () => {
    expect(slotRows(null)).toEqual([]);
  });
});
