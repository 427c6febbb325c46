import type { HistoryTurn, PendingIntent } from './types.js';

export interface TranscriptEntry {
  kind: 'user' | 'system';
  text: string;
  node?: string;
  diagnostic?: boolean;
}

/**
 * Flatten server history into transcript lines, one per message.
 * The transcript is always rebuilt from the server's history so the
 * console never reorders or invents turns.
 */
export function transcriptFromHistory(history: HistoryTurn[]): TranscriptEntry[] {
  const entries: TranscriptEntry[] = [];
  for (const turn of history) {
    if (turn.kind === 'user') {
      entries.push({ kind: 'user', text: turn.text });
    } else {
      for (const message of turn.messages) {
        entries.push({
          kind: 'system',
          text: message,
          node: turn.node ?? undefined,
          diagnostic: turn.diagnostic,
        });
      }
    }
  }
  return entries;
}

export interface SlotRow {
  label: string;
  value: string;
  filled: boolean;
}

export function slotRows(intent: PendingIntent | null): SlotRow[] {
  if (!intent) return [];
  return intent.slots.map((slot) => ({
    label: `${slot.property}: ${slot.range}${slot.required ? '' : '?'}`,
    value: slot.value === null ? '—' : String(slot.value),
    filled: slot.value !== null,
  }));
}
