// Payload shapes of the dwg session API.

export interface SlotView {
  property: string;
  range: string;
  required: boolean;
  value: string | number | null;
}

export interface PendingIntent {
  intent: string;
  status: string;
  slots: SlotView[];
}

export interface MappedSpan {
  start: number;
  end: number;
  terms: string[];
}

export interface UserTurn {
  kind: 'user';
  index: number;
  text: string;
  tokens: string[];
  mapped: MappedSpan[];
  intent: string | null;
}

export interface SystemTurn {
  kind: 'system';
  index: number;
  node: string | null;
  messages: string[];
  diagnostic: boolean;
  response_to: number | null;
}

export type HistoryTurn = UserTurn | SystemTurn;

export interface CreateSessionResponse {
  session_id: string;
  outputs: string[];
}

export interface UtteranceResponse {
  outputs: string[];
  current_node: string;
  topic_stack: string[];
  pending_intent: PendingIntent | null;
  diagnostics: string[];
}

export interface SessionState {
  session_id: string;
  current_node: string;
  topic_stack: string[];
  pending_intent: PendingIntent | null;
  bindings: Record<string, string>;
  diagnostics: string[];
  history: HistoryTurn[];
}

export interface GraphTransition {
  condition: string;
  label: string;
  target: number;
}

export interface GraphNodeDoc {
  index: number;
  id: string;
  flags: string[];
  condition: string | null;
  messages: string[];
  transitions: GraphTransition[];
  trigger: string | null;
}

export interface GraphEdgeDoc {
  from: number;
  label: string;
  to: number;
}

export interface GraphDoc {
  version: string;
  initial: number;
  nodes: GraphNodeDoc[];
  edges: GraphEdgeDoc[];
  triggers: { node: number; label: string }[];
  dot: string;
}
