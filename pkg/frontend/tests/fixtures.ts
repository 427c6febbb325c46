import type { GraphDoc } from '../src/types.js';

export function smallGraph(): GraphDoc {
  return {
    version: 'dwg-ir/1',
    initial: 0,
    nodes: [
      {
        index: 0,
        id: 'greet',
        flags: ['initial'],
        condition: null,
        messages: ['Hello!'],
        transitions: [{ condition: '(intent Find)', label: 'Find', target: 1 }],
        trigger: null,
      },
      {
        index: 1,
        id: 'recommend',
        flags: ['immediate'],
        condition: null,
        messages: [],
        transitions: [{ condition: 'true', label: 'true', target: 2 }],
        trigger: null,
      },
      {
        index: 2,
        id: 'present',
        flags: [],
        condition: null,
        messages: ['How about X?'],
        transitions: [],
        trigger: null,
      },
      {
        index: 3,
        id: 'help_topic',
        flags: ['triggerable'],
        condition: null,
        messages: ['Help!'],
        transitions: [],
        trigger: 'Help',
      },
      {
        index: 4,
        id: 'annex',
        flags: [],
        condition: null,
        messages: ['unwired'],
        transitions: [],
        trigger: null,
      },
    ],
    edges: [
      { from: 0, label: 'Find', to: 1 },
      { from: 1, label: 'true', to: 2 },
    ],
    triggers: [{ node: 3, label: 'Help' }],
    dot: 'digraph dialogue {}',
  };
}
