import type { ChatEventDoc } from "./types.js";

/**
 * A short bundled play excerpt: narration, a dice test, an inventory grant,
 * and a failed item use. The demo page can replay it without a server, and
 * the snapshot test pins its rendered card sequence.
 */
export const SAMPLE_TRANSCRIPT: ChatEventDoc[] = [
  {
    kind: "player",
    speaker: "Bram",
    content: "I climb the toll gate and reach for the bell rope.",
    timestamp: 1,
  },
  {
    kind: "gm",
    speaker: "GM",
    content:
      "The rope hangs a body's length above the spikes. It will take a sure hand.",
    timestamp: 2,
  },
  {
    kind: "function_call",
    speaker: "GM",
    content: "",
    timestamp: 3,
    call: {
      name: "activate_test",
      arguments: { difficulty: 5, player: "Bram", trait: "Nimble" },
      call_id: "sample-1",
    },
  },
  {
    kind: "function_result",
    speaker: "system",
    content:
      "Dice test against difficulty 5 with advantage, keeping the highest: Bram rolls 2 and 6, keeping 6. Success.",
    timestamp: 4,
    call_id: "sample-1",
    data: {
      is_error: false,
      test_result: {
        rolls: [2, 6],
        kept: 6,
        difficulty: 5,
        modifier: "advantage",
        success: true,
      },
    },
  },
  {
    kind: "gm",
    speaker: "GM",
    content:
      "Bram swings over the spikes and lands soft. A waxed cord dangles from the bell arm, and he takes it.",
    timestamp: 5,
  },
  {
    kind: "function_call",
    speaker: "GM",
    content: "",
    timestamp: 6,
    call: {
      name: "add_item",
      arguments: {
        player: "Bram",
        name: "Waxed cord",
        description: "A yard of waxed cord cut from the bell arm.",
      },
      call_id: "sample-2",
    },
  },
  {
    kind: "function_result",
    speaker: "system",
    content: "Bram now carries 'Waxed cord': A yard of waxed cord cut from the bell arm.",
    timestamp: 7,
    call_id: "sample-2",
    data: {
      is_error: false,
      diff: {
        scene_changes: [],
        player_changes: {
          Bram: [
            {
              path: "inventory.Waxed cord",
              before: null,
              after: "A yard of waxed cord cut from the bell arm.",
            },
          ],
        },
      },
    },
  },
  {
    kind: "function_call",
    speaker: "GM",
    content: "",
    timestamp: 8,
    call: {
      name: "use_item",
      arguments: {
        player: "Bram",
        item: "Grappling hook",
        purpose: "anchor the cord to the far post",
      },
      call_id: "sample-3",
    },
  },
  {
    kind: "function_result",
    speaker: "system",
    content: "Bram has no item named 'Grappling hook'.",
    timestamp: 9,
    call_id: "sample-3",
    data: { is_error: true },
  },
  {
    kind: "gm",
    speaker: "GM",
    content:
      "No hook hangs from Bram's belt after all; the cord will have to be tied by hand.",
    timestamp: 10,
  },
];
