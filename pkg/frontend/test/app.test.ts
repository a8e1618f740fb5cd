import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { App } from "../src/app.js";
import type {
  CatalogDoc,
  ChatEventDoc,
  SceneListEntry,
  SessionState,
  TurnCompleteDoc,
} from "../src/types.js";

const SCENES: SceneListEntry[] = [
  {
    id: "02-toll-of-whispers",
    scene: "The Toll of Whispers",
    chapter: "The Outer Rings",
    description: "A bridge gatehouse where passage costs a secret.",
    random_tables: {},
  },
];

const CATALOG: CatalogDoc = {
  kins: {
    Shadowfoot: {
      persona: "A soft-stepping scavenger.",
      default_traits: { "Silent step": "Moves without a sound." },
      default_flaws: { "Sticky fingers": "Pockets shiny things." },
      default_items: { Lockpicks: "A roll of bent pins." },
    },
  },
  traits: { Nimble: "Quick over rubble." },
  flaws: { Greedy: "Cannot leave a bargain alone." },
};

function stateDoc(overrides: Partial<SessionState> = {}): SessionState {
  return {
    scene: {
      chapter: "The Outer Rings",
      scene: "The Toll of Whispers",
      scene_summary: ["A narrow bridge over a dry canal."],
      npcs: {},
      success_condition: "Cross the bridge.",
      failure_condition: "Get turned back.",
      consequences: "Echoes carry.",
      game_flow: [],
      environment: {},
      random_tables: {},
      is_action_scene: false,
    },
    players: [
      {
        name: "Bram",
        kin: "Shadowfoot",
        goal: "Map the flooded stair",
        traits: { Nimble: "Quick over rubble." },
        flaws: { Greedy: "Cannot leave a bargain alone." },
        inventory: { Lockpicks: "A roll of bent pins." },
        additional_notes: [],
      },
    ],
    clock_hours: 0,
    clock_limit: 13,
    status: "running",
    turns_completed: 0,
    ...overrides,
  };
}

function turnEvents(callId: string): ChatEventDoc[] {
  return [
    { kind: "player", speaker: "Bram", content: "I climb.", timestamp: 1 },
    {
      kind: "function_call",
      speaker: "GM",
      content: "",
      timestamp: 2,
      call: {
        name: "activate_test",
        arguments: { difficulty: 5, player: "Bram", trait: "Nimble" },
        call_id: callId,
      },
    },
    {
      kind: "function_result",
      speaker: "system",
      content: "Success.",
      timestamp: 3,
      call_id: callId,
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
    { kind: "gm", speaker: "GM", content: "Over you go.", timestamp: 4 },
  ];
}

function sseBody(events: ChatEventDoc[], summary: TurnCompleteDoc): ReadableStream<Uint8Array> {
  let text = "";
  for (const event of events) {
    text += `event: chat\ndata: ${JSON.stringify(event)}\n\n`;
  }
  text += `event: turn_complete\ndata: ${JSON.stringify(summary)}\n\n`;
  const bytes = new TextEncoder().encode(text);
  return new ReadableStream({
    start(controller) {
      // awkward chunk sizes exercise the parser across frame boundaries
      for (let i = 0; i < bytes.length; i += 7) {
        controller.enqueue(bytes.slice(i, i + 7));
      }
      controller.close();
    },
  });
}

function jsonResponse(status: number, payload: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => payload,
    text: async () => JSON.stringify(payload),
    body: null,
  } as unknown as Response;
}

function streamResponse(body: ReadableStream<Uint8Array>): Response {
  return { ok: true, status: 200, body } as unknown as Response;
}

interface World {
  app: App;
  root: HTMLElement;
  calls: string[];
  messageResponses: (() => Response | Promise<Response>)[];
  stateResponses: SessionState[];
  failCreates: number;
}

function makeWorld(): World {
  const root = document.createElement("main");
  document.body.replaceChildren(root);
  const world = {
    root,
    calls: [] as string[],
    messageResponses: [] as (() => Response | Promise<Response>)[],
    stateResponses: [stateDoc()],
    failCreates: 0,
  } as World;

  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace("http://game.test", "");
    world.calls.push(`${method} ${path}`);
    if (path === "/scenes") {
      return jsonResponse(200, SCENES);
    }
    if (path === "/catalog") {
      return jsonResponse(200, CATALOG);
    }
    if (path === "/sessions" && method === "POST") {
      if (world.failCreates > 0) {
        world.failCreates -= 1;
        return jsonResponse(422, {
          detail: [
            { path: "players[0]", message: "unknown trait 'Sure hands'" },
          ],
        });
      }
      return jsonResponse(201, {
        session_id: "abc",
        created_at: "2026-08-15T00:00:00+00:00",
        profile: "FG-all",
        scene_id: "02-toll-of-whispers",
      });
    }
    if (path === "/sessions/abc/message" && method === "POST") {
      const next = world.messageResponses.shift();
      if (!next) {
        throw new Error("no scripted message response left");
      }
      return next();
    }
    if (path === "/sessions/abc/state") {
      const states = world.stateResponses;
      const state = states.length > 1 ? states.shift()! : states[0]!;
      return jsonResponse(200, state);
    }
    throw new Error(`unrouted request: ${method} ${path}`);
  };

  world.app = new App(root, new ApiClient("http://game.test", fetchFn));
  return world;
}

async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
  await new Promise((resolve) => setTimeout(resolve, 0));
}

async function createBram(world: World): Promise<void> {
  await world.app.start();
  const form = world.root.querySelector("form.creation")!;
  (world.root.querySelector('input[name="name"]') as HTMLInputElement).value =
    "Bram";
  (world.root.querySelector('input[name="goal"]') as HTMLInputElement).value =
    "Map the flooded stair";
  form.dispatchEvent(new Event("submit", { cancelable: true }));
  await flush();
}

beforeEach(() => {
  document.body.replaceChildren();
});

describe("character creation", () => {
  it("walks catalog choices into a session and fetches the first state", async () => {
    const world = makeWorld();
    await createBram(world);
    expect(world.root.querySelector(".play")).not.toBeNull();
    expect(world.calls).toContain("GET /sessions/abc/state");
    expect(world.root.querySelector(".state-panel")?.textContent).toContain(
      "Bram (Shadowfoot)",
    );
    expect(world.root.querySelector(".clock-label")?.textContent).toBe(
      "Hour 0 of 13",
    );
  });

  it("shows 422 field errors inline under the matching field", async () => {
    const world = makeWorld();
    world.failCreates = 1;
    await createBram(world);
    expect(world.root.querySelector(".play")).toBeNull();
    const note = world.root.querySelector(".field-error")!;
    expect(note.textContent).toContain("unknown trait 'Sure hands'");
    expect(note.closest(".field")?.getAttribute("data-path")).toBe("players[0]");

    // fixing the pick succeeds on resubmit and the stale error is cleared
    const form = world.root.querySelector("form.creation")!;
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    await flush();
    expect(world.root.querySelector(".play")).not.toBeNull();
    expect(world.root.querySelector(".field-error")).toBeNull();
  });
});

describe("playing a turn", () => {
  it("renders the streamed cards in server order, then refreshes state", async () => {
    const world = makeWorld();
    world.messageResponses.push(() =>
      streamResponse(
        sseBody(turnEvents("t1"), {
          clock_hours: 4,
          clock_limit: 13,
          status: "running",
          turns_completed: 1,
        }),
      ),
    );
    world.stateResponses = [
      stateDoc(),
      stateDoc({ clock_hours: 4, turns_completed: 1 }),
    ];
    await createBram(world);
    await world.app.send("I climb.");

    const classes = Array.from(
      world.root.querySelectorAll(".timeline > *"),
    ).map((card) => card.className);
    expect(classes).toEqual([
      "card speech player",
      "card trace call",
      "card dice success",
      "card speech gm",
    ]);
    const messageAt = world.calls.indexOf("POST /sessions/abc/message");
    const stateAt = world.calls.lastIndexOf("GET /sessions/abc/state");
    expect(messageAt).toBeGreaterThan(-1);
    expect(stateAt).toBeGreaterThan(messageAt); // panel is server-fetched after the turn
    expect(world.root.querySelector(".clock-label")?.textContent).toBe(
      "Hour 4 of 13",
    );
  });

  it("re-renders the clock gauge when a later turn advances it", async () => {
    const world = makeWorld();
    const summaries: TurnCompleteDoc[] = [
      { clock_hours: 4, clock_limit: 13, status: "running", turns_completed: 1 },
      { clock_hours: 5, clock_limit: 13, status: "running", turns_completed: 2 },
    ];
    for (const summary of summaries) {
      world.messageResponses.push(() => streamResponse(sseBody([], summary)));
    }
    world.stateResponses = [
      stateDoc(),
      stateDoc({ clock_hours: 4 }),
      stateDoc({ clock_hours: 5 }),
    ];
    await createBram(world);
    await world.app.send("First.");
    expect(world.root.querySelector(".clock-label")?.textContent).toBe(
      "Hour 4 of 13",
    );
    await world.app.send("Second.");
    expect(world.root.querySelector(".clock-label")?.textContent).toBe(
      "Hour 5 of 13",
    );
  });

  it("shows server-granted inventory in the panel after the turn", async () => {
    const world = makeWorld();
    world.messageResponses.push(() =>
      streamResponse(
        sseBody(
          [
            {
              kind: "function_result",
              speaker: "system",
              content: "Bram now carries 'Waxed cord'.",
              timestamp: 2,
              call_id: "g1",
              data: {
                diff: {
                  scene_changes: [],
                  player_changes: {
                    Bram: [
                      {
                        path: "inventory.Waxed cord",
                        before: null,
                        after: "A cord.",
                      },
                    ],
                  },
                },
              },
            },
          ],
          { clock_hours: 0, clock_limit: 13, status: "running", turns_completed: 1 },
        ),
      ),
    );
    const granted = stateDoc();
    granted.players[0]!.inventory["Waxed cord"] = "A cord.";
    world.stateResponses = [stateDoc(), granted];
    await createBram(world);
    expect(world.root.querySelector(".state-panel")?.textContent).not.toContain(
      "Waxed cord",
    );
    await world.app.send("Take the cord.");
    expect(world.root.querySelector(".state-panel")?.textContent).toContain(
      "Waxed cord",
    );
  });

  it("disables input once the status banner leaves running", async () => {
    const world = makeWorld();
    world.messageResponses.push(() =>
      streamResponse(
        sseBody([], {
          clock_hours: 1,
          clock_limit: 13,
          status: "success",
          turns_completed: 1,
        }),
      ),
    );
    world.stateResponses = [
      stateDoc(),
      stateDoc({ status: "success", clock_hours: 1 }),
    ];
    await createBram(world);
    await world.app.send("We made it.");
    expect(
      world.root.querySelector(".banner-slot .status-banner")?.className,
    ).toContain("success");
    expect(
      (world.root.querySelector(".composer input") as HTMLInputElement).disabled,
    ).toBe(true);

    // a further send is a no-op: no new message request leaves the page
    const before = world.calls.filter((c) => c.includes("/message")).length;
    await world.app.send("Anyone there?");
    const after = world.calls.filter((c) => c.includes("/message")).length;
    expect(after).toBe(before);
  });

  it("treats 409 as a terminated session", async () => {
    const world = makeWorld();
    world.messageResponses.push(() =>
      jsonResponse(409, { detail: "session already ended: success" }),
    );
    await createBram(world);
    await world.app.send("Hello?");
    const retry = world.root.querySelector(".retry-banner") as HTMLElement;
    expect(retry.hidden).toBe(false);
    expect(retry.textContent).toContain("session already ended");
    expect(retry.querySelector("button")).toBeNull(); // nothing to retry
    expect(
      (world.root.querySelector(".composer input") as HTMLInputElement).disabled,
    ).toBe(true);
  });

  it("surfaces a disconnect as a retry banner that resends the message", async () => {
    const world = makeWorld();
    world.messageResponses.push(() => {
      throw new TypeError("fetch failed");
    });
    world.messageResponses.push(() =>
      streamResponse(
        sseBody(turnEvents("t2"), {
          clock_hours: 0,
          clock_limit: 13,
          status: "running",
          turns_completed: 1,
        }),
      ),
    );
    await createBram(world);
    await world.app.send("I climb.");

    const retry = world.root.querySelector(".retry-banner") as HTMLElement;
    expect(retry.hidden).toBe(false);
    expect(retry.textContent).toContain("fetch failed");
    expect(world.root.querySelectorAll(".timeline > *").length).toBe(0);

    retry.querySelector("button")!.dispatchEvent(new Event("click"));
    await flush();
    expect(retry.hidden).toBe(true);
    expect(world.root.querySelectorAll(".timeline > *").length).toBe(4);
    expect(
      (world.root.querySelector(".composer input") as HTMLInputElement).disabled,
    ).toBe(false);
  });
});
